"""Numerical tolerances and capacity caps.

``QRL_MAX_DIM`` overrides the caps: it sets the dense cap to its value and
raises the general dimension cap to at least that value.
"""

import os
from dataclasses import dataclass

TOL_HERM = 1e-10
TOL_TRACE = 1e-9
TOL_PSD = 1e-9
TOL_ORTHO = 1e-9
TOL_PROJ = 1e-8
TOL_COHERENCE = 1e-10
ZERO_MASS = 1e-14


@dataclass(frozen=True)
class Caps:
    max_dim: int = 2**16
    dense_dim: int = 2**11
    factored_blocks: int = 20
    diagonal_qubits: int = 20
    premeasure_depth: int = 20


def caps() -> Caps:
    raw = os.environ.get("QRL_MAX_DIM")
    if not raw:
        return Caps()
    value = int(raw)
    if value < 1:
        raise ValueError("QRL_MAX_DIM must be positive")
    return Caps(max_dim=max(value, 2**16), dense_dim=value)
