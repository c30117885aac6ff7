"""Coherent state prefixes (ρ_1, ..., ρ_N) and their builders.

Diagonal states (tracial, classical, Bernoulli, density-function states) are
stored as weight vectors; the block-product state keeps its blocks and only
materializes a level on request.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .config import TOL_COHERENCE, caps
from .errors import CapacityError, DescriptorError, DomainError
from .linalg import (
    DensityMatrix,
    density_kron,
    max_abs,
    partial_trace_last,
    partial_trace_matrix,
    trace_distance_max,
)

KINDS = ("tracial", "classical", "bernoulli", "chapter4", "diagonal_f", "explicit")


class StatePrefix:
    """Finite coherent prefix of a qubit state.

    ``depth`` is the number of qubit levels.  ``factors(n)`` returns density
    matrices whose Kronecker product is level ``n``; for unfactored states it
    is ``[level(n)]``.  ``marginal(i)`` is set for product states and gives the
    diagonal of qubit ``i`` (1-indexed) at any depth.
    """

    def __init__(
        self,
        descriptor: dict,
        depth: int,
        level_fn: Callable[[int], DensityMatrix],
        factors_fn: Callable[[int], list] | None = None,
        marginal_fn: Callable[[int], np.ndarray] | None = None,
    ):
        self.descriptor = descriptor
        self.depth = depth
        self._level_fn = level_fn
        self._factors_fn = factors_fn
        self._marginal_fn = marginal_fn
        self._cache: dict[int, DensityMatrix] = {}

    @property
    def kind(self) -> str:
        return self.descriptor["kind"]

    @property
    def factored(self) -> bool:
        return self._factors_fn is not None

    @property
    def is_product(self) -> bool:
        return self._marginal_fn is not None

    def _check_level(self, n: int) -> None:
        if not 1 <= n <= self.depth:
            raise DomainError(f"level {n} outside prefix 1..{self.depth}")

    def level(self, n: int) -> DensityMatrix:
        self._check_level(n)
        if n not in self._cache:
            self._cache[n] = self._level_fn(n)
        return self._cache[n]

    def factors(self, n: int) -> list:
        self._check_level(n)
        if self._factors_fn is None:
            return [self.level(n)]
        return self._factors_fn(n)

    def marginal(self, i: int) -> np.ndarray:
        if self._marginal_fn is None:
            raise DomainError(f"{self.kind} state is not a product state")
        return self._marginal_fn(i)

    @property
    def levels(self) -> list:
        return [self.level(n) for n in range(1, self.depth + 1)]


def _diag_cap(n: int) -> None:
    if n > caps().diagonal_qubits:
        raise CapacityError(
            f"{n} qubits exceeds the diagonal cap of {caps().diagonal_qubits}", required=n
        )


def _descriptor(kind: str, params: dict, N: int) -> dict:
    return {"kind": kind, "params": params, "N": N}


def ones_count(n: int) -> np.ndarray:
    """Number of 1 bits of every basis index of an n-qubit space."""
    idx = np.arange(1 << n, dtype=np.uint32)
    out = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        out += (idx >> b) & 1
    return out


def _product_diagonal(marginals: list) -> np.ndarray:
    w = np.ones(1)
    for m in marginals:
        w = np.kron(w, m)
    return w


# ---------------------------------------------------------------------------
# Builders


def tracial_prefix(N: int, storage: str = "auto") -> StatePrefix:
    """ρ_n = 2^{-n} I.  Dense up to the dense cap, diagonal beyond."""
    if N < 1:
        raise DomainError("N must be at least 1")
    if storage == "auto":
        storage = "dense" if (1 << N) <= caps().dense_dim else "diagonal"
    if storage == "dense" and (1 << N) > caps().dense_dim:
        raise CapacityError(f"dense tracial prefix N={N} exceeds cap", required=N)
    _diag_cap(N)

    def level(n):
        if storage == "dense":
            return DensityMatrix(np.eye(1 << n, dtype=complex) / (1 << n), n, "dense")
        return DensityMatrix(np.full(1 << n, 2.0**-n), n, "diagonal")

    return StatePrefix(
        _descriptor("tracial", {}, N), N, level, marginal_fn=lambda i: np.array([0.5, 0.5])
    )


def classical_prefix(x: str, N: int) -> StatePrefix:
    """ρ_n = |x↾n⟩⟨x↾n|."""
    if any(c not in "01" for c in x):
        raise DomainError("x must be a bitstring")
    if len(x) < N:
        raise DomainError(f"bitstring of length {len(x)} is shorter than N={N}")
    if N < 1:
        raise DomainError("N must be at least 1")
    _diag_cap(N)

    def level(n):
        w = np.zeros(1 << n)
        w[int(x[:n], 2)] = 1.0
        return DensityMatrix(w, n, "diagonal")

    def marginal(i):
        if i > len(x):
            raise DomainError(f"bitstring has no qubit {i}")
        return np.array([0.0, 1.0]) if x[i - 1] == "1" else np.array([1.0, 0.0])

    return StatePrefix(_descriptor("classical", {"x": x}, N), N, level, marginal_fn=marginal)


def bernoulli_prefix(p: float, N: int) -> StatePrefix:
    """Product of diag(p, 1-p): weight p^k (1-p)^(n-k), k = number of zeros."""
    if not 0 < p < 1:
        raise DomainError(f"p={p} must lie in (0, 1)")
    if N < 1:
        raise DomainError("N must be at least 1")
    _diag_cap(N)
    m = np.array([p, 1.0 - p])

    def level(n):
        return DensityMatrix(_product_diagonal([m] * n), n, "diagonal")

    return StatePrefix(_descriptor("bernoulli", {"p": p}, N), N, level, marginal_fn=lambda i: m)


def r_n(n: int) -> int:
    return (1 << n) // n


def gamma(N: int) -> int:
    """Qubit count of the blocks 5..N."""
    return sum(range(5, N + 1))


@lru_cache(maxsize=None)
def chapter4_block(n: int) -> DensityMatrix:
    """The block d_n: 2^{-n} on the diagonal and on the first and last r_n
    anti-diagonal positions, zero elsewhere.  Sparse storage."""
    if n < 3:
        raise DomainError("blocks are defined for n >= 3")
    if n > caps().factored_blocks:
        raise CapacityError(f"block d_{n} exceeds the block cap", required=n)
    dim = 1 << n
    r = r_n(n)
    i = np.arange(dim)
    anti = np.concatenate([np.arange(r), np.arange(dim - r, dim)])
    rows = np.concatenate([i, anti])
    cols = np.concatenate([i, dim - 1 - anti])
    vals = np.full(rows.size, 2.0**-n, dtype=complex)
    d = sp.coo_array((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    return DensityMatrix(d, n, "sparse")


def chapter4_prefix(N: int) -> StatePrefix:
    """Block-product state d_5 ⊗ ... ⊗ d_N with γ(N) qubit levels.

    Level k with γ(M) < k ≤ γ(M+1) is (d_5 ⊗ ... ⊗ d_M) ⊗ PT^{γ(M+1)-k}(d_{M+1}).
    """
    if not 5 <= N <= caps().factored_blocks:
        raise CapacityError(
            f"N={N} outside 5..{caps().factored_blocks}", required=N
        )
    blocks = [chapter4_block(n) for n in range(5, N + 1)]

    def factors(k):
        M = 4
        while gamma(M + 1) < k:
            M += 1
        full = blocks[: M - 4]
        last = blocks[M - 4]
        t = gamma(M + 1) - k
        if t:
            last = DensityMatrix(partial_trace_matrix(last.data, t), last.qubits - t, "sparse")
        return full + [last]

    def level(k):
        fs = factors(k)
        if (1 << k) > caps().max_dim:
            raise CapacityError(f"level {k} of the block-product state is factored only", required=k)
        out = fs[0]
        for f in fs[1:]:
            out = density_kron(out, f)
        return out

    return StatePrefix(_descriptor("chapter4", {}, N), gamma(N), level, factors_fn=factors)


@dataclass(frozen=True)
class DensityFnSpec:
    """Probability density on (0, 1] with closed-form antiderivative."""

    id: str
    f: Callable[[np.ndarray], np.ndarray]
    F: Callable[[np.ndarray], np.ndarray]


def _F1(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, 1.0 / (1.0 - np.log(safe)), 0.0)


DENSITY_FNS = {
    "f1": DensityFnSpec(
        "f1",
        lambda x: 1.0 / (x * (1.0 - np.log(x)) ** 2),
        _F1,
    ),
    "f2": DensityFnSpec(
        "f2",
        lambda x: 2.0 / (x * (1.0 - np.log(x)) ** 3),
        lambda x: _F1(x) ** 2,
    ),
}


def density_fn(fid: str) -> DensityFnSpec:
    try:
        return DENSITY_FNS[fid]
    except KeyError:
        raise DomainError(f"unknown density function {fid!r}") from None


def dyadic_weights(spec: DensityFnSpec, n: int) -> np.ndarray:
    """α_σ = F(right) - F(left) over [0.σ, 0.σ + 2^{-n}), σ in index order."""
    edges = np.arange((1 << n) + 1, dtype=float) / (1 << n)
    return np.diff(spec.F(edges))


def diagonal_f_prefix(fid: str | DensityFnSpec, N: int) -> StatePrefix:
    spec = fid if isinstance(fid, DensityFnSpec) else density_fn(fid)
    if N < 1:
        raise DomainError("N must be at least 1")
    _diag_cap(N)

    def level(n):
        return DensityMatrix(dyadic_weights(spec, n), n, "diagonal")

    return StatePrefix(_descriptor("diagonal_f", {"f": spec.id}, N), N, level)


def from_levels(levels: list, descriptor: dict | None = None) -> StatePrefix:
    """Prefix from explicit levels (no coherence enforced; see check_coherence)."""
    levels = list(levels)
    for n, rho in enumerate(levels, start=1):
        if rho.qubits != n:
            raise DomainError(f"level {n} has {rho.qubits} qubits")
    desc = descriptor or _descriptor("explicit", {}, len(levels))
    return StatePrefix(desc, len(levels), lambda n: levels[n - 1])


# ---------------------------------------------------------------------------
# Coherence


@dataclass
class CoherenceReport:
    deviations: list  # (level n, max deviation of PT(ρ_n) from ρ_{n-1})
    tol: float = TOL_COHERENCE

    @property
    def passed(self) -> bool:
        return all(d <= self.tol for _, d in self.deviations)

    @property
    def failures(self) -> list:
        return [n for n, d in self.deviations if d > self.tol]

    @property
    def worst(self) -> float:
        return max((d for _, d in self.deviations), default=0.0)


def _factored_deviation(state: StatePrefix, k: int) -> float:
    """Deviation of PT(level k) from level k-1 using ‖A⊗B‖_max = ‖A‖_max ‖B‖_max."""
    fk, fprev = state.factors(k), state.factors(k - 1)
    head, last = fk[:-1], fk[-1]
    scale = math.prod(max_abs(f.matrix()) for f in head)
    if last.qubits >= 2:
        if len(fprev) != len(fk) or any(a is not b for a, b in zip(head, fprev[:-1])):
            raise DomainError("factor layout changed inside a block")
        return scale * trace_distance_max(partial_trace_last(last), fprev[-1])
    if len(fprev) != len(head) or any(a is not b for a, b in zip(head, fprev)):
        raise DomainError("factor layout changed at a block boundary")
    return scale * abs(last.trace() - 1)


def check_coherence(state: StatePrefix, mode: str = "auto") -> CoherenceReport:
    """Max entrywise deviation ‖PT(ρ_n) - ρ_{n-1}‖ for n = 2..depth.

    ``mode="factored"`` uses the block form, ``"levels"`` materializes levels,
    ``"auto"`` picks the block form when present.
    """
    if mode == "auto":
        mode = "factored" if state.factored else "levels"
    devs = []
    for n in range(2, state.depth + 1):
        if mode == "factored":
            dev = _factored_deviation(state, n)
        else:
            dev = trace_distance_max(partial_trace_last(state.level(n)), state.level(n - 1))
        devs.append((n, float(dev)))
    return CoherenceReport(devs)


# ---------------------------------------------------------------------------
# Descriptors


def build_state(descriptor: dict) -> StatePrefix:
    """Build a prefix from ``{"kind", "params", "N"}``."""
    try:
        kind = descriptor["kind"]
        params = descriptor.get("params", {}) or {}
        N = int(descriptor["N"])
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise DescriptorError(f"malformed state descriptor: {exc}") from exc
    try:
        if kind == "tracial":
            return tracial_prefix(N, params.get("storage", "auto"))
        if kind == "classical":
            return classical_prefix(str(params["x"]), N)
        if kind == "bernoulli":
            return bernoulli_prefix(float(params["p"]), N)
        if kind == "chapter4":
            return chapter4_prefix(N)
        if kind == "diagonal_f":
            return diagonal_f_prefix(str(params["f"]), N)
    except KeyError as exc:
        raise DescriptorError(f"state descriptor for {kind!r} lacks parameter {exc}") from exc
    raise DescriptorError(f"unknown state kind {kind!r}")


def load_state(path: str) -> StatePrefix:
    try:
        with open(path) as fh:
            desc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DescriptorError(f"cannot read state descriptor {path}: {exc}") from exc
    return build_state(desc)
