"""Finite prefix-free machines and machine-relative QK complexity.

A machine is a table: program bitstring σ → orthonormal vector list F in
C^{2^q}.  QK^ε(τ) is the least |σ| + log2|F| over entries whose F captures
more than ε of τ's mass.  Values are relative to the given table.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import TOL_ORTHO
from .errors import DescriptorError, DomainError
from .linalg import DensityMatrix, density, top_eigvec_in_complement


@dataclass(frozen=True, eq=False)
class Program:
    sigma: str
    dim_qubits: int
    vectors: np.ndarray  # shape (|F|, 2^q)

    @property
    def weight(self) -> float:
        """|σ| + log2 |F|."""
        return len(self.sigma) + math.log2(len(self.vectors))


@dataclass(frozen=True, eq=False)
class PrefixFreeMachine:
    programs: tuple
    declared_measure: float | None = None


@dataclass
class ValidationReport:
    prefix_free: bool
    prefix_pairs: list = field(default_factory=list)
    kraft_sum: Fraction = Fraction(0)
    kraft_ok: bool = True
    orthonormal_failures: list = field(default_factory=list)
    shape_failures: list = field(default_factory=list)
    declared_ok: bool | None = None

    @property
    def passed(self) -> bool:
        return (
            self.prefix_free
            and self.kraft_ok
            and not self.orthonormal_failures
            and not self.shape_failures
            and self.declared_ok is not False
        )

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "prefix_free": self.prefix_free,
            "prefix_pairs": [list(p) for p in self.prefix_pairs],
            "kraft_sum": float(self.kraft_sum),
            "kraft_ok": self.kraft_ok,
            "orthonormal_failures": self.orthonormal_failures,
            "shape_failures": self.shape_failures,
            "declared_measure_ok": self.declared_ok,
        }


def validate(machine: PrefixFreeMachine) -> ValidationReport:
    """Check prefix-freeness, the Kraft sum, orthonormality and the declared measure."""
    sigmas = [p.sigma for p in machine.programs]
    pairs = []
    for i, a in enumerate(sigmas):
        for j, b in enumerate(sigmas):
            if i != j and b.startswith(a) and (len(a) < len(b) or i < j):
                pairs.append((a, b))
    kraft = sum((Fraction(1, 1 << len(s)) for s in sigmas), Fraction(0))
    ortho, shapes = [], []
    for p in machine.programs:
        if any(c not in "01" for c in p.sigma):
            shapes.append(p.sigma)
            continue
        v = p.vectors
        if v.ndim != 2 or v.shape[1] != 1 << p.dim_qubits or v.shape[0] == 0:
            shapes.append(p.sigma)
            continue
        gram = v.conj() @ v.T
        if np.max(np.abs(gram - np.eye(len(v)))) > TOL_ORTHO:
            ortho.append(p.sigma)
    declared = None
    if machine.declared_measure is not None:
        declared = abs(float(kraft) - machine.declared_measure) <= 1e-12
    return ValidationReport(
        prefix_free=not pairs,
        prefix_pairs=pairs,
        kraft_sum=kraft,
        kraft_ok=float(kraft) <= 1 + 1e-12,
        orthonormal_failures=ortho,
        shape_failures=shapes,
        declared_ok=declared,
    )


def _captured(program: Program, rho: DensityMatrix) -> float:
    """Σ_{v∈F} ⟨v|ρ|v⟩."""
    v = program.vectors
    if rho.storage == "diagonal":
        return float(np.sum(np.abs(v) ** 2 @ rho.data))
    m = rho.data
    return float(np.real(np.einsum("ki,ki->", v.conj(), (m @ v.T).T)))


def _as_density(tau) -> DensityMatrix:
    return tau if isinstance(tau, DensityMatrix) else density(tau, check=False)


def qk_eps(machine: PrefixFreeMachine, tau, eps: float, _checked: bool = False) -> float:
    """min |σ| + log2|F| over entries in τ's dimension with Σ_{v∈F} ⟨v|τ|v⟩ > ε; inf if none."""
    if not 0 < eps <= 1:
        raise DomainError("ε must lie in (0, 1]")
    if not _checked:
        report = validate(machine)
        if not report.passed:
            raise DomainError("machine failed validation")
    rho = _as_density(tau)
    best = math.inf
    for p in machine.programs:
        if p.dim_qubits == rho.qubits and _captured(p, rho) > eps:
            best = min(best, p.weight)
    return best


def qk_c(machine: PrefixFreeMachine, tau, eps: float) -> float:
    """As ``qk_eps`` for a machine with a declared domain measure."""
    if machine.declared_measure is None:
        raise DomainError("QK_C needs a machine with a declared measure")
    return qk_eps(machine, tau, eps)


def qk_of_vector(machine: PrefixFreeMachine, v: np.ndarray, eps: float) -> float:
    v = np.asarray(v, dtype=complex)
    rho = DensityMatrix(np.outer(v, v.conj()), len(v).bit_length() - 1, "dense")
    return qk_eps(machine, rho, eps, _checked=True)


@dataclass
class CountingResult:
    found: int
    bound: float
    passed: bool
    vectors: np.ndarray


def counting_check(machine: PrefixFreeMachine, s: int, B: float, eps: float) -> CountingResult:
    """Greedy maximal orthonormal set V ⊂ C^{2^s} with QK^ε(v) ≤ B.

    For each entry with |σ| + log2|F| ≤ B, keep adding the top eigenvector of
    P_F compressed to V's complement while its value exceeds ε.  No unit vector
    orthogonal to the result has ⟨v|P_F|v⟩ > ε for any qualifying F, so V is
    maximal.  Each admitted vector is re-checked against the machine.
    """
    if not validate(machine).passed:
        raise DomainError("machine failed validation")
    dim = 1 << s
    qualifying = sorted(
        (p for p in machine.programs if p.dim_qubits == s and p.weight <= B),
        key=lambda p: (p.weight, p.sigma),
    )
    chosen: list = []
    changed = True
    while changed and len(chosen) < dim:
        changed = False
        for p in qualifying:
            proj = p.vectors.T @ p.vectors.conj()
            while len(chosen) < dim:
                top = top_eigvec_in_complement(proj, chosen)
                if top.full or top.value <= eps:
                    break
                if qk_of_vector(machine, top.vector, eps) > B:
                    break
                chosen.append(top.vector)
                changed = True
    bound = 2.0**B / eps
    vecs = np.array(chosen).reshape(len(chosen), dim)
    return CountingResult(len(chosen), bound, len(chosen) <= bound, vecs)


# ---------------------------------------------------------------------------
# JSON


def _vec(entries) -> np.ndarray:
    return np.array([complex(re, im) for re, im in entries], dtype=complex)


def machine_from_json(obj: dict) -> PrefixFreeMachine:
    try:
        programs = tuple(
            Program(str(e["sigma"]), int(e["dim_qubits"]), np.array([_vec(v) for v in e["vectors"]]))
            for e in obj["programs"]
        )
        declared = obj.get("declared_measure")
    except (KeyError, TypeError, ValueError) as exc:
        raise DescriptorError(f"malformed machine JSON: {exc}") from exc
    return PrefixFreeMachine(programs, None if declared is None else float(declared))


def machine_to_json(machine: PrefixFreeMachine) -> dict:
    programs = sorted(machine.programs, key=lambda p: p.sigma)
    out = {
        "programs": [
            {
                "sigma": p.sigma,
                "dim_qubits": p.dim_qubits,
                "vectors": [[[float(z.real), float(z.imag)] for z in v] for v in p.vectors],
            }
            for p in programs
        ]
    }
    if machine.declared_measure is not None:
        out["declared_measure"] = machine.declared_measure
    return out


def load_machine(path: str) -> PrefixFreeMachine:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DescriptorError(f"cannot read machine {path}: {exc}") from exc
    return machine_from_json(obj)


def random_machine(
    rng: np.random.Generator, qubits: int, programs: int, max_len: int = 8, exact: bool = False
) -> PrefixFreeMachine:
    """Random prefix-free machine: codewords are leaves of a random binary tree,
    each mapped to a random orthonormal set on ``qubits`` qubits (``exact``) or
    on a random qubit count up to ``qubits``."""
    leaves = ["0", "1"]
    while len(leaves) < programs:
        grow = [s for s in leaves if len(s) < max_len]
        if not grow:
            break
        s = grow[int(rng.integers(len(grow)))]
        leaves.remove(s)
        leaves += [s + "0", s + "1"]
    entries = []
    for sigma in sorted(leaves):
        q = qubits if exact else int(rng.integers(1, qubits + 1))
        dim = 1 << q
        k = int(rng.integers(1, dim + 1))
        z = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
        basis, _ = np.linalg.qr(z)
        entries.append(Program(sigma, q, basis.T.copy()))
    return PrefixFreeMachine(tuple(entries))
