"""Measurement systems, the induced cylinder premeasure, and sampling.

Measuring qubit i in the basis (b^i_0, b^i_1) gives the premeasure
p(τ) = ⟨v|ρ_n|v⟩ with v = b^1_{τ(1)} ⊗ ... ⊗ b^n_{τ(n)}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .config import ZERO_MASS, caps
from .errors import CapacityError, DescriptorError, DomainError, InvariantViolation, SamplingError
from .linalg import DensityMatrix, is_sparse, projector_from, trace_inner
from .qtests import QSigmaSet, QTest, SpecialProjection
from .states import StatePrefix, ones_count

GENERATOR_ID = "numpy.random.Generator(PCG64)"

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def _orthonormal_pair(u: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(2))) <= tol)


@dataclass(frozen=True, eq=False)
class MeasurementSystem:
    """Sequence of orthonormal bases of C², one per qubit (1-indexed).

    ``unitary(i)`` has columns b^i_0 and b^i_1.  Periodic and explicit systems
    keep a list of 2x2 unitaries; periodic ones repeat it, explicit ones end.
    """

    kind: str
    pairs: tuple = ()

    def __post_init__(self):
        if self.kind not in ("standard", "hadamard", "periodic", "explicit"):
            raise DomainError(f"unknown measurement system {self.kind!r}")
        if self.kind in ("periodic", "explicit") and not self.pairs:
            raise DomainError(f"{self.kind} system needs at least one basis")
        for j, u in enumerate(self.pairs):
            if u.shape != (2, 2) or not _orthonormal_pair(u):
                raise DomainError(f"basis {j} is not an orthonormal pair")

    def unitary(self, i: int) -> np.ndarray:
        if i < 1:
            raise DomainError("qubits are indexed from 1")
        if self.kind == "standard":
            return np.eye(2, dtype=complex)
        if self.kind == "hadamard":
            return _HADAMARD
        if self.kind == "periodic":
            return self.pairs[(i - 1) % len(self.pairs)]
        if i > len(self.pairs):
            raise DomainError(f"explicit system has no basis for qubit {i}")
        return self.pairs[i - 1]

    def vector(self, i: int, bit: int) -> np.ndarray:
        return self.unitary(i)[:, bit]

    def product_vector(self, tau: str, offset: int = 0) -> np.ndarray:
        v = np.ones(1, dtype=complex)
        for q, c in enumerate(tau, start=offset + 1):
            v = np.kron(v, self.vector(q, int(c)))
        return v

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.pairs:
            out["bases"] = [
                [[[float(z.real), float(z.imag)] for z in u[:, b]] for b in (0, 1)] for u in self.pairs
            ]
        return out


def standard() -> MeasurementSystem:
    return MeasurementSystem("standard")


def hadamard() -> MeasurementSystem:
    return MeasurementSystem("hadamard")


def periodic(vectors) -> MeasurementSystem:
    """Repeat the bases (v, v⊥) for the given unit vectors v."""
    pairs = []
    for v in vectors:
        v = np.asarray(v, dtype=complex)
        if v.shape != (2,) or abs(np.linalg.norm(v) - 1) > 1e-10:
            raise DomainError("periodic system needs unit vectors in C^2")
        perp = np.array([-np.conj(v[1]), np.conj(v[0])])
        pairs.append(np.column_stack([v, perp]))
    return MeasurementSystem("periodic", tuple(pairs))


def explicit(bases) -> MeasurementSystem:
    """Bases given as (b0, b1) pairs of vectors in C²."""
    return MeasurementSystem(
        "explicit", tuple(np.column_stack([np.asarray(b0, complex), np.asarray(b1, complex)]) for b0, b1 in bases)
    )


def _vec(entries) -> np.ndarray:
    return np.array([complex(re, im) for re, im in entries])


def measurement_from_json(obj: dict) -> MeasurementSystem:
    try:
        kind = obj["kind"]
        if kind in ("standard", "hadamard"):
            return MeasurementSystem(kind)
        if kind == "periodic" and "vectors" in obj:
            return periodic([_vec(v) for v in obj["vectors"]])
        bases = [(_vec(b0), _vec(b1)) for b0, b1 in obj["bases"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DescriptorError(f"malformed measurement system: {exc}") from exc
    system = explicit(bases)
    return MeasurementSystem(kind, system.pairs)


def parse_basis(spec: str) -> MeasurementSystem:
    """CLI form: ``standard``, ``hadamard``, ``periodic:v.json`` or ``explicit:b.json``."""
    if spec in ("standard", "hadamard"):
        return MeasurementSystem(spec)
    kind, _, path = spec.partition(":")
    if kind not in ("periodic", "explicit") or not path:
        raise DescriptorError(f"unknown basis spec {spec!r}")
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DescriptorError(f"cannot read basis file {path}: {exc}") from exc
    if isinstance(obj, list):
        obj = {"vectors": obj} if kind == "periodic" else {"bases": obj}
    obj["kind"] = kind
    return measurement_from_json(obj)


# ---------------------------------------------------------------------------
# Premeasure


def _quadratic_form(rho: DensityMatrix, v: np.ndarray) -> float:
    if rho.storage == "diagonal":
        return float(np.dot(rho.data, np.abs(v) ** 2))
    z = complex(np.vdot(v, rho.data @ v))
    if abs(z.imag) > 1e-10:
        raise InvariantViolation(f"quadratic form has imaginary part {z.imag:.3e}")
    return z.real


def premeasure(state: StatePrefix, b: MeasurementSystem, tau: str) -> float:
    """p(τ) = ⟨v|ρ_n|v⟩, evaluated factor by factor without forming projectors."""
    n = len(tau)
    if any(c not in "01" for c in tau):
        raise DomainError("τ must be a bitstring")
    if n == 0:
        return 1.0
    if n > state.depth:
        if not state.is_product:
            raise DomainError(f"|τ|={n} exceeds prefix depth {state.depth}")
        return math.prod(
            float(np.dot(state.marginal(i), np.abs(b.vector(i, int(c))) ** 2))
            for i, c in enumerate(tau, start=1)
        )
    val, offset = 1.0, 0
    for f in state.factors(n):
        v = b.product_vector(tau[offset : offset + f.qubits], offset)
        val *= _quadratic_form(f, v)
        offset += f.qubits
    return val


def _distribution(rho: DensityMatrix, unitaries: list) -> np.ndarray:
    """Outcome probabilities diag(U† ρ U) for U = ⊗ unitaries, big-endian order."""
    q = rho.qubits
    if q == 0:
        return np.array([float(np.real(rho.trace()))])
    if rho.storage == "diagonal":
        t = np.asarray(rho.data, dtype=float).reshape((2,) * q)
        for ax, u in enumerate(unitaries):
            a = np.abs(u) ** 2  # [σ, τ]
            t = np.moveaxis(np.tensordot(t, a, axes=([ax], [0])), -1, ax)
        return t.reshape(-1)
    if rho.dim > caps().dense_dim:
        raise CapacityError("factor too large for dense premeasure", required=rho.dim)
    m = rho.to_dense().reshape((2,) * (2 * q))
    for ax, u in enumerate(unitaries):
        m = np.moveaxis(np.tensordot(m, u.conj(), axes=([ax], [0])), -1, ax)
        m = np.moveaxis(np.tensordot(m, u, axes=([q + ax], [0])), -1, q + ax)
    d = np.diagonal(m.reshape(rho.dim, rho.dim))
    if np.max(np.abs(d.imag), initial=0.0) > 1e-10:
        raise InvariantViolation("premeasure has a complex value")
    return d.real.copy()


def level_distribution(state: StatePrefix, b: MeasurementSystem, n: int) -> np.ndarray:
    """All p(τ) for |τ| = n, computed from ρ_n alone."""
    if n > state.depth and state.is_product:
        out = np.ones(1)
        for i in range(1, n + 1):
            out = np.kron(out, np.abs(b.unitary(i)).T ** 2 @ state.marginal(i))
        return out
    out, offset = np.ones(1), 0
    for f in state.factors(n):
        us = [b.unitary(offset + j + 1) for j in range(f.qubits)]
        out = np.kron(out, _distribution(f, us))
        offset += f.qubits
    return out


@dataclass(frozen=True, eq=False)
class CylinderPremeasure:
    """p(τ) for |τ| ≤ depth; ``levels[n]`` is indexed by int(τ, 2)."""

    levels: tuple

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def value(self, tau: str) -> float:
        v = float(self.levels[len(tau)][int(tau, 2) if tau else 0])
        return min(1.0, max(0.0, v))

    def additivity_defect(self) -> float:
        worst = abs(float(self.levels[1].sum()) - 1.0)
        for n in range(1, self.depth):
            child = self.levels[n + 1].reshape(-1, 2).sum(axis=1)
            worst = max(worst, float(np.max(np.abs(self.levels[n] - child))))
        return worst

    def rows(self):
        for n in range(1, self.depth + 1):
            for i, v in enumerate(self.levels[n]):
                yield format(i, f"0{n}b"), min(1.0, max(0.0, float(v)))


def build_premeasure(state: StatePrefix, b: MeasurementSystem, depth: int, tol: float = 1e-10) -> CylinderPremeasure:
    """Full premeasure table; each level comes from its own ρ_n and the table
    is checked for p(τ) = p(τ0) + p(τ1)."""
    if depth > caps().premeasure_depth:
        raise CapacityError(f"depth {depth} exceeds premeasure cap", required=depth)
    if depth > state.depth and not state.is_product:
        raise DomainError(f"depth {depth} exceeds prefix depth {state.depth}")
    levels = [np.ones(1)] + [level_distribution(state, b, n) for n in range(1, depth + 1)]
    for n, p in enumerate(levels):
        if p.min(initial=0.0) < -1e-12 or p.max(initial=0.0) > 1 + 1e-12:
            raise InvariantViolation(f"premeasure values at depth {n} leave [0, 1]")
    table = CylinderPremeasure(tuple(levels))
    defect = table.additivity_defect() if depth else 0.0
    if defect > tol:
        raise InvariantViolation(f"premeasure additivity defect {defect:.3e}")
    return table


# ---------------------------------------------------------------------------
# Sampling


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _product_ones_probability(state: StatePrefix, b: MeasurementSystem, n: int) -> np.ndarray:
    return np.array(
        [float(np.dot(state.marginal(i), np.abs(b.vector(i, 1)) ** 2)) for i in range(1, n + 1)]
    )


def sample_many(state: StatePrefix, b: MeasurementSystem, n: int, count: int, seed: int) -> np.ndarray:
    """``count`` sequences of ``n`` bits, shape (count, n).

    Bit i is 1 iff its uniform draw is below p(τ1)/p(τ).  Draws are consumed in
    row-major order, one per bit, so row 0 equals ``sample(..., seed)``.
    Product states use their per-qubit marginals, which gives the same law
    without a depth limit.
    """
    u = rng(seed).random((count, n))
    if state.is_product:
        return (u < _product_ones_probability(state, b, n)).astype(np.uint8)
    table = build_premeasure(state, b, n)
    idx = np.zeros(count, dtype=np.int64)
    out = np.empty((count, n), dtype=np.uint8)
    for i in range(n):
        parent = table.levels[i][idx]
        low = parent < ZERO_MASS
        if low.any():
            j = int(np.argmax(low))
            prefix = "".join(map(str, out[j, :i]))
            raise SamplingError(f"cannot condition on zero-mass prefix {prefix!r}", prefix)
        q = table.levels[i + 1][2 * idx + 1] / parent
        bits = u[:, i] < q
        out[:, i] = bits
        idx = 2 * idx + bits
    return out


def sample(state: StatePrefix, b: MeasurementSystem, n: int, seed: int) -> str:
    bits = sample_many(state, b, n, 1, seed)[0]
    return "".join("1" if x else "0" for x in bits)


# ---------------------------------------------------------------------------
# Statistics


def _diag(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.diagonal()
    return np.real(np.asarray(rho.diagonal()))


def lln_statistic(rho: DensityMatrix) -> float:
    """n^{-1} Σ_i Tr(ρ_n P^n_i), P^n_i projecting onto strings with σ(i) = 1."""
    d = _diag(rho)
    n = rho.qubits
    total = 0.0
    for i in range(n):
        total += float(d.reshape(1 << i, 2, -1)[:, 1, :].sum())
    return total / n


def empirical_entropy(rho: DensityMatrix, p: float) -> float:
    """n^{-1} Tr(ρ_n L_n) with L_n = -log2 μ_n, μ_n the Bernoulli(p) diagonal."""
    if not 0 < p < 1:
        raise DomainError(f"p={p} must lie in (0, 1)")
    d = _diag(rho)
    n = rho.qubits
    ones = ones_count(n)
    zeros = n - ones
    L = -(zeros * math.log2(p) + ones * math.log2(1 - p))
    return float(np.dot(d, L)) / n


def sequence_log_loss(bits: np.ndarray, p: float) -> np.ndarray:
    """-n^{-1} log2 μ(X↾n) per row of a (count, n) bit array."""
    bits = np.atleast_2d(bits)
    n = bits.shape[1]
    ones = bits.sum(axis=1)
    return -((n - ones) * math.log2(p) + ones * math.log2(1 - p)) / n


def block_frequency(x: str, block: int) -> float:
    """Fraction of aligned length-``block`` blocks of x equal to 0^block."""
    if block <= 0:
        raise DomainError("block length must be positive")
    if len(x) < block:
        raise DomainError("bitstring shorter than one block")
    count = len(x) // block
    zero = "0" * block
    return sum(x[k * block : (k + 1) * block] == zero for k in range(count)) / count


# ---------------------------------------------------------------------------
# Classical MLT pullback


def validate_classical_mlt(sets: dict) -> None:
    """Check |A^m_i| ≤ 2^{i-m}, string lengths, and ⟦A^m_i⟧ ⊆ ⟦A^m_{i+1}⟧."""
    for m, levels in sets.items():
        keys = sorted(levels)
        for i in keys:
            A = levels[i]
            if any(len(s) != i or any(c not in "01" for c in s) for s in A):
                raise DomainError(f"A^{m}_{i}: condition 1 violated (strings must have length {i})")
            if i < m and A:
                raise DomainError(f"A^{m}_{i}: nonempty below level m")
            if i >= m and len(A) > 1 << (i - m):
                raise DomainError(f"A^{m}_{i}: measure condition |A| ≤ 2^(i-m) violated")
        for a, c in zip(keys, keys[1:]):
            for s in levels[a]:
                ext = (s + format(j, f"0{c - a}b") for j in range(1 << (c - a)))
                if not all(e in levels[c] for e in ext):
                    raise DomainError(f"A^{m}: condition 3 (cylinder nesting) violated at {s!r}")


def mlt_pullback(sets: dict, b: MeasurementSystem) -> QTest:
    """q-MLT with p^m_i = Σ_{τ∈A^m_i} |⊗_q b^q_{τ(q)}⟩⟨⊗_q b^q_{τ(q)}|."""
    sets = {int(m): {int(i): frozenset(A) for i, A in lv.items()} for m, lv in sets.items()}
    validate_classical_mlt(sets)
    members = {}
    for m, levels in sets.items():
        out = {}
        for i, A in sorted(levels.items()):
            if (1 << i) > caps().dense_dim:
                raise CapacityError(f"pullback level {i} exceeds the dense cap", required=i)
            vecs = [b.product_vector(s) for s in sorted(A)]
            p = SpecialProjection(projector_from(vecs, dim=1 << i))
            if p.rank != len(A) or abs(float(np.real(p.matrix.trace())) - len(A)) > 1e-8:
                raise InvariantViolation(f"p^{m}_{i} rank {p.rank} differs from |A| = {len(A)}")
            out[i] = p
        members[m] = QSigmaSet(out)
    return QTest("MLT", members)


def pullback_chain(state: StatePrefix, b: MeasurementSystem, A, p: SpecialProjection) -> tuple:
    """(Σ_{τ∈A} p(τ), Tr(ρ_i p)): the two ends of the pullback identity."""
    mass = math.fsum(premeasure(state, b, s) for s in A)
    return mass, trace_inner(state.level(p.qubits), p.matrix)
