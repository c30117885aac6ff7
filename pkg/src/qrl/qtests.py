"""Quantum tests: special projections, q-Σ⁰₁ sets, and the test builders.

A projection comes in one of four forms: an explicit matrix, a diagonal mask,
a Hamming-weight class (all basis strings with a given number of ones), or a
Kronecker product of explicit blocks.  Every form reports its rank exactly and
can be traced against a state level.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .config import TOL_HERM, TOL_PROJ, caps
from .errors import CapacityError, DescriptorError, DomainError, InvariantViolation
from .linalg import (
    DensityMatrix,
    hermitian_defect,
    hermitian_eig,
    is_sparse,
    kron,
    max_abs,
    projector_from,
    sparse_spectral_projector,
    trace_inner,
)
from .states import StatePrefix, chapter4_block, gamma, ones_count, r_n


def as_rational(x) -> Fraction:
    """Exact rational from a Fraction, int, decimal string or float literal."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


def _tau(rank: int, qubits: int) -> float:
    return float(Fraction(rank, 1 << qubits))


# ---------------------------------------------------------------------------
# Projection forms


class SpecialProjection:
    """Hermitian idempotent given as an explicit dense or sparse matrix."""

    def __init__(self, matrix, check: bool = True):
        if not is_sparse(matrix):
            matrix = np.asarray(matrix, dtype=complex)
        dim = matrix.shape[0]
        self.qubits = dim.bit_length() - 1
        if matrix.shape != (dim, dim) or 1 << self.qubits != dim:
            raise DomainError("projection must be square with power-of-two dimension")
        self.matrix = matrix
        tr = float(np.real(matrix.diagonal().sum()))
        self.rank = int(round(tr))
        if check:
            h = hermitian_defect(matrix)
            if h > TOL_HERM:
                raise InvariantViolation(f"projection not Hermitian (defect {h:.3e})")
            idem = max_abs(matrix @ matrix - matrix)
            if idem > TOL_PROJ:
                raise InvariantViolation(f"projection not idempotent (defect {idem:.3e})")
            if abs(tr - self.rank) > TOL_PROJ:
                raise InvariantViolation(f"trace {tr} is not an integer rank")

    @property
    def tau(self) -> float:
        return _tau(self.rank, self.qubits)

    def diagonal(self) -> np.ndarray:
        return np.real(np.asarray(self.matrix.diagonal()))

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if is_sparse(self.matrix) else self.matrix

    def trace_with(self, rho: DensityMatrix) -> float:
        return trace_inner(rho, self.matrix)


class DiagonalProjection:
    """Projection onto the computational basis strings selected by ``mask``."""

    def __init__(self, mask):
        mask = np.asarray(mask, dtype=bool)
        self.qubits = mask.size.bit_length() - 1
        if 1 << self.qubits != mask.size:
            raise DomainError("mask length must be a power of two")
        self.mask = mask
        self.rank = int(mask.sum())

    @property
    def tau(self) -> float:
        return _tau(self.rank, self.qubits)

    def diagonal(self) -> np.ndarray:
        return self.mask.astype(float)

    def dense(self) -> np.ndarray:
        if (1 << self.qubits) > caps().dense_dim:
            raise CapacityError("diagonal projection too large to densify", required=1 << self.qubits)
        return np.diag(self.mask.astype(complex))

    def trace_with(self, rho: DensityMatrix) -> float:
        return float(np.sum(rho.diagonal()[self.mask]))

    @property
    def strings(self) -> list:
        return [format(i, f"0{self.qubits}b") for i in np.flatnonzero(self.mask)]


class WeightClassProjection:
    """Diagonal projection onto all n-bit strings whose ones-count is in ``ones``."""

    def __init__(self, qubits: int, ones):
        self.qubits = qubits
        self.ones = frozenset(int(k) for k in ones)
        if any(k < 0 or k > qubits for k in self.ones):
            raise DomainError("ones-count outside 0..n")
        self.rank = sum(math.comb(qubits, k) for k in self.ones)

    @property
    def tau(self) -> float:
        return _tau(self.rank, self.qubits)

    def mask(self) -> np.ndarray:
        if self.qubits > caps().diagonal_qubits:
            raise CapacityError("weight class too large to enumerate", required=self.qubits)
        return np.isin(ones_count(self.qubits), sorted(self.ones))

    def diagonal(self) -> np.ndarray:
        return self.mask().astype(float)

    def dense(self) -> np.ndarray:
        return DiagonalProjection(self.mask()).dense()

    def trace_with(self, rho: DensityMatrix) -> float:
        return float(np.sum(rho.diagonal()[self.mask()]))

    def mass_under_bernoulli(self, p: float) -> float:
        """Σ over included classes of C(n, j) p^{n-j} (1-p)^j (j = ones, n-j zeros)."""
        n = self.qubits
        return math.fsum(math.comb(n, j) * p ** (n - j) * (1 - p) ** j for j in self.ones)


class FactoredProjection:
    """Kronecker product of explicit block projections."""

    def __init__(self, blocks: Sequence[SpecialProjection]):
        self.blocks = tuple(blocks)
        self.qubits = sum(b.qubits for b in self.blocks)
        self.rank = math.prod(b.rank for b in self.blocks)

    @property
    def tau(self) -> float:
        return _tau(self.rank, self.qubits)

    @property
    def partition(self) -> tuple:
        return tuple(b.qubits for b in self.blocks)

    def trace_with_factors(self, factors: Sequence[DensityMatrix]) -> float:
        if tuple(f.qubits for f in factors) != self.partition:
            raise DomainError("state factors do not align with projection blocks")
        return math.prod(b.trace_with(f) for b, f in zip(self.blocks, factors))

    def dense(self) -> np.ndarray:
        if (1 << self.qubits) > caps().dense_dim:
            raise CapacityError("factored projection too large to densify", required=1 << self.qubits)
        out = np.ones((1, 1), dtype=complex)
        for b in self.blocks:
            out = kron(out, b.dense())
        return out

    def diagonal(self) -> np.ndarray:
        out = np.ones(1)
        for b in self.blocks:
            out = np.kron(out, b.diagonal())
        return out

    def trace_with(self, rho: DensityMatrix) -> float:
        return trace_inner(rho, self.dense())


Projection = Union[SpecialProjection, DiagonalProjection, WeightClassProjection, FactoredProjection]


def tau(p) -> float:
    """τ = rank · 2^{-n}; for a q-Σ⁰₁ set, τ of its top level."""
    return p.tau


def projection_trace(state: StatePrefix, p) -> float:
    """Tr(ρ_n p) at the projection's level n."""
    if isinstance(p, FactoredProjection) and state.factored:
        return p.trace_with_factors(state.factors(p.qubits))
    return p.trace_with(state.level(p.qubits))


# ---------------------------------------------------------------------------
# q-Σ⁰₁ sets and tests


def _lift_diagonal(d: np.ndarray, extra: int) -> np.ndarray:
    return np.repeat(d, 1 << extra)


def range_contained(lower, upper) -> float:
    """Defect of range(lower ⊗ I) ⊆ range(upper); 0 means contained."""
    extra = upper.qubits - lower.qubits
    if extra < 0:
        raise DomainError("lower projection has more qubits than upper")
    diag_forms = (DiagonalProjection, WeightClassProjection)
    if isinstance(lower, diag_forms) and isinstance(upper, diag_forms):
        low = _lift_diagonal(lower.diagonal(), extra)
        return float(np.max(np.clip(low - upper.diagonal(), 0, None), initial=0.0))
    a = kron(lower.dense(), np.eye(1 << extra))
    u = upper.dense()
    return max_abs(u @ a - a)


@dataclass
class QSigmaSet:
    """Finite truncation of a q-Σ⁰₁ set: level n → projection on n qubits."""

    levels: dict
    check: bool = True

    def __post_init__(self):
        self.levels = dict(sorted(self.levels.items()))
        for n, p in self.levels.items():
            if p.qubits != n:
                raise DomainError(f"level {n} holds a {p.qubits}-qubit projection")
        if self.check:
            keys = list(self.levels)
            for a, b in zip(keys, keys[1:]):
                dev = range_contained(self.levels[a], self.levels[b])
                if dev > TOL_PROJ:
                    raise InvariantViolation(f"range of level {a} not contained in level {b} ({dev:.3e})")

    @property
    def top(self) -> int:
        return max(self.levels)

    @property
    def tau(self) -> float:
        return self.levels[self.top].tau


KINDS = ("MLT", "Solovay", "StrongSolovay", "Schnorr")


@dataclass
class QTest:
    """Leveled test family.  ``members`` maps member index to a QSigmaSet
    (MLT, Solovay) or a projection (StrongSolovay, Schnorr).  ``masses`` holds
    each member's mass (τ by default, or the μ-mass for μ-weighted tests)."""

    kind: str
    members: dict
    declared_mass: float | None = None
    weighting: str = "tau"
    masses: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown test kind {self.kind!r}")
        if not self.masses:
            self.masses = {k: tau(v) for k, v in self.members.items()}
        self.validate()

    def validate(self) -> None:
        if self.kind == "MLT":
            for m, s in self.members.items():
                if s.tau > 2.0**-m + 1e-9:
                    raise InvariantViolation(f"member {m} has τ={s.tau} > 2^-{m}")
            return
        total = math.fsum(self.masses.values())
        if self.kind == "Schnorr" and (self.declared_mass is None or not math.isfinite(self.declared_mass)):
            raise InvariantViolation("Schnorr test needs a finite declared mass")
        if self.declared_mass is not None and total > self.declared_mass + 1e-12:
            raise InvariantViolation(f"member mass {total} exceeds declared {self.declared_mass}")


def evaluate_levels(state: StatePrefix, g: QSigmaSet) -> list:
    """(n, Tr(ρ_n p_n)) for every level shared with the state prefix."""
    shared = [n for n in g.levels if n <= state.depth]
    if not shared:
        raise DomainError("test set shares no level with the state prefix")
    return [(n, projection_trace(state, g.levels[n])) for n in shared]


def evaluate(state: StatePrefix, g: QSigmaSet) -> float:
    """ρ(G) on the prefix: the largest Tr(ρ_n p_n) over shared levels."""
    rows = evaluate_levels(state, g)
    for (a, ta), (b, tb) in zip(rows, rows[1:]):
        if tb < ta - 1e-8:
            raise InvariantViolation(f"trace decreased from level {a} ({ta}) to {b} ({tb})")
    return max(t for _, t in rows)


def _range_basis(p) -> np.ndarray:
    dec = hermitian_eig(p.dense())
    return dec.vectors[:, dec.values > 0.5]


def nest(tests: Sequence[QSigmaSet], m: int) -> QSigmaSet:
    """Span-union set: at level n, the projector onto Σ_{i=m}^{n} range(G^i_n).

    ``tests[i-1]`` is the member G^i.
    """
    if not tests:
        raise DomainError("nothing to nest")
    level_sets = {tuple(t.levels) for t in tests}
    if len(level_sets) != 1:
        raise DomainError("members have misaligned levels")
    out = {}
    for n in tests[0].levels:
        cols = [_range_basis(tests[i - 1].levels[n]) for i in range(m, min(n, len(tests)) + 1)]
        cols = [c for c in cols if c.size]
        dim = 1 << n
        if cols:
            stacked = np.hstack(cols)
            u, s, _ = np.linalg.svd(stacked, full_matrices=False)
            basis = u[:, s > 1e-8].T
            proj = projector_from(basis, dim=dim)
        else:
            proj = np.zeros((dim, dim), dtype=complex)
        p = SpecialProjection(proj)
        if m <= n and p.rank >= 1 << (n - m + 1):
            raise InvariantViolation(f"nested rank {p.rank} at level {n} is not below 2^{n - m + 1}")
        out[n] = p
    return QSigmaSet(out)


# ---------------------------------------------------------------------------
# Block-product test


def chapter4_N(m: int) -> int:
    """Smallest N ≥ 5 with ∏_{n=5}^N (1 - 1/n + 2^{-n}) < 2^{-m}, exactly."""
    target = Fraction(1, 1 << m)
    prod = Fraction(1)
    N = 4
    while True:
        N += 1
        prod *= 1 - Fraction(1, N) + Fraction(1, 1 << N)
        if prod < target:
            return N


def chapter4_block_projector(n: int) -> SpecialProjection:
    """Projector onto the eigenvectors of d_n with nonzero eigenvalue."""
    d = chapter4_block(n)
    return SpecialProjection(sparse_spectral_projector(d.data))


def build_chapter4_mlt(m: int, capacity: int = 16) -> tuple:
    """MLT member T_m = Π_5 ⊗ ... ⊗ Π_N at level γ(N), N = N(m).

    Returns ``(QTest, N)``.
    """
    if m < 0:
        raise DomainError("m must be non-negative")
    N = chapter4_N(m)
    if N > capacity:
        raise CapacityError(f"m={m} needs N={N} blocks, capacity is {capacity}", required=N)
    blocks = [chapter4_block_projector(n) for n in range(5, N + 1)]
    for n, b in zip(range(5, N + 1), blocks):
        if b.rank != (1 << n) - r_n(n):
            raise InvariantViolation(f"block {n} projector has rank {b.rank}")
    T = FactoredProjection(blocks)
    exact = Fraction(T.rank, 1 << T.qubits)
    if not exact < Fraction(1, 1 << m):
        raise InvariantViolation(f"τ(T_{m}) = {float(exact)} is not below 2^-{m}")
    test = QTest("MLT", {m: QSigmaSet({gamma(N): T})}, info={"N": N, "tau_exact": exact})
    return test, N


# ---------------------------------------------------------------------------
# Diagonal conversions


def _strings(idx, n) -> frozenset:
    return frozenset(format(int(i), f"0{n}b") for i in idx)


def cylinder_mask(sets: Mapping[int, frozenset], top: int) -> np.ndarray:
    """Indicator over 2^top of the union of cylinders ⟦σ⟧ for σ in ``sets``."""
    mask = np.zeros(1 << top, dtype=bool)
    for n, strings in sets.items():
        if n > top:
            raise DomainError(f"set at level {n} beyond top level {top}")
        width = 1 << (top - n)
        for s in strings:
            start = int(s, 2) * width if s else 0
            mask[start : start + width] = True
    return mask


@dataclass
class DiagonalConversion:
    sets: dict  # m → {n → frozenset of strings}
    lebesgue: dict  # m → μ(C^m)
    captured: dict  # (m, n) → μ_ρ(C^m_n), recorded where Tr(ρ_n G^m_n) > δ


def diagonal_mlt_conversion(g: QTest, delta, state: StatePrefix | None = None) -> DiagonalConversion:
    """Threshold each level: T^m_n = {σ : ⟨σ|G^m_n|σ⟩ > δ/4}.

    With a diagonal ``state``, every level where Tr(ρ_n G^m_n) > δ also gets
    μ_ρ(C^m_n) ≥ 3δ/4 checked.
    """
    delta = as_rational(delta)
    if not 0 < delta < 1:
        raise DomainError("δ must lie in (0, 1)")
    if g.kind != "MLT":
        raise DomainError("conversion needs an MLT")
    thr = float(delta / 4)
    sets, leb, captured = {}, {}, {}
    for m, s in g.members.items():
        per = {}
        for n, p in s.levels.items():
            d = p.diagonal()
            idx = np.flatnonzero(d > thr)
            if idx.size and not idx.size < float(4 / delta) * p.rank:
                raise InvariantViolation(f"|T^{m}_{n}| = {idx.size} breaks the counting bound")
            per[n] = _strings(idx, n)
        keys = list(per)
        for a, b in zip(keys, keys[1:]):
            lifted = {t + format(j, f"0{b - a}b") for t in per[a] for j in range(1 << (b - a))}
            if not lifted <= per[b]:
                raise InvariantViolation(f"T^{m} not upward closed from level {a} to {b}")
        top = max(keys)
        mu = float(cylinder_mask(per, top).mean())
        if not mu < float(4 / delta) * 2.0**-m:
            raise InvariantViolation(f"μ(C^{m}) = {mu} not below 4/δ · 2^-{m}")
        sets[m], leb[m] = per, mu
        if state is not None:
            for n, p in s.levels.items():
                if n > state.depth:
                    continue
                rho = state.level(n)
                if projection_trace(state, p) > float(delta):
                    w = rho.diagonal()
                    got = float(np.sum(w[[int(t, 2) for t in per[n]]])) if per[n] else 0.0
                    if got < 0.75 * float(delta) - 1e-12:
                        raise InvariantViolation(f"μ_ρ(C^{m}_{n}) = {got} below 3δ/4")
                    captured[(m, n)] = got
    return DiagonalConversion(sets, leb, captured)


@dataclass
class SolovayConversion:
    sets: dict  # t → frozenset C^m_t
    m: int
    mass: float | None  # μ_ρ(J^m) over the computed levels, when a state is given


def _member_diag_at(s: QSigmaSet, t: int):
    """Diagonal of S_t, lifting the nearest lower level when t is absent."""
    below = [n for n in s.levels if n <= t]
    if not below:
        return None
    n = max(below)
    return _lift_diagonal(s.levels[n].diagonal(), t - n)


def solovay_to_mlt_diagonal(s: QTest, delta, m: int, state: StatePrefix | None = None) -> SolovayConversion:
    """C^m_t = {σ ∈ 2^t : Σ_{k≤t} ⟨σ|S^k_t|σ⟩ > 2^{m-1} δ}; members with k > t are empty."""
    delta = as_rational(delta)
    if not 0 < delta < 1:
        raise DomainError("δ must lie in (0, 1)")
    if s.kind not in ("Solovay", "StrongSolovay"):
        raise DomainError("conversion needs a Solovay test")
    levels = sorted({n for member in s.members.values() for n in member.levels})
    thr = float(delta * Fraction(2) ** (m - 1))
    sets = {}
    for t in levels:
        total = np.zeros(1 << t)
        mass = 0.0
        for k, member in s.members.items():
            if k > t:
                continue
            d = _member_diag_at(member, t)
            if d is not None:
                total += d
                mass += float(d.sum())
        idx = np.flatnonzero(total > thr)
        if idx.size and not idx.size * thr < mass:
            raise InvariantViolation(f"|C^{m}_{t}| = {idx.size} breaks the counting bound")
        sets[t] = _strings(idx, t)
    got = None
    if state is not None and levels:
        top = min(max(levels), state.depth)
        usable = {t: v for t, v in sets.items() if t <= top}
        w = state.level(top).diagonal()
        got = float(np.sum(w[cylinder_mask(usable, top)]))
    return SolovayConversion(sets, m, got)


# ---------------------------------------------------------------------------
# LLN and SMB tests


def lln_schnorr_test(delta, n_max: int) -> QTest:
    """Members S_n project onto {σ ∈ 2^n : ones fraction > 1/2 + δ/2}."""
    delta = as_rational(delta)
    if not 0 < delta < 1:
        raise DomainError("δ must lie in (0, 1)")
    members, rows = {}, []
    for n in range(1, n_max + 1):
        ones = [k for k in range(n + 1) if Fraction(k, n) > Fraction(1, 2) + delta / 2]
        p = WeightClassProjection(n, ones)
        bound = 2 * math.exp(-0.5 * n * float(delta) ** 2)
        if p.tau > bound:
            raise InvariantViolation(f"level {n}: τ = {p.tau} exceeds Chernoff bound {bound}")
        members[n] = p
        rows.append((n, p.rank, p.tau, bound))
    declared = math.fsum(p.tau for p in members.values())
    return QTest("Schnorr", members, declared_mass=declared, info={"delta": delta, "levels": rows})


def binary_entropy(p: float) -> float:
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def smb_test(p: float, delta, n_max: int) -> QTest:
    """Members S_n project onto {σ : -n^{-1} log μ(σ) > δ/2 + h(p)}.

    μ-masses are exact binomial sums.  Each level is checked against the
    Hoeffding bound exp(-n δ² / (2 R²)), R = |log p - log(1-p)|, which holds for
    every p; the weaker-looking 2exp(-n δ²/2) is recorded per level as
    ``stated_bound_ok`` because it fails for some p far from 1/2.
    """
    if not 0 < p < 1:
        raise DomainError(f"p={p} must lie in (0, 1)")
    delta = as_rational(delta)
    if not 0 < delta < 1:
        raise DomainError("δ must lie in (0, 1)")
    h = binary_entropy(p)
    lp, lq = math.log2(p), math.log2(1 - p)
    spread = abs(lp - lq)
    members, masses, rows = {}, {}, []
    for n in range(1, n_max + 1):
        ones = []
        for j in range(n + 1):
            k = n - j  # zeros
            if -(k * lp + j * lq) / n > float(delta) / 2 + h:
                ones.append(j)
        proj = WeightClassProjection(n, ones)
        mass = proj.mass_under_bernoulli(p)
        proven = math.exp(-n * float(delta) ** 2 / (2 * spread**2)) if spread else 0.0
        stated = 2 * math.exp(-0.5 * n * float(delta) ** 2)
        if mass > proven + 1e-12:
            raise InvariantViolation(f"level {n}: μ-mass {mass} exceeds Hoeffding bound {proven}")
        members[n] = proj
        masses[n] = mass
        rows.append((n, mass, proven, stated, mass <= stated))
    declared = math.fsum(masses.values())
    return QTest(
        "Schnorr",
        members,
        declared_mass=declared,
        weighting="mu",
        masses=masses,
        info={"p": p, "delta": delta, "h": h, "levels": rows},
    )


def convexity_pigeonhole(components: Sequence[StatePrefix], weights, p, delta: float) -> int:
    """Index i with Tr(ρ^i_n p) > δ, given Σ w_i Tr(ρ^i_n p) > δ."""
    w = np.asarray(weights, dtype=float)
    if len(w) != len(components) or abs(w.sum() - 1) > 1e-10 or (w < 0).any():
        raise DomainError("weights must be a probability vector matching the components")
    traces = [projection_trace(c, p) for c in components]
    if not float(np.dot(w, traces)) > delta:
        raise DomainError("mixture trace does not exceed δ; no witness is promised")
    for i, t in enumerate(traces):
        if t > delta:
            return i
    raise InvariantViolation("convexity failed to produce a witness")


# ---------------------------------------------------------------------------
# Descriptors


def build_test(descriptor: dict) -> QTest:
    """Build from ``{"kind", "builder", "params"}``."""
    try:
        builder = descriptor["builder"]
        params = descriptor.get("params", {}) or {}
    except (KeyError, TypeError, AttributeError) as exc:
        raise DescriptorError(f"malformed test descriptor: {exc}") from exc
    try:
        if builder == "chapter4":
            return build_chapter4_mlt(int(params["m"]), int(params.get("capacity", 16)))[0]
        if builder == "lln":
            return lln_schnorr_test(params["delta"], int(params["n_max"]))
        if builder == "smb":
            return smb_test(float(params["p"]), params["delta"], int(params["n_max"]))
        if builder == "explicit":
            return _explicit_test(descriptor.get("kind", "mlt"), params)
    except KeyError as exc:
        raise DescriptorError(f"test descriptor for {builder!r} lacks parameter {exc}") from exc
    raise DescriptorError(f"unknown test builder {builder!r}")


_KIND_NAMES = {"mlt": "MLT", "solovay": "Solovay", "schnorr": "Schnorr", "strongsolovay": "StrongSolovay"}


def _explicit_test(kind: str, params: dict) -> QTest:
    """``params["members"]``: {m: {n: [basis strings]}} diagonal projections."""
    try:
        kind_name = _KIND_NAMES[kind.lower()]
    except KeyError:
        raise DescriptorError(f"unknown test kind {kind!r}") from None
    members = {}
    for m, levels in params["members"].items():
        lv = {}
        for n, strings in levels.items():
            n = int(n)
            mask = np.zeros(1 << n, dtype=bool)
            for s in strings:
                if len(s) != n:
                    raise DescriptorError(f"string {s!r} is not of length {n}")
                mask[int(s, 2)] = True
            lv[n] = DiagonalProjection(mask)
        members[int(m)] = QSigmaSet(lv)
    if kind_name in ("StrongSolovay", "Schnorr"):
        members = {m: s.levels[s.top] for m, s in members.items()}
    return QTest(kind_name, members, declared_mass=params.get("declared_mass"))


def load_test(path: str) -> QTest:
    try:
        with open(path) as fh:
            desc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DescriptorError(f"cannot read test descriptor {path}: {exc}") from exc
    return build_test(desc)
