"""Randomized and brute-force checks of the finite-dimensional linear-algebra
results at desk scale.  Every check is deterministic under its seed."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .linalg import kron, kron_all, projector_from, qubits_of, top_eigvec_in_complement
from .states import chapter4_block

CHECKS = ("lina", "lemma30", "kron", "dn", "atomic")


@dataclass
class OracleOutcome:
    name: str
    trials: int = 0
    violations: int = 0
    worst_margin: float = math.inf
    details: list = field(default_factory=list)
    inconclusive: int = 0

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self, margin: float, detail: dict | None = None, violated: bool | None = None) -> None:
        """One trial; a negative margin is a violation unless ``violated`` says otherwise."""
        self.trials += 1
        self.worst_margin = min(self.worst_margin, margin)
        if margin < 0 if violated is None else violated:
            self.violations += 1
            if detail is not None and len(self.details) < 20:
                self.details.append(detail)

    def merge(self, other: "OracleOutcome") -> None:
        self.trials += other.trials
        self.violations += other.violations
        self.inconclusive += other.inconclusive
        self.worst_margin = min(self.worst_margin, other.worst_margin)
        self.details += other.details[: max(0, 20 - len(self.details))]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "violations": self.violations,
            "inconclusive": self.inconclusive,
            "worst_margin": None if math.isinf(self.worst_margin) else self.worst_margin,
            "details": self.details,
        }


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _ginibre(rng, rows: int, cols: int) -> np.ndarray:
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def random_unitary(rng, dim: int) -> np.ndarray:
    q, r = np.linalg.qr(_ginibre(rng, dim, dim))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_projector(rng, dim: int, rank: int) -> np.ndarray:
    if rank == 0:
        return np.zeros((dim, dim), dtype=complex)
    q, _ = np.linalg.qr(_ginibre(rng, dim, rank))
    return q @ q.conj().T


def random_density(rng, dim: int, rank: int | None = None) -> np.ndarray:
    g = _ginibre(rng, dim, rank or dim)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def _unit_pairs(rng, n: int) -> np.ndarray:
    z = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# covering projection for families of subspaces


def greedy_cover(family, delta: float, m: int) -> np.ndarray:
    """Maximal orthonormal D with Σ_k ⟨ψ|M_k|ψ⟩ > mδ/6 for every ψ ∈ D, grown
    one top eigenvector of the compressed sum at a time.  Returns D as rows."""
    dim = family[0].shape[0]
    a = sum(family)
    chosen: list = []
    while len(chosen) < dim:
        top = top_eigvec_in_complement(a, chosen)
        if top.full or top.value <= m * delta / 6:
            break
        chosen.append(top.vector)
    return np.array(chosen, dtype=complex).reshape(len(chosen), dim)


def in_q(rho: np.ndarray, family, delta: float, m: int) -> bool:
    hits = sum(np.real(np.einsum("ij,ji->", rho, mk)) > delta for mk in family)
    return hits >= m


def _biased_candidate(rng, family, m: int, dim: int) -> np.ndarray:
    """Pure state on random vectors drawn from m members, mixed 50/50 in
    expectation with a random density."""
    pick = rng.choice(len(family), size=min(m, len(family)), replace=False)
    psi = sum(family[k] @ (rng.normal(size=dim) + 1j * rng.normal(size=dim)) for k in pick)
    norm = np.linalg.norm(psi)
    if norm < 1e-12:
        return random_density(rng, dim)
    psi = psi / norm
    w = 0.5 * rng.random()
    return (1 - w) * np.outer(psi, psi.conj()) + w * random_density(rng, dim)


def verify_lina(dim: int, family, delta: float, m: int, q_samples: int, seed: int, budget: int = 50) -> OracleOutcome:
    """Covering-projection bounds: Tr(M) ≤ 6d/(δm) and Tr(Mρ) ≥ δ²/36 on sampled ρ in Q."""
    out = OracleOutcome("lina")
    if dim > 64:
        raise DomainError("dimension above 64")
    family = [np.asarray(f, dtype=complex) for f in family]
    if not family:
        out.inconclusive = 1
        return out
    d = sum(int(round(np.trace(f).real)) for f in family)
    cover = greedy_cover(family, delta, m)
    M = projector_from(cover, dim)
    size_margin = 6 * d / (delta * m) - len(cover)
    out.record(size_margin, {"kind": "size", "trace_M": len(cover), "d": d})
    rng = _rng(seed)
    accepted = 0
    for _ in range(budget * q_samples):
        if accepted == q_samples:
            break
        rho = _biased_candidate(rng, family, m, dim) if rng.random() < 0.5 else random_density(rng, dim)
        if not in_q(rho, family, delta, m):
            continue
        accepted += 1
        cap = float(np.real(np.einsum("ij,ji->", M, rho)))
        out.record(cap - delta**2 / 36, {"kind": "capture", "trace_M_rho": cap, "delta": delta})
    if accepted == 0:
        out.inconclusive = 1
    return out


def random_family(rng, dim: int, members: int, anchored: bool) -> list:
    """Random subspaces; anchored families share a random unit vector so that
    states near it lie in Q."""
    anchor = _ginibre(rng, dim, 1)[:, 0]
    out = []
    for _ in range(members):
        r = int(rng.integers(1, max(2, dim // 4) + 1))
        g = _ginibre(rng, dim, r)
        if anchored:
            g[:, 0] = anchor
        q, _ = np.linalg.qr(g)
        out.append(q @ q.conj().T)
    return out


def lina_sweep(families: int = 50, q_samples: int = 200, seed: int = 7) -> OracleOutcome:
    rng = _rng(seed)
    dims = (2, 4, 8, 16, 32, 64)
    total = OracleOutcome("lina")
    for i in range(families):
        dim = dims[i % len(dims)]
        members = int(rng.integers(1, 7))
        fam = random_family(rng, dim, members, anchored=bool(i % 2 == 0))
        delta = float(rng.choice([0.1, 0.2, 0.3, 0.5]))
        m = int(rng.integers(1, min(members, 3) + 1))
        total.merge(verify_lina(dim, fam, delta, m, q_samples, seed=int(rng.integers(2**31))))
    return total


# ---------------------------------------------------------------------------
# diagonal-count bound


def lemma30_count(basis: np.ndarray, F: np.ndarray, delta: float) -> int:
    """#{i : ⟨e_i|F|e_i⟩ > δ} for the columns e_i of ``basis``."""
    diag = np.real(np.einsum("ji,jk,ki->i", basis.conj(), F, basis))
    return int(np.sum(diag > delta))


def verify_lemma30(dim: int, trials: int, seed: int) -> OracleOutcome:
    """|S| < Tr(F)/δ whenever S is nonempty (with F = 0 both sides vanish)."""
    if dim > 1 << 12:
        raise DomainError("dimension above 2^12")
    out = OracleOutcome("lemma30")
    rng = _rng(seed)
    for t in range(trials):
        basis = random_unitary(rng, dim)
        rank = int(rng.integers(0, dim + 1))
        F = random_projector(rng, dim, rank)
        delta = float(rng.uniform(1e-3, 1.0))
        count = lemma30_count(basis, F, delta)
        margin = rank / delta - count
        out.record(margin, {"trial": t, "count": count, "rank": rank, "delta": delta}, violated=count > 0 and margin <= 0)
    return out


# ---------------------------------------------------------------------------
# anti-diagonal product identity


def kron_antidiagonal_deviation(pairs: np.ndarray, convention: str = "swapped") -> float:
    """max_k | |v_k||v_{2^n-k+1}| - ∏|a_i||b_i| | over k ≤ 2^{n-1}."""
    v = kron_all([p for p in pairs], convention=convention)
    n = len(pairs)
    half = 1 << (n - 1)
    prod = float(np.prod(np.abs(pairs[:, 0]) * np.abs(pairs[:, 1])))
    lhs = np.abs(v[:half]) * np.abs(v[::-1][:half])
    return float(np.max(np.abs(lhs - prod)))


def verify_kron_antidiagonal(n: int, trials: int, seed: int, tol: float = 1e-10) -> OracleOutcome:
    if not 1 <= n <= 12:
        raise DomainError("n must lie in 1..12")
    out = OracleOutcome("kron")
    rng = _rng(seed)
    for t in range(trials):
        pairs = _unit_pairs(rng, n)
        if t % 10 == 9:
            pairs[int(rng.integers(n))] = [1.0, 0.0]
        dev = max(kron_antidiagonal_deviation(pairs, c) for c in ("swapped", "standard"))
        out.record(tol - dev, {"n": n, "trial": t, "deviation": dev})
    return out


def kron_sweep(n_max: int = 12, trials: int = 100, seed: int = 7) -> OracleOutcome:
    total = OracleOutcome("kron")
    for n in range(1, n_max + 1):
        total.merge(verify_kron_antidiagonal(n, trials, seed + n))
    return total


# ---------------------------------------------------------------------------
# block quadratic form on product vectors


def dn_quadform(n: int, pairs: np.ndarray) -> float:
    w = kron_all([p for p in pairs])
    d = chapter4_block(n).data
    return float(abs(np.vdot(w, d @ w)))


def verify_dn_quadform(n: int, trials: int, seed: int) -> OracleOutcome:
    """|⟨W|d_n|W⟩| ∈ 2^{-n}[1 - 2/n, 1 + 2/n] for product unit vectors W."""
    if not 5 <= n <= 16:
        raise DomainError("n must lie in 5..16")
    out = OracleOutcome("dn")
    rng = _rng(seed)
    lo, hi = 2.0**-n * (1 - 2 / n), 2.0**-n * (1 + 2 / n)
    fixed = [np.tile([1.0, 0.0], (n, 1)), np.tile([1.0, 1.0], (n, 1)) / math.sqrt(2)]
    for t in range(trials):
        pairs = fixed[t] if t < len(fixed) else _unit_pairs(rng, n)
        q = dn_quadform(n, pairs)
        out.record(min(q - lo, hi - q) * 2.0**n, {"n": n, "trial": t, "value": q})
    return out


def dn_sweep(n_lo: int = 5, n_hi: int = 16, trials: int = 1000, seed: int = 7) -> OracleOutcome:
    total = OracleOutcome("dn")
    for n in range(n_lo, n_hi + 1):
        total.merge(verify_dn_quadform(n, trials, seed + n))
    return total


# ---------------------------------------------------------------------------
# atomic probes


PROBES = np.array(
    [
        [1, 0],
        [0, 1],
        [1 / math.sqrt(2), 1 / math.sqrt(2)],
        [1 / math.sqrt(2), 1j / math.sqrt(2)],
        [0.5j, math.sqrt(3) / 2],
    ],
    dtype=complex,
)


def probe_values(e: np.ndarray) -> np.ndarray:
    """v†Ev for every product of single-qubit probes, shape (5,)*n.

    Contracts one qubit at a time with conj(c_a)c_b, so the cost stays near
    5^n·2^n rather than 5^n·4^n.
    """
    e = np.asarray(e, dtype=complex)
    dim = e.shape[0]
    if e.ndim != 2 or e.shape[1] != dim:
        raise DomainError("probe evaluation needs a square matrix")
    n = qubits_of(dim)
    w = np.einsum("ai,aj->aij", PROBES.conj(), PROBES)
    t = e.reshape((2,) * (2 * n))
    # axes: n row bits then n column bits; after each step the new probe axis goes last
    for q in range(n):
        t = np.tensordot(t, w, axes=([0, n - q], [1, 2]))
    return t


def verify_atomic_probes(e: np.ndarray, mode: str) -> OracleOutcome:
    """Probe verdict (all probe values on target within 1e-9) against direct equality."""
    e = np.asarray(e, dtype=complex)
    n = qubits_of(e.shape[0])
    if n > 8:
        raise DomainError("n must be at most 8")
    if mode == "zero":
        target = 0.0
    elif mode == "scaled_identity":
        target = 2.0**-n
    else:
        raise DomainError(f"unknown mode {mode!r}")
    vals = probe_values(e)
    probe_dev = float(np.max(np.abs(vals - target)))
    direct_dev = float(np.max(np.abs(e - target * np.eye(e.shape[0]))))
    probe_says = probe_dev <= 1e-9
    direct_says = direct_dev <= 1e-9
    out = OracleOutcome("atomic")
    out.record(
        0.0 if probe_says == direct_says else -1.0,
        {"mode": mode, "n": n, "probe_deviation": probe_dev, "direct_deviation": direct_dev},
    )
    return out


def atomic_sweep(trials: int = 200, seed: int = 7) -> OracleOutcome:
    """Random Hermitian and arbitrary matrices plus exact targets and small perturbations."""
    rng = _rng(seed)
    total = OracleOutcome("atomic")
    for t in range(trials):
        n = 1 + t % 6
        dim = 1 << n
        g = _ginibre(rng, dim, dim)
        kind = t % 4
        if kind == 0:
            e, mode = (g + g.conj().T) / 2, "scaled_identity"
        elif kind == 1:
            e, mode = g, "zero"
        elif kind == 2:
            e = np.eye(dim) * 2.0**-n
            i, j = rng.choice(dim, size=2, replace=False)
            e[i, j] += 1e-3
            e[j, i] += 1e-3
            mode = "scaled_identity"
        else:
            e = np.eye(dim) * 2.0**-n if t % 8 == 3 else np.zeros((dim, dim))
            mode = "scaled_identity" if t % 8 == 3 else "zero"
        total.merge(verify_atomic_probes(e, mode))
    return total


# ---------------------------------------------------------------------------


def run_checks(check: str, seed: int) -> list:
    """Acceptance-scale sweeps for one check or all of them."""
    names = CHECKS if check == "all" else (check,)
    out = []
    for name in names:
        if name == "lina":
            out.append(lina_sweep(seed=seed))
        elif name == "lemma30":
            out.append(verify_lemma30(64, 1000, seed))
        elif name == "kron":
            out.append(kron_sweep(seed=seed))
        elif name == "dn":
            out.append(dn_sweep(seed=seed))
        elif name == "atomic":
            out.append(atomic_sweep(seed=seed))
        else:
            raise DomainError(f"unknown check {name!r}")
    return out
