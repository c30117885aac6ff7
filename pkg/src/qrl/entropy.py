"""Von Neumann entropy of prefix levels and the entropy/randomness bounds.

Entropies are in bits.  Limits over infinite sequences are reported as
finite-range estimates over the computed levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate, optimize

from .config import TOL_PSD
from .errors import DomainError, InvariantViolation
from .linalg import DensityMatrix, hermitian_eig, projector_from
from .qtests import DiagonalProjection, QSigmaSet, QTest, SpecialProjection, as_rational
from .states import DensityFnSpec, StatePrefix, chapter4_block, dyadic_weights, gamma, r_n

FINITE_RANGE = "finite-range estimate"


def _clamped(vals: np.ndarray) -> np.ndarray:
    vals = np.asarray(vals, dtype=float)
    if vals.size and vals.min() < -TOL_PSD:
        raise InvariantViolation(f"eigenvalue {vals.min():.3e} below the PSD tolerance")
    return np.clip(vals, 0.0, 1.0)


def shannon_bits(p: np.ndarray) -> float:
    """-Σ p log2 p with 0·log 0 = 0."""
    p = _clamped(p)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    return shannon_bits(rho.eigenvalues())


def chapter4_block_entropy(n: int) -> float:
    """Closed form for d_n: eigenvalues 2^{1-n} and 0 with multiplicity r_n each,
    2^{-n} with multiplicity 2^n - 2r_n."""
    return n - r_n(n) * 2.0 ** (1 - n)


# ---------------------------------------------------------------------------
# rate series


@dataclass
class EntropyReport:
    rows: list  # (n, H, H/n, H-n)
    block_rows: list = field(default_factory=list)  # (N, γ(N), H, rate) at block boundaries
    label: str = FINITE_RANGE

    @property
    def rates(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    @property
    def min_rate(self) -> float:
        return float(self.rates.min())

    @property
    def last_rate(self) -> float:
        return float(self.rows[-1][2])

    @property
    def excess_strictly_decreasing(self) -> bool:
        ex = [r[3] for r in self.rows]
        return all(b < a for a, b in zip(ex, ex[1:]))

    @property
    def block_rate_increasing(self) -> bool:
        rates = [r[3] for r in self.block_rows]
        return all(b > a for a, b in zip(rates, rates[1:]))

    def summary(self) -> dict:
        out = {
            "label": self.label,
            "levels": len(self.rows),
            "min_rate": self.min_rate,
            "last_rate": self.last_rate,
            "excess_strictly_decreasing": self.excess_strictly_decreasing,
        }
        if self.block_rows:
            out["block_rate_increasing"] = self.block_rate_increasing
            out["last_block_rate"] = self.block_rows[-1][3]
        return out


def _factored_entropies(state: StatePrefix, ns) -> dict:
    """H(level n) as a sum over Kronecker factors; full blocks are cached."""
    cache: dict = {}
    out = {}
    for n in ns:
        total = 0.0
        for f in state.factors(n):
            key = id(f.data)
            if key not in cache:
                cache[key] = (f, von_neumann_entropy(f))
            total += cache[key][1]
        out[n] = total
    return out


def entropy_rate_series(state: StatePrefix, levels=None) -> EntropyReport:
    ns = list(levels) if levels is not None else list(range(1, state.depth + 1))
    if state.factored:
        hs = _factored_entropies(state, ns)
    else:
        hs = {n: von_neumann_entropy(state.level(n)) for n in ns}
    rows = []
    for n in ns:
        h = hs[n]
        if not -1e-9 <= h <= n + 1e-8:
            raise InvariantViolation(f"H(level {n}) = {h} outside [0, {n}]")
        rows.append((n, h, h / n, h - n))
    blocks = []
    if state.kind == "chapter4":
        N = state.descriptor.get("N", 4)
        h = 0.0
        for b in range(5, N + 1):
            h += von_neumann_entropy(chapter4_block(b))
            g = gamma(b)
            blocks.append((b, g, h, h / g))
    return EntropyReport(rows, blocks)


def chapter4_rate_closed_form(N: int) -> float:
    """Σ_{n=5}^{N} (n - r_n 2^{1-n}) / Σ_{n=5}^{N} n."""
    return math.fsum(chapter4_block_entropy(n) for n in range(5, N + 1)) / gamma(N)


# ---------------------------------------------------------------------------
# eigenvalue mass bounds


def top_k_mass(rho: DensityMatrix, k: int) -> float:
    if not 1 <= k <= rho.dim:
        raise DomainError(f"k={k} outside 1..{rho.dim}")
    vals = rho.eigenvalues()
    return float(math.fsum(vals[:k]))


@dataclass(frozen=True)
class FlattenedBound:
    S: float
    bound: float
    entropy: float
    holds: bool


def flattened_entropy_bound(rho: DensityMatrix, m: int) -> FlattenedBound:
    """S = top 2^{n-m} eigenvalue mass, bound = 1 - mS + n, holds iff H ≤ bound + 1e-8."""
    n = rho.qubits
    if not 0 <= m < n:
        raise DomainError(f"need 0 <= m < n, got m={m}, n={n}")
    vals = _clamped(rho.eigenvalues())
    s = float(math.fsum(vals[: 1 << (n - m)]))
    h = shannon_bits(vals)
    bound = 1.0 - m * s + n
    return FlattenedBound(s, bound, h, h <= bound + 1e-8)


def flattened_distribution(rho: DensityMatrix, m: int) -> np.ndarray:
    """The flattened spectrum: S·2^{m-n} on the first 2^{n-m} entries and
    (1 - S)/(2^n - 2^{n-m}) on the rest."""
    n = rho.qubits
    if not 1 <= m < n:
        raise DomainError(f"need 1 <= m < n, got m={m}, n={n}")
    head = 1 << (n - m)
    s = top_k_mass(rho, head)
    out = np.empty(1 << n)
    out[:head] = s / head
    out[head:] = (1.0 - s) / ((1 << n) - head)
    return out


def flattened_entropy_closed_form(S: float, n: int, m: int) -> float:
    """h(S) - mS + n + (1 - S) log2(1 - 2^{-m}), the entropy of the flattened spectrum."""
    h = shannon_bits(np.array([S, 1.0 - S]))
    tail = (1.0 - S) * math.log2(1.0 - 2.0**-m) if S < 1 else 0.0
    return h - m * S + n + tail


# ---------------------------------------------------------------------------
# eigenvalue-concentration test


def ceil_pow2(n: int, eps: Fraction) -> int:
    """⌈2^{n·ε}⌉ in exact integer arithmetic for rational ε = a/b."""
    a, b = eps.numerator, eps.denominator
    target = 1 << (n * a)
    k = max(1, int(math.ceil(2.0 ** (n * a / b))))
    while k**b < target:
        k += 1
    while k > 1 and (k - 1) ** b >= target:
        k -= 1
    return k


def size_condition(n: int, m: int, eps: Fraction) -> bool:
    """(2^{nε} + 1)/2^n < 2^{-m}, exactly."""
    room = (1 << (n - m)) - 1 if n >= m else -1
    if room <= 0:
        return False
    return (1 << (n * eps.numerator)) < room**eps.denominator


def _top_projection(rho: DensityMatrix, k: int):
    """Projection onto the top-k eigenvectors and its captured mass."""
    if rho.storage == "diagonal":
        w = np.asarray(rho.data, dtype=float)
        idx = np.argsort(-w, kind="stable")[:k]
        mask = np.zeros(rho.dim, dtype=bool)
        mask[idx] = True
        return DiagonalProjection(mask), float(math.fsum(w[idx]))
    dec = hermitian_eig(rho.to_dense())
    vecs = dec.vectors[:, :k].T
    p = SpecialProjection(projector_from(vecs, rho.dim))
    return p, float(math.fsum(np.clip(dec.values[:k], 0, None)))


def eigenmass_concentration_test(state: StatePrefix, eps, delta, m_max: int | None = None):
    """MLT built from top-eigenvector projectors, or None if no level qualifies.

    Member m sits at the least level n with top-⌈2^{nε}⌉ eigenvalue mass > δ
    and (2^{nε} + 1)/2^n < 2^{-m}.  The qualifying set shrinks as m grows, so
    the search stops at the first m without a level.
    """
    eps = as_rational(eps)
    delta = float(as_rational(delta))
    if not 0 < eps < 1:
        raise DomainError("ε must lie in (0, 1)")
    masses: dict = {}

    def top_mass(n):
        if n not in masses:
            vals = _clamped(state.level(n).eigenvalues())
            masses[n] = float(math.fsum(vals[: ceil_pow2(n, eps)]))
        return masses[n]

    members, rows = {}, []
    m = 1
    while m_max is None or m <= m_max:
        hit = next(
            (n for n in range(m + 1, state.depth + 1) if size_condition(n, m, eps) and top_mass(n) > delta),
            None,
        )
        if hit is None:
            break
        k = ceil_pow2(hit, eps)
        proj, mass = _top_projection(state.level(hit), k)
        members[m] = QSigmaSet({hit: proj})
        rows.append((m, hit, k, mass))
        m += 1
    if not members:
        return None
    return QTest("MLT", members, info={"witness": rows, "eps": str(eps), "delta": delta})


# ---------------------------------------------------------------------------
# diagonal f-states


def _critical_point(spec: DensityFnSpec) -> float:
    """Location of the minimum of a density that falls then rises on (0, 1)."""
    res = optimize.minimize_scalar(spec.f, bounds=(1e-12, 1.0), method="bounded", options={"xatol": 1e-13})
    return float(res.x)


def mean_value_points(spec: DensityFnSpec, n: int, iters: int = 80) -> np.ndarray:
    """x_σ in each dyadic interval with f(x_σ) = 2^n α_σ, by bisection on a monotone piece."""
    edges = np.arange((1 << n) + 1, dtype=float) / (1 << n)
    a, b = edges[:-1], edges[1:]
    target = dyadic_weights(spec, n) * (1 << n)
    c = _critical_point(spec)
    with np.errstate(divide="ignore"):
        fa = np.where(a > 0, spec.f(np.where(a > 0, a, 1.0)), np.inf)
    inside = (a < c) & (c < b)
    left_piece = inside & (fa >= target)
    lo = np.where(inside & ~left_piece, c, a)
    hi = np.where(left_piece, c, b)
    decreasing = (hi <= c) | left_piece
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        above = spec.f(mid) > target
        right = above == decreasing
        lo = np.where(right, mid, lo)
        hi = np.where(right, hi, mid)
    return 0.5 * (lo + hi)


def riemann_excess(spec: DensityFnSpec, n: int) -> float:
    """Σ_σ 2^{-n}·(-f log2 f)(x_σ) at the mean-value points."""
    fx = spec.f(mean_value_points(spec, n))
    return float(math.fsum(-(fx * np.log2(fx)) / (1 << n)))


# In t = -ln x the entropy integrand of each density is smooth on [0, inf):
# x·f(x) and log2 f(x) in closed form with u = 1 + t.
_LOG2E = math.log2(math.e)
_T_FORMS = {
    "f1": (lambda t: 1.0 / (1 + t) ** 2, lambda t: t * _LOG2E - 2 * math.log2(1 + t)),
    "f2": (lambda t: 2.0 / (1 + t) ** 3, lambda t: 1 + t * _LOG2E - 3 * math.log2(1 + t)),
}


def entropy_integral(spec: DensityFnSpec) -> float:
    """-∫_0^1 f log2 f; -inf when the integral diverges (f1)."""
    if spec.id == "f1":
        return -math.inf
    if spec.id in _T_FORMS:
        xf, logf = _T_FORMS[spec.id]
        total, _ = integrate.quad(lambda t: -xf(t) * logf(t), 0.0, math.inf, epsabs=1e-12, epsrel=1e-12)
        return total

    def g(x):
        v = float(spec.f(x))
        return -v * math.log2(v)

    total, _ = integrate.quad(g, 0.0, 1.0, limit=500)
    return total
