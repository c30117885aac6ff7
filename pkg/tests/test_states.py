import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qrl.errors import CapacityError, DescriptorError, DomainError
from qrl.linalg import density, kron
from qrl.states import (
    bernoulli_prefix,
    build_state,
    chapter4_block,
    chapter4_prefix,
    check_coherence,
    classical_prefix,
    density_fn,
    diagonal_f_prefix,
    dyadic_weights,
    from_levels,
    gamma,
    ones_count,
    r_n,
    tracial_prefix,
)

D3_EXPECTED = [
    [1, 0, 0, 0, 0, 0, 0, 1],
    [0, 1, 0, 0, 0, 0, 1, 0],
    [0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0, 0],
    [0, 1, 0, 0, 0, 0, 1, 0],
    [1, 0, 0, 0, 0, 0, 0, 1],
]


def test_d3_matches_display():
    d3 = chapter4_block(3).to_dense()
    assert r_n(3) == 2
    expect = np.array(D3_EXPECTED, dtype=float) / 8
    assert np.array_equal(d3.real, expect) and not d3.imag.any()
    # entries are exact dyadic rationals
    assert all(Fraction(x).denominator in (1, 8) for x in d3.real.ravel())


def test_block_constants():
    assert [r_n(n) for n in (3, 4, 5, 6, 10)] == [2, 4, 6, 10, 102]
    assert gamma(5) == 5 and gamma(6) == 11 and gamma(20) == 200


@pytest.mark.parametrize("n", range(3, 11))
def test_block_spectrum(n):
    vals = np.sort(chapter4_block(n).eigenvalues())
    r = r_n(n)
    expect = np.sort(np.concatenate([np.zeros(r), np.full(r, 2.0 ** (1 - n)), np.full((1 << n) - 2 * r, 2.0**-n)]))
    assert np.allclose(vals, expect, atol=1e-15)


def test_ones_count():
    assert ones_count(3).tolist() == [0, 1, 1, 2, 1, 2, 2, 3]


def test_tracial_levels():
    st_ = tracial_prefix(4)
    for n in range(1, 5):
        assert np.allclose(st_.level(n).diagonal(), 2.0**-n)
    assert check_coherence(st_).passed


def test_classical_level_is_basis_projector():
    st_ = classical_prefix("1011", 4)
    d = st_.level(4).diagonal()
    assert d[0b1011] == 1 and d.sum() == 1
    assert st_.marginal(2).tolist() == [1, 0]
    with pytest.raises(DomainError):
        classical_prefix("10", 4)


@given(st.floats(0.01, 0.99), st.integers(1, 10))
def test_bernoulli_coherent_and_product(p, N):
    s = bernoulli_prefix(p, N)
    assert check_coherence(s).passed
    # weight of σ is p^(zeros) (1-p)^(ones)
    k = ones_count(N)
    assert np.allclose(s.level(N).diagonal(), p ** (N - k) * (1 - p) ** k)


@given(st.text("01", min_size=1, max_size=14))
def test_classical_coherent(x):
    assert check_coherence(classical_prefix(x, len(x))).passed


def test_chapter4_factored_levels_match_dense():
    s = chapter4_prefix(6)
    full = kron(chapter4_block(5).to_dense(), chapter4_block(6).to_dense())
    assert np.allclose(s.level(11).to_dense(), full)
    # level 7 = d_5 ⊗ PT^4(d_6)
    f = s.factors(7)
    assert [x.qubits for x in f] == [5, 2]
    rep = check_coherence(s, "levels")
    rep_f = check_coherence(s, "factored")
    assert rep.passed and rep_f.passed


def test_chapter4_caps():
    with pytest.raises(CapacityError):
        chapter4_prefix(21)
    s = chapter4_prefix(16)
    assert s.depth == gamma(16)
    with pytest.raises(CapacityError):
        s.level(40)


def test_dyadic_weights_closed_form():
    f1 = density_fn("f1")
    w = dyadic_weights(f1, 1)
    # α("1") = F(1) - F(1/2) = 1 - 1/(1 + ln 2)
    assert abs(w[1] - (1 - 1 / (1 + math.log(2)))) < 1e-15
    assert abs(w[1] - 0.40938389) < 1e-8
    for fid in ("f1", "f2"):
        for n in (1, 5, 12):
            w = dyadic_weights(density_fn(fid), n)
            assert abs(w.sum() - 1) < 1e-12 and (w > 0).all()


def test_diagonal_f_coherent():
    for fid in ("f1", "f2"):
        assert check_coherence(diagonal_f_prefix(fid, 14)).passed


def test_from_levels_and_incoherent_detection():
    good = from_levels([density(np.array([0.5, 0.5])), density(np.full(4, 0.25))])
    assert check_coherence(good).passed
    bad = from_levels([density(np.array([0.9, 0.1])), density(np.full(4, 0.25))])
    rep = check_coherence(bad)
    assert not rep.passed and rep.failures == [2]


def test_build_state_errors():
    with pytest.raises(DescriptorError):
        build_state({"kind": "tracial"})
    with pytest.raises(DescriptorError):
        build_state({"kind": "nope", "N": 3})
    with pytest.raises(DescriptorError):
        build_state({"kind": "bernoulli", "N": 3, "params": {}})
    s = build_state({"kind": "bernoulli", "N": 3, "params": {"p": "0.25"}})
    assert s.depth == 3 and s.is_product
