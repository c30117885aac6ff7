import json
import math

import numpy as np
import pytest

from qrl.errors import DomainError
from qrl.oracles import (
    PROBES,
    atomic_sweep,
    dn_quadform,
    greedy_cover,
    kron_antidiagonal_deviation,
    lemma30_count,
    probe_values,
    random_family,
    verify_atomic_probes,
    verify_dn_quadform,
    verify_kron_antidiagonal,
    verify_lemma30,
    verify_lina,
)


def test_lina_single_line():
    fam = [np.diag([1.0, 0.0])]
    D = greedy_cover(fam, 0.5, 1)
    assert np.allclose(np.abs(D), [[1, 0]])
    out = verify_lina(2, fam, 0.5, 1, 50, seed=1)
    assert out.violations == 0 and out.trials == 51 and not out.inconclusive


def test_lina_empty_family_inconclusive():
    out = verify_lina(4, [], 0.5, 1, 10, seed=1)
    assert out.inconclusive == 1 and out.trials == 0


def test_lina_random_subspaces():
    rng = np.random.default_rng(5)
    fam = random_family(rng, 16, 6, anchored=True)
    out = verify_lina(16, fam, 0.3, 2, 200, seed=9)
    assert out.violations == 0 and out.trials == 201


def test_greedy_cover_is_maximal():
    rng = np.random.default_rng(2)
    fam = random_family(rng, 8, 4, anchored=False)
    delta, m = 0.2, 2
    D = greedy_cover(fam, delta, m)
    a = sum(fam)
    for v in D:
        assert np.real(v.conj() @ a @ v) > m * delta / 6
    # nothing in the complement clears the threshold
    comp = np.eye(8) - D.T @ D.conj()
    assert np.linalg.eigvalsh(comp @ a @ comp).max() <= m * delta / 6 + 1e-9


def test_lemma30_trivial_cases():
    basis = np.eye(4)
    assert lemma30_count(basis, np.eye(4), 0.5) == 4 < 4 / 0.5
    assert lemma30_count(basis, np.zeros((4, 4)), 0.5) == 0
    assert verify_lemma30(16, 50, seed=3).violations == 0


def test_kron_identity_examples():
    pairs = np.array([[0.6, 0.8], [1j / math.sqrt(2), 1 / math.sqrt(2)]])
    assert kron_antidiagonal_deviation(pairs) < 1e-15
    pairs = np.array([[1.0, 0.0], [0.6, 0.8], [0.8, 0.6j]])
    assert kron_antidiagonal_deviation(pairs, "standard") == 0.0
    assert verify_kron_antidiagonal(10, 20, seed=1).violations == 0
    with pytest.raises(DomainError):
        verify_kron_antidiagonal(13, 1, seed=1)


def test_dn_quadform_examples():
    n = 6
    assert dn_quadform(n, np.tile([1.0, 0.0], (n, 1))) == 2.0**-n
    plus = dn_quadform(n, np.tile([1.0, 1.0], (n, 1)) / math.sqrt(2))
    assert 2.0**-n * (1 - 2 / n) <= plus <= 2.0**-n * (1 + 2 / n)
    assert verify_dn_quadform(8, 100, seed=4).violations == 0
    with pytest.raises(DomainError):
        verify_dn_quadform(4, 1, seed=1)


def test_probe_values_match_direct():
    rng = np.random.default_rng(0)
    e = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    vals = probe_values(e)
    for a in range(5):
        for b in range(5):
            v = np.kron(PROBES[a], PROBES[b])
            assert abs(vals[a, b] - v.conj() @ e @ v) < 1e-12


def test_atomic_probe_verdicts():
    n = 3
    e = np.eye(8) / 8
    assert verify_atomic_probes(e, "scaled_identity").violations == 0
    e2 = e.copy()
    e2[0, 1] += 1e-3
    e2[1, 0] += 1e-3
    assert np.max(np.abs(probe_values(e2) - 2.0**-n)) > 1e-9
    assert verify_atomic_probes(e2, "scaled_identity").violations == 0
    assert verify_atomic_probes(np.zeros((4, 4)), "zero").violations == 0
    with pytest.raises(DomainError):
        verify_atomic_probes(np.eye(3), "zero")


def test_antisymmetric_part_is_seen():
    # v†Ev only sees the Hermitian part for real probes; the complex probes catch the rest
    e = np.zeros((2, 2), dtype=complex)
    e[0, 1], e[1, 0] = 1j, -1j
    assert np.max(np.abs(probe_values(e))) > 0.5


def test_outcomes_are_deterministic():
    a = json.dumps(atomic_sweep(40, seed=3).to_json(), sort_keys=True)
    b = json.dumps(atomic_sweep(40, seed=3).to_json(), sort_keys=True)
    assert a == b
