import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from regdig.configmodel import (enumerate_pairings, is_simple, pairing_matrix_tally,
                                pairing_multiplicity, pairing_to_matrix, perm_to_matrix,
                                sample_pairing, sample_simple_adjacency,
                                simple_acceptance_fraction)
from regdig.core import SeededRng
from regdig.errors import RejectionBudgetError, TooLargeError


def test_trivial_pairing():
    s = sample_pairing(1, 1, 0)
    assert list(s.perm) == [0]
    assert pairing_to_matrix(s).tolist() == [[1]]


def test_block_matrices():
    assert perm_to_matrix(np.arange(6), 2, 3).tolist() == [[3, 0], [0, 3]]
    assert perm_to_matrix(np.array([3, 4, 5, 0, 1, 2]), 2, 3).tolist() == [[0, 3], [3, 0]]


def test_is_simple_examples():
    assert not is_simple(np.array([[0, 3], [3, 0]]))
    assert not is_simple(np.array([[1, 0], [0, 1]]))
    assert is_simple(np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]]))


def test_enumeration_sizes():
    assert sum(1 for _ in enumerate_pairings(2, 3)) == 720
    assert sum(1 for _ in enumerate_pairings(1, 2)) == 2
    assert pairing_matrix_tally(3, 3)[1].sum() == 362880
    with pytest.raises(TooLargeError):
        next(enumerate_pairings(5, 2))


def test_multiplicity_law_exhaustive():
    for n in range(1, 7):
        for d in range(1, 7):
            if n * d > 6:
                continue
            mats, mult = pairing_matrix_tally(n, d)
            for m, c in zip(mats, mult):
                assert pairing_multiplicity(m) == c
                assert (m.sum(axis=0) == d).all() and (m.sum(axis=1) == d).all()


def test_sampler_uniform_chi_square():
    index = {p: i for i, p in enumerate(itertools.permutations(range(6)))}
    gen = SeededRng(2024, 0).generator()
    counts = np.zeros(720, dtype=np.int64)
    for _ in range(60000):
        counts[index[tuple(sample_pairing(2, 3, gen).perm.tolist())]] += 1
    assert stats.chisquare(counts).pvalue > 0.001


def test_sampler_deterministic():
    a = sample_pairing(5, 3, SeededRng(42, 0))
    b = sample_pairing(5, 3, SeededRng(42, 0))
    assert a == b
    m1 = sample_simple_adjacency(10, 3, SeededRng(42, 0)).matrix
    m2 = sample_simple_adjacency(10, 3, SeededRng(42, 0)).matrix
    assert np.array_equal(m1, m2)


def test_simple_sampler():
    s = sample_simple_adjacency(12, 3, 5)
    assert is_simple(s.matrix) and (s.matrix.sum(axis=1) == 3).all() and s.attempts >= 1
    with pytest.raises(RejectionBudgetError):
        sample_simple_adjacency(3, 3, 0)
    with pytest.raises(RejectionBudgetError):
        sample_simple_adjacency(2, 2, 0)


def test_acceptance_fraction_matches_direct_count():
    gen = np.random.default_rng(3)
    direct = np.mean([is_simple(perm_to_matrix(gen.permutation(30), 10, 3)) for _ in range(4000)])
    frac = simple_acceptance_fraction(10, 3, 4000, 3)
    assert abs(direct - frac) < 0.05


def test_acceptance_fraction_stable():
    fr = [simple_acceptance_fraction(n, 3, 10**4, SeededRng(11, n)) for n in (50, 100, 200)]
    assert max(fr) - min(fr) <= 0.05
    assert max(fr) < 1


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(1, 5), st.integers(0, 2**32))
def test_sampled_margins(n, d, seed):
    m = pairing_to_matrix(sample_pairing(n, d, seed))
    assert (m.sum(axis=0) == d).all() and (m.sum(axis=1) == d).all()
