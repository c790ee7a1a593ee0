from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from regdig.configmodel import perm_to_matrix
from regdig.errors import NoPrimesError, NotPrimeError
from regdig.modlinalg import (Certification, is_singular_rational, kernel_vector_profile,
                              rank_mod_p, rational_rank, rational_reconstruct)


def _rank_ref(rows, p):
    """Plain Gaussian elimination mod p on Python ints (test oracle)."""
    rows = [[int(x) % p for x in r] for r in rows]
    rank = 0
    for c in range(len(rows[0]) if rows else 0):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][c], -1, p)
        rows[rank] = [x * inv % p for x in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][c]:
                f = rows[i][c]
                rows[i] = [(x - f * y) % p for x, y in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def _check_kernel(m, p, res):
    n = m.shape[1]
    assert res.rank + res.nullity == n
    basis = np.array(res.kernel_basis, dtype=object).reshape(-1, n)
    for v in basis:
        assert all(int(x) % p == 0 for x in m.astype(object).dot(v))
    if len(basis):
        assert _rank_ref(basis.tolist(), p) == len(basis)
    assert res.rank == _rank_ref(m.tolist(), p)


def test_examples():
    r = rank_mod_p(3 * np.eye(4, dtype=np.int64), 5)
    assert (r.rank, r.nullity) == (4, 0)
    r = rank_mod_p(np.array([[0, 3], [3, 0]]), 3)
    assert (r.rank, r.nullity) == (0, 2)
    assert is_singular_rational(3 * np.eye(4, dtype=np.int64)).status is Certification.NONSINGULAR


def test_duplicate_rows_singular_with_witness():
    m = np.array([[1, 2, 0], [1, 2, 0], [0, 1, 1]])
    res = is_singular_rational(m, rng=0)
    assert res.status is Certification.SINGULAR
    w = np.array(res.witness, dtype=object)
    assert any(w) and not any(m.astype(object).dot(w))
    assert rank_mod_p(m, 7).nullity >= 1


def test_errors():
    with pytest.raises(NoPrimesError):
        is_singular_rational(np.eye(2, dtype=np.int64), primes=[])
    with pytest.raises(NotPrimeError):
        rank_mod_p(np.eye(2, dtype=np.int64), 4)


def test_profile_examples():
    assert tuple(kernel_vector_profile((1, 2), 3)) == (0, 1, 1)
    assert tuple(kernel_vector_profile((0, 0, 0), 3)) == (3, 0, 0)
    assert tuple(kernel_vector_profile((1,) * 4, 5)) == (0, 4, 0, 0, 0)


def test_rational_reconstruct():
    q = 1_000_000_007
    assert rational_reconstruct(Fraction(3, 7).numerator * pow(7, -1, q) % q, q) == Fraction(3, 7)
    assert rational_reconstruct((-5 * pow(11, -1, q)) % q, q) == Fraction(-5, 11)


def test_rank_against_rational_elimination():
    gen = np.random.default_rng(0)
    primes = [2, 3, 5, 7, 10007]
    for _ in range(100):
        n = int(gen.integers(1, 9))
        m = gen.integers(-3, 4, (n, n))
        if gen.random() < 0.3 and n > 1:
            m[-1] = m[0] + m[1 % n]
        rq = rational_rank(m)
        assert rq == sympy.Matrix(m.tolist()).rank()
        for p in primes:
            r = rank_mod_p(m, p)
            assert r.rank <= rq
            _check_kernel(m, p, r)
        assert rank_mod_p(m, 1_000_000_007).rank == rq


def test_all_ones_kernel_iff_p_divides_d():
    gen = np.random.default_rng(5)
    for _ in range(20):
        m = perm_to_matrix(gen.permutation(30), 10, 3)
        assert rank_mod_p(m, 3).nullity >= 1
        assert all(x % 3 == 0 for x in m.dot(np.ones(10, dtype=np.int64)))
        assert any(x % 5 for x in m.dot(np.ones(10, dtype=np.int64)))


def test_determinant_oracle_small():
    gen = np.random.default_rng(9)
    for _ in range(60):
        n = int(gen.integers(1, 6))
        m = gen.integers(0, 3, (n, n))
        det = int(sympy.Matrix(m.tolist()).det())
        for p in (2, 3, 7):
            assert (rank_mod_p(m, p).rank < n) == (det % p == 0)
        res = is_singular_rational(m, rng=int(gen.integers(1 << 30)))
        assert res.singular == (det == 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**31), st.sampled_from([2, 3, 5, 13, 101]))
def test_kernel_vectors_property(n, seed, p):
    m = np.random.default_rng(seed).integers(0, 4, (n, n))
    _check_kernel(m, p, rank_mod_p(m, p))
