import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from regdig.core import ExactProb, SeededRng, as_generator, is_prime, make_params, random_primes
from regdig.errors import BadEpsError, NotPrimeError


def test_delta_values():
    assert make_params(1000, 3, 5, 0.01).delta == pytest.approx(5 ** -1.03)
    assert make_params(1000, 3, 5, 0.01).delta == pytest.approx(0.1906, abs=1e-4)
    assert make_params(10, 3, 2, 0.01).delta == pytest.approx(0.4898, abs=1e-4)


def test_param_errors():
    with pytest.raises(NotPrimeError):
        make_params(10, 3, 4, 0.01)
    for eps in (0.0, 0.1, -1, 0.5):
        with pytest.raises(BadEpsError):
            make_params(10, 3, 5, eps)


def test_exact_prob_lowest_terms_and_range():
    x = ExactProb(6, 8)
    assert (x.numerator, x.denominator) == (3, 4)
    with pytest.raises(ValueError):
        ExactProb(5, 4)
    with pytest.raises(ValueError):
        ExactProb(-1, 4)


def test_streams_reproducible():
    a = SeededRng(42, 3).generator().integers(0, 2**62, 100)
    b = SeededRng(42, 3).generator().integers(0, 2**62, 100)
    c = SeededRng(42, 4).generator().integers(0, 2**62, 100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_streams_look_independent():
    x = SeededRng(7, 0).generator().standard_normal(20000)
    y = SeededRng(7, 1).generator().standard_normal(20000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 4 / math.sqrt(20000)


def test_random_primes():
    ps = random_primes(as_generator(1), 3)
    assert len(set(ps)) == 3
    assert all(2**30 <= p < 2**31 and is_prime(p) for p in ps)


@given(st.integers(0, 2**64 - 1), st.integers(0, 1000))
def test_seeded_rng_determinism_property(seed, idx):
    r = SeededRng(seed, idx)
    assert r.generator().random() == r.child(idx).generator().random()
