import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from regdig import asymptotics as asy
from regdig import charfn, walk
from regdig.core import make_params
from regdig.errors import BadSimplexError, ExcludedProfileError, OutOfRegimeError

# frozen after first computation, cross-checked by the closed form below
GOLDEN_RATE_34 = -0.05112744282909337
GOLDEN_TILT_34 = 0.952515716822232
GOLDEN_TILT_09 = 0.9398024613276669


def test_robbins_examples():
    lo, hi = asy.robbins_bounds(1)
    assert lo == pytest.approx(math.sqrt(2 * math.pi) * math.exp(-1 + 1 / 13), rel=1e-14)
    assert hi == pytest.approx(math.sqrt(2 * math.pi) * math.exp(-1 + 1 / 12), rel=1e-14)
    assert lo == pytest.approx(0.9959, abs=1e-4) and hi == pytest.approx(1.0023, abs=1e-4)
    lo, hi = asy.robbins_bounds(10)
    assert lo < 3628800 < hi
    assert asy.robbins_bracket_check([1, 2, 10, 100, 10**4]) == []


def test_log_factorial_exact():
    for k in (0, 1, 5, 170, 1000, 123457):
        assert asy.log_factorial_exact(k) == pytest.approx(math.lgamma(k + 1), rel=1e-13, abs=1e-13)


def test_multinomial_weight_examples():
    prm = make_params(2, 3, 3, 0.01)
    assert asy.multinomial_weight_rational(prm, (0, 1, 1)) == Fraction(81, 10)
    assert asy.multinomial_weight_exact(prm, (0, 1, 1)) == pytest.approx(math.log(8.1))
    prm = make_params(50, 3, 5, 0.01)
    assert asy.multinomial_weight_exact(prm, (50, 0, 0, 0, 0)) == pytest.approx(2 * 50 * math.log(5))


def test_approx_examples():
    prm = make_params(10**5, 3, 5, 0.01)
    uni = (20000,) * 5
    assert asy.multinomial_weight_approx(prm, uni) == pytest.approx(2 * math.log(3))
    assert asy.multinomial_weight_exact(prm, uni) > 0
    bump = math.ceil(math.sqrt(20000))
    prof = (20000 + bump, 20000 - bump, 20000, 20000, 20000)
    ex, ap = asy.multinomial_weight_exact(prm, prof), asy.multinomial_weight_approx(prm, prof)
    assert abs(ap - ex) <= 0.01 * abs(ex)
    with pytest.raises(OutOfRegimeError):
        asy.multinomial_weight_approx(prm, (10**5, 0, 0, 0, 0))


def test_classify_examples():
    prm = make_params(10**6, 3, 5, 0.01)
    assert asy.classify_profile(prm, (200000,) * 5) is asy.CaseLabel.EQUIDISTRIBUTED
    assert asy.classify_profile(prm, (10**6 - 3, 1, 1, 1, 0)) is asy.CaseLabel.N3
    with pytest.raises(ExcludedProfileError):
        asy.classify_profile(prm, (10**6, 0, 0, 0, 0))


def test_classify_partition():
    gen = np.random.default_rng(0)
    prm = make_params(500, 3, 5, 0.01)
    labels = set()
    for _ in range(10**4):
        w = gen.dirichlet(np.full(5, gen.choice([0.05, 1, 50])))
        prof = gen.multinomial(500, w)
        if prof[0] == 500:
            continue
        labels.add(asy.classify_profile(prm, prof))
    assert asy.CaseLabel.EQUIDISTRIBUTED in labels and len(labels) >= 3


def test_llt_uniform_and_wiring():
    fit = charfn.fit_moment_constants(3, [3])
    prm = make_params(600, 3, 3, 0.01)
    val = asy.llt_prediction(prm, (200, 200, 200), fit)
    assert val == pytest.approx(3**1.5 * (3 / (2 * math.pi * 3 * 600)))
    preds = [asy.llt_prediction(make_params(3 * k, 3, 3, 0.01), (k, k, k), fit) for k in (10, 20, 40, 80)]
    assert all(a > b for a, b in zip(preds, preds[1:]))
    # t -> 2t quadruples the quadratic term (the cubic term vanishes for this t)
    n = 3000
    prm = make_params(n, 3, 3, 0.01)
    t1 = [3000 + 30, 3000 - 30, 3000]
    t2 = [3000 + 60, 3000 - 60, 3000]
    base = asy.llt_prediction_target(prm, (3000, 3000, 3000), fit)
    q1 = math.log(asy.llt_prediction_target(prm, t1, fit) / base)
    q2 = math.log(asy.llt_prediction_target(prm, t2, fit) / base)
    assert q2 == pytest.approx(4 * q1)


def test_llt_against_exact_small():
    fit = charfn.fit_moment_constants(3, [3])
    d33 = walk.build_step_distribution(3, 3)
    n = 120
    ratio = asy.llt_prediction_target(make_params(n, 3, 3, 0.01), (n, n, n), fit) / float(
        walk.walk_probability_exact(d33, n, (n, n, n)))
    assert 0.95 < ratio < 1.05


def test_simplex_validation():
    with pytest.raises(BadSimplexError):
        asy.DeviationInstance.on_simplex([0.5, 0.6])
    with pytest.raises(BadSimplexError):
        asy.DeviationInstance.on_simplex([1.5, -0.5])
    with pytest.raises(BadSimplexError):
        asy.DeviationInstance.from_counts([0, 0])
    inst = asy.DeviationInstance.from_counts([3, 1])
    assert inst.frak_n == (Fraction(3, 4), Fraction(1, 4)) and inst.counts() == (3, 1)


def _closed_form_rate_34():
    # ell = 2, d = 3: alphabet histograms (3,0) weight 1 and (1,2) weight 3 summing
    # to 0 mod 2; the mean (3q, ...) matching 3 frak gives a Bernoulli tilt.
    # Direct solve: P(3,0) = q, P(1,2) = 1 - q with 3q + (1 - q) = 3 * 3/4.
    q = (3 * 0.75 - 1) / 2
    kl = q * math.log(q / 0.25) + (1 - q) * math.log((1 - q) / 0.75)
    return math.log(4) + 2 * (0.75 * math.log(0.75) + 0.25 * math.log(0.25)) - kl


def test_rate_function_golden():
    inst = asy.DeviationInstance.on_simplex([0.75, 0.25])
    val = asy.rate_function(inst, 3)
    assert val == pytest.approx(GOLDEN_RATE_34, abs=1e-12)
    assert val == pytest.approx(_closed_form_rate_34(), abs=1e-12)
    assert val < -1e-4


def test_rate_dense_grid_crosscheck():
    inst = asy.DeviationInstance.on_simplex([0.75, 0.25])
    dist = asy.rate_alphabet(3, 2)
    sup = dist.support.astype(float)
    w = dist.weights / dist.total
    y = 3 * np.array([0.75, 0.25])
    ts = np.linspace(-3, 3, 6001)
    vals = [math.log(float(np.sum(w * np.exp(sup @ np.array([t, 0.0]))))) - t * y[0] for t in ts]
    grid = math.log(dist.total) + 2 * (0.75 * math.log(0.75) + 0.25 * math.log(0.25)) + min(vals)
    assert asy.rate_function(inst, 3) == pytest.approx(grid, abs=1e-6)


def test_rate_equality_points():
    for ell in (2, 3, 5):
        for d in (3, 4):
            uni = asy.DeviationInstance.on_simplex([1 / ell] * ell)
            deg = asy.DeviationInstance.on_simplex([1.0] + [0.0] * (ell - 1))
            assert abs(asy.rate_function(uni, d)) <= 1e-9
            assert abs(asy.rate_function(deg, d)) <= 1e-9


def test_rate_infeasible_is_minus_inf():
    assert asy.rate_function(asy.DeviationInstance.on_simplex([0.25, 0.75]), 3) == -math.inf


def test_tilt_examples():
    assert asy.tilt_check(asy.DeviationInstance.on_simplex([0.75, 0.25]), 3) == pytest.approx(GOLDEN_TILT_34, abs=1e-14)
    assert asy.tilt_check(asy.DeviationInstance.on_simplex([0.9, 0.1]), 3) == pytest.approx(GOLDEN_TILT_09, abs=1e-14)
    assert asy.tilt_check(asy.DeviationInstance.on_simplex([0.9, 0.1]), 3) <= 1
    for ell in (2, 3, 5):
        assert asy.tilt_check(asy.DeviationInstance.on_simplex([1 / ell] * ell), 3) == pytest.approx(1, abs=1e-12)
        assert asy.tilt_check(asy.DeviationInstance.on_simplex([1.0] + [0.0] * (ell - 1)), 3) == 1


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.sampled_from([3, 4]), st.integers(0, 2**31))
def test_rate_nonpositive_and_bounded_by_tilt(ell, d, seed):
    frak = np.random.default_rng(seed).dirichlet(np.ones(ell))
    inst = asy.DeviationInstance.on_simplex(list(frak))
    rate = asy.rate_function(inst, d)
    tilt = asy.tilt_check(inst, d)
    assert rate <= 1e-12 and tilt <= 1 + 1e-12
    # the closed-form tilt upper-bounds the infimum: I <= log(tilt)
    assert rate <= math.log(tilt) + 1e-9


def test_dev_m_examples():
    assert asy.dev_m_expression(asy.DeviationInstance.from_counts([1]), 3, 3) == 1
    assert asy.dev_m_expression(asy.DeviationInstance.from_counts([1, 1]), 3, 3) == Fraction(1, 5)


def test_dev_m_bruteforce():
    import itertools
    d, p = 3, 5
    for counts in ([1, 1], [2, 1], [1, 2, 1]):
        ell, m = len(counts), sum(counts)
        alphabet = [x for x in itertools.product(range(ell), repeat=d) if sum(x) % p == 0]
        target = tuple(d * c for c in counts)
        seqs = sum(1 for steps in itertools.product(alphabet, repeat=m)
                   if tuple(sum(1 for x in steps for k in x if k == j) for j in range(ell)) == target)
        f = math.factorial
        val = Fraction(f(m), math.prod(map(f, counts))) / Fraction(
            f(d * m), math.prod(f(d * c) for c in counts)) * seqs
        assert asy.dev_m_expression(asy.DeviationInstance.from_counts(counts), d, p) == val


def test_dev_m_sweep_bounded():
    worst = 0.0
    for ell in (2, 3):
        for m in range(2, 9):
            for counts in ([m - (ell - 1)] + [1] * (ell - 1), [m // ell + (j < m % ell) for j in range(ell)]):
                if min(counts) < 1:
                    continue
                val = asy.dev_m_expression(asy.DeviationInstance.from_counts(counts), 3, 5)
                if val > 0:
                    worst = max(worst, math.log(val) / ell)
    assert worst < 5
