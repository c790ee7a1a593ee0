import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from regdig import walk
from regdig.core import make_params
from regdig.errors import BadResidueError


def test_phi_map_examples():
    assert walk.phi_map((0, 0, 0), 2) == (3, 0)
    assert walk.phi_map((1, 0, 1), 2) == (1, 2)
    assert walk.phi_map((0, 1, 2), 3) == (1, 1, 1)
    with pytest.raises(BadResidueError):
        walk.phi_map((0, 3), 3)


def test_step_distribution_examples():
    d32 = walk.build_step_distribution(3, 2)
    assert dict(d32.entries) == {(3, 0): 1, (1, 2): 3} and d32.total == 4
    d33 = walk.build_step_distribution(3, 3)
    assert dict(d33.entries) == {(3, 0, 0): 1, (0, 3, 0): 1, (0, 0, 3): 1, (1, 1, 1): 6}
    assert walk.build_step_distribution(4, 5).total == 125


def _brute_step_law(d, p):
    out = {}
    for x in itertools.product(range(p), repeat=d):
        if sum(x) % p == 0:
            h = walk.phi_map(x, p)
            out[h] = out.get(h, 0) + 1
    return out


@pytest.mark.parametrize("d,p", [(2, 2), (3, 2), (3, 5), (4, 3), (5, 3), (4, 7)])
def test_step_law_matches_bruteforce(d, p):
    assert dict(walk.build_step_distribution(d, p).entries) == _brute_step_law(d, p)


def test_mean_cov_examples():
    mean, cov = walk.step_mean_cov(walk.build_step_distribution(3, 2))
    assert list(mean) == [Fraction(3, 2)] * 2
    mean, cov = walk.step_mean_cov(walk.build_step_distribution(3, 3))
    assert list(mean) == [1, 1, 1]
    assert all(cov[i][i] == Fraction(2, 3) for i in range(3))


def test_walk_probability_examples():
    d32 = walk.build_step_distribution(3, 2)
    d33 = walk.build_step_distribution(3, 3)
    assert walk.walk_probability_exact(d32, 1, (3, 0)) == Fraction(1, 4)
    assert walk.walk_probability_exact(d32, 2, (4, 2)) == Fraction(3, 8)
    assert walk.walk_probability_exact(d33, 2, (0, 3, 3)) == Fraction(2, 81)


@pytest.mark.parametrize("d,p,n,target", [(3, 2, 3, (5, 4)), (3, 3, 4, (3, 3, 6)),
                                          (4, 3, 3, (4, 4, 4)), (3, 5, 2, (1, 1, 1, 1, 2))])
def test_dp_and_charsum_agree(d, p, n, target):
    dist = walk.build_step_distribution(d, p)
    dp = walk.walk_probability_exact(dist, n, target, method="dp")
    cs = walk.walk_probability_exact(dist, n, target, method="charsum")
    assert dp == cs
    assert abs(walk.walk_probability_float(dist, n, target) - float(dp)) < 1e-9


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("p", [2, 3, 5])
def test_partition_of_unity(d, p):
    dist = walk.build_step_distribution(d, p)
    for n in range(0, 6 if p < 5 else 4):
        law = walk.walk_distribution_exact(dist, n)
        assert sum(law.values()) == 1


def test_unreachable_is_zero():
    d32 = walk.build_step_distribution(3, 2)
    assert walk.walk_probability_exact(d32, 2, (0, 6)) == 0
    assert walk.walk_probability_exact(d32, 2, (5, 2)) == 0


def test_modp_examples():
    d32 = walk.build_step_distribution(3, 2)
    d33 = walk.build_step_distribution(3, 3)
    # both step histograms (3,0) and (1,2) reduce to (1,0) mod 2
    assert walk.walk_probability_modp(d32, 1, (1, 0)) == 1
    assert walk.walk_probability_modp(d32, 1, (0, 1)) == 0
    marg = walk.marginalize_mod_p(walk.walk_distribution_exact(d33, 2), 3)
    assert walk.walk_probability_modp(d33, 2, (0, 0, 0)) == marg[(0, 0, 0)]
    for dist in (d32, d33, walk.build_step_distribution(4, 5)):
        assert walk.walk_probability_modp(dist, 0, (0,) * dist.p) == 1


def test_modp_residue_classes_form_partition():
    dist = walk.build_step_distribution(3, 3)
    total = sum(walk.walk_probability_modp(dist, 5, r) for r in itertools.product(range(3), repeat=3))
    assert total == 1


def test_kernel_count_examples():
    prm = make_params(2, 3, 3, 0.01)
    assert walk.kernel_count_rhs(prm, (0, 1, 1)) == 72
    assert walk.kernel_count_lhs_bruteforce(prm, (1, 2)) == 72
    assert walk.kernel_count_lhs_bruteforce(prm, (0, 0)) == 720
    prm2 = make_params(2, 3, 2, 0.01)
    assert walk.kernel_count_rhs(prm2, (0, 2)) == 0
    assert walk.kernel_count_lhs_bruteforce(prm2, (1, 1)) == 0


def test_total_singularity_sum():
    prm = make_params(2, 3, 3, 0.01)
    brute = sum(walk.kernel_count_lhs_bruteforce(prm, v)
                for v in itertools.product(range(3), repeat=2) if any(v))
    assert walk.total_singularity_sum(prm) == Fraction(brute, 720)
    assert walk.total_singularity_sum(make_params(2, 3, 2, 0.01)) == 0


@pytest.mark.parametrize("n,d,p", [(n, d, p) for n in range(1, 5) for d in range(2, 5)
                                   for p in (2, 3, 5) if n * d <= 8])
def test_kernel_count_identity_exhaustive(n, d, p):
    prm = make_params(n, d, p, 0.01)
    for v in itertools.product(range(p), repeat=n):
        assert walk.kernel_count_lhs_bruteforce(prm, v) == walk.kernel_count_rhs(prm, walk.profile_of(v, p))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=3, max_size=3), st.permutations(range(3)))
def test_rhs_depends_only_on_profile(v, perm):
    prm = make_params(3, 2, 3, 0.01)
    w = [v[i] for i in perm]
    assert walk.kernel_count_lhs_bruteforce(prm, v) == walk.kernel_count_lhs_bruteforce(prm, w)
    assert walk.profile_of(v, 3) == walk.profile_of(w, 3)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(3, 2), (3, 3), (4, 3), (3, 5)]), st.integers(0, 4), st.data())
def test_modp_equals_marginal_property(dp, n, data):
    d, p = dp
    dist = walk.build_step_distribution(d, p)
    r = tuple(data.draw(st.lists(st.integers(0, p - 1), min_size=p, max_size=p)))
    marg = walk.marginalize_mod_p(walk.walk_distribution_exact(dist, n), p)
    assert walk.walk_probability_modp(dist, n, r) == marg.get(r, 0)
