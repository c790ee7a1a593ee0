"""Named verification suites with a pass/fail table."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import asymptotics as asy
from . import charfn, integrals, walk
from .configmodel import pairing_matrix_tally, pairing_multiplicity
from .core import is_prime, make_params
from .errors import NotProportionalError

DEFAULT_BUDGET_S = 30 * 60


@dataclass
class Check:
    name: str
    passed: bool
    measured: str
    tolerance: str


def suite_kernel_counts(cfg: dict) -> list[Check]:
    primes = [2, 3, 5]
    out = []
    for n in range(1, 10):
        for d in range(2, 10):
            if n * d > 9:
                continue
            for p in primes:
                prm = make_params(n, d, p, 0.01)
                bad = 0
                for v in itertools.product(range(p), repeat=n):
                    lhs = walk.kernel_count_lhs_bruteforce(prm, v)
                    rhs = walk.kernel_count_rhs(prm, walk.profile_of(v, p))
                    bad += lhs != rhs
                out.append(Check(f"kernel counts n={n} d={d} p={p}", bad == 0,
                                 f"{bad} mismatches over {p ** n} vectors", "exact"))
    return out


def suite_stepdist(cfg: dict) -> list[Check]:
    out = []
    for d in (3, 4):
        for p in (2, 3, 5, 7):
            dist = walk.build_step_distribution(d, p)
            mean, cov = walk.step_mean_cov(dist)
            ok = dist.total == p ** (d - 1)
            ok &= all(m == Fraction(d, p) for m in mean)
            ok &= all(cov[i][j] == Fraction(d, p) * (i == j) - Fraction(d, p * p)
                      for i in range(p) for j in range(p))
            out.append(Check(f"step law d={d} p={p}", ok, f"|U|={dist.total}", "exact"))
    return out


def suite_moments(cfg: dict) -> list[Check]:
    out = []
    rng = np.random.default_rng(cfg.get("seed", 0))
    vectors = int(cfg.get("vectors", 100))
    for d in (3, 4):
        for p in (2, 3, 5, 7):
            dist = walk.build_step_distribution(d, p)
            bad = 0
            for _ in range(vectors):
                s = [Fraction(int(x), int(y)) for x, y in
                     zip(rng.integers(-9, 10, p - 1), rng.integers(1, 5, p - 1))]
                s.append(-sum(s))
                bad += charfn.moment_exact(dist, s, 2) != Fraction(d, p) * sum(x * x for x in s)
            out.append(Check(f"second moment d={d} p={p}", bad == 0, f"{bad} failures", "exact"))
    for d in (3, 4):
        for p in (3, 5, 7):
            try:
                rec = charfn.prime_moments(d, p, rng=rng, count=10)
                out.append(Check(f"cubic proportionality d={d} p={p}", True,
                                 f"C_p={rec.c_p}", "single constant"))
            except NotProportionalError as exc:
                out.append(Check(f"cubic proportionality d={d} p={p}", False, str(exc),
                                 "single constant"))
    d33 = walk.build_step_distribution(3, 3)
    e1 = charfn.moment_exact(d33, (1, -1, 0), 4)
    e2 = charfn.moment_exact(d33, (2, -1, -1), 4)
    out.append(Check("fourth moments d=3 p=3", e1 == 18 and e2 == 162, f"{e1}, {e2}", "18, 162"))
    for d in (3, 4):
        try:
            fit = charfn.fit_moment_constants(d, [3, 5, 7], rng=rng)
            held = charfn.prime_moments(d, 11, rng=rng)
            rel = abs(fit.c_p(11) - float(held.c_p)) / float(held.c_p)
            out.append(Check(f"held-out C_11 d={d}", rel <= 0.05, f"rel err {rel:.3g}", "<= 5%"))
        except NotProportionalError as exc:
            out.append(Check(f"held-out C_11 d={d}", False, str(exc), "<= 5%"))
    return out


def suite_charsum(cfg: dict) -> list[Check]:
    out = []
    for p in (2, 3):
        dist = walk.build_step_distribution(3, p)
        for n in range(0, 7):
            law = walk.walk_distribution_exact(dist, n)
            marg = walk.marginalize_mod_p(law, p)
            bad = 0
            for r in itertools.product(range(p), repeat=p):
                got = walk.walk_probability_modp(dist, n, r)
                bad += Fraction(got) != marg.get(r, 0)
            out.append(Check(f"mod-p character sum p={p} n={n}", bad == 0,
                             f"{bad} mismatches", "exact"))
    return out


def suite_llt(cfg: dict) -> list[Check]:
    n = int(cfg.get("llt_n", 500))
    prm = make_params(n, 3, 3, 0.01)
    fit = charfn.fit_moment_constants(3, [3])
    target = (n, n, n)
    exact = walk.walk_probability_exact(walk.build_step_distribution(3, 3), n, target,
                                        method="charsum")
    ratio = asy.llt_prediction_target(prm, target, fit) / float(exact)
    return [Check(f"LLT p=3 d=3 n={n}", 0.85 <= ratio <= 1.15, f"ratio {ratio:.6f}",
                  "[0.85, 1.15]")]


def suite_stirling(cfg: dict) -> list[Check]:
    bad = asy.robbins_bracket_check(range(1, 10**4 + 1))
    out = [Check("Robbins bracket l in [1, 1e4]", not bad, f"{len(bad)} failures", "strict")]
    prm = make_params(10**5, 3, 5, 0.01)
    rng = np.random.default_rng(cfg.get("seed", 0))
    worst = 0.0
    for _ in range(50):
        prof = rng.multinomial(prm.n, [1 / prm.p] * prm.p)
        ex = asy.multinomial_weight_exact(prm, prof)
        ap = asy.multinomial_weight_approx(prm, prof)
        worst = max(worst, abs(ap - ex) / abs(ex))
    out.append(Check("Stirling exponent n=1e5 p=5 d=3", worst <= 0.01, f"max rel {worst:.3g}",
                     "<= 1%"))
    return out


def suite_ratefn(cfg: dict) -> list[Check]:
    rng = np.random.default_rng(cfg.get("seed", 0))
    points = int(cfg.get("points", 1000))
    out = []
    for ell in (2, 3, 5):
        for d in (3, 4):
            worst_i, worst_t = -math.inf, 0.0
            for _ in range(points):
                inst = asy.DeviationInstance.on_simplex(list(rng.dirichlet(np.ones(ell))))
                worst_i = max(worst_i, asy.rate_function(inst, d))
                worst_t = max(worst_t, asy.tilt_check(inst, d))
            uni = asy.rate_function(asy.DeviationInstance.on_simplex([1 / ell] * ell), d)
            deg = asy.rate_function(asy.DeviationInstance.on_simplex([1.0] + [0.0] * (ell - 1)), d)
            out.append(Check(f"rate function ell={ell} d={d}",
                             worst_i <= 1e-12 and worst_t <= 1 + 1e-12
                             and abs(uni) <= 1e-9 and abs(deg) <= 1e-9,
                             f"max I {worst_i:.3g}, max tilt {worst_t:.12f}, "
                             f"I(uniform) {uni:.2g}, I(vertex) {deg:.2g}",
                             "I <= 1e-12, tilt <= 1+1e-12, |I_eq| <= 1e-9"))
    return out


def suite_inverse(cfg: dict) -> list[Check]:
    restarts = int(cfg.get("restarts", 10**4))
    seed = int(cfg.get("seed", 0))
    out = []
    for p in (3, 5, 7):
        dist = walk.build_step_distribution(3, p)
        worst = max(abs(1 - abs(charfn.phi_x(dist, charfn.lattice_point(p, j)))) for j in range(p))
        out.append(Check(f"lattice modulus p={p}", worst <= 1e-10, f"{worst:.2g}", "1e-10"))
    dist = walk.build_step_distribution(3, 5)
    prof = charfn.forward_decay_profile(dist, 2000, [1e-4, 1e-3, 1e-2], seed)
    out.append(Check("forward decay stability p=5", prof["spread"] <= 2,
                     f"spread {prof['spread']:.4f}", "<= 2"))
    for p in (5, 7, 11):
        dist = walk.build_step_distribution(3, p)
        a_max = 10 * charfn.forward_decay_profile(dist, 2000, [1e-4, 1e-3, 1e-2], seed)["max"]
        free = charfn.inverse_search(dist, 0.01, restarts, seed, a_max=a_max)
        fenced = charfn.inverse_search(dist, 0.01, restarts, seed + 1, a_max=a_max,
                                       kappa_floor=a_max / p)
        bad = len(free.counterexamples) + len(fenced.records)
        out.append(Check(f"inverse search p={p}", bad == 0,
                         f"{len(free.records)} near-extremal, A_emp {free.empirical_A:.3g}, "
                         f"{bad} counterexamples", f"A_max {a_max:.3g}"))
    bad = 0
    for p in [q for q in range(2, 102) if is_prime(q)]:
        for d0 in range(p):
            rep = charfn.macro_recover(charfn.TWO_PI * d0 * np.arange(p) / p, p)
            bad += rep.d0 != d0 or rep.max_residual > 1e-12
    out.append(Check("macro recovery p <= 101", bad == 0, f"{bad} failures", "exact"))
    return out


def suite_integrals(cfg: dict) -> list[Check]:
    out = []
    worst = max(abs(integrals.cubic_phase_integral(integrals.CubicPhaseParams(t, 0.0))
                    - integrals.SQRT_2PI * math.exp(-t * t / 2)) for t in np.linspace(0, 5, 51))
    out.append(Check("Gaussian limit s=0", worst <= 1e-8, f"{worst:.2g}", "1e-8"))
    ts, ss = integrals.default_grid()
    bad = sum(not integrals.cubic_bound_check(integrals.CubicPhaseParams(t, s))
              for t in ts for s in ss)
    out.append(Check(f"cubic bound, C={integrals.GOLDEN_C}", bad == 0, f"{bad} violations", "none"))
    sp = integrals.sphere_regime(100, trials=int(cfg.get("sphere_trials", 10**5)))
    est, ci = integrals.sphere_cubic_expectation(sp, int(cfg.get("seed", 0)))
    out.append(Check("sphere expectation p=100", 0.9 <= est <= 1.1,
                     f"{est:.4g} +- {ci:.2g} (theta={sp.theta:.3g})", "[0.9, 1.1]"))
    return out


def suite_config(cfg: dict) -> list[Check]:
    out = []
    bad = 0
    for n in range(1, 7):
        for d in range(1, 7):
            if n * d > 6:
                continue
            mats, mult = pairing_matrix_tally(n, d)
            bad += sum(pairing_multiplicity(m) != c for m, c in zip(mats, mult))
    out.append(Check("multiplicity law nd <= 6", bad == 0, f"{bad} mismatches", "exact"))
    return out


SUITES: dict[str, Callable[[dict], list[Check]]] = {
    "claim1": suite_kernel_counts,
    "stepdist": suite_stepdist,
    "moments": suite_moments,
    "charsum": suite_charsum,
    "llt": suite_llt,
    "stirling": suite_stirling,
    "ratefn": suite_ratefn,
    "inverse": suite_inverse,
    "integrals": suite_integrals,
    "config": suite_config,
}


def verify_suite(which: str, config: dict | None = None, echo=print) -> tuple[int, list[Check]]:
    """Run one suite (or ``all``); returns the exit status and the checks."""
    config = dict(config or {})
    names = list(SUITES) if which == "all" else [which]
    if any(n not in SUITES for n in names):
        raise ValueError(f"unknown suite {which!r}; choose from {', '.join(SUITES)} or all")
    budget = float(config.get("budget", DEFAULT_BUDGET_S))
    start = time.monotonic()
    checks: list[Check] = []
    for name in names:
        if time.monotonic() - start > budget:
            checks.append(Check(f"{name} (skipped)", False, "budget exhausted", f"{budget:.0f} s"))
            continue
        checks.extend(SUITES[name](config))
    width = max(len(c.name) for c in checks)
    for c in checks:
        echo(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.measured}  [{c.tolerance}]")
    return (0 if all(c.passed for c in checks) else 1), checks
