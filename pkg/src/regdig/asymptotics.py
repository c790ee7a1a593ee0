"""Stirling weights, the local limit prediction, profile classification and the
large-deviation rate function on restricted alphabets."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import ModelParams
from .errors import (BadSimplexError, ExcludedProfileError, NoConvergeError,
                     OutOfRegimeError, TooLargeError)
from .walk import (StepDistribution, alphabet_step_distribution,
                   restricted_step_distribution, walk_count_charsum,
                   walk_counts_dp, _dp_work, DP_WORK_BUDGET)

try:
    import gmpy2
    _fac = gmpy2.fac
except ImportError:  # pragma: no cover
    gmpy2 = None
    _fac = math.factorial

WEIGHT_N_LIMIT = 10**6
LOG2 = math.log(2.0)


def _log_int(x) -> float:
    """Natural log of a positive (possibly huge) integer."""
    b = int(x.bit_length())
    if b <= 1000:
        return math.log(int(x))
    shift = b - 64
    return math.log(int(x >> shift)) + shift * LOG2


def log_factorial_exact(k: int) -> float:
    return _log_int(_fac(k)) if k > 1 else 0.0


# Robbins bounds -------------------------------------------------------------

def robbins_bounds(l: int) -> tuple[float, float]:
    """sqrt(2 pi l) (l/e)^l e^{1/(12l+1)} and the same with e^{1/(12l)}."""
    if l < 1:
        raise ValueError("l must be positive")
    base = math.sqrt(2 * math.pi * l) * (l / math.e) ** l
    return base * math.exp(1 / (12 * l + 1)), base * math.exp(1 / (12 * l))


def robbins_log_bounds(l: int, dps: int = 50):
    """Log-space Robbins bounds as mpmath numbers at ``dps`` digits."""
    import mpmath

    if l < 1:
        raise ValueError("l must be positive")
    with mpmath.workdps(dps):
        base = mpmath.log(2 * mpmath.pi * l) / 2 + l * (mpmath.log(l) - 1)
        return (base + mpmath.mpf(1) / (12 * l + 1), base + mpmath.mpf(1) / (12 * l))


def robbins_bracket_check(ls: Sequence[int], dps: int = 50) -> list[int]:
    """Values of l at which lower < l! < upper fails; the factorial is exact."""
    import mpmath

    bad = []
    ls = sorted(int(l) for l in ls)
    fact, k = 1, 1
    with mpmath.workdps(dps):
        for l in ls:
            while k < l:
                k += 1
                fact *= k
            lo, hi = robbins_log_bounds(l, dps)
            lf = mpmath.log(mpmath.mpf(fact))
            if not lo < lf < hi:
                bad.append(l)
    return bad


# multinomial weight -----------------------------------------------------------

def _profile_counts(params: ModelParams, profile) -> tuple[int, ...]:
    counts = tuple(int(c) for c in profile)
    if len(counts) != params.p:
        raise ValueError(f"profile needs {params.p} entries")
    if any(c < 0 for c in counts) or sum(counts) != params.n:
        raise ValueError("profile entries must be nonnegative and sum to n")
    return counts


def multinomial_weight_rational(params: ModelParams, profile) -> Fraction:
    """multinomial(n; profile) p^{(d-1)n} prod (d n_j)! / (dn)!, exactly."""
    counts = _profile_counts(params, profile)
    n, d, p = params.n, params.d, params.p
    f = math.factorial
    num = f(n) * p ** ((d - 1) * n) * math.prod(f(d * c) for c in counts)
    den = math.prod(f(c) for c in counts) * f(d * n)
    return Fraction(num, den)


def multinomial_weight_exact(params: ModelParams, profile) -> float:
    """Natural log of the multinomial weight, from exact integer factorials."""
    counts = _profile_counts(params, profile)
    n, d, p = params.n, params.d, params.p
    if n > WEIGHT_N_LIMIT:
        raise TooLargeError(f"n = {n} exceeds the factorial guard")
    out = log_factorial_exact(n) + (d - 1) * n * math.log(p) - log_factorial_exact(d * n)
    for c in counts:
        out += log_factorial_exact(d * c) - log_factorial_exact(c)
    return out


def multinomial_weight_approx(params: ModelParams, profile) -> float:
    """Log of d^{(p-1)/2} exp(((d-1)pn/2) sum dev^2 - ((d-1)p^2 n/6) sum dev^3)."""
    counts = _profile_counts(params, profile)
    try:
        label = classify_profile(params, counts)
    except ExcludedProfileError as exc:
        raise OutOfRegimeError("the zero profile is outside the Stirling regime") from exc
    if label is not CaseLabel.EQUIDISTRIBUTED:
        raise OutOfRegimeError(f"profile is {label.value}, not equidistributed")
    n, d, p = params.n, params.d, params.p
    dev = np.array(counts, dtype=float) / n - 1 / p
    return (((p - 1) / 2) * math.log(d) + ((d - 1) * p * n / 2) * float(np.sum(dev**2))
            - ((d - 1) * p**2 * n / 6) * float(np.sum(dev**3)))


# classification -------------------------------------------------------------

class CaseLabel(enum.Enum):
    EQUIDISTRIBUTED = "Equidistributed"
    N1 = "N1"
    N2 = "N2"
    N3 = "N3"
    N4 = "N4"


def classify_profile(params: ModelParams, profile) -> CaseLabel:
    counts = _profile_counts(params, profile)
    n, p, b, delta = params.n, params.p, params.b, params.delta
    if counts[0] == n:
        raise ExcludedProfileError("the profile (n, 0, ..., 0) is excluded")
    frac = np.array(counts, dtype=float) / n
    dev = frac - 1 / p
    logn = math.log(n)
    if float(np.sum(dev**2)) <= b * logn / n:
        return CaseLabel.EQUIDISTRIBUTED
    if float(np.max(np.abs(dev))) <= delta / p:
        return CaseLabel.N1
    gap = abs(frac[0] - 1)
    if b * p * logn / n < gap <= delta / p:
        return CaseLabel.N2
    if gap < b * p * logn / n:
        return CaseLabel.N3
    return CaseLabel.N4


# local limit prediction -----------------------------------------------------

@dataclass(frozen=True)
class LLTInputs:
    t: tuple
    c_p: float

    def __post_init__(self):
        if abs(sum(self.t)) > 1e-9:
            raise ValueError("t must sum to zero")


def llt_inputs(params: ModelParams, target, fit) -> LLTInputs:
    """t_j = target_j / n - d / p for a walk target (d times a profile)."""
    n, d, p = params.n, params.d, params.p
    target = [Fraction(int(x)) for x in target]
    if len(target) != p or sum(target) != d * n:
        raise ValueError("target must have p entries summing to d n")
    t = tuple(float(x / n - Fraction(d, p)) for x in target)
    return LLTInputs(t, float(fit.c_p(p)))


def llt_prediction_target(params: ModelParams, target, fit) -> float:
    """Local limit prediction for P(X_1 + ... + X_n = target)."""
    n, d, p = params.n, params.d, params.p
    inputs = llt_inputs(params, target, fit)
    t = np.array(inputs.t)
    # equidistribution of target / d
    if float(np.sum((t / d) ** 2)) > params.b * math.log(n) / n:
        raise OutOfRegimeError("target is not equidistributed")
    expo = -(n * p / (2 * d)) * float(np.sum(t**2)) + inputs.c_p * n * p**2 / d**3 * float(np.sum(t**3))
    return p**1.5 * (p / (2 * math.pi * d * n)) ** ((p - 1) / 2) * math.exp(expo)


def llt_prediction(params: ModelParams, profile, fit) -> float:
    counts = _profile_counts(params, profile)
    label = classify_profile(params, counts)
    if label is not CaseLabel.EQUIDISTRIBUTED:
        raise OutOfRegimeError(f"profile is {label.value}, not equidistributed")
    return llt_prediction_target(params, [params.d * c for c in counts], fit)


# deviation instances and the rate function ------------------------------------

@dataclass(frozen=True)
class DeviationInstance:
    m_prime: int | None
    m: int
    ell: int
    n0_prime: int | None
    frak_n: tuple

    def __post_init__(self):
        frak = tuple(self.frak_n)
        object.__setattr__(self, "frak_n", frak)
        if self.ell < 1 or len(frak) != self.ell:
            raise BadSimplexError("frak_n must have ell >= 1 entries")
        if any(x < 0 for x in frak):
            raise BadSimplexError("simplex coordinates must be nonnegative")
        total = sum(frak)
        exact = all(isinstance(x, (int, Fraction)) for x in frak)
        if (exact and total != 1) or (not exact and abs(float(total) - 1) > 1e-12):
            raise BadSimplexError(f"simplex coordinates sum to {float(total)}")

    @classmethod
    def from_counts(cls, counts: Sequence[int], m_prime=None, n0_prime=None):
        counts = [int(c) for c in counts]
        m = sum(counts)
        if m < 1:
            raise BadSimplexError("counts must have positive total")
        return cls(m_prime, m, len(counts), n0_prime, tuple(Fraction(c, m) for c in counts))

    @classmethod
    def on_simplex(cls, frak_n: Sequence[float], m: int = 1):
        frak = tuple(frak_n)
        return cls(None, m, len(frak), None, frak)

    def counts(self) -> tuple[int, ...]:
        vals = [Fraction(x) * self.m for x in self.frak_n]
        if any(v.denominator != 1 for v in vals):
            raise ValueError("m * frak_n is not integral")
        return tuple(int(v) for v in vals)

    def surplus_ok(self, d: int) -> bool:
        """n0' <= (d - 2) m / d, vacuous when n0' is not populated."""
        return self.n0_prime is None or self.n0_prime * d <= (d - 2) * self.m


def _entropy_term(frak: np.ndarray) -> float:
    pos = frak > 0
    return float(np.sum(frak[pos] * np.log(frak[pos])))


def _face_support(support: np.ndarray, y: np.ndarray) -> np.ndarray | None:
    """Rows of ``support`` used by some probability vector with mean ``y``.

    Solves max sum(u) s.t. sum q_w w = lam y, sum q_w = lam, 0 <= u_w <= min(q_w, 1);
    scaling any feasible q lets u reach 1 on its whole support.
    """
    from scipy.optimize import linprog

    k, ell = support.shape
    nv = 2 * k + 1
    c = np.zeros(nv)
    c[k:2 * k] = -1.0
    a_eq = np.zeros((ell + 1, nv))
    a_eq[:ell, :k] = support.T
    a_eq[:ell, -1] = -y
    a_eq[ell, :k] = 1.0
    a_eq[ell, -1] = -1.0
    a_ub = np.zeros((k, nv))
    a_ub[:, :k] = -np.eye(k)
    a_ub[:, k:2 * k] = np.eye(k)
    bounds = [(0, None)] * k + [(0, 1)] * k + [(0, None)]
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(k), A_eq=a_eq, b_eq=np.zeros(ell + 1),
                  bounds=bounds, method="highs")
    if res.status != 0:
        raise NoConvergeError("face LP failed", {"status": res.status, "message": res.message})
    used = res.x[k:2 * k] > 0.5
    return used if used.any() else None


def _log_mgf_min(support: np.ndarray, logw: np.ndarray, y: np.ndarray,
                 gtol: float = 1e-12, max_iter: int = 200) -> tuple[float, np.ndarray, int]:
    """Minimize f(t) = log sum_w exp(logw + <t, w - y>) by damped Newton."""
    z = support - y
    t = np.zeros(support.shape[1])

    def evaluate(tt):
        e = logw + z @ tt
        mx = e.max()
        q = np.exp(e - mx)
        s = q.sum()
        return mx + math.log(s), q / s

    f, q = evaluate(t)
    for it in range(max_iter):
        g = q @ z
        if np.linalg.norm(g) < gtol:
            return f, t, it
        h = (z * q[:, None]).T @ z - np.outer(g, g)
        step = -np.linalg.lstsq(h, g, rcond=None)[0]
        slope = float(g @ step)
        if slope >= 0:
            step, slope = -g, -float(g @ g)
        a = 1.0
        while True:
            fn, qn = evaluate(t + a * step)
            if fn <= f + 1e-4 * a * slope:
                break
            a *= 0.5
            if a < 1e-12:
                break
        if a < 1e-12:
            # no further decrease representable; accept if nearly stationary
            if np.linalg.norm(g) < 1e-8:
                return f, t, it
            raise NoConvergeError("line search stalled",
                                  {"grad_norm": float(np.linalg.norm(g)), "iter": it})
        t, f, q = t + a * step, fn, qn
    if np.linalg.norm(q @ z) < 1e-8:
        return f, t, max_iter
    raise NoConvergeError("Newton iteration limit reached",
                          {"grad_norm": float(np.linalg.norm(q @ z)), "iter": max_iter})


def _bfgs_min(support, logw, y):
    from scipy.optimize import minimize
    from scipy.special import logsumexp

    z = support - y

    def fun(t):
        e = logw + z @ t
        lse = logsumexp(e)
        q = np.exp(e - lse)
        return lse, q @ z

    res = minimize(fun, np.zeros(support.shape[1]), jac=True, method="BFGS",
                   options={"gtol": 1e-10, "maxiter": 10_000})
    if not res.success and np.linalg.norm(res.jac) > 1e-8:
        raise NoConvergeError("BFGS fallback failed",
                              {"grad_norm": float(np.linalg.norm(res.jac)), "message": res.message})
    return float(res.fun)


def rate_alphabet(d: int, ell: int) -> StepDistribution:
    """The step law on {0, ..., ell-1} with zero sum mod ell."""
    return restricted_step_distribution(d, ell)


def log_mgf_infimum(dist: StepDistribution, frak: np.ndarray) -> float:
    """inf_t log E exp<t, X> - d <t, frak> for X uniform over the step multiset."""
    y = dist.d * np.asarray(frak, dtype=float)
    support = dist.support.astype(float)
    logw = np.log(dist.weights.astype(float) / dist.total)
    face = _face_support(support, y)
    if face is None:
        return -math.inf
    try:
        val, _, _ = _log_mgf_min(support[face], logw[face], y)
    except NoConvergeError:
        val = _bfgs_min(support[face], logw[face], y)
    return val


def rate_function(inst: DeviationInstance, d: int) -> float:
    """I(frak) = log|U| + (d-1) sum frak log frak + inf_t (log E e^<t,X> - d <t, frak>)."""
    dist = rate_alphabet(d, inst.ell)
    frak = np.array([float(x) for x in inst.frak_n])
    inf = log_mgf_infimum(dist, frak)
    return math.log(dist.total) + (d - 1) * _entropy_term(frak) + inf


def closed_form_tilt(inst: DeviationInstance, d: int) -> np.ndarray:
    """t = ((d-1)/d) log frak + (log|U| / d) ones; -inf where frak vanishes."""
    dist = rate_alphabet(d, inst.ell)
    frak = np.array([float(x) for x in inst.frak_n])
    with np.errstate(divide="ignore"):
        logs = np.log(frak)
    return (d - 1) / d * logs + math.log(dist.total) / d


def tilt_check(inst: DeviationInstance, d: int) -> float:
    """E exp<t, X> at the closed-form tilt.

    Equals sum over histograms w of mult(w) prod_k frak_k^{((d-1)/d) w_k};
    a vanishing frak_k removes every histogram that uses letter k.
    """
    dist = rate_alphabet(d, inst.ell)
    frak = np.array([float(x) for x in inst.frak_n])
    expo = (d - 1) / d
    total = 0.0
    for w, m in dist.entries.items():
        term = float(m)
        for k, wk in enumerate(w):
            if wk:
                term *= frak[k] ** (expo * wk)
        total += term
    return total


def dev_m_expression(inst: DeviationInstance, d: int, p: int) -> Fraction:
    """multinomial(m; c) / multinomial(dm; d c) times the number of step sequences.

    Steps are histograms of d-tuples from the residues {0, ..., ell-1} of F_p
    with zero sum mod p; sequences are counted with multiplicity.
    """
    counts = inst.counts()
    m, ell = inst.m, inst.ell
    if ell > p:
        raise ValueError("alphabet larger than the field")
    dist = alphabet_step_distribution(d, tuple(range(ell)), p)
    target = tuple(d * c for c in counts)
    if ell == 1:
        seqs = dist.total ** m
    elif _dp_work(dist, m) <= DP_WORK_BUDGET:
        seqs = walk_counts_dp(dist, m).get(target, 0)
    else:
        seqs = walk_count_charsum(dist, m, target)
    f = math.factorial
    multi = Fraction(f(m), math.prod(f(c) for c in counts))
    multi_d = Fraction(f(d * m), math.prod(f(d * c) for c in counts))
    return multi / multi_d * seqs
