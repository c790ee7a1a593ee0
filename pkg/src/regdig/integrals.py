"""Numerical checks of the cubic-phase Gaussian integral and the sphere
expectation of a cubic exponential."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .core import as_generator
from .errors import OutOfRegimeError, QuadratureError

SQRT_2PI = math.sqrt(2 * math.pi)
TRUNCATION = 12.0
DEFAULT_GUARD = 0.5
# Fitted once over t in [0, 3] step 0.1, s in [0, 0.05] step 0.005 and frozen.
GOLDEN_C = 3.0


@dataclass(frozen=True)
class CubicPhaseParams:
    t: float
    s: float
    guard: float = DEFAULT_GUARD

    def __post_init__(self):
        if abs(self.s * self.t) > self.guard:
            raise OutOfRegimeError(f"|s t| = {abs(self.s * self.t):.3g} exceeds {self.guard}")


def cubic_phase_integral(params: CubicPhaseParams, tol: float = 1e-10) -> complex:
    """Integral over R of exp(-y^2/2 - i t y + i s y^3), truncated at |y| <= 12."""
    t, s = float(params.t), float(params.s)

    def phase(y):
        return s * y**3 - t * y

    def re(y):
        return math.exp(-0.5 * y * y) * math.cos(phase(y))

    def im(y):
        return math.exp(-0.5 * y * y) * math.sin(phase(y))

    out = []
    for f in (re, im):
        # the reported error estimate is checked below, so quad's own warning is redundant
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, -TRUNCATION, TRUNCATION, epsabs=tol, epsrel=0, limit=400)
        if not err <= tol:
            raise QuadratureError(f"quadrature error {err:.3g} above tolerance {tol:.3g}")
        out.append(val)
    return complex(out[0], out[1])


def cubic_bound(params: CubicPhaseParams, c: float) -> float:
    """sqrt(2 pi) exp(-(t^2 - s t^3)/2) exp(c |s t|)."""
    t, s = params.t, params.s
    return SQRT_2PI * math.exp(-0.5 * (t * t - s * t**3)) * math.exp(c * abs(s * t))


def cubic_bound_check(params: CubicPhaseParams, c: float = GOLDEN_C, slack: float = 1e-10) -> bool:
    """Whether |integral| stays below the bound; ``slack`` absorbs quadrature error."""
    return abs(cubic_phase_integral(params)) <= cubic_bound(params, c) + slack


def fit_bound_constant(ts: Sequence[float], ss: Sequence[float]) -> float:
    """Smallest c making the bound hold on a grid (points with s t = 0 skipped)."""
    worst = 0.0
    for t in ts:
        for s in ss:
            if s * t == 0:
                continue
            prm = CubicPhaseParams(t, s)
            val = abs(cubic_phase_integral(prm))
            need = (math.log(val / SQRT_2PI) + 0.5 * (t * t - s * t**3)) / abs(s * t)
            worst = max(worst, need)
    return worst


def default_grid() -> tuple[np.ndarray, np.ndarray]:
    ts = np.round(np.arange(0, 3.0 + 1e-9, 0.1), 10)
    ss = np.round(np.arange(0, 0.05 + 1e-9, 0.005), 10)
    return ts, ss


# sphere expectation -----------------------------------------------------------

@dataclass(frozen=True)
class SphereParams:
    p: int
    theta: float
    R2: float
    trials: int
    n: int | None = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("dimension must be positive")
        if self.n is not None and self.R2 > self.p * math.log(self.n) * (1 + 1e-12):
            raise OutOfRegimeError("R^2 exceeds p log n")


def sphere_regime(p: int, d: int = 3, exponent: float = 3.2, c_p: float | None = None,
                  trials: int = 10**5) -> SphereParams:
    """theta = D_p sqrt(p/n) R^3 with n = ceil(p^exponent) and R^2 = p log n.

    ``c_p`` defaults to d, the leading term of the cubic constant, giving
    D_p = (d-1)/6 - 1/d^2.
    """
    n = math.ceil(p**exponent)
    r2 = p * math.log(n)
    cp = d if c_p is None else c_p
    dp = (d - 1) / 6 - cp / d**3
    theta = dp * math.sqrt(p / n) * r2**1.5
    return SphereParams(p, theta, r2, trials, n)


def _sphere_points(gen: np.random.Generator, count: int, p: int):
    xi = gen.standard_normal((count, p))
    norm2 = np.einsum("ij,ij->i", xi, xi)
    return xi / np.sqrt(norm2)[:, None], norm2


def sphere_cubic_expectation(params: SphereParams, rng, chunk: int = 10_000) -> tuple[float, float]:
    """Monte Carlo mean of exp(theta sum_i u_i^3), u uniform on the unit sphere.

    Returns the estimate and a 95% half-width from the sample variance.
    """
    if params.trials < 1:
        raise ValueError("trials must be positive")
    gen = as_generator(rng)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < params.trials:
        b = min(chunk, params.trials - done)
        u, _ = _sphere_points(gen, b, params.p)
        vals = np.exp(params.theta * np.sum(u**3, axis=1))
        total += float(vals.sum())
        total_sq += float(np.dot(vals, vals))
        done += b
    mean = total / done
    var = max(0.0, total_sq / done - mean * mean) * done / max(1, done - 1)
    return mean, 1.96 * math.sqrt(var / done)


def cubic_tail_probe(p: int, R: float, thresholds: Sequence[float], trials: int, rng,
                     chunk: int = 10_000) -> list[float]:
    """Frequencies of {R^3 sum u_i^3 >= t and p/4 <= |xi|^2 <= 4p}, one per threshold."""
    thresholds = list(thresholds)
    if not thresholds:
        return []
    gen = as_generator(rng)
    th = np.asarray(thresholds, dtype=float)
    hits = np.zeros(len(th), dtype=np.int64)
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        u, norm2 = _sphere_points(gen, b, p)
        stat = R**3 * np.sum(u**3, axis=1)
        ok = (norm2 >= p / 4) & (norm2 <= 4 * p)
        hits += np.sum((stat[None, :] >= th[:, None]) & ok[None, :], axis=1)
        done += b
    return [float(h) / trials for h in hits]


def tail_shape_fit(thresholds: Sequence[float], freqs: Sequence[float], p: int,
                   R2: float) -> float:
    """Slope of log frequency against t^{2/3} p / R^2 (points with zero hits dropped)."""
    x = np.array([t ** (2 / 3) * p / R2 for t in thresholds], dtype=float)
    y = np.array(freqs, dtype=float)
    keep = y > 0
    if keep.sum() < 2:
        raise ValueError("need at least two thresholds with hits")
    slope, _ = np.polyfit(x[keep], np.log(y[keep]), 1)
    return float(slope)


def norm_deviation_frequency(p: int, trials: int, rng, chunk: int = 10_000) -> float:
    """Empirical P(|xi|^2 < p/4 or |xi|^2 > 4p) for a standard Gaussian in R^p."""
    gen = as_generator(rng)
    bad = 0
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        xi = gen.standard_normal((b, p))
        norm2 = np.einsum("ij,ij->i", xi, xi)
        bad += int(np.count_nonzero((norm2 < p / 4) | (norm2 > 4 * p)))
        done += b
    return bad / trials
