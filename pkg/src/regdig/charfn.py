"""Characteristic function of one walk step and the geometry around its maxima.

For a phase vector ``s`` indexed by residues ``a = 0..p-1`` the step
characteristic function is ``phi(s) = p^-(d-1) * sum_w mult(w) exp(i s.w)``.
Its modulus equals one exactly on the lattice
``2 pi Z^p + 2 pi j (0, 1/p, ..., (p-1)/p) + R * ones``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import as_generator
from .errors import (DimensionError, NotCenteredError, NotProportionalError,
                     TooLargeError)
from .walk import StepDistribution, build_step_distribution

TWO_PI = 2 * np.pi
TRIPLE_BUDGET = 10**7


def _phases(s, p: int) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape[-1] != p:
        raise DimensionError(f"phase vector has length {s.shape[-1]}, expected {p}")
    return s


def phi_x(dist: StepDistribution, s) -> complex:
    """Characteristic function of the step at ``s`` (a batch if ``s`` is 2-d)."""
    s = _phases(s, dist.p)
    vals = np.exp(1j * (s @ dist.support.T.astype(float))) @ dist.weights.astype(float)
    vals = vals / dist.total
    return complex(vals) if vals.ndim == 0 else vals


def phi_centered(dist: StepDistribution, s) -> complex:
    s = _phases(s, dist.p)
    shift = np.exp(-1j * (dist.d / dist.p) * s.sum(axis=-1))
    out = shift * phi_x(dist, s)
    return complex(out) if np.ndim(out) == 0 else out


def lattice_point(p: int, j: int) -> np.ndarray:
    """The generator ``2 pi j (0, 1/p, ..., (p-1)/p)``."""
    return TWO_PI * j * np.arange(p) / p


def centered_frame(p: int) -> np.ndarray:
    """Orthonormal p x p frame: p-1 columns spanning ones-perp, then ones/sqrt(p)."""
    a = np.eye(p)
    a[:, 0] = 1.0
    q, _ = np.linalg.qr(a)
    q = np.roll(q, -1, axis=1)
    q[:, -1] = np.abs(q[:, -1])
    return q


@dataclass(frozen=True)
class BallSpec:
    p: int
    j: int
    kappa: float
    basis: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.basis is None:
            object.__setattr__(self, "basis", centered_frame(self.p))

    def contains(self, s) -> bool:
        return distance_to_ball(s, self.p, self.j)[0] <= self.kappa


# moments -------------------------------------------------------------------

def moment_exact(dist: StepDistribution, s: Sequence, k: int) -> Fraction:
    """E <s, X - mu>^k for a centered rational phase vector, by enumeration."""
    if not 1 <= k <= 4:
        raise ValueError("k must be between 1 and 4")
    if len(s) != dist.p:
        raise DimensionError(f"phase vector has length {len(s)}, expected {dist.p}")
    s = [Fraction(x) for x in s]
    if sum(s) != 0:
        raise NotCenteredError("moment formulas need sum(s) = 0")
    # with sum(s) = 0 the mean term <s, mu> vanishes
    acc = Fraction(0)
    for w, m in dist.entries.items():
        acc += m * sum(si * wi for si, wi in zip(s, w)) ** k
    return acc / dist.total


def random_centered_vector(rng, p: int, lo: int = -6, hi: int = 6) -> tuple[int, ...]:
    gen = as_generator(rng)
    head = [int(x) for x in gen.integers(lo, hi + 1, size=p - 1)]
    return tuple(head + [-sum(head)])


@dataclass(frozen=True)
class PrimeMoments:
    p: int
    c_p: Fraction
    quartic_cross: Fraction | None
    ratios: tuple = ()


@dataclass
class MomentFit:
    d: int
    records: list
    c1: float
    c2: float
    residual: float

    def c_p(self, p: int) -> float:
        """The fitted cubic constant d + c1/p + c2/p^2."""
        return self.d + self.c1 / p + self.c2 / p**2

    def d_p(self, p: int) -> float:
        return (self.d - 1) / 6 - self.c_p(p) / self.d**3

    def record(self, p: int) -> PrimeMoments | None:
        return next((r for r in self.records if r.p == p), None)


def cubic_ratios(d: int, p: int, vectors) -> list[Fraction]:
    """p * E<s, X - mu>^3 / sum(s^3) for every vector with nonzero cube sum."""
    dist = build_step_distribution(d, p)
    out = []
    for s in vectors:
        c3 = sum(Fraction(x) ** 3 for x in s)
        if c3:
            out.append(p * moment_exact(dist, s, 3) / c3)
    return out


def quartic_cross_constants(d: int, p: int, vectors) -> list[Fraction]:
    """p^2 (E<s, X - mu>^4 - (d/p) sum(s^4)) / |s|^4 per vector."""
    dist = build_step_distribution(d, p)
    out = []
    for s in vectors:
        s2 = sum(Fraction(x) ** 2 for x in s)
        if s2:
            e4 = moment_exact(dist, s, 4)
            out.append(p**2 * (e4 - Fraction(d, p) * sum(Fraction(x) ** 4 for x in s)) / s2**2)
    return out


def prime_moments(d: int, p: int, vectors=None, rng=0, count: int = 8,
                  rtol: float = 1e-10) -> PrimeMoments:
    """Cubic constant C_p (and the quartic cross constant when it is constant).

    Raises ``NotProportionalError`` if the cubic ratio differs between test
    vectors by more than ``rtol``.
    """
    if vectors is None:
        gen = as_generator(rng)
        vectors = [random_centered_vector(gen, p) for _ in range(count)]
    ratios = cubic_ratios(d, p, vectors)
    if not ratios:
        raise NotProportionalError(f"no test vector with nonzero cube sum at p={p}")
    lo, hi = min(ratios), max(ratios)
    if float(hi - lo) > rtol * max(1.0, abs(float(hi))):
        raise NotProportionalError(
            f"third moment is not proportional to sum(s^3) at d={d}, p={p}: "
            f"ratios range over [{float(lo):.6g}, {float(hi):.6g}]")
    cross = quartic_cross_constants(d, p, vectors)
    qc = cross[0] if cross and all(c == cross[0] for c in cross) else None
    return PrimeMoments(p, ratios[0], qc, tuple(ratios))


def fit_moment_constants(d: int, primes: Sequence[int], rng=0, count: int = 8) -> MomentFit:
    """Least-squares fit of C_p = d + c1/p + c2/p^2 over the given primes."""
    primes = sorted(int(q) for q in primes)
    if not primes:
        raise ValueError("need at least one prime")
    if any(q < 3 for q in primes):
        raise ValueError("the cubic constant is only defined for odd primes")
    gen = as_generator(rng)
    records = [prime_moments(d, q, rng=gen, count=count) for q in primes]
    y = np.array([float(r.c_p) - d for r in records])
    if len(primes) == 1:
        # one prime pins only c1
        c1, c2 = float(y[0] * primes[0]), 0.0
        return MomentFit(d, records, c1, c2, 0.0)
    a = np.array([[1 / q, 1 / q**2] for q in primes])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = float(np.linalg.norm(a @ coef - y))
    return MomentFit(d, records, float(coef[0]), float(coef[1]), resid)


# ball geometry -------------------------------------------------------------

def distance_to_ball(s, p: int, j: int) -> tuple[float, float]:
    """Squared distance from ``s`` to the j-th lattice line, over all translates.

    Writes ``s - g_j = O x + y * ones/sqrt(p) (mod 2 pi Z^p)`` with the translate
    minimizing ``|x|^2``.  Returns ``(|x|^2, y)`` with ``y`` in [0, 2 pi sqrt(p)).
    """
    s = _phases(s, p)
    w = (s - lattice_point(p, j)) / TWO_PI
    f = np.sort(w - np.floor(w))
    # the optimal translate lifts the k smallest fractional parts by one
    lifted = f[None, :] + np.tril(np.ones((p, p)), -1)
    mean = lifted.mean(axis=1)
    var = ((lifted - mean[:, None]) ** 2).sum(axis=1)
    k = int(np.argmin(var))
    kappa = float(TWO_PI**2 * var[k])
    y = (math.sqrt(p) * TWO_PI * mean[k]) % (TWO_PI * math.sqrt(p))
    return kappa, float(y)


def min_ball_distance(s, p: int) -> tuple[float, int]:
    """Smallest kappa over all j, and the j attaining it."""
    best = min((distance_to_ball(s, p, j)[0], j) for j in range(p))
    return best


def _min_kappa_batch(s: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized minimum over j and translates.

    Returns the minimal kappa, the minimizing j, and the minimizing residual
    ``x`` (in ones-perp, in radians) for each row of ``s``.
    """
    r = s.shape[0]
    best = np.full(r, np.inf)
    best_j = np.zeros(r, dtype=np.int64)
    best_x = np.zeros_like(s)
    lift = np.tril(np.ones((p, p)), -1)   # row k lifts the k smallest
    for j in range(p):
        w = (s - lattice_point(p, j)) / TWO_PI
        fl = np.floor(w)
        f = w - fl
        order = np.argsort(f, axis=1)
        fs = np.take_along_axis(f, order, axis=1)
        cand = fs[:, None, :] + lift[None, :, :]
        mean = cand.mean(axis=2, keepdims=True)
        var = ((cand - mean) ** 2).sum(axis=2)
        k = np.argmin(var, axis=1)
        v = var[np.arange(r), k] * TWO_PI**2
        better = v < best
        if np.any(better):
            sel = cand[np.arange(r), k] - mean[np.arange(r), k]
            x = np.empty_like(sel)
            np.put_along_axis(x, order, sel, axis=1)
            best[better] = v[better]
            best_j[better] = j
            best_x[better] = TWO_PI * x[better]
    return best, best_j, best_x


def sample_ball(p: int, j: int, kappa: float, count: int, rng) -> np.ndarray:
    """Uniform samples from B_j(kappa): a uniform point of the (p-1)-ball of
    squared radius kappa in ones-perp, plus a uniform ones-component."""
    gen = as_generator(rng)
    frame = centered_frame(p)
    g = gen.standard_normal((count, p - 1))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radius = math.sqrt(kappa) * gen.random(count) ** (1 / (p - 1))
    x = g * radius[:, None]
    y = gen.random(count) * TWO_PI * math.sqrt(p)
    return lattice_point(p, j) + x @ frame[:, :-1].T + y[:, None] * frame[:, -1]


def forward_decay_check(dist: StepDistribution, samples: int, kappa: float, rng) -> float:
    """Largest deficiency ``1 - |phi|`` over random points of the balls,
    in units of ``kappa / p``."""
    gen = as_generator(rng)
    p = dist.p
    js = gen.integers(0, p, size=samples)
    worst = 0.0
    for j in range(p):
        cnt = int(np.sum(js == j))
        if not cnt:
            continue
        s = sample_ball(p, j, kappa, cnt, gen)
        deficiency = 1.0 - np.abs(phi_x(dist, s))
        worst = max(worst, float(deficiency.max()))
    return worst / (kappa / p)


def forward_decay_profile(dist: StepDistribution, samples: int, kappas: Sequence[float],
                          rng) -> dict:
    """Forward constants across several kappa and their max/min spread."""
    gen = as_generator(rng)
    consts = {float(k): forward_decay_check(dist, samples, k, gen) for k in kappas}
    vals = list(consts.values())
    return {"constants": consts, "spread": max(vals) / min(vals), "max": max(vals)}


# near-extremal phase search ---------------------------------------------------

@dataclass(frozen=True)
class SearchRecord:
    s: tuple
    modulus: float
    kappa_min: float
    j: int


@dataclass
class InverseSearchResult:
    records: list
    empirical_A: float
    counterexamples: list
    threshold: float
    a_max: float | None
    restarts: int

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def _grad_mod2(dist: StepDistribution, s: np.ndarray):
    w = dist.support.astype(float)
    m = dist.weights.astype(float) / dist.total
    e = np.exp(1j * (s @ w.T)) * m
    phi = e.sum(axis=1)
    dphi = 1j * (e @ w)
    grad = 2 * np.real(np.conj(phi)[:, None] * dphi)
    return np.abs(phi) ** 2, grad


def _project_away(s: np.ndarray, p: int, floor: float) -> np.ndarray:
    """Push rows whose nearest-ball kappa is below ``floor`` out to it."""
    kap, _, x = _min_kappa_batch(s, p)
    inside = kap < floor
    if not np.any(inside):
        return s
    x = x[inside]
    nrm = np.linalg.norm(x, axis=1)
    flat = nrm < 1e-300
    # a point exactly on a lattice line has no outward direction; pick one
    x[flat] = 0.0
    x[flat, 0], x[flat, 1] = 1.0, -1.0
    shift = np.where(flat, math.sqrt(floor / 2), math.sqrt(floor) / np.where(flat, 1.0, nrm) - 1.0)
    out = s.copy()
    out[inside] += x * shift[:, None]
    return out


def ascend(dist: StepDistribution, s0: np.ndarray, iters: int = 200, kappa_floor: float = 0.0,
           tol: float = 1e-14) -> np.ndarray:
    """Batched projected gradient ascent on |phi|^2 with backtracking.

    The initial step ``p / (2 d)`` inverts the curvature of |phi|^2 near the
    lattice, where the step covariance is (d/p) times the identity on ones-perp.
    """
    p = dist.p
    s = np.array(s0, dtype=float, copy=True)
    if s.shape[0] == 0:
        return s
    if kappa_floor > 0:
        s = _project_away(s, p, kappa_floor)
    f, g = _grad_mod2(dist, s)
    step = np.full(s.shape[0], p / (2 * dist.d))
    active = np.ones(s.shape[0], dtype=bool)
    for _ in range(iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        trial = s[idx] + step[idx, None] * g[idx]
        if kappa_floor > 0:
            trial = _project_away(trial, p, kappa_floor)
        ft, gt = _grad_mod2(dist, trial)
        up = ft >= f[idx]
        acc = idx[up]
        gain = ft[up] - f[acc]
        s[acc], f[acc], g[acc] = trial[up], ft[up], gt[up]
        step[acc] = np.minimum(step[acc] * 1.5, p / dist.d)
        rej = idx[~up]
        step[rej] *= 0.5
        gnorm = np.linalg.norm(g, axis=1)
        done = (gnorm < tol) | (step < 1e-12)
        done[acc] |= gain < tol * tol
        active &= ~done
    return s


def inverse_search(dist: StepDistribution, alpha: float, restarts: int, rng,
                   a_max: float | None = None, kappa_floor: float = 0.0,
                   init: str = "uniform", noise: float = 1e-3, iters: int = 200,
                   batch: int = 2048) -> InverseSearchResult:
    """Multi-start ascent for near-extremal phase vectors.

    Every local maximum with ``|phi| >= 1 - alpha / p^2`` is recorded along with
    its smallest ball distance.  ``empirical_A`` is the largest
    ``kappa_min * p`` among those records; a record with ``kappa_min * p``
    above ``a_max`` is a counterexample.  With ``kappa_floor > 0`` the ascent
    is confined to points at least that far from every ball, so any record is
    a counterexample candidate.
    """
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    p = dist.p
    gen = as_generator(rng)
    threshold = 1.0 - alpha / p**2
    records = []
    for start in range(0, restarts, batch):
        b = min(batch, restarts - start)
        if init == "uniform":
            s0 = gen.random((b, p)) * TWO_PI
        elif init == "lattice":
            js = gen.integers(0, p, size=b)
            s0 = TWO_PI * js[:, None] * np.arange(p)[None, :] / p
            s0 = s0 + gen.uniform(-noise, noise, size=(b, p))
        else:
            raise ValueError(f"unknown init {init!r}")
        s = ascend(dist, s0, iters=iters, kappa_floor=kappa_floor)
        mod = np.abs(phi_x(dist, s))
        keep = mod >= threshold
        if alpha == 0:
            keep = mod >= 1.0 - 1e-13
        if not np.any(keep):
            continue
        kap, jj, _ = _min_kappa_batch(s[keep], p)
        for row, m, k, j in zip(s[keep], mod[keep], kap, jj):
            records.append(SearchRecord(tuple(float(x) for x in row), float(m), float(k), int(j)))
    records.sort(key=lambda r: -r.modulus)
    emp = max((r.kappa_min * p for r in records), default=0.0)
    bad = [r for r in records if a_max is not None and r.kappa_min * p > a_max]
    return InverseSearchResult(records, emp, bad, threshold, a_max, restarts)


# structure recovery --------------------------------------------------------

def _circ(x):
    """Distance to the nearest integer."""
    x = np.asarray(x, dtype=float)
    return np.abs(x - np.round(x))


def triple_sums(s: np.ndarray, d: int) -> np.ndarray:
    """s_{a_1} + ... + s_{a_{d-1}} + s_{-(a_1 + ... + a_{d-1})} over all tuples."""
    p = len(s)
    if p ** (d - 1) > TRIPLE_BUDGET:
        raise TooLargeError("too many tuples")
    if d == 1:
        return np.array([s[0]])
    grids = np.meshgrid(*([np.arange(p)] * (d - 1)), indexing="ij", sparse=True)
    tot = sum(s[g] for g in grids)
    last = (-sum(grids)) % p
    return tot + s[last]


def micro_norm_stat(dist: StepDistribution, s, x0: float = 0.0,
                    atol: float = 1e-12) -> tuple[float, float]:
    """(sum of squared circular defects of all d-tuples, sum_a |s_a / 2 pi|^2 circular)."""
    s = _phases(s, dist.p)
    if abs(s[0]) > atol:
        raise NotCenteredError("normalize the phase vector so that s_0 = 0")
    sums = triple_sums(s, dist.d)
    defect = float(np.sum(_circ((sums + x0) / TWO_PI) ** 2))
    l2 = float(np.sum(_circ(s / TWO_PI) ** 2))
    return defect, l2


@dataclass(frozen=True)
class StructureReport:
    d0: int
    k: tuple
    x0: float
    q: int
    eta: float
    max_residual: float
    triple_defect: float


def macro_recover(s, p: int, dist: StepDistribution | None = None, eta: float | None = None,
                  d: int = 3) -> StructureReport:
    """Recover the linear phase ``d0 * a / p`` that ``s / 2 pi`` follows.

    ``k_a`` is the integer nearest ``p s_a / 2 pi``, reduced into (-p/2, p/2].
    ``d0`` minimizes the maximal circular residual.  When a step distribution
    is supplied, the alignment phase is ``-arg phi(s)`` and ``eta^2`` defaults
    to the measured deficiency ``1 - |phi(s)|``.
    """
    s = _phases(s, p)
    k = np.round(p * s / TWO_PI).astype(np.int64) % p
    k = np.where(k > p // 2, k - p, k)
    a = np.arange(p)
    res = _circ(s[None, :] / TWO_PI - np.outer(np.arange(p), a) / p).max(axis=1)
    d0 = int(np.argmin(res))
    if dist is not None:
        d = dist.d
        phi = phi_x(dist, s)
        x0 = -float(np.angle(phi))
        if eta is None:
            eta = math.sqrt(max(0.0, 1.0 - abs(phi)))
    else:
        x0 = 0.0
        eta = 0.0 if eta is None else eta
    q = max(1, math.ceil(p * math.sqrt(eta * eta * p)))
    # the defect is computed after the shift s_0 -> 0; each tuple sum has d terms
    shifted = s - s[0]
    sums = triple_sums(shifted, d)
    defect = float(np.sum(_circ((sums + x0 + d * s[0]) / TWO_PI) ** 2))
    return StructureReport(d0, tuple(int(x) for x in k), x0, q, float(eta),
                           float(res[d0]), defect)
