"""Step multisets, exact walk probabilities and kernel counting.

A vector ``v`` over F_p with residue histogram ``(n_0, ..., n_{p-1})`` is in
the kernel of a configuration-model matrix exactly when the row histograms,
read as lattice steps, sum to ``d * (n_0, ..., n_{p-1})``.  Everything here is
exact: probabilities are ``Fraction`` values.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .core import ExactProb, ModelParams, is_prime
from .errors import (BadResidueError, IdentityViolatedError, NotPrimeError,
                     TooLargeError)

STEP_BUDGET = 10**8
LATTICE_BUDGET = 2 * 10**8
DP_WORK_BUDGET = 3 * 10**7
FLOAT_AGREEMENT = 1e-9


@dataclass(frozen=True)
class Profile:
    """Residue histogram ``(n_0, ..., n_{p-1})`` of a vector over F_p."""

    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if any(c < 0 for c in self.counts):
            raise ValueError(f"negative count in profile {self.counts}")

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def p(self) -> int:
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)

    def __len__(self):
        return len(self.counts)

    def __getitem__(self, j):
        return self.counts[j]


def _counts(profile) -> tuple[int, ...]:
    return profile.counts if isinstance(profile, Profile) else tuple(int(c) for c in profile)


@dataclass(frozen=True)
class StepDistribution:
    """The multiset of zero-sum histograms, i.e. the law of one walk step.

    ``entries`` maps a histogram (length ``p``, summing to ``d``) to its
    multiplicity; ``total`` is the sum of multiplicities, ``p ** (d - 1)``.
    ``p`` is the modulus of the zero-sum constraint; it need not be prime for
    the restricted alphabets used by the deviation estimates.
    """

    d: int
    p: int
    entries: dict
    total: int
    support: np.ndarray = field(repr=False, compare=False)
    weights: np.ndarray = field(repr=False, compare=False)

    @property
    def mean(self) -> tuple[Fraction, ...]:
        return step_mean_cov(self)[0]


def phi_map(x: Sequence[int], p: int) -> tuple[int, ...]:
    """Residue histogram of ``x``: coordinate ``j`` counts entries equal to ``j``."""
    out = [0] * p
    for xi in x:
        if not 0 <= xi < p:
            raise BadResidueError(f"residue {xi} outside [0, {p})")
        out[xi] += 1
    return tuple(out)


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All weak compositions of ``total`` into ``parts`` parts, colexicographic."""
    if parts == 1:
        yield (total,)
        return
    for last in range(total + 1):
        for head in compositions(total - last, parts - 1):
            yield head + (last,)


def _make_distribution(d: int, modulus: int, entries: dict) -> StepDistribution:
    keys = sorted(entries)
    support = np.array(keys, dtype=np.int64).reshape(len(keys), modulus)
    weights = np.array([entries[k] for k in keys], dtype=np.int64)
    return StepDistribution(d=d, p=modulus, entries={k: entries[k] for k in keys},
                            total=sum(entries.values()), support=support, weights=weights)


@lru_cache(maxsize=None)
def zero_sum_distribution(d: int, modulus: int) -> StepDistribution:
    """Histograms of d-tuples over Z/modulus with zero sum, with multiplicity.

    A histogram ``h`` arises from exactly ``d! / prod(h_j!)`` ordered tuples,
    so compositions of ``d`` are enumerated instead of the tuples themselves.
    """
    if d < 1 or modulus < 1:
        raise ValueError("d and modulus must be positive")
    if modulus ** (d - 1) > STEP_BUDGET:
        raise TooLargeError(f"{modulus}^{d - 1} exceeds the enumeration budget")
    entries = {}
    dfact = math.factorial(d)
    for h in compositions(d, modulus):
        if sum(j * c for j, c in enumerate(h)) % modulus == 0:
            entries[h] = dfact // math.prod(math.factorial(c) for c in h)
    dist = _make_distribution(d, modulus, entries)
    if dist.total != modulus ** (d - 1):
        raise IdentityViolatedError("step multiset has the wrong size")
    return dist


def build_step_distribution(d: int, p: int) -> StepDistribution:
    if d < 2:
        raise ValueError(f"d must be at least 2, got {d}")
    if not is_prime(p):
        raise NotPrimeError(f"{p} is not prime")
    return zero_sum_distribution(d, p)


def restricted_step_distribution(d: int, ell: int) -> StepDistribution:
    """Step law on the alphabet {0, ..., ell-1} with sums taken mod ``ell``."""
    return zero_sum_distribution(d, ell)


@lru_cache(maxsize=None)
def alphabet_step_distribution(d: int, residues: tuple, modulus: int) -> StepDistribution:
    """Histograms of d-tuples drawn from ``residues`` whose sum is 0 mod ``modulus``.

    Coordinate ``k`` of a histogram counts entries equal to ``residues[k]``.
    """
    residues = tuple(int(r) for r in residues)
    if len(set(residues)) != len(residues):
        raise ValueError("residues must be distinct")
    ell = len(residues)
    if math.comb(d + ell - 1, ell - 1) > STEP_BUDGET:
        raise TooLargeError("alphabet too large to enumerate")
    entries = {}
    dfact = math.factorial(d)
    for h in compositions(d, ell):
        if sum(r * c for r, c in zip(residues, h)) % modulus == 0:
            entries[h] = dfact // math.prod(math.factorial(c) for c in h)
    if not entries:
        raise ValueError("no zero-sum tuple over this alphabet")
    return _make_distribution(d, ell, entries)


def step_mean_cov(dist: StepDistribution):
    """Exact mean vector and covariance matrix of one step."""
    p, total = dist.p, dist.total
    mean = [Fraction(0)] * p
    second = [[Fraction(0)] * p for _ in range(p)]
    for w, m in dist.entries.items():
        for i in range(p):
            if w[i]:
                mean[i] += m * w[i]
                for j in range(p):
                    if w[j]:
                        second[i][j] += m * w[i] * w[j]
    mean = [x / total for x in mean]
    cov = [[second[i][j] / total - mean[i] * mean[j] for j in range(p)] for i in range(p)]
    return tuple(mean), tuple(tuple(r) for r in cov)


# exact walk laws ---------------------------------------------------------

def _check_target(dist: StepDistribution, n: int, target) -> tuple[int, ...] | None:
    """Return the target as a tuple, or None if it is trivially unreachable."""
    t = tuple(int(x) for x in target)
    if len(t) != dist.p:
        raise ValueError(f"target has length {len(t)}, expected {dist.p}")
    if any(x < 0 for x in t) or sum(t) != dist.d * n:
        return None
    return t


def walk_counts_dp(dist: StepDistribution, n: int) -> dict:
    """Map every reachable endpoint of an n-step walk to its sequence count.

    Counts are weighted by multiplicity, so they sum to ``total ** n``.
    """
    if (dist.d * n + 1) ** (dist.p - 1) > LATTICE_BUDGET:
        raise TooLargeError("walk lattice exceeds the state budget")
    layer = {(0,) * dist.p: 1}
    steps = list(dist.entries.items())
    for _ in range(n):
        nxt: dict = {}
        for state, c in layer.items():
            for w, m in steps:
                key = tuple(a + b for a, b in zip(state, w))
                nxt[key] = nxt.get(key, 0) + c * m
        layer = nxt
    return layer


def walk_distribution_exact(dist: StepDistribution, n: int) -> dict:
    """Exact law of X_1 + ... + X_n as a dict endpoint -> Fraction."""
    denom = dist.total ** n
    return {k: Fraction(v, denom) for k, v in walk_counts_dp(dist, n).items()}


def _dp_work(dist: StepDistribution, n: int) -> int:
    return n * len(dist.entries) * (dist.d * n + 1) ** (dist.p - 1)


def walk_probability_exact(dist: StepDistribution, n: int, target, method: str = "auto") -> ExactProb:
    """P(X_1 + ... + X_n = target), exactly.

    ``method`` is ``"dp"`` (layered convolution), ``"charsum"`` (character sum
    over N-th roots of unity evaluated in prime fields and recombined by CRT)
    or ``"auto"``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    t = _check_target(dist, n, target)
    if t is None:
        return ExactProb(0)
    if n == 0:
        return ExactProb(1)
    if method == "auto":
        method = "dp" if _dp_work(dist, n) <= DP_WORK_BUDGET else "charsum"
    if method == "dp":
        if (dist.d * n + 1) ** (dist.p - 1) > LATTICE_BUDGET:
            raise TooLargeError("walk lattice exceeds the state budget")
        count = _dp_single(dist, n, t)
    elif method == "charsum":
        count = walk_count_charsum(dist, n, t)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ExactProb(count, dist.total ** n)


def _dp_single(dist: StepDistribution, n: int, t: tuple[int, ...]) -> int:
    # prune states that can no longer reach t: every coordinate only grows
    layer = {(0,) * dist.p: 1}
    steps = list(dist.entries.items())
    for _ in range(n):
        nxt: dict = {}
        for state, c in layer.items():
            for w, m in steps:
                key = tuple(a + b for a, b in zip(state, w))
                if all(k <= tt for k, tt in zip(key, t)):
                    nxt[key] = nxt.get(key, 0) + c * m
        layer = nxt
    return layer.get(t, 0)


# character sums in prime fields -------------------------------------------

@lru_cache(maxsize=None)
def _ntt_primes(order: int, count: int) -> tuple[tuple[int, int], ...]:
    """First ``count`` primes q = k*order + 1 below 2^31 with a primitive order-th root."""
    from sympy import factorint

    factors = list(factorint(order))
    out = []
    k = (2**31 - 1) // order
    while len(out) < count:
        if k < 1:
            raise TooLargeError("ran out of NTT-friendly primes")
        q = k * order + 1
        k -= 1
        if q >= 2**31 or not is_prime(q):
            continue
        for a in range(2, q):
            w = pow(a, (q - 1) // order, q)
            if all(pow(w, order // r, q) != 1 for r in factors):
                out.append((q, w))
                break
    return tuple(out)


def _powmod_array(base: np.ndarray, e: int, q: int) -> np.ndarray:
    result = np.ones_like(base)
    b = base.copy()
    while e:
        if e & 1:
            result = (result * b) % q
        e >>= 1
        if e:
            b = (b * b) % q
    return result


def _charsum_mod(dist: StepDistribution, n: int, t, order: int, q: int, w: int,
                 slab: int) -> int:
    dims = dist.p - 1
    pw = np.array([pow(w, k, q) for k in range(order)], dtype=np.int64)
    steps = dist.support[:, :dims]
    weights = dist.weights % q
    theta = np.arange(order, dtype=np.int64)
    total = 0
    for start in range(0, order, slab):
        th0 = theta[start:start + slab]
        shape = (len(th0),) + (order,) * (dims - 1)
        f = np.zeros(shape, dtype=np.int64)
        for wvec, m in zip(steps, weights):
            term = np.full(shape, m, dtype=np.int64)
            for axis in range(dims):
                ax = th0 if axis == 0 else theta
                vals = pw[(ax * wvec[axis]) % order]
                idx = [1] * dims
                idx[axis] = len(ax)
                term = (term * vals.reshape(idx)) % q
            f = (f + term) % q
        f = _powmod_array(f, n, q)
        for axis in range(dims):
            ax = th0 if axis == 0 else theta
            vals = pw[(-(ax * t[axis])) % order]
            idx = [1] * dims
            idx[axis] = len(ax)
            f = (f * vals.reshape(idx)) % q
        total = (total + int(f.sum(dtype=np.int64) % q)) % q
    inv = pow(pow(order, dims, q), q - 2, q)
    return total * inv % q


def walk_count_charsum(dist: StepDistribution, n: int, target) -> int:
    """Weighted number of step sequences ending at ``target``.

    Evaluates the inverse discrete Fourier transform of the step generating
    function raised to the n-th power at a single point, in F_q for several
    primes q = 1 mod (d*n + 1), and recombines the residues by CRT.
    """
    from sympy.ntheory.modular import crt

    t = _check_target(dist, n, target)
    if t is None:
        return 0
    if dist.p == 1:
        return dist.total ** n
    order = dist.d * n + 1
    dims = dist.p - 1
    if order ** dims > LATTICE_BUDGET:
        raise TooLargeError("character grid exceeds the state budget")
    bound = dist.total ** n
    nbits = bound.bit_length() + 1
    primes = _ntt_primes(order, nbits // 30 + 2)
    slab = max(1, min(order, 4_000_000 // max(1, order ** (dims - 1))))
    mods, residues, prod = [], [], 1
    for q, w in primes:
        mods.append(q)
        residues.append(_charsum_mod(dist, n, t, order, q, w, slab))
        prod *= q
        if prod > 2 * bound:
            break
    value, _ = crt(mods, residues)
    value = int(value)
    if value > bound:
        raise IdentityViolatedError("character sum reconstruction out of range")
    return value


def walk_probability_float(dist: StepDistribution, n: int, target) -> float:
    """Floating-point version of the character sum over complex roots of unity."""
    t = _check_target(dist, n, target)
    if t is None:
        return 0.0
    if n == 0:
        return 1.0
    dims = dist.p - 1
    if dims == 0:
        return 1.0
    order = dist.d * n + 1
    if order ** dims > LATTICE_BUDGET:
        raise TooLargeError("character grid exceeds the state budget")
    theta = 2 * np.pi * np.arange(order) / order
    grids = np.meshgrid(*([theta] * dims), indexing="ij", sparse=True)
    phi = np.zeros((order,) * dims, dtype=complex)
    for wvec, m in zip(dist.support, dist.weights):
        phase = sum(g * wvec[a] for a, g in enumerate(grids))
        phi = phi + m * np.exp(1j * phase)
    phi /= dist.total
    phase_t = sum(g * t[a] for a, g in enumerate(grids))
    val = np.sum(phi ** n * np.exp(-1j * phase_t)) / order ** dims
    return float(val.real)


# congruence probabilities in Z[x]/(x^p - 1) --------------------------------

def _cyc_mul(a: list, b: list, p: int) -> list:
    out = [0] * p
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                if bj:
                    out[(i + j) % p] += ai * bj
    return out


def _cyc_pow(a: list, e: int, p: int) -> list:
    result = [1] + [0] * (p - 1)
    base = list(a)
    while e:
        if e & 1:
            result = _cyc_mul(result, base, p)
        e >>= 1
        if e:
            base = _cyc_mul(base, base, p)
    return result


def walk_probability_modp(dist: StepDistribution, n: int, residues) -> ExactProb:
    """P(X_1 + ... + X_n = residues coordinatewise mod p), exactly.

    Sums additive characters e_p(s . y) over all s in F_p^p.  (Characters
    with zero coordinate sum alone only see residues up to a multiple of the
    all-ones vector, since every endpoint has coordinate sum d n.)  Each character value of a step lies in Z[zeta_p]; the computation is
    carried out in the group ring Z[x]/(x^p - 1) and the final element is
    mapped to the rational it represents.
    """
    p = dist.p
    r = [int(x) % p for x in residues]
    if len(r) != p:
        raise ValueError(f"expected {p} residues")
    if (sum(r) - dist.d * n) % p:
        return ExactProb(0)
    acc = [0] * p
    cache: dict = {}
    for s in itertools.product(range(p), repeat=p):
        elem = [0] * p
        for wvec, m in dist.entries.items():
            elem[sum(si * wi for si, wi in zip(s, wvec)) % p] += m
        key = tuple(elem)
        if key not in cache:
            cache[key] = _cyc_pow(elem, n, p)
        powered = cache[key]
        shift = (-sum(si * ri for si, ri in zip(s, r))) % p
        for k, c in enumerate(powered):
            acc[(k + shift) % p] += c
    if any(acc[k] != acc[1] for k in range(2, p)):
        raise IdentityViolatedError("character sum is not rational")
    value = acc[0] - (acc[1] if p > 1 else 0)
    return ExactProb(value, p ** p * dist.total ** n)


def marginalize_mod_p(law: dict, p: int) -> dict:
    """Collapse an exact endpoint law onto residue classes mod p."""
    out: dict = {}
    for k, v in law.items():
        key = tuple(x % p for x in k)
        out[key] = out.get(key, 0) + v
    return out


# kernel counting ------------------------------------------------------------

def profile_of(v: Sequence[int], p: int) -> Profile:
    out = [0] * p
    for x in v:
        if not 0 <= x < p:
            raise BadResidueError(f"residue {x} outside [0, {p})")
        out[x] += 1
    return Profile(tuple(out))


def kernel_count_rhs(params: ModelParams, profile) -> int:
    """Number of pairings whose matrix annihilates any vector of this profile."""
    counts = _counts(profile)
    if len(counts) != params.p or sum(counts) != params.n:
        raise ValueError("profile does not match the parameters")
    d, p, n = params.d, params.p, params.n
    dist = build_step_distribution(d, p)
    prob = walk_probability_exact(dist, n, [d * c for c in counts])
    value = Fraction(prob) * p ** ((d - 1) * n) * math.prod(math.factorial(d * c) for c in counts)
    if value.denominator != 1:
        raise IdentityViolatedError(f"kernel count {value} is not an integer")
    return value.numerator


def kernel_count_lhs_bruteforce(params: ModelParams, v: Sequence[int]) -> int:
    """Count pairings with M v = 0 mod p by exhausting all (nd)! pairings."""
    from .configmodel import pairing_matrix_tally

    if len(v) != params.n:
        raise ValueError("vector length must equal n")
    vec = np.array([int(x) for x in v], dtype=np.int64)
    if np.any(vec < 0) or np.any(vec >= params.p):
        raise BadResidueError("entries must be residues mod p")
    mats, mult = pairing_matrix_tally(params.n, params.d)
    hit = np.all((mats @ vec) % params.p == 0, axis=1)
    return int(mult[hit].sum())


def total_singularity_sum(params: ModelParams, max_terms: int = 10**6) -> Fraction:
    """Sum over nonzero profiles of the expected number of kernel vectors.

    Equals the sum over nonzero v of P(M v = 0 mod p), which bounds
    (p - 1) * P(M singular mod p) from above.
    """
    n, d, p = params.n, params.d, params.p
    if math.comb(n + p - 1, p - 1) > max_terms:
        raise TooLargeError("too many profiles to enumerate")
    dist = build_step_distribution(d, p)
    law = walk_counts_dp(dist, n) if _dp_work(dist, n) <= DP_WORK_BUDGET else None
    dn_fact = math.factorial(d * n)
    total = Fraction(0)
    for prof in compositions(n, p):
        if prof[0] == n:
            continue
        target = tuple(d * c for c in prof)
        if law is not None:
            count = law.get(target, 0)
        else:
            count = walk_count_charsum(dist, n, target)
        if not count:
            continue
        multinom = math.factorial(n) // math.prod(math.factorial(c) for c in prof)
        mass = math.prod(math.factorial(d * c) for c in prof)
        total += Fraction(multinom * mass * count, dn_fact)
    return total
