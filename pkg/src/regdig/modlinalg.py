"""Rank and kernels over F_p, and certified singularity over the rationals.

Full rank modulo any prime certifies rational nonsingularity.  A rational
"singular" verdict is only returned together with an integer kernel vector
that has been checked by an exact integer product, so it cannot be wrong.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from numba import njit

from .core import as_generator, is_prime, random_primes
from .errors import NoPrimesError, NotPrimeError, IdentityViolatedError
from .walk import Profile, profile_of

DEFAULT_PRIME_COUNT = 3
PRIME_LO, PRIME_HI = 2**30, 2**31
EXTRA_PRIME_BUDGET = 256


@njit(cache=True)
def _inv_mod(a, p):
    # extended Euclid; a is nonzero mod p
    t, new_t = 0, 1
    r, new_r = p, a
    while new_r != 0:
        q = r // new_r
        t, new_t = new_t, t - q * new_t
        r, new_r = new_r, r - q * new_r
    if t < 0:
        t += p
    return t


@njit(cache=True)
def _echelon_mod_p(a, p, reduced):
    """In-place row reduction of ``a`` (entries in [0, p)) over F_p.

    Returns the pivot columns.  With ``reduced`` the result is the reduced
    row echelon form with unit pivots; otherwise only rows below each pivot
    are cleared, which is enough for the rank.
    """
    rows, cols = a.shape
    pivots = np.empty(min(rows, cols), dtype=np.int64)
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = -1
        for i in range(r, rows):
            if a[i, c] != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for j in range(c, cols):
                tmp = a[r, j]
                a[r, j] = a[piv, j]
                a[piv, j] = tmp
        inv = _inv_mod(a[r, c], p)
        for j in range(c, cols):
            a[r, j] = (a[r, j] * inv) % p
        start = 0 if reduced else r + 1
        for i in range(start, rows):
            if i == r:
                continue
            f = a[i, c]
            if f == 0:
                continue
            g = p - f
            for j in range(c, cols):
                if a[r, j] != 0:
                    a[i, j] = (a[i, j] + g * a[r, j]) % p
        pivots[r] = c
        r += 1
    return pivots[:r]


def _reduce(m, p: int) -> np.ndarray:
    return np.ascontiguousarray(np.mod(np.asarray(m, dtype=np.int64), p))


def _matvec_mod(m: np.ndarray, v: np.ndarray, p: int) -> np.ndarray:
    mr = np.mod(m, p)
    n = m.shape[1]
    if int(mr.max(initial=0)) * (p - 1) * max(n, 1) < 2**63:
        return (mr @ np.asarray(v, dtype=np.int64)) % p
    return np.array([sum(int(a) * int(b) for a, b in zip(row, v)) % p for row in mr],
                    dtype=np.int64)


@dataclass(frozen=True)
class RankResult:
    rank: int
    nullity: int
    kernel_basis: list = field(default_factory=list)
    pivots: tuple = ()


def _kernel_from_rref(r: np.ndarray, pivots: np.ndarray, p: int) -> list:
    n = r.shape[1]
    pivset = set(int(c) for c in pivots)
    basis = []
    for f in range(n):
        if f in pivset:
            continue
        v = np.zeros(n, dtype=np.int64)
        v[f] = 1
        for i, c in enumerate(pivots):
            v[c] = (-r[i, f]) % p
        basis.append(v)
    return basis


def rank_mod_p(m, p: int, kernel: bool = True, check_prime: bool = True) -> RankResult:
    """Rank, nullity and a kernel basis of ``m`` over F_p.

    Every basis vector is re-multiplied against ``m`` before it is returned.
    """
    if check_prime and not is_prime(p):
        raise NotPrimeError(f"{p} is not prime")
    m = np.asarray(m, dtype=np.int64)
    n = m.shape[1]
    a = _reduce(m, p)
    pivots = _echelon_mod_p(a, np.int64(p), kernel)
    rank = len(pivots)
    basis = []
    if kernel and rank < n:
        basis = _kernel_from_rref(a, pivots, p)
        for v in basis:
            if np.any(_matvec_mod(m, v, p)):
                raise IdentityViolatedError("kernel vector failed re-multiplication")
    return RankResult(rank, n - rank, basis, tuple(int(c) for c in pivots))


def kernel_vector_profile(v: Sequence[int], p: int) -> Profile:
    return profile_of([int(x) for x in v], p)


# exact rational reference ---------------------------------------------------

def rational_rank(m) -> int:
    """Rank over Q by fraction-exact elimination (reference implementation)."""
    a = [[Fraction(int(x)) for x in row] for row in np.asarray(m)]
    rows = len(a)
    cols = len(a[0]) if rows else 0
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        for i in range(r + 1, rows):
            if a[i][c] != 0:
                f = a[i][c] / a[r][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        r += 1
        if r == rows:
            break
    return r


def rational_reconstruct(a: int, modulus: int) -> Fraction | None:
    """Recover u/v with |u|, v <= sqrt(modulus/2) and u = a*v mod modulus."""
    bound = math.isqrt(modulus // 2)
    r0, r1 = modulus, a % modulus
    t0, t1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        t0, t1 = t1, t0 - q * t1
    if t1 == 0 or abs(t1) > bound or math.gcd(r1, abs(t1)) != 1:
        return None
    return Fraction(r1, t1)


# certified singularity ------------------------------------------------------

class Certification(enum.Enum):
    NONSINGULAR = "nonsingular"
    SINGULAR = "singular"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class SingularityResult:
    status: Certification
    witness: tuple | None = None
    primes_used: int = 0

    @property
    def singular(self) -> bool:
        return self.status is Certification.SINGULAR


@dataclass
class _Image:
    p: int
    rref: np.ndarray
    pivots: tuple


def _rank_only(m: np.ndarray, p: int) -> int:
    a = _reduce(m, p)
    return len(_echelon_mod_p(a, np.int64(p), False))


def _image(m: np.ndarray, p: int) -> _Image:
    a = _reduce(m, p)
    piv = _echelon_mod_p(a, np.int64(p), True)
    return _Image(p, a, tuple(int(c) for c in piv))


def _try_witness(m: np.ndarray, images: list[_Image]) -> tuple | None:
    """Lift the first free-column kernel vector of the rational RREF.

    Only images with the maximal rank and the lexicographically smallest
    pivot set are combined; bad primes show up as lower rank or later pivots.
    """
    from sympy.ntheory.modular import crt

    n = m.shape[1]
    top = max(len(im.pivots) for im in images)
    good = [im for im in images if len(im.pivots) == top]
    best = min(im.pivots for im in good)
    good = [im for im in good if im.pivots == best]
    free = next(c for c in range(n) if c not in set(best))
    mods = [im.p for im in good]
    modulus = math.prod(mods)
    entries = []
    for i in range(len(best)):
        res, _ = crt(mods, [int(im.rref[i, free]) for im in good])
        q = rational_reconstruct(-int(res), modulus)
        if q is None:
            return None
        entries.append(q)
    v = [Fraction(0)] * n
    v[free] = Fraction(1)
    for c, q in zip(best, entries):
        v[c] = q
    lcm = math.lcm(*(x.denominator for x in v))
    w = [int(x * lcm) for x in v]
    g = math.gcd(*w)
    w = [x // g for x in w]
    # the certificate: an exact integer product
    for row in m.tolist():
        if sum(a * b for a, b in zip(row, w)):
            return None
    return tuple(w)


def is_singular_rational(m, primes: Sequence[int] | None = None, rng=None,
                         extra_budget: int = EXTRA_PRIME_BUDGET) -> SingularityResult:
    """Decide rational singularity of a square integer matrix, with certificate.

    ``primes`` defaults to three random primes in [2^30, 2^31) drawn from
    ``rng``.  If every prime leaves a kernel, further primes are drawn until
    an exact integer kernel vector is found or ``extra_budget`` primes have
    been used.
    """
    m = np.asarray(m, dtype=np.int64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    n = m.shape[0]
    if n == 0:
        return SingularityResult(Certification.NONSINGULAR)
    if primes is None:
        primes = random_primes(as_generator(rng), DEFAULT_PRIME_COUNT, PRIME_LO, PRIME_HI)
    primes = [int(q) for q in primes]
    if not primes:
        raise NoPrimesError("at least one prime is required")
    used = 0
    for q in primes:
        used += 1
        if _rank_only(m, q) == n:
            return SingularityResult(Certification.NONSINGULAR, primes_used=used)

    images = [_image(m, q) for q in primes]
    w = _try_witness(m, images)
    if w is not None:
        return SingularityResult(Certification.SINGULAR, w, used)
    gen = as_generator(rng if rng is not None else 0)
    seen = set(primes)
    while used < len(primes) + extra_budget:
        q = random_primes(gen, 1, PRIME_LO, PRIME_HI)[0]
        if q in seen:
            continue
        seen.add(q)
        used += 1
        im = _image(m, q)
        if len(im.pivots) == n:
            return SingularityResult(Certification.NONSINGULAR, primes_used=used)
        images.append(im)
        w = _try_witness(m, images)
        if w is not None:
            return SingularityResult(Certification.SINGULAR, w, used)
    return SingularityResult(Certification.UNDETERMINED, primes_used=used)
