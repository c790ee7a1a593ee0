"""Configuration-model pairings for random directed d-regular multigraphs.

Vertex ``k`` owns the points ``k*d, ..., k*d + d - 1`` (its fiber).  A pairing
is a permutation of all ``n*d`` points; out-point ``i`` is joined to in-point
``perm[i]``, giving an edge from fiber ``i // d`` to fiber ``perm[i] // d``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple

import numpy as np

from .core import as_generator
from .errors import RejectionBudgetError, TooLargeError

ENUMERATION_LIMIT = 9


@dataclass(frozen=True, eq=False)
class PairingSample:
    n: int
    d: int
    perm: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.int64)
        perm.setflags(write=False)
        object.__setattr__(self, "perm", perm)
        if perm.shape != (self.n * self.d,):
            raise ValueError("permutation has the wrong length")

    def fiber(self, point: int) -> int:
        return point // self.d

    def __eq__(self, other):
        return (isinstance(other, PairingSample) and self.n == other.n
                and self.d == other.d and np.array_equal(self.perm, other.perm))

    def __hash__(self):
        return hash((self.n, self.d, self.perm.tobytes()))


class SimpleSample(NamedTuple):
    matrix: np.ndarray
    attempts: int


def sample_pairing(n: int, d: int, rng) -> PairingSample:
    if n * d < 1:
        raise ValueError("need at least one point")
    return PairingSample(n, d, as_generator(rng).permutation(n * d))


def pairing_to_matrix(s: PairingSample) -> np.ndarray:
    """Count matrix: entry (k, l) is the number of fiber-k points sent into fiber l."""
    return perm_to_matrix(s.perm, s.n, s.d)


def perm_to_matrix(perm: np.ndarray, n: int, d: int) -> np.ndarray:
    src = np.arange(n * d) // d
    dst = np.asarray(perm) // d
    return np.bincount(src * n + dst, minlength=n * n).reshape(n, n)


def is_simple(m: np.ndarray) -> bool:
    """No loops and no multiple edges."""
    m = np.asarray(m)
    return bool(np.all(np.diag(m) == 0) and np.all(m <= 1))


def sample_simple_adjacency(n: int, d: int, rng, max_retries: int = 10**4) -> SimpleSample:
    """Rejection-sample pairings until the multigraph is simple."""
    if d >= n:
        raise RejectionBudgetError(f"no simple {d}-regular digraph on {n} vertices")
    gen = as_generator(rng)
    for attempt in range(1, max_retries + 1):
        m = perm_to_matrix(gen.permutation(n * d), n, d)
        if is_simple(m):
            return SimpleSample(m, attempt)
    raise RejectionBudgetError(f"no simple sample after {max_retries} attempts")


def simple_acceptance_fraction(n: int, d: int, proposals: int, rng, batch: int = 4096) -> float:
    """Fraction of uniformly random pairings whose multigraph is simple."""
    gen = as_generator(rng)
    nd = n * d
    fiber = np.arange(nd) // d
    accepted = done = 0
    while done < proposals:
        b = min(batch, proposals - done)
        perms = gen.permuted(np.tile(np.arange(nd), (b, 1)), axis=1)
        dst = perms // d
        loop = np.any(dst == fiber[None, :], axis=1)
        idx = fiber[None, :] * n + dst
        idx.sort(axis=1)
        multi = np.any(idx[:, 1:] == idx[:, :-1], axis=1)
        accepted += int(np.count_nonzero(~loop & ~multi))
        done += b
    return accepted / proposals


def enumerate_pairings(n: int, d: int) -> Iterator[PairingSample]:
    """All (nd)! pairings in lexicographic order of the permutation."""
    if n * d > ENUMERATION_LIMIT:
        raise TooLargeError(f"(nd)! enumeration needs nd <= {ENUMERATION_LIMIT}")
    for perm in itertools.permutations(range(n * d)):
        yield PairingSample(n, d, np.array(perm))


@lru_cache(maxsize=None)
def pairing_matrix_tally(n: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct count matrices (flattened rows) and how many pairings give each."""
    if n * d > ENUMERATION_LIMIT:
        raise TooLargeError(f"(nd)! enumeration needs nd <= {ENUMERATION_LIMIT}")
    nd = n * d
    perms = np.array(list(itertools.permutations(range(nd))), dtype=np.int64).reshape(-1, nd)
    src = (np.arange(nd) // d) * n
    idx = src[None, :] + perms // d
    flat = np.zeros((perms.shape[0], n * n), dtype=np.int64)
    rows = np.repeat(np.arange(perms.shape[0]), nd)
    np.add.at(flat, (rows, idx.ravel()), 1)
    mats, mult = np.unique(flat, axis=0, return_counts=True)
    mats = mats.reshape(-1, n, n)
    mats.setflags(write=False)
    return mats, mult


def pairing_multiplicity(m: np.ndarray) -> int:
    """Number of pairings that produce the count matrix ``m``.

    Each row fiber splits its d points into groups of sizes m[k, :], each
    column fiber splits its d points into groups of sizes m[:, l], and the
    groups of cell (k, l) are matched in m[k, l]! ways.
    """
    m = np.asarray(m, dtype=np.int64)
    d = int(m[0].sum())
    fact = math.factorial
    out = 1
    for row in m:
        out *= fact(d) // math.prod(fact(int(x)) for x in row)
    for col in m.T:
        out *= fact(d) // math.prod(fact(int(x)) for x in col)
    out *= math.prod(fact(int(x)) for x in m.ravel())
    return out
