"""Parameter records, exact probabilities and reproducible random streams."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BadEpsError, NotPrimeError

DEFAULT_B = 10.0


def is_prime(p: int) -> bool:
    """Deterministic primality test (delegates to sympy)."""
    from sympy import isprime

    return bool(isprime(int(p)))


def random_primes(rng, count: int, lo: int = 2**30, hi: int = 2**31) -> list[int]:
    """Draw ``count`` distinct primes uniformly from the primes in [lo, hi)."""
    gen = as_generator(rng)
    out: list[int] = []
    while len(out) < count:
        c = int(gen.integers(lo, hi))
        if c not in out and is_prime(c):
            out.append(c)
    return out


@dataclass(frozen=True)
class ModelParams:
    n: int
    d: int
    p: int
    eps: float
    b: float = DEFAULT_B
    delta: float = 0.0

    def as_dict(self) -> dict:
        return {"n": self.n, "d": self.d, "p": self.p, "eps": self.eps,
                "b": self.b, "delta": self.delta}


def make_params(n: int, d: int, p: int, eps: float, b: float = DEFAULT_B) -> ModelParams:
    """Validate the model parameters and derive the concentration radius.

    ``delta`` is ``p ** -(1 + 3 * eps)``.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if d < 2:
        raise ValueError(f"d must be at least 2, got {d}")
    if not is_prime(p):
        raise NotPrimeError(f"{p} is not prime")
    if not 0 < eps < 0.1:
        raise BadEpsError(f"eps must lie in (0, 1/10), got {eps}")
    if b <= 0:
        raise ValueError(f"b must be positive, got {b}")
    return ModelParams(n=n, d=d, p=p, eps=eps, b=b, delta=p ** -(1 + 3 * eps))


class ExactProb(Fraction):
    """A probability held as a rational in lowest terms.

    Arithmetic on instances returns plain ``Fraction`` values; the [0, 1]
    range is only enforced at construction.
    """

    def __new__(cls, numerator=0, denominator=None):
        self = super().__new__(cls, numerator, denominator)
        if self < 0 or self > 1:
            raise ValueError(f"probability out of range: {Fraction(self)}")
        return self

    def __repr__(self):
        return f"ExactProb({self.numerator}, {self.denominator})"


@dataclass(frozen=True)
class SeededRng:
    """An addressable random stream: ``(master_seed, stream_index)``.

    Streams are derived through ``numpy.random.SeedSequence`` spawn keys, so
    distinct indices give independent streams and equal pairs give identical
    sequences.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "SeededRng":
        return SeededRng(self.master_seed, index)


def as_generator(rng) -> np.random.Generator:
    """Accept a ``SeededRng``, a ``Generator`` or an int seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, SeededRng):
        return rng.generator()
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    raise TypeError(f"cannot build a random generator from {type(rng).__name__}")


def log_factorial(k: int) -> float:
    """Natural log of k! from the exact integer factorial."""
    return math.log(math.factorial(k)) if k > 1 else 0.0
