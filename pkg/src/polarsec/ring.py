"""Additive arithmetic over Z_q for prime q."""

from __future__ import annotations

from dataclasses import dataclass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class Alphabet:
    """Symbol alphabet {0, ..., q-1} with q prime."""

    q: int

    def __post_init__(self):
        if not isinstance(self.q, int) or isinstance(self.q, bool):
            raise TypeError(f"alphabet size must be an int, got {type(self.q).__name__}")
        if not is_prime(self.q):
            raise ValueError(f"q must be prime, got {self.q}")

    def check(self, a: int) -> int:
        if not 0 <= a < self.q:
            raise ValueError(f"symbol {a} outside 0..{self.q - 1}")
        return a


def add(a: int, b: int, alphabet: Alphabet) -> int:
    alphabet.check(a)
    alphabet.check(b)
    return (a + b) % alphabet.q


def neg(a: int, alphabet: Alphabet) -> int:
    alphabet.check(a)
    return (-a) % alphabet.q
