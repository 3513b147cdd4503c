"""Exact factorials, binomials and the uniform Bell numbers (mn)!/(m! (n!)^m)."""

from __future__ import annotations

import math

__all__ = [
    "factorial",
    "choose",
    "uniform_bell",
    "uniform_bell_recurrence",
    "digit_sum",
    "legendre_valuation",
]


def factorial(n: int) -> int:
    if n < 0:
        raise ValueError("factorial of a negative number")
    return math.factorial(n)


def choose(n: int, k: int) -> int:
    """Binomial coefficient, zero when ``k > n``."""
    if n < 0 or k < 0:
        raise ValueError("choose needs non-negative arguments")
    return math.comb(n, k)


def uniform_bell(m: int, n: int) -> int:
    """Number of ways to split an ``m*n``-set into ``m`` blocks of size ``n``.

    Computed as the exact quotient ``(m*n)! / (m! * (n!)**m)``. For ``n = 0``
    and ``m >= 2`` that quotient is ``1/m!``, not an integer; there the value is
    1, the empty product of the binomial recurrence (and the number of ways to
    split the empty set into ``m`` empty blocks up to order).
    """
    if m < 0 or n < 0:
        raise ValueError("uniform_bell needs non-negative arguments")
    if n == 0:
        return 1
    num = factorial(m * n)
    den = factorial(m) * factorial(n) ** m
    q, r = divmod(num, den)
    assert r == 0, f"inexact uniform_bell({m}, {n})"
    return q


def uniform_bell_recurrence(m: int, n: int) -> int:
    """Same number via ``prod_{k=1}^{m} choose(k*n - 1, n - 1)``; cross-check only."""
    if n == 0:
        return 1
    out = 1
    for k in range(1, m + 1):
        out *= choose(k * n - 1, n - 1)
    return out


def digit_sum(n: int, p: int) -> int:
    """Sum of the base-``p`` digits of ``n``."""
    s = 0
    while n:
        n, d = divmod(n, p)
        s += d
    return s


def legendre_valuation(n: int, p: int) -> int:
    """v_p(n!) = (n - s_p(n)) / (p - 1)."""
    q, r = divmod(n - digit_sum(n, p), p - 1)
    assert r == 0
    return q
