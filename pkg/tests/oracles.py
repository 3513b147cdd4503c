"""Independent reference computations shared by the test modules.

These work on plain Python lists of ints or Fractions and never touch the
library's series type, so agreement with them is a real cross-check.
"""

from fractions import Fraction
from itertools import product


def _reduce(v, mod):
    if mod is None:
        return v
    return Fraction(v).numerator * pow(Fraction(v).denominator, -1, mod) % mod


def poly_mul(a, b, D, mod=None):
    out = [0] * (D + 1)
    for i, x in enumerate(a[:D + 1]):
        if not x:
            continue
        for j, y in enumerate(b[:D + 1 - i]):
            out[i + j] += x * y
    return [_reduce(v, mod) for v in out]


def compose(f, b, D, mod=None):
    """Coefficients of ``f(b(Y))`` up to degree ``D`` by Horner's rule."""
    acc = [0] * (D + 1)
    for c in reversed(f):
        acc = poly_mul(acc, b, D, mod)
        acc[0] = _reduce(acc[0] + c, mod)
    return acc


def nilpotency_index_mod(a, mod):
    """Least k with a^k = 0 mod ``mod`` by direct powering, or None."""
    x = 1
    for k in range(1, mod.bit_length() + 2):
        x = x * a % mod
        if x == 0:
            return k
    return None


def all_univariate(mod, D):
    return [list(c) for c in product(range(mod), repeat=D + 1)]
