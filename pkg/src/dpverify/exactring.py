"""Exact arithmetic over a closed catalog of commutative ring families.

Four families are supported:

* ``Q``                the rationals, elements are reduced ``Fraction`` values;
* ``Z/m``              residues modulo ``m``;
* ``Zp:p^N``           p-adic integers kept modulo ``p**N``;
* ``B[x:e1,y:e2,..]``  the monomial quotient ``B[x, y, ..]/(x^e1, y^e2, ..)``
                       over ``B`` in ``{Q, Z/m}``.

Elements are immutable :class:`RingElement` values that carry their ring.
"""

from __future__ import annotations

import itertools
import math
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

__all__ = [
    "RingContext",
    "RingElement",
    "RingError",
    "InfiniteRingError",
    "Rationals",
    "IntegersMod",
    "TruncatedPadic",
    "MonomialQuotient",
    "parse_ring",
    "ring_inverse",
    "is_nilpotent",
    "nilpotency_index",
    "characteristic",
    "enumerate_elements",
    "is_prime",
    "padic_valuation_int",
    "padic_valuation",
]


class RingError(ValueError):
    """Invalid ring description or element literal."""


class InfiniteRingError(RingError):
    """An operation that needs a finite ring got an infinite one."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for d in range(2, math.isqrt(n) + 1):
        if n % d == 0:
            return False
    return True


def padic_valuation_int(p: int, n: int) -> int | None:
    """Exponent of ``p`` in the nonzero integer ``n``; ``None`` for zero."""
    if n == 0:
        return None
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def padic_valuation(p: int, q: Fraction | int) -> int | None:
    """p-adic valuation of a rational; ``None`` stands for +infinity."""
    q = Fraction(q)
    if q == 0:
        return None
    return padic_valuation_int(p, q.numerator) - padic_valuation_int(p, q.denominator)


class RingElement:
    """An element of a :class:`RingContext` in canonical form."""

    __slots__ = ("ring", "value", "_hash")

    def __init__(self, ring: RingContext, value):
        self.ring = ring
        self.value = value
        self._hash = None

    def _coerce(self, other) -> RingElement:
        if isinstance(other, RingElement):
            if other.ring != self.ring:
                raise RingError(f"mixed rings: {self.ring} and {other.ring}")
            return other
        if isinstance(other, (int, Fraction)):
            return self.ring(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RingElement(self.ring, self.ring._add(self.value, other.value))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RingElement(self.ring, self.ring._add(self.value, self.ring._neg(other.value)))

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __neg__(self):
        return RingElement(self.ring, self.ring._neg(self.value))

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RingElement(self.ring, self.ring._mul(self.value, other.value))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = self.ring.one
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, RingElement):
            return self.ring == other.ring and self.value == other.value
        if isinstance(other, (int, Fraction)):
            try:
                return self.value == self.ring(other).value
            except RingError:
                return False
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring, self.value))
        return self._hash

    def __bool__(self):
        return not self.ring._is_zero(self.value)

    def is_zero(self) -> bool:
        return self.ring._is_zero(self.value)

    def sort_key(self):
        """A total order on canonical payloads, used for deterministic choices."""
        return self.ring._sort_key(self.value)

    def __str__(self):
        return self.ring._format(self.value)

    def __repr__(self):
        return f"<{self.ring}: {self}>"


@dataclass(frozen=True)
class RingContext:
    """Base class for the ring families. Instances are immutable and hashable."""

    def __call__(self, x) -> RingElement:
        """Build an element from an int, a Fraction, a literal string or an element."""
        if isinstance(x, RingElement):
            if x.ring != self:
                raise RingError(f"{x!r} is not an element of {self}")
            return x
        if isinstance(x, str):
            return self.parse_element(x)
        if isinstance(x, bool):
            x = int(x)
        if isinstance(x, int):
            return RingElement(self, self._from_int(x))
        if isinstance(x, Fraction):
            return RingElement(self, self._from_fraction(x))
        raise RingError(f"cannot convert {x!r} into {self}")

    @property
    def zero(self) -> RingElement:
        return self(0)

    @property
    def one(self) -> RingElement:
        return self(1)

    @property
    def is_finite(self) -> bool:
        return self.cardinality is not None

    @property
    def cardinality(self) -> int | None:
        raise NotImplementedError

    def _from_fraction(self, q: Fraction):
        if q.denominator == 1:
            return self._from_int(q.numerator)
        inv = ring_inverse(self(q.denominator))
        if inv.is_zero():
            raise RingError(f"{q} does not reduce into {self}")
        return (self(q.numerator) * inv).value

    def _is_zero(self, v) -> bool:
        return v == self._from_int(0)

    def _sort_key(self, v):
        return v

    def elements(self) -> Iterator[RingElement]:
        raise InfiniteRingError(f"infinite ring: {self}")

    def sample(self, rng: random.Random) -> RingElement:
        raise NotImplementedError

    def parse_element(self, text: str) -> RingElement:
        raise NotImplementedError


@dataclass(frozen=True)
class Rationals(RingContext):
    def __str__(self):
        return "Q"

    @property
    def cardinality(self):
        return None

    def _from_int(self, n):
        return Fraction(n)

    def _from_fraction(self, q):
        return q

    def _add(self, a, b):
        return a + b

    def _neg(self, a):
        return -a

    def _mul(self, a, b):
        return a * b

    def _format(self, v):
        return str(v)

    def parse_element(self, text):
        try:
            return RingElement(self, Fraction(text.strip().replace(" ", "")))
        except (ValueError, ZeroDivisionError) as exc:
            raise RingError(f"bad rational literal {text!r}") from exc

    def sample(self, rng):
        return RingElement(self, Fraction(rng.randint(-20, 20), rng.randint(1, 12)))


@dataclass(frozen=True)
class IntegersMod(RingContext):
    m: int

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 2:
            raise RingError(f"Z/m requires m >= 2, got {self.m!r}")

    def __str__(self):
        return f"Z/{self.m}"

    @property
    def modulus(self) -> int:
        return self.m

    @property
    def cardinality(self):
        return self.m

    def _from_int(self, n):
        return n % self.modulus

    def _add(self, a, b):
        return (a + b) % self.modulus

    def _neg(self, a):
        return (-a) % self.modulus

    def _mul(self, a, b):
        return (a * b) % self.modulus

    def _format(self, v):
        return str(v)

    def elements(self):
        for r in range(self.modulus):
            yield RingElement(self, r)

    def sample(self, rng):
        return RingElement(self, rng.randrange(self.modulus))

    def parse_element(self, text):
        text = text.strip().replace(" ", "")
        try:
            if "/" in text:
                return self(Fraction(text))
            return self(int(text))
        except (ValueError, ZeroDivisionError) as exc:
            raise RingError(f"bad residue literal {text!r} for {self}") from exc


@dataclass(frozen=True)
class TruncatedPadic(IntegersMod):
    """Z_p modelled by Z/p^N with valuation bookkeeping."""

    m: int = field(init=False, repr=False)
    p: int = 2
    N: int = 1

    def __post_init__(self):
        if not is_prime(self.p):
            raise RingError(f"Zp requires a prime p, got {self.p}")
        if self.N < 1:
            raise RingError(f"Zp requires precision N >= 1, got {self.N}")
        object.__setattr__(self, "m", self.p ** self.N)

    def __str__(self):
        return f"Zp:{self.p}^{self.N}"

    def valuation(self, a: RingElement) -> int:
        """Exact valuation of a nonzero residue; returns ``N`` (read: at least N) for zero."""
        if a.value == 0:
            return self.N
        return padic_valuation_int(self.p, a.value)


@dataclass(frozen=True)
class MonomialQuotient(RingContext):
    """``base[x1..xs]/(x1^e1, .., xs^es)`` with sparse coefficient maps.

    A payload is a tuple of ``(exponents, coefficient)`` pairs sorted by exponent
    vector; coefficients are base payloads and never zero.
    """

    base: RingContext
    names: tuple
    caps: tuple

    def __post_init__(self):
        if not isinstance(self.base, (Rationals, IntegersMod)) or isinstance(self.base, MonomialQuotient):
            raise RingError("monomial quotients need base Q or Z/m")
        if len(self.names) < 1 or len(self.names) != len(self.caps):
            raise RingError("monomial quotient needs at least one variable with a cap")
        if len(set(self.names)) != len(self.names):
            raise RingError("duplicate variable names")
        for name, e in zip(self.names, self.caps):
            if not re.fullmatch(r"[a-z][a-z0-9_]*", name):
                raise RingError(f"bad variable name {name!r}")
            if not isinstance(e, int) or e < 1:
                raise RingError(f"cap of {name} must be >= 1")

    def __str__(self):
        vs = ",".join(f"{n}:{e}" for n, e in zip(self.names, self.caps))
        return f"{self.base}[{vs}]"

    @property
    def nvars(self) -> int:
        return len(self.names)

    @property
    def cardinality(self):
        if self.base.cardinality is None:
            return None
        return self.base.cardinality ** math.prod(self.caps)

    def monomials(self) -> list[tuple]:
        """All exponent vectors below the caps, in lexicographic order."""
        return list(itertools.product(*(range(e) for e in self.caps)))

    def _in_window(self, exps) -> bool:
        return all(k < e for k, e in zip(exps, self.caps))

    def _from_int(self, n):
        c = self.base._from_int(n)
        zero = (0,) * self.nvars
        if self.base._is_zero(c) or not self._in_window(zero):
            return ()
        return ((zero, c),)

    def _from_fraction(self, q):
        c = self.base(q).value
        zero = (0,) * self.nvars
        if self.base._is_zero(c) or not self._in_window(zero):
            return ()
        return ((zero, c),)

    def from_terms(self, terms) -> RingElement:
        """Element from ``{exponents: coefficient}`` where coefficients are base values."""
        acc: dict = {}
        for exps, c in dict(terms).items():
            exps = tuple(exps)
            if len(exps) != self.nvars:
                raise RingError("exponent vector has the wrong length")
            if not self._in_window(exps):
                continue
            cv = self.base(c).value
            acc[exps] = self.base._add(acc[exps], cv) if exps in acc else cv
        return RingElement(self, self._canon(acc))

    def variable(self, name: str) -> RingElement:
        i = self.names.index(name)
        exps = tuple(1 if j == i else 0 for j in range(self.nvars))
        return self.from_terms({exps: 1})

    def terms(self, a: RingElement) -> dict:
        """``{exponents: base element}`` view of ``a``."""
        return {e: RingElement(self.base, c) for e, c in a.value}

    def constant_term(self, a: RingElement) -> RingElement:
        zero = (0,) * self.nvars
        return RingElement(self.base, dict(a.value).get(zero, self.base._from_int(0)))

    def _canon(self, acc: dict):
        return tuple(sorted((e, c) for e, c in acc.items() if not self.base._is_zero(c)))

    def _add(self, a, b):
        acc = dict(a)
        for e, c in b:
            acc[e] = self.base._add(acc[e], c) if e in acc else c
        return self._canon(acc)

    def _neg(self, a):
        return tuple((e, self.base._neg(c)) for e, c in a)

    def _mul(self, a, b):
        acc: dict = {}
        caps = self.caps
        for ea, ca in a:
            for eb, cb in b:
                exps = tuple(x + y for x, y in zip(ea, eb))
                if any(k >= e for k, e in zip(exps, caps)):
                    continue
                c = self.base._mul(ca, cb)
                acc[exps] = self.base._add(acc[exps], c) if exps in acc else c
        return self._canon(acc)

    def _is_zero(self, v):
        return v == ()

    def _sort_key(self, v):
        return tuple((e, self.base._sort_key(c)) for e, c in v)

    def _format(self, v):
        if not v:
            return "0"
        out = ""
        for exps, c in v:
            mono = "*".join(
                name if k == 1 else f"{name}^{k}" for name, k in zip(self.names, exps) if k
            )
            cs = self.base._format(c)
            sign = "+"
            if cs.startswith("-"):
                sign, cs = "-", cs[1:]
            if not mono:
                body = cs
            elif cs == "1":
                body = mono
            else:
                body = f"{cs}*{mono}"
            out += f"{sign}{body}" if out or sign == "-" else body
        return out

    def elements(self):
        if self.base.cardinality is None:
            raise InfiniteRingError(f"infinite ring: {self}")
        monos = self.monomials()
        base_vals = [c.value for c in self.base.elements()]
        for coeffs in itertools.product(base_vals, repeat=len(monos)):
            yield RingElement(self, self._canon(dict(zip(monos, coeffs))))

    def sample(self, rng):
        terms = {}
        for mono in self.monomials():
            if rng.random() < 0.5:
                terms[mono] = self.base.sample(rng)
        return self.from_terms(terms)

    def parse_element(self, text):
        """Parse sums of terms like ``1 + 2*x*y - x^2`` or ``1/2*x``."""
        s = text.replace(" ", "")
        if not s:
            raise RingError("empty element literal")
        if s[0] not in "+-":
            s = "+" + s
        pieces = re.findall(r"[+-][^+-]+", s)
        if "".join(pieces) != s:
            raise RingError(f"bad element literal {text!r}")
        acc: dict = {}
        for piece in pieces:
            sign, body = piece[0], piece[1:]
            coeff = Fraction(1)
            exps = [0] * self.nvars
            for factor in body.split("*"):
                m = re.fullmatch(r"([a-z][a-z0-9_]*)(?:\^(\d+))?", factor)
                if m and m.group(1) in self.names:
                    exps[self.names.index(m.group(1))] += int(m.group(2) or 1)
                    continue
                try:
                    coeff *= Fraction(factor)
                except (ValueError, ZeroDivisionError) as exc:
                    raise RingError(f"bad factor {factor!r} in {text!r}") from exc
            if sign == "-":
                coeff = -coeff
            key = tuple(exps)
            acc[key] = acc.get(key, Fraction(0)) + coeff
        return self.from_terms({e: c for e, c in acc.items()})


_RING_RE = re.compile(r"^(?P<base>Q|Z/\d+)(?:\[(?P<vars>[^\]]*)\])?$")


def parse_ring(text: str) -> RingContext:
    """Parse ``Q``, ``Z/12``, ``Zp:2^8``, ``Z/2[x:2,y:2]`` or ``Q[x:3]``."""
    s = text.replace(" ", "")
    m = re.fullmatch(r"Zp:(\d+)\^(\d+)", s)
    if m:
        return TruncatedPadic(p=int(m.group(1)), N=int(m.group(2)))
    m = _RING_RE.match(s)
    if not m:
        raise RingError(f"unknown ring family: {text!r}")
    base: RingContext = Rationals() if m.group("base") == "Q" else IntegersMod(int(m.group("base")[2:]))
    if m.group("vars") is None:
        return base
    names, caps = [], []
    for item in m.group("vars").split(","):
        try:
            name, cap = item.split(":")
            names.append(name)
            caps.append(int(cap))
        except ValueError as exc:
            raise RingError(f"bad variable spec {item!r} in {text!r}") from exc
    return MonomialQuotient(base, tuple(names), tuple(caps))


def characteristic(R: RingContext) -> int:
    """Smallest ``n > 0`` with ``n * 1 = 0``, or 0 if there is none."""
    if isinstance(R, Rationals):
        return 0
    if isinstance(R, IntegersMod):
        return R.modulus
    if isinstance(R, MonomialQuotient):
        return characteristic(R.base)
    raise RingError(f"unsupported ring {R}")


def nilpotency_index(a: RingElement) -> int | None:
    """Smallest ``k >= 1`` with ``a^k = 0``, or ``None`` when ``a`` is not nilpotent.

    Decided exactly for every family: Q is a field; in Z/m the index is bounded
    by log2(m); in a monomial quotient the positive-degree part has index at most
    ``sum(e_i - 1) + 1`` so a^k stabilizes to the power of the constant term.
    """
    R = a.ring
    if isinstance(R, Rationals):
        return 1 if a.is_zero() else None
    if isinstance(R, IntegersMod):
        bound = max(1, R.modulus.bit_length())
    elif isinstance(R, MonomialQuotient):
        if not R.constant_term(a).is_zero() and nilpotency_index(R.constant_term(a)) is None:
            return None
        base_bound = 1 if isinstance(R.base, Rationals) else max(1, R.base.modulus.bit_length())
        bound = base_bound * (sum(e - 1 for e in R.caps) + 1) + sum(R.caps)
    else:
        raise RingError(f"unsupported ring {R}")
    power = a
    for k in range(1, bound + 1):
        if power.is_zero():
            return k
        power = power * a
    return None


def is_nilpotent(a: RingElement, bound: int) -> bool:
    """True iff ``a^k = 0`` for some ``1 <= k <= bound``."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    k = nilpotency_index(a)
    return k is not None and k <= bound


def ring_inverse(a: RingElement) -> RingElement:
    """Inverse of ``a`` when it is a unit, otherwise the ring's zero."""
    R = a.ring
    if isinstance(R, Rationals):
        return R.zero if a.is_zero() else RingElement(R, 1 / a.value)
    if isinstance(R, IntegersMod):
        if math.gcd(a.value, R.modulus) != 1:
            return R.zero
        return RingElement(R, pow(a.value, -1, R.modulus))
    if isinstance(R, MonomialQuotient):
        c = R.constant_term(a)
        c_inv = ring_inverse(c)
        if c_inv.is_zero():
            return R.zero
        # a = c (1 + u) with u nilpotent, so a^-1 = c^-1 * sum (-u)^k
        cinv = R.from_terms({(0,) * R.nvars: c_inv.value})
        u = cinv * a - R.one
        result, term = R.one, R.one
        while True:
            term = term * (-u)
            if term.is_zero():
                break
            result = result + term
        return result * cinv
    raise RingError(f"unsupported ring {R}")


def enumerate_elements(R: RingContext) -> Iterator[RingElement]:
    """Every element of a finite ring exactly once."""
    if not R.is_finite:
        raise InfiniteRingError(f"infinite ring: {R}")
    return R.elements()


def is_unit(a: RingElement) -> bool:
    return not ring_inverse(a).is_zero()

