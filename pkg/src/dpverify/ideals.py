"""Finitely generated ideals with decidable membership, ring homomorphisms, quotients.

Membership is decided per family: a gcd generator in ``Z/m``, a valuation
threshold in ``Zp``, an explicit closed element set for finite monomial
quotients, and an exact row-reduced basis (the ring is a finite-dimensional
Q-vector space) for monomial quotients over ``Q``.
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from .exactring import (
    InfiniteRingError,
    IntegersMod,
    MonomialQuotient,
    Rationals,
    RingContext,
    RingElement,
    RingError,
    TruncatedPadic,
    padic_valuation,
    ring_inverse,
)

__all__ = [
    "IdealHandle",
    "RingHomHandle",
    "UnsupportedQuotient",
    "span",
    "mem",
    "ideal_sum",
    "ideal_mul",
    "ideal_inf",
    "ideal_pow",
    "zero_ideal",
    "unit_ideal",
    "quotient_ring",
    "enumerate_ideals",
    "audit_ideal_list",
    "identity_hom",
    "mod_reduction",
    "precision_drop",
    "base_inclusion",
    "padic_lift",
    "composite",
    "natural_hom",
]


class UnsupportedQuotient(RingError):
    pass


# -- exact linear algebra over Q, used for monomial quotients over Q ------------------


def _rref(rows: Iterable[Sequence[Fraction]], width: int) -> tuple[tuple[Fraction, ...], ...]:
    """Reduced row echelon form with zero rows dropped; canonical for the row space."""
    mat = [list(r) for r in rows if any(r)]
    pivot_row = 0
    for col in range(width):
        pivot = next((i for i in range(pivot_row, len(mat)) if mat[i][col] != 0), None)
        if pivot is None:
            continue
        mat[pivot_row], mat[pivot] = mat[pivot], mat[pivot_row]
        lead = mat[pivot_row][col]
        mat[pivot_row] = [v / lead for v in mat[pivot_row]]
        for i in range(len(mat)):
            if i != pivot_row and mat[i][col] != 0:
                factor = mat[i][col]
                mat[i] = [a - factor * b for a, b in zip(mat[i], mat[pivot_row])]
        pivot_row += 1
        if pivot_row == len(mat):
            break
    return tuple(tuple(r) for r in mat[:pivot_row])


def _reduce(vec: Sequence[Fraction], basis: Sequence[Sequence[Fraction]]) -> list[Fraction]:
    vec = list(vec)
    for row in basis:
        col = next(i for i, v in enumerate(row) if v != 0)
        if vec[col] != 0:
            f = vec[col]
            vec = [a - f * b for a, b in zip(vec, row)]
    return vec


def _coords(R: MonomialQuotient, a: RingElement) -> list[Fraction]:
    terms = dict(a.value)
    return [Fraction(terms.get(m, 0)) for m in R.monomials()]


def _from_coords(R: MonomialQuotient, vec: Sequence[Fraction]) -> RingElement:
    return R.from_terms({m: c for m, c in zip(R.monomials(), vec) if c != 0})


# -- ideals ----------------------------------------------------------------------------


class IdealHandle:
    """An ideal of ``ring`` spanned by ``generators``, stored in a per-family normal form.

    ``form`` is one of ``("field", nonzero)``, ``("gcd", d)``, ``("val", k)``,
    ``("set", frozenset_of_payloads)`` or ``("span", rref_basis)``.
    """

    __slots__ = ("ring", "generators", "form", "_members")

    def __init__(self, ring: RingContext, generators: Sequence[RingElement], form: tuple):
        self.ring = ring
        self.generators = tuple(generators)
        self.form = form
        self._members = None

    def __eq__(self, other):
        return isinstance(other, IdealHandle) and self.ring == other.ring and self.form == other.form

    def __hash__(self):
        return hash((self.ring, self.form))

    def __contains__(self, x) -> bool:
        return self.mem(x)

    def mem(self, x) -> bool:
        x = self.ring(x)
        kind, data = self.form
        if kind == "field":
            return data or x.is_zero()
        if kind == "gcd":
            return x.value % data == 0
        if kind == "val":
            return self.ring.valuation(x) >= data
        if kind == "set":
            return x.value in data
        return not any(_reduce(_coords(self.ring, x), data))

    def __le__(self, other: IdealHandle) -> bool:
        _same_ring(self, other)
        return all(other.mem(g) for g in self.generators)

    def __ge__(self, other: IdealHandle) -> bool:
        return other <= self

    @property
    def is_finite(self) -> bool:
        return self.ring.is_finite or self.is_zero()

    def is_zero(self) -> bool:
        return all(g.is_zero() for g in self.generators)

    def is_unit_ideal(self) -> bool:
        return self.mem(self.ring.one)

    def elements(self) -> list[RingElement]:
        """All members, sorted by canonical order."""
        if self._members is None:
            kind, data = self.form
            R = self.ring
            if self.is_zero():
                members = [R.zero]
            elif kind == "gcd":
                members = [RingElement(R, r) for r in range(0, R.modulus, data)]
            elif kind == "val":
                step = R.p ** data
                members = [RingElement(R, r) for r in range(0, R.modulus, step)]
            elif kind == "set":
                members = [RingElement(R, v) for v in data]
            else:
                raise InfiniteRingError(f"ideal of infinite ring {R} is not enumerable")
            self._members = sorted(members, key=RingElement.sort_key)
        return list(self._members)

    def __iter__(self) -> Iterator[RingElement]:
        return iter(self.elements())

    def __len__(self) -> int:
        return len(self.elements())

    def sample(self, rng: random.Random) -> RingElement:
        if self.is_finite:
            return rng.choice(self.elements())
        kind, data = self.form
        if kind == "field":
            return self.ring.sample(rng)
        vec = [Fraction(0)] * len(data[0])
        for row in data:
            c = Fraction(rng.randint(-9, 9), rng.randint(1, 6))
            vec = [a + c * b for a, b in zip(vec, row)]
        return _from_coords(self.ring, vec)

    def __repr__(self):
        gens = ", ".join(str(g) for g in self.generators) or "0"
        return f"({gens}) in {self.ring}"

    __str__ = __repr__


def _same_ring(I: IdealHandle, J: IdealHandle) -> None:
    if I.ring != J.ring:
        raise RingError(f"ideals live in different rings: {I.ring} and {J.ring}")


def _additive_closure(R: RingContext, seeds: Sequence[RingElement]) -> frozenset:
    members = {R.zero.value}
    frontier = [R.zero]
    seeds = [s for s in seeds if not s.is_zero()]
    while frontier:
        nxt = []
        for a in frontier:
            for s in seeds:
                b = a + s
                if b.value not in members:
                    members.add(b.value)
                    nxt.append(b)
        frontier = nxt
    return frozenset(members)


def span(R: RingContext, gens: Sequence) -> IdealHandle:
    """The smallest ideal of ``R`` containing ``gens``."""
    gens = [R(g) for g in gens]
    if isinstance(R, Rationals):
        return IdealHandle(R, gens, ("field", any(not g.is_zero() for g in gens)))
    if isinstance(R, TruncatedPadic):
        k = min((R.valuation(g) for g in gens), default=R.N)
        return IdealHandle(R, gens, ("val", k))
    if isinstance(R, IntegersMod):
        d = R.modulus
        for g in gens:
            d = math.gcd(d, g.value)
        return IdealHandle(R, gens, ("gcd", d))
    if isinstance(R, MonomialQuotient):
        monos = [R.from_terms({m: 1}) for m in R.monomials()]
        products = [g * m for g in gens for m in monos]
        if R.is_finite:
            return IdealHandle(R, gens, ("set", _additive_closure(R, products)))
        width = len(R.monomials())
        return IdealHandle(R, gens, ("span", _rref((_coords(R, p) for p in products), width)))
    raise RingError(f"unsupported ring {R}")


def mem(I: IdealHandle, x) -> bool:
    return I.mem(x)


def zero_ideal(R: RingContext) -> IdealHandle:
    return span(R, [])


def unit_ideal(R: RingContext) -> IdealHandle:
    return span(R, [R.one])


def ideal_sum(I: IdealHandle, J: IdealHandle) -> IdealHandle:
    _same_ring(I, J)
    return span(I.ring, I.generators + J.generators)


def ideal_mul(I: IdealHandle, J: IdealHandle) -> IdealHandle:
    _same_ring(I, J)
    return span(I.ring, [a * b for a in I.generators for b in J.generators])


def _generating_subset(R: RingContext, members: Sequence[RingElement], target: IdealHandle | None = None):
    gens: list[RingElement] = []
    current = span(R, gens)
    for x in sorted(members, key=RingElement.sort_key):
        if not current.mem(x):
            gens.append(x)
            current = span(R, gens)
    return gens


def ideal_inf(I: IdealHandle, J: IdealHandle) -> IdealHandle:
    """Intersection of two ideals of the same ring."""
    _same_ring(I, J)
    R = I.ring
    kind, a = I.form
    _, b = J.form
    if kind == "field":
        return unit_ideal(R) if a and b else zero_ideal(R)
    if kind == "gcd":
        return span(R, [math.lcm(a, b)])
    if kind == "val":
        return span(R, [R.p ** max(a, b)])
    if kind == "set":
        common = [RingElement(R, v) for v in a & b]
        return span(R, _generating_subset(R, common))
    # Zassenhaus: the rows [u | u] and [w | 0] reduce to [0 | basis of U cap W]
    width = len(R.monomials())
    zero = [Fraction(0)] * width
    rows = [list(u) + list(u) for u in a] + [list(w) + zero for w in b]
    red = _rref(rows, 2 * width)
    inter = [r[width:] for r in red if not any(r[:width])]
    return span(R, [_from_coords(R, v) for v in inter])


def ideal_pow(I: IdealHandle, n: int) -> IdealHandle:
    if n < 0:
        raise ValueError("negative ideal power")
    out = unit_ideal(I.ring)
    for _ in range(n):
        out = ideal_mul(out, I)
    return out


def enumerate_ideals(R: RingContext, gen_cap: int = 2) -> list[IdealHandle]:
    """Distinct ideals spanned by at most ``gen_cap`` elements, smallest first."""
    if not R.is_finite:
        raise InfiniteRingError(f"infinite ring: {R}")
    elems = list(R.elements())
    seen: dict = {}
    for k in range(gen_cap + 1):
        for gens in itertools.combinations(elems, k):
            I = span(R, gens)
            if I.form not in seen:
                seen[I.form] = I
    return sorted(seen.values(), key=lambda I: (len(I), [x.sort_key() for x in I.elements()]))


def audit_ideal_list(ideals: Sequence[IdealHandle]) -> list[tuple[IdealHandle, IdealHandle]]:
    """Pairs whose sum or intersection falls outside ``ideals``; empty means closed."""
    known = set(ideals)
    return [
        (I, J)
        for I, J in itertools.combinations_with_replacement(ideals, 2)
        if ideal_sum(I, J) not in known or ideal_inf(I, J) not in known
    ]


# -- ring homomorphisms ----------------------------------------------------------------


class RingHomHandle:
    """A ring homomorphism between catalog rings.

    ``kind`` is one of ``identity``, ``mod_reduction``, ``precision_drop``,
    ``quotient_projection``, ``base_inclusion``, ``padic_lift`` or ``composite``.
    For finite sources the map is checked on all pairs when built.
    """

    def __init__(self, source: RingContext, target: RingContext, kind: str,
                 fn: Callable[[RingElement], RingElement], check: bool = True, **params):
        self.source = source
        self.target = target
        self.kind = kind
        self._fn = fn
        self.params = params
        self._inverse_table = None
        if check and source.is_finite:
            bad = self.failures()
            if bad:
                raise RingError(f"{kind} {source} -> {target} is not a ring hom at {bad[0]}")

    def __call__(self, x) -> RingElement:
        return self._fn(self.source(x))

    def __repr__(self):
        return f"RingHomHandle({self.kind}: {self.source} -> {self.target})"

    def failures(self) -> list:
        """Inputs on which the ring-hom laws fail (exhaustive over a finite source)."""
        S, f = self.source, self._fn
        bad = []
        if f(S.one) != self.target.one:
            bad.append(("one",))
        if not f(S.zero).is_zero():
            bad.append(("zero",))
        elems = list(S.elements())
        images = {a.value: f(a) for a in elems}
        for a, b in itertools.combinations_with_replacement(elems, 2):
            fa, fb = images[a.value], images[b.value]
            if images[(a + b).value] != fa + fb or images[(a * b).value] != fa * fb:
                bad.append((a, b))
        return bad

    def _table(self) -> dict:
        if self._inverse_table is None:
            if not self.source.is_finite:
                raise InfiniteRingError(f"source {self.source} is infinite")
            table: dict = {}
            for a in self.source.elements():
                table.setdefault(self(a), []).append(a)
            self._inverse_table = table
        return self._inverse_table

    def fiber(self, y: RingElement) -> list[RingElement]:
        """All preimages of ``y``, in canonical order."""
        return sorted(self._table().get(self.target(y), []), key=RingElement.sort_key)

    def preimage(self, y: RingElement) -> RingElement | None:
        """The unique preimage of ``y`` if there is exactly one, else ``None``."""
        if self.kind == "padic_lift":
            q = self.target(y).value
            v = padic_valuation(self.source.p, q)
            if v is not None and v < 0:
                return None
            return self.source(q)
        found = self.fiber(y)
        return found[0] if len(found) == 1 else None

    def is_surjective(self) -> bool:
        if not self.target.is_finite:
            return False
        return len(self._table()) == self.target.cardinality

    def is_injective(self) -> bool:
        if self.kind in ("identity", "base_inclusion", "padic_lift"):
            return True
        return all(len(v) == 1 for v in self._table().values())

    def kernel(self) -> IdealHandle:
        return span(self.source, self.fiber(self.target.zero))

    def image_ideal(self, I: IdealHandle) -> IdealHandle:
        """``span(f(I))`` in the target."""
        return span(self.target, [self(g) for g in I.generators])


def identity_hom(R: RingContext) -> RingHomHandle:
    return RingHomHandle(R, R, "identity", lambda x: x, check=False)


def mod_reduction(R: IntegersMod, m: int) -> RingHomHandle:
    if R.modulus % m:
        raise RingError(f"Z/{R.modulus} does not reduce onto Z/{m}")
    S = IntegersMod(m)
    return RingHomHandle(R, S, "mod_reduction", lambda x: S(x.value))


def precision_drop(R: TruncatedPadic, M: int) -> RingHomHandle:
    if not 1 <= M <= R.N:
        raise RingError(f"cannot drop precision {R.N} to {M}")
    S = TruncatedPadic(p=R.p, N=M)
    return RingHomHandle(R, S, "precision_drop", lambda x: S(x.value))


def base_inclusion(R: MonomialQuotient) -> RingHomHandle:
    """Constant embedding ``B -> B[x..]/(..)``."""
    B = R.base
    return RingHomHandle(B, R, "base_inclusion", lambda x: R(x.value), check=False)


def padic_lift(R: TruncatedPadic) -> RingHomHandle:
    """Canonical representative ``Z/p^N -> Q``; multiplicative and additive modulo ``p^N`` only.

    ``preimage`` reduces p-integral rationals back modulo ``p^N``.
    """
    Q = Rationals()
    return RingHomHandle(R, Q, "padic_lift", lambda x: Q(x.value), check=False, p=R.p, N=R.N)


def composite(f: RingHomHandle, g: RingHomHandle) -> RingHomHandle:
    """``g`` after ``f``."""
    if f.target != g.source:
        raise RingError("composite of non-composable homs")
    return RingHomHandle(f.source, g.target, "composite", lambda x: g(f(x)), check=False, parts=(f, g))


def natural_hom(R: RingContext, S: RingContext) -> RingHomHandle:
    """The canonical map between two catalog rings, when one exists."""
    if R == S:
        return identity_hom(R)
    if isinstance(R, TruncatedPadic) and isinstance(S, TruncatedPadic) and R.p == S.p:
        return precision_drop(R, S.N)
    if isinstance(R, TruncatedPadic) and isinstance(S, Rationals):
        return padic_lift(R)
    if isinstance(R, IntegersMod) and type(S) is IntegersMod:
        return mod_reduction(R, S.modulus)
    if isinstance(S, MonomialQuotient) and S.base == R:
        return base_inclusion(S)
    raise RingError(f"no canonical hom {R} -> {S}")


def _monomial_quotient_projection(R: MonomialQuotient, J: IdealHandle):
    new_caps = list(R.caps)
    for g in J.generators:
        if g.is_zero():
            continue
        terms = R.terms(g)
        if len(terms) != 1:
            raise UnsupportedQuotient(f"generator {g} is not a monomial")
        (exps, c), = terms.items()
        support = [i for i, k in enumerate(exps) if k]
        if len(support) != 1 or ring_inverse(c).is_zero():
            raise UnsupportedQuotient(f"generator {g} is not a unit times a variable power")
        i = support[0]
        new_caps[i] = min(new_caps[i], exps[i])
    keep = [i for i, e in enumerate(new_caps) if e > 1]
    if not keep:
        S = R.base

        def project(x):
            return R.constant_term(x)
    else:
        S = MonomialQuotient(R.base, tuple(R.names[i] for i in keep), tuple(new_caps[i] for i in keep))

        def project(x):
            return S.from_terms({tuple(e[i] for i in keep): c for e, c in x.value
                                 if all(e[i] == 0 for i in range(R.nvars) if i not in keep)})
    return S, project


def quotient_ring(R: RingContext, J: IdealHandle) -> tuple[RingContext, RingHomHandle]:
    """``R/J`` as a catalog ring together with the surjective projection."""
    if J.ring != R:
        raise RingError("ideal is not in this ring")
    if J.is_unit_ideal():
        raise UnsupportedQuotient("quotient by the unit ideal is the zero ring")
    if J.is_zero():
        return R, identity_hom(R)
    if isinstance(R, TruncatedPadic):
        f = precision_drop(R, J.form[1])
    elif isinstance(R, IntegersMod):
        f = mod_reduction(R, J.form[1])
    elif isinstance(R, MonomialQuotient):
        S, project = _monomial_quotient_projection(R, J)
        f = RingHomHandle(R, S, "quotient_projection", project, ideal=J)
    else:
        raise UnsupportedQuotient(f"no quotient of {R} by {J}")
    if R.is_finite:
        if f.kernel() != J:
            raise UnsupportedQuotient(f"projection kernel differs from {J}")
        sizes = {len(v) for v in f._table().values()}
        if len(sizes) != 1 or not f.is_surjective():
            raise UnsupportedQuotient("projection fibers are not uniform")
    return f.target, f
