"""Concrete divided power structures.

Every constructor checks its hypotheses and raises :class:`ConstructionRefused`
(with a report) when they fail.  The sum-of-ideals structure is built twice:
by the explicit sum formula (:func:`ideal_add_dp_v1`) and through the
exponential module (:func:`ideal_add_dp`), so the two can be compared.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .combinat import digit_sum, factorial, legendre_valuation
from .dpcore import (
    ConstructionRefused,
    DividedPowerStructure,
    DPMorphismWitness,
    DpowBoundError,
    Status,
    VerificationReport,
    _implication,
    _Tally,
    check_axioms,
    combine,
    is_dp_morphism,
    is_sub_dp_ideal,
)
from .exactring import (
    MonomialQuotient,
    Rationals,
    RingContext,
    TruncatedPadic,
    characteristic,
    is_prime,
    nilpotency_index,
    padic_valuation,
    ring_inverse,
)
from .expmod import dp_exp_linear, linear_on_sup
from .ideals import IdealHandle, RingHomHandle, identity_hom, ideal_inf, ideal_pow, ideal_sum, span, zero_ideal

__all__ = [
    "ValuationBoundViolated",
    "dp_trivial",
    "dp_of_invertible_factorial",
    "dp_square_zero",
    "dp_prime_nilpotent",
    "dp_char_p",
    "dp_rat_algebra",
    "dp_padic",
    "padic_valuation_check",
    "dp_induced_via_hom",
    "IdealAddInput",
    "ideal_add_dp_v1",
    "ideal_add_dp",
    "ideal_add_uniqueness",
    "ideal_add_report",
]


class ValuationBoundViolated(AssertionError):
    """A value that the theory guarantees turned out false; this is never expected."""


def _refusal(check: str, message: str, inputs: dict, expected, actual) -> ConstructionRefused:
    report = VerificationReport(check, Status.FAIL, failures=1, params={"n_bound": None, "seed": None},
                                witnesses=[{"relation": check, "inputs": inputs,
                                            "expected": str(expected), "actual": str(actual)}])
    return ConstructionRefused(message, report)


def dp_trivial(R: RingContext) -> DividedPowerStructure:
    """The zero ideal with ``dpow(0, 0) = 1`` and ``dpow(n, 0) = 0`` otherwise."""
    return DividedPowerStructure(zero_ideal(R), "trivial", lambda n, x: R.one if n == 0 else R.zero)


def dp_of_invertible_factorial(I: IdealHandle, n: int, rule: str = "inverse_factorial",
                               **meta) -> DividedPowerStructure:
    """``dpow(m, x) = (m!)^-1 x^m`` when ``(n-1)!`` is a unit and ``I^n = 0``.

    ``ring_inverse`` returns 0 on non-units, which is harmless here: for
    ``m >= n`` the power ``x^m`` already vanishes.
    """
    R = I.ring
    if n < 1:
        raise ValueError("n must be positive")
    f = R(factorial(n - 1))
    if ring_inverse(f) * f != R.one:
        raise _refusal("factorial_unit", f"({n}-1)! is not a unit in {R}",
                       {"n": n}, "unit", f)
    power = ideal_pow(I, n)
    if not power.is_zero():
        raise _refusal("ideal_power_zero", f"I^{n} is not zero in {R}",
                       {"n": n, "I": [str(g) for g in I.generators]}, "(0)", power)
    inverses = {}

    def fn(m, x):
        if m not in inverses:
            inverses[m] = ring_inverse(R(factorial(m)))
        return inverses[m] * x ** m

    return DividedPowerStructure(I, rule, fn, nilpotence=n, **meta)


def dp_square_zero(I: IdealHandle) -> DividedPowerStructure:
    return dp_of_invertible_factorial(I, 2, specialization="square_zero")


def dp_prime_nilpotent(I: IdealHandle, p: int) -> DividedPowerStructure:
    """A prime ``p`` nilpotent in the ring with ``I^p = 0``; then ``(p-1)!`` is a unit."""
    R = I.ring
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if nilpotency_index(R(p)) is None:
        raise _refusal("prime_nilpotent", f"{p} is not nilpotent in {R}", {"p": p}, "nilpotent", R(p))
    return dp_of_invertible_factorial(I, p, specialization="prime_nilpotent", p=p)


def dp_char_p(I: IdealHandle) -> DividedPowerStructure:
    """Characteristic a prime ``p`` and ``I^p = 0``."""
    p = characteristic(I.ring)
    if not is_prime(p):
        raise _refusal("char_p", f"characteristic {p} of {I.ring} is not prime", {}, "prime", p)
    return dp_of_invertible_factorial(I, p, specialization="char_p", p=p)


def _is_q_algebra(R: RingContext) -> bool:
    return isinstance(R, Rationals) or (isinstance(R, MonomialQuotient) and isinstance(R.base, Rationals))


def dp_rat_algebra(I: IdealHandle) -> DividedPowerStructure:
    """``dpow(n, x) = x^n / n!`` on any ideal of a Q-algebra."""
    R = I.ring
    if not _is_q_algebra(R):
        raise ValueError(f"{R} is not a Q-algebra")
    return DividedPowerStructure(I, "rat_algebra", lambda n, x: x ** n * R(Fraction(1, factorial(n))))


def dp_padic(p: int, N: int) -> DividedPowerStructure:
    """Divided powers on ``(p)`` in ``Z_p`` kept modulo ``p^N``.

    ``x^n / n!`` is formed in Q from the canonical representative, its valuation
    is checked to be at least 1, then it is reduced. The result does not depend
    on the representative: shifting ``x`` by ``p^N t`` changes the value by
    terms of valuation ``>= N``.
    """
    if N < 2:
        raise ValueError("dp_padic needs precision N >= 2")
    R = TruncatedPadic(p=p, N=N)
    I = span(R, [R(p)])

    def fn(n, x):
        if n == 0:
            return R.one
        q = Fraction(x.value) ** n / factorial(n)
        v = padic_valuation(p, q)
        if v is not None and v < 1:
            raise ValuationBoundViolated(f"v_{p}({x}^{n}/{n}!) = {v} < 1")
        return R(q)

    return DividedPowerStructure(I, "padic", fn, p=p, N=N)


def padic_valuation_check(p: int, N: int = 4, n_bound: int = 8) -> VerificationReport:
    """``v_p(x^n / n!) >= 1`` for nonzero ``x`` in ``(p)`` below ``p^N``, ``1 <= n <= n_bound``.

    Two routes: the digit-sum formula ``n v_p(x) - (n - s_p(n))/(p - 1)`` and the
    valuation of the exact rational ``x^n / n!``. They must agree and be ``>= 1``.
    """
    base = {"n_bound": n_bound, "seed": None}
    agree = _Tally("routes_agree", "padic_routes", {"mode": "exhaustive"}, base)
    bound = _Tally("valuation_at_least_one", "padic_bound", {"mode": "exhaustive"}, base)
    for x in range(p, p ** N, p):
        vx = padic_valuation(p, x)
        for n in range(1, n_bound + 1):
            by_formula = n * vx - (n - digit_sum(n, p)) // (p - 1)
            direct = padic_valuation(p, Fraction(x) ** n / factorial(n))
            agree.record({"x": x, "n": n}, (by_formula == direct, by_formula, direct))
            bound.record({"x": x, "n": n}, (direct >= 1, ">= 1", direct))
    legendre = _Tally("legendre", "legendre", {"mode": "exhaustive"}, base)
    for n in range(n_bound + 1):
        legendre.record({"n": n}, (legendre_valuation(n, p) == padic_valuation(p, factorial(n)),
                                   padic_valuation(p, factorial(n)), legendre_valuation(n, p)))
    return combine("padic_valuation", [agree.report(), bound.report(), legendre.report()],
                   n_bound=n_bound, seed=None, p=p, N=N)


def dp_induced_via_hom(f: RingHomHandle, target_dp: DividedPowerStructure, I: IdealHandle,
                       n_bound: int = 6) -> DividedPowerStructure:
    """Pull ``target_dp`` back along an injective ``f``: ``dpow(n, x) = f^-1(delta_n(f x))``.

    Requires ``span(f(I))`` to equal the target ideal and each ``delta_n(f x)``
    to have a preimage in ``I``; both are checked up to ``n_bound``.
    """
    if f.target != target_dp.ring or I.ring != f.source:
        raise ValueError("f, I and the target structure do not fit together")
    if not f.is_injective():
        raise ValueError("dp_induced_via_hom needs an injective hom")
    image = f.image_ideal(I)
    if image != target_dp.ideal:
        raise _refusal("span_image", "span(f(I)) differs from the target ideal",
                       {"I": [str(g) for g in I.generators]}, target_dp.ideal, image)

    def fn(n, x):
        if n == 0:
            return I.ring.one
        y = target_dp.dpow(n, f(x))
        pre = f.preimage(y)
        if pre is None or not I.mem(pre):
            raise _refusal("preimage", f"delta_{n}(f({x})) = {y} has no preimage in I",
                           {"n": n, "x": str(x)}, "preimage in I", y)
        return pre

    dp = DividedPowerStructure(I, "induced", fn, n_max=target_dp.n_max, hom=f, target=target_dp)
    if I.is_finite:
        for x in I.elements():
            for n in range(n_bound + 1):
                if dp.within_range(n):
                    dp.dpow(n, x)
    return dp


# -- sums of ideals ------------------------------------------------------------------


@dataclass
class IdealAddInput:
    """Two structures on ideals ``I`` and ``J`` of one ring that agree on ``I cap J``."""

    left: DividedPowerStructure
    right: DividedPowerStructure
    compat_bound: int = 6

    def __post_init__(self):
        if self.left.ring != self.right.ring:
            raise ValueError("structures live in different rings")
        inter = ideal_inf(self.left.ideal, self.right.ideal)
        if not inter.is_finite:
            raise ValueError("the agreement check needs a finite intersection")
        t = _Tally("agree_on_inter", "agree_on_inter", {"mode": "exhaustive"},
                   {"n_bound": self.compat_bound, "seed": None})
        for a in inter.elements():
            for n in range(self.compat_bound + 1):
                l, r = self.left.dpow(n, a), self.right.dpow(n, a)
                t.record({"n": n, "x": a}, (l == r, l, r))
        self.report = t.report()
        if not self.report.passed:
            raise ConstructionRefused("the structures disagree on the intersection", self.report)

    @property
    def ring(self):
        return self.left.ring

    @property
    def ideal(self) -> IdealHandle:
        return ideal_sum(self.left.ideal, self.right.ideal)


def _decompositions(inp: IdealAddInput) -> dict:
    out: dict = {}
    for x in inp.left.ideal.elements():
        for y in inp.right.ideal.elements():
            out.setdefault((x + y).value, []).append((x, y))
    return out


def _sum_formula(inp: IdealAddInput, n, x, y):
    total = inp.ring.zero
    for k in range(n + 1):
        total = total + inp.left.dpow(k, x) * inp.right.dpow(n - k, y)
    return total


def ideal_add_dp_v1(inp: IdealAddInput) -> DividedPowerStructure:
    """``gamma_n(x + y) = sum_k gamma_k(x) delta_{n-k}(y)`` on ``I + J``.

    All decompositions of every element are evaluated up to ``compat_bound``;
    any disagreement is a hard error naming both decompositions.
    """
    if not inp.ring.is_finite:
        raise ValueError("ideal_add_dp_v1 needs a finite ring")
    decomps = _decompositions(inp)
    t = _Tally("decomposition_independent", "decomposition", {"mode": "exhaustive"},
               {"n_bound": inp.compat_bound, "seed": None})
    for pairs in decomps.values():
        x0, y0 = pairs[0]
        for x, y in pairs[1:]:
            for n in range(inp.compat_bound + 1):
                a, b = _sum_formula(inp, n, x0, y0), _sum_formula(inp, n, x, y)
                t.record({"n": n, "x": x0, "y": y0, "x2": x, "y2": y}, (a == b, a, b))
    audit = t.report()
    if not audit.passed:
        w = audit.witnesses[0]["inputs"]
        raise ConstructionRefused(
            f"sum formula depends on the decomposition: ({w['x']}, {w['y']}) vs ({w['x2']}, {w['y2']})", audit)

    def fn(n, z):
        x, y = decomps[z.value][0]
        return _sum_formula(inp, n, x, y)

    n_max = None
    if inp.left.n_max is not None or inp.right.n_max is not None:
        n_max = min(m for m in (inp.left.n_max, inp.right.n_max) if m is not None)
    return DividedPowerStructure(inp.ideal, "ideal_add_v1", fn, n_max=n_max, audit=audit, input=inp)


def ideal_add_dp(inp: IdealAddInput) -> DividedPowerStructure:
    """``gamma_n(z)`` is the ``n``-th coefficient of ``exp_{I+J}(z)``.

    ``exp_{I+J}`` glues ``a -> exp_I(a)`` and ``b -> exp_J(b)`` with
    :func:`linear_on_sup`. Series are kept up to ``compat_bound``, which is
    therefore the largest ``n`` this structure answers.
    """
    D = inp.compat_bound
    h = linear_on_sup(dp_exp_linear(inp.left, D), dp_exp_linear(inp.right, D))

    def fn(n, z):
        return h(z).coeff(n)

    return DividedPowerStructure(inp.ideal, "ideal_add", fn, n_max=D, exp_map=h, input=inp)


def ideal_add_uniqueness(inp: IdealAddInput, candidate: DividedPowerStructure,
                         n_bound: int = 6, reference: DividedPowerStructure | None = None) -> VerificationReport:
    """If ``candidate`` restricts to the given structures on I and J, it equals ``reference``.

    ``reference`` defaults to :func:`ideal_add_dp`.
    """
    if reference is None:
        reference = ideal_add_dp(inp)
    if candidate.ideal != reference.ideal:
        raise ValueError("candidate must live on I + J")
    base = {"n_bound": n_bound, "seed": None}
    hyp = _Tally("restricts", "restricts", {"mode": "exhaustive"}, base)
    for side in (inp.left, inp.right):
        for x in side.ideal.elements():
            for n in range(n_bound + 1):
                if candidate.within_range(n) and side.within_range(n):
                    hyp.record({"n": n, "x": x}, (candidate.dpow(n, x) == side.dpow(n, x),
                                                  side.dpow(n, x), candidate.dpow(n, x)))
    concl = _Tally("agrees", "structures_agree", {"mode": "exhaustive"}, base)
    for z in reference.ideal.elements():
        for n in range(n_bound + 1):
            if candidate.within_range(n) and reference.within_range(n):
                concl.record({"n": n, "x": z}, (reference.dpow(n, z) == candidate.dpow(n, z),
                                                reference.dpow(n, z), candidate.dpow(n, z)))
    return _implication("ideal_add_uniqueness", hyp.report(), concl.report(), n_bound=n_bound, seed=None)


def ideal_add_report(inp: IdealAddInput, n_bound: int = 6) -> VerificationReport:
    """Both routes, their pointwise agreement, axioms, inclusions and uniqueness."""
    v1, v2 = ideal_add_dp_v1(inp), ideal_add_dp(inp)
    base = {"n_bound": n_bound, "seed": None}
    t = _Tally("pointwise_equal", "structures_agree", {"mode": "exhaustive"}, base)
    for z in v2.ideal.elements():
        for n in range(n_bound + 1):
            if v1.within_range(n) and v2.within_range(n):
                t.record({"n": n, "x": z}, (v1.dpow(n, z) == v2.dpow(n, z), v1.dpow(n, z), v2.dpow(n, z)))
    subs = [t.report()]
    for label, dp in (("axioms_v1", v1), ("axioms_v2", v2)):
        r = check_axioms(dp, n_bound)
        r.check = label
        subs.append(r)
    ident = identity_hom(inp.ring)
    for label, side in (("left_inclusion", inp.left), ("right_inclusion", inp.right)):
        r = is_dp_morphism(DPMorphismWitness(ident, side, v2), n_bound)
        r.check = label
        subs.append(r)
        s = is_sub_dp_ideal(v2, side.ideal, n_bound)
        s.check = label + "_sub_dp"
        subs.append(s)
    # each route as candidate against the other as reference
    for label, cand, ref in (("uniqueness_v1", v1, v2), ("uniqueness_v2", v2, v1)):
        r = ideal_add_uniqueness(inp, cand, n_bound, reference=ref)
        r.check = label
        subs.append(r)
    return combine("ideal_add_equiv", subs, n_bound=n_bound, seed=None)
