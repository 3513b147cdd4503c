"""Power series of exponential type and the exponential module.

A univariate series ``f`` with ``f(0) = 1`` is exponential when
``f(X0 + X1) = f(X0) f(X1)``. These series form a module: the sum is the
product of series, the scalar action is rescaling ``f(aX)`` and the inverse is
``f(-X)``. A divided power ideal gives a linear map ``a -> sum gamma_n(a) X^n``
into this module, and :func:`linear_on_sup` glues two such maps along ``I + J``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .combinat import choose
from .dpcore import DividedPowerStructure, Status, VerificationReport, _Tally, combine
from .exactring import RingContext, RingElement
from .ideals import IdealHandle, ideal_inf, ideal_sum
from .mvps import TruncatedSeries, constant, rescale, subst, variable

__all__ = [
    "ExpCertificate",
    "ExponentialElement",
    "NotExponential",
    "is_exponential",
    "exponential",
    "exp_one",
    "exp_add",
    "exp_neg",
    "exp_smul",
    "exp_series",
    "dp_exp",
    "CheckedLinearMap",
    "LinearMapRefused",
    "dp_exp_linear",
    "linear_on_sup",
]


class NotExponential(ValueError):
    def __init__(self, message: str, certificate: "ExpCertificate"):
        super().__init__(message)
        self.certificate = certificate


@dataclass
class ExpCertificate:
    ok: bool
    cap: int
    route: str
    witness: tuple | None = None
    detail: str = ""

    def __bool__(self):
        return self.ok


def _binomial_route(f: TruncatedSeries) -> ExpCertificate:
    D = f.cap
    a = [f.coeff(n) for n in range(D + 1)]
    for t in range(2, D + 1):
        for i in range(1, t):
            j = t - i
            lhs = choose(t, i) * a[t]
            rhs = a[i] * a[j]
            if lhs != rhs:
                return ExpCertificate(False, D, "binomial", (i, j),
                                      f"C({t},{i})*a_{t} = {lhs} but a_{i}*a_{j} = {rhs}")
    return ExpCertificate(True, D, "binomial")


def _substitution_route(f: TruncatedSeries) -> ExpCertificate:
    D, R = f.cap, f.ring
    names = ("X0", "X1")
    x0, x1 = variable(R, names, D, "X0"), variable(R, names, D, "X1")
    lhs = subst(f, {f.names[0]: x0 + x1}, polynomial=True)
    rhs = subst(f, {f.names[0]: x0}, polynomial=True) * subst(f, {f.names[0]: x1}, polynomial=True)
    for t in range(D + 1):
        for i in range(t + 1):
            e = (i, t - i)
            if lhs.coeff(e) != rhs.coeff(e):
                return ExpCertificate(False, D, "substitution", e,
                                      f"coefficient of X0^{i} X1^{t - i}: {lhs.coeff(e)} vs {rhs.coeff(e)}")
    return ExpCertificate(True, D, "substitution")


def is_exponential(f: TruncatedSeries, route: str = "binomial") -> ExpCertificate:
    """Check ``f(X0 + X1) = f(X0) f(X1)`` up to the cap of ``f``.

    ``route="binomial"`` compares ``C(i+j, i) a_{i+j}`` with ``a_i a_j``;
    ``route="substitution"`` performs the two-variable substitution. A refusal
    carries the first failing ``(i, j)`` ordered by ``i + j`` then ``i``.
    """
    if f.nvars != 1:
        raise ValueError("exponential series are univariate")
    if f.constant_coeff() != f.ring.one:
        return ExpCertificate(False, f.cap, route, (0, 0), "constant coefficient is not 1")
    if route == "binomial":
        return _binomial_route(f)
    if route == "substitution":
        return _substitution_route(f)
    raise ValueError(f"unknown route {route!r}")


class ExponentialElement:
    """A certified element of the exponential module; ``+`` is the series product."""

    __slots__ = ("series", "certificate")

    def __init__(self, series: TruncatedSeries, certificate: ExpCertificate):
        self.series = series
        self.certificate = certificate

    @property
    def ring(self) -> RingContext:
        return self.series.ring

    @property
    def cap(self) -> int:
        return self.series.cap

    def coeff(self, n: int) -> RingElement:
        return self.series.coeff(n)

    def __add__(self, other):
        return exp_add(self, other)

    def __neg__(self):
        return exp_neg(self)

    def __sub__(self, other):
        return exp_add(self, exp_neg(other))

    def __rmul__(self, a):
        return exp_smul(a, self)

    def __eq__(self, other):
        if not isinstance(other, ExponentialElement):
            return NotImplemented
        return self.series == other.series

    def __hash__(self):
        return hash(self.series)

    def __repr__(self):
        return f"ExponentialElement({self.series})"


def exponential(f: TruncatedSeries) -> ExponentialElement:
    cert = is_exponential(f)
    if not cert:
        raise NotExponential(f"{f} is not exponential: {cert.detail}", cert)
    return ExponentialElement(f, cert)


def exp_one(R: RingContext, cap: int, name: str = "X") -> ExponentialElement:
    return exponential(constant(R, (name,), cap, 1))


def _recertify(f: TruncatedSeries, op: str) -> ExponentialElement:
    cert = is_exponential(f)
    if not cert:
        raise AssertionError(f"{op} left the exponential module at {cert.witness}: {cert.detail}")
    return ExponentialElement(f, cert)


def exp_add(f: ExponentialElement, g: ExponentialElement) -> ExponentialElement:
    return _recertify(f.series * g.series, "exp_add")


def exp_neg(f: ExponentialElement) -> ExponentialElement:
    return _recertify(rescale(-1, f.series), "exp_neg")


def exp_smul(a, f: ExponentialElement) -> ExponentialElement:
    return _recertify(rescale(a, f.series), "exp_smul")


def exp_series(R: RingContext, cap: int, name: str = "X") -> TruncatedSeries:
    """``sum X^n / n!`` over a ring where every ``n!`` up to the cap is invertible."""
    from fractions import Fraction
    from math import factorial

    return TruncatedSeries(R, (name,), cap, {(n,): R(Fraction(1, factorial(n))) for n in range(cap + 1)})


def dp_exp(dp: DividedPowerStructure, a, cap: int, name: str = "X") -> ExponentialElement:
    """``sum_n gamma_n(a) X^n`` up to ``cap``; only for ``a`` in the ideal."""
    a = dp.ring(a)
    if not dp.ideal.mem(a):
        raise ValueError(f"{a} is not in {dp.ideal}")
    f = TruncatedSeries(dp.ring, (name,), cap, {(n,): dp.dpow(n, a) for n in range(cap + 1)})
    cert = is_exponential(f)
    if not cert:
        raise NotExponential(f"dp_exp({a}) is not exponential at {cert.witness}", cert)
    return ExponentialElement(f, cert)


# -- linear maps into the exponential module ------------------------------------------


class LinearMapRefused(ValueError):
    def __init__(self, message: str, report: VerificationReport | None = None):
        super().__init__(message)
        self.report = report


@dataclass
class CheckedLinearMap:
    """A map from an ideal (as a module) into a module given by ``add``/``smul``/``zero``.

    ``report`` records the additivity and scalar checks done at construction.
    """

    domain: IdealHandle
    fn: Callable
    add: Callable
    smul: Callable
    zero: object
    report: VerificationReport | None = None
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        x = self.domain.ring(x)
        if not self.domain.mem(x):
            raise ValueError(f"{x} is outside the domain {self.domain}")
        return self.fn(x)


def _linearity_report(check: str, h: CheckedLinearMap, elems, scalars) -> VerificationReport:
    base = {"n_bound": None, "seed": None}
    t_add = _Tally("additive", "linear_add", {"mode": "exhaustive"}, base)
    t_smul = _Tally("scalar", "linear_smul", {"mode": "exhaustive"}, base)
    for x, y in itertools.product(elems, repeat=2):
        expected = h.add(h.fn(x), h.fn(y))
        actual = h.fn(x + y)
        t_add.record({"x": x, "y": y}, (expected == actual, _show(expected), _show(actual)))
    for c in scalars:
        for x in elems:
            expected = h.smul(c, h.fn(x))
            actual = h.fn(c * x)
            t_smul.record({"a": c, "x": x}, (expected == actual, _show(expected), _show(actual)))
    return combine(check, [t_add.report(), t_smul.report()], n_bound=None, seed=None)


def _show(v):
    return v.series if isinstance(v, ExponentialElement) else v


def dp_exp_linear(dp: DividedPowerStructure, cap: int) -> CheckedLinearMap:
    """``a -> dp_exp(a)`` with additivity and scalar compatibility checked on finite ideals."""
    R = dp.ring
    cache: dict = {}

    def fn(a):
        if a.value not in cache:
            cache[a.value] = dp_exp(dp, a, cap)
        return cache[a.value]

    h = CheckedLinearMap(dp.ideal, fn, exp_add, exp_smul, exp_one(R, cap),
                         meta={"structure": dp, "cap": cap})
    if dp.ideal.is_finite and R.is_finite:
        h.report = _linearity_report("dp_exp_linear", h, dp.ideal.elements(), list(R.elements()))
        if not h.report.passed:
            raise LinearMapRefused("dp_exp is not linear on this structure", h.report)
    return h


def linear_on_sup(f: CheckedLinearMap, g: CheckedLinearMap, check: bool = True) -> CheckedLinearMap:
    """The map ``M + N -> B`` with ``h(x + y) = f(x) + g(y)``.

    Requires ``f = g`` on ``M cap N``. On finite domains every decomposition of
    every element is evaluated, so independence of the decomposition is audited
    rather than assumed.
    """
    M, N = f.domain, g.domain
    if M.ring != N.ring:
        raise ValueError("domains live in different rings")
    R = M.ring
    K = ideal_sum(M, N)
    finite = M.is_finite and N.is_finite
    if not finite:
        raise ValueError("linear_on_sup is realized on finite domains only")

    base = {"n_bound": None, "seed": None}
    agree = _Tally("agree_on_inter", "agree_on_inter", {"mode": "exhaustive"}, base)
    for z in ideal_inf(M, N).elements():
        fz, gz = f(z), g(z)
        agree.record({"x": z}, (fz == gz, _show(fz), _show(gz)))
    agree_report = agree.report()
    if not agree_report.passed:
        raise LinearMapRefused("the two maps disagree on the intersection", agree_report)

    table: dict = {}
    decompositions: dict = {}
    welldef = _Tally("decomposition_independent", "decomposition", {"mode": "exhaustive"}, base)
    for x in M.elements():
        for y in N.elements():
            z = x + y
            value = f.add(f(x), g(y))
            if z.value in table:
                x0, y0 = decompositions[z.value]
                welldef.record({"x": x0, "y": y0, "x2": x, "y2": y},
                               (table[z.value] == value, _show(table[z.value]), _show(value)))
            else:
                table[z.value] = value
                decompositions[z.value] = (x, y)
    welldef_report = welldef.report()
    if not welldef_report.passed:
        raise LinearMapRefused("h(x + y) depends on the decomposition", welldef_report)

    h = CheckedLinearMap(K, lambda z: table[z.value], f.add, f.smul, f.zero,
                         meta={"left": f, "right": g, "decompositions": decompositions})
    subs = [agree_report, welldef_report]
    if check:
        ext = _Tally("extends", "extends", {"mode": "exhaustive"}, base)
        for x in M.elements():
            ext.record({"x": x}, (h(x) == f(x), _show(f(x)), _show(h(x))))
        for y in N.elements():
            ext.record({"x": y}, (h(y) == g(y), _show(g(y)), _show(h(y))))
        subs.append(ext.report())
        subs.append(_linearity_report("linear", h, K.elements(), list(R.elements())))
    h.report = combine("linear_on_sup", subs, n_bound=None, seed=None)
    if not h.report.passed:
        raise LinearMapRefused("glued map fails its audit", h.report)
    return h
