"""Truncated multivariate power series with exact coefficients.

A :class:`TruncatedSeries` keeps every coefficient of total degree ``<= cap``
and nothing above it, so all identities here hold modulo higher-degree terms.
Evaluation and substitution are partial: they need a nilpotency certificate
(:func:`has_eval`, :func:`has_subst`). The totalized variant that returns zero
instead of refusing is kept apart as :func:`eval_total`.
"""

from __future__ import annotations

import itertools
import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .exactring import RingContext, RingElement, RingError, nilpotency_index
from .ideals import RingHomHandle, identity_hom, natural_hom

__all__ = [
    "TruncatedSeries",
    "OutOfWindowError",
    "EvaluationRefused",
    "SubstitutionRefused",
    "RecapWarning",
    "Certificate",
    "series",
    "monomial",
    "variable",
    "constant",
    "parse_series",
    "finite_sum_identity",
    "pow_tendsto_zero",
    "has_eval",
    "has_subst",
    "eval",
    "eval_total",
    "subst",
    "rescale",
    "exponents_up_to",
]


class OutOfWindowError(IndexError):
    """A coefficient beyond the truncation cap was requested."""


class EvaluationRefused(ValueError):
    pass


class SubstitutionRefused(ValueError):
    pass


class RecapWarning(UserWarning):
    """A substitution result has a lower cap than requested."""


def exponents_up_to(nvars: int, cap: int):
    """All exponent vectors of length ``nvars`` and total degree ``<= cap``, by degree then lex."""
    for d in range(cap + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            exps = [0] * nvars
            for i in combo:
                exps[i] += 1
            yield tuple(exps)


def _exponent_order(e):
    return (sum(e), tuple(-k for k in e))


class TruncatedSeries:
    """A power series over ``ring`` in the variables ``names``, kept up to total degree ``cap``."""

    __slots__ = ("ring", "names", "cap", "_coeffs")

    def __init__(self, ring: RingContext, names: Sequence[str], cap: int, coeffs: Mapping | None = None):
        if cap < 0:
            raise ValueError("cap must be non-negative")
        self.ring = ring
        self.names = tuple(names)
        self.cap = cap
        clean = {}
        for e, c in (coeffs or {}).items():
            e = tuple(e)
            if len(e) != len(self.names) or any(k < 0 for k in e):
                raise ValueError(f"bad exponent vector {e}")
            if sum(e) > cap:
                continue
            c = ring(c)
            if not c.is_zero():
                clean[e] = c
        self._coeffs = clean

    # -- basic access ----------------------------------------------------------------

    @property
    def nvars(self) -> int:
        return len(self.names)

    def coeff(self, m) -> RingElement:
        if isinstance(m, int):
            m = (m,)
        m = tuple(m)
        if len(m) != self.nvars:
            raise ValueError("exponent vector has the wrong length")
        if sum(m) > self.cap:
            raise OutOfWindowError(f"coefficient {m} lies beyond cap {self.cap}")
        return self._coeffs.get(m, self.ring.zero)

    def terms(self) -> list[tuple[tuple, RingElement]]:
        """Stored ``(exponents, coefficient)`` pairs in deterministic order."""
        return sorted(self._coeffs.items(), key=lambda t: _exponent_order(t[0]))

    def constant_coeff(self) -> RingElement:
        return self._coeffs.get((0,) * self.nvars, self.ring.zero)

    def degree(self) -> int:
        """Largest total degree with a nonzero coefficient, ``-1`` for zero."""
        return max((sum(e) for e in self._coeffs), default=-1)

    def is_zero(self) -> bool:
        return not self._coeffs

    def _like(self, coeffs, cap=None) -> TruncatedSeries:
        return TruncatedSeries(self.ring, self.names, self.cap if cap is None else cap, coeffs)

    def truncate(self, cap: int) -> TruncatedSeries:
        return self._like(self._coeffs, min(cap, self.cap))

    # -- arithmetic ------------------------------------------------------------------

    def _check(self, other) -> TruncatedSeries:
        if not isinstance(other, TruncatedSeries):
            return constant(self.ring, self.names, self.cap, other)
        if other.ring != self.ring or other.names != self.names:
            raise RingError("series live in different rings")
        return other

    def __add__(self, other):
        other = self._check(other)
        acc = dict(self._coeffs)
        for e, c in other._coeffs.items():
            acc[e] = acc[e] + c if e in acc else c
        return self._like(acc, min(self.cap, other.cap))

    __radd__ = __add__

    def __neg__(self):
        return self._like({e: -c for e, c in self._coeffs.items()})

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, RingElement)) and not isinstance(other, bool):
            a = self.ring(other)
            return self._like({e: a * c for e, c in self._coeffs.items()})
        other = self._check(other)
        cap = min(self.cap, other.cap)
        acc: dict = {}
        for ea, ca in self._coeffs.items():
            da = sum(ea)
            for eb, cb in other._coeffs.items():
                if da + sum(eb) > cap:
                    continue
                e = tuple(x + y for x, y in zip(ea, eb))
                acc[e] = acc[e] + ca * cb if e in acc else ca * cb
        return self._like(acc, cap)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = constant(self.ring, self.names, self.cap, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (self.ring == other.ring and self.names == other.names and self.cap == other.cap
                and self._coeffs == other._coeffs)

    def __hash__(self):
        return hash((self.ring, self.names, self.cap, frozenset(self._coeffs.items())))

    def agrees_with(self, other: TruncatedSeries, cap: int | None = None) -> bool:
        """Equality of all coefficients up to ``cap`` (default: the smaller cap)."""
        if cap is None:
            cap = min(self.cap, other.cap)
        return self.truncate(cap)._coeffs == other.truncate(cap)._coeffs

    # -- display ---------------------------------------------------------------------

    def __str__(self):
        if not self._coeffs:
            return "0"
        out = ""
        for e, c in self.terms():
            mono = "*".join(n if k == 1 else f"{n}^{k}" for n, k in zip(self.names, e) if k)
            cs = str(c)
            if mono and ("+" in cs or "-" in cs[1:]):
                cs = f"({cs})"
            sign = "+"
            if cs.startswith("-"):
                sign, cs = "-", cs[1:]
            body = cs if not mono else (mono if cs == "1" else f"{cs}*{mono}")
            if not out:
                out = body if sign == "+" else f"-{body}"
            else:
                out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"TruncatedSeries({self}; {self.ring}, {','.join(self.names)}, cap={self.cap})"

    def to_terms(self) -> list[list[str]]:
        """Config/term-list form ``[["(1,0)", "2"], ...]``."""
        return [[f"({','.join(map(str, e))})", str(c)] for e, c in self.terms()]


def series(ring: RingContext, names: Sequence[str], cap: int, coeffs: Mapping | None = None) -> TruncatedSeries:
    return TruncatedSeries(ring, names, cap, coeffs)


def constant(ring: RingContext, names: Sequence[str], cap: int, c) -> TruncatedSeries:
    return TruncatedSeries(ring, names, cap, {(0,) * len(names): c})


def monomial(ring: RingContext, names: Sequence[str], cap: int, exps, c=1) -> TruncatedSeries:
    return TruncatedSeries(ring, names, cap, {tuple(exps): c})


def variable(ring: RingContext, names: Sequence[str], cap: int, name: str) -> TruncatedSeries:
    i = list(names).index(name)
    return monomial(ring, names, cap, tuple(int(j == i) for j in range(len(names))))


_TERM_RE = re.compile(r"[+-][^+-]+")


def parse_series(text, ring: RingContext, cap: int, names: Sequence[str] = ("X",)) -> TruncatedSeries:
    """Parse ``1 + 2X + X^3`` style shorthand, or a term list ``[["(1,0)", "2"], ...]``.

    Terms are a coefficient followed by variable powers, with optional ``*``;
    a parenthesised coefficient like ``(1+x)*X`` is allowed for monomial
    quotient coefficient rings.
    """
    names = tuple(names)
    if not isinstance(text, str):
        coeffs: dict = {}
        for exps_text, c in text:
            exps = tuple(int(k) for k in str(exps_text).strip("() ").split(",") if k.strip())
            coeffs[exps] = coeffs.get(exps, ring.zero) + ring(str(c))
        return TruncatedSeries(ring, names, cap, coeffs)

    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty series literal")
    # protect parenthesised coefficients from the top-level split
    groups: list[str] = []

    def stash(m):
        groups.append(m.group(1))
        return f"#{len(groups) - 1}#"

    s = re.sub(r"\(([^()]*)\)", stash, s)
    if s[0] not in "+-":
        s = "+" + s
    pieces = _TERM_RE.findall(s)
    if "".join(pieces) != s:
        raise ValueError(f"bad series literal {text!r}")
    var_re = "|".join(re.escape(n) for n in sorted(names, key=len, reverse=True))
    factor_re = re.compile(rf"({var_re})(?:\^(\d+))?")
    acc: dict = {}
    for piece in pieces:
        sign, body = piece[0], piece[1:]
        exps = [0] * len(names)
        coeff_text = ""
        pos = 0
        m_coef = re.match(r"(#\d+#|\d+(?:/\d+)?)\*?", body)
        if m_coef:
            coeff_text = m_coef.group(1)
            pos = m_coef.end()
        rest = body[pos:]
        while rest:
            m = factor_re.match(rest)
            if not m:
                raise ValueError(f"bad term {piece!r} in {text!r}")
            exps[names.index(m.group(1))] += int(m.group(2) or 1)
            rest = rest[m.end():].lstrip("*")
        if coeff_text.startswith("#"):
            c = ring(groups[int(coeff_text.strip("#"))])
        elif coeff_text:
            c = ring(Fraction(coeff_text))
        else:
            c = ring.one
        if sign == "-":
            c = -c
        key = tuple(exps)
        acc[key] = acc[key] + c if key in acc else c
    return TruncatedSeries(ring, names, cap, acc)


# -- checks ------------------------------------------------------------------------------


def finite_sum_identity(f: TruncatedSeries):
    """Rebuild ``f`` as the finite sum of ``coeff_m(f) * T^m`` over the window and compare."""
    from .dpcore import Status, VerificationReport

    total = TruncatedSeries(f.ring, f.names, f.cap)
    count = 0
    for m in exponents_up_to(f.nvars, f.cap):
        total = total + monomial(f.ring, f.names, f.cap, m, f.coeff(m))
        count += 1
    ok = total == f
    witnesses = [] if ok else [{"relation": "finite_sum_identity", "inputs": {"f": str(f)},
                                "expected": str(f), "actual": str(total)}]
    return VerificationReport("finite_sum_identity", Status.PASS if ok else Status.FAIL,
                              witnesses=witnesses, failures=0 if ok else 1,
                              params={"n_bound": f.cap, "seed": None, "monomials": count})


def pow_tendsto_zero(f: TruncatedSeries) -> bool:
    """Whether ``f^k`` vanishes for large ``k``: exactly when the constant coefficient is nilpotent."""
    return nilpotency_index(f.constant_coeff()) is not None


# -- evaluation ----------------------------------------------------------------------


@dataclass
class Certificate:
    """Outcome of :func:`has_eval` or :func:`has_subst`.

    ``indices`` holds the nilpotency index of each variable's value (or constant
    coefficient). A finite variable set makes the cofinite condition vacuous.
    """

    ok: bool
    indices: dict = field(default_factory=dict)
    reason: str = ""
    cofinite: str = "vacuous: finite variable set"

    def __bool__(self):
        return self.ok


def _point(names, b) -> dict:
    if isinstance(b, Mapping):
        b = dict(b)
    else:
        b = dict(zip(names, b)) if names else {}
    return b


def has_eval(b) -> Certificate:
    """Every value in the assignment ``b`` must be nilpotent (discrete topology)."""
    values = b.items() if isinstance(b, Mapping) else enumerate(b)
    indices = {}
    for s, v in values:
        k = nilpotency_index(v)
        if k is None:
            return Certificate(False, indices, reason=f"{v} at {s} is not nilpotent")
        indices[s] = k
    return Certificate(True, indices, reason="all values nilpotent")


def _resolve_phi(f: TruncatedSeries, target: RingContext, phi: RingHomHandle | None) -> RingHomHandle:
    if phi is not None:
        if phi.source != f.ring or phi.target != target:
            raise RingError("phi does not map the coefficient ring to the point's ring")
        return phi
    return identity_hom(f.ring) if f.ring == target else natural_hom(f.ring, target)


def _eval_sum(f: TruncatedSeries, phi, b: dict, limits: dict | None, target):
    powers: dict = {}

    def power(s, k):
        key = (s, k)
        if key not in powers:
            powers[key] = b[s] ** k
        return powers[key]

    total = target.zero
    for e, c in f.terms():
        if limits is not None and any(k >= limits[s] for s, k in zip(f.names, e) if k):
            continue
        term = phi(c)
        for s, k in zip(f.names, e):
            if k:
                term = term * power(s, k)
        total = total + term
    return total


def eval(f: TruncatedSeries, b, phi: RingHomHandle | None = None) -> RingElement:
    """``sum_m phi(coeff_m f) * b^m``; only defined when every ``b_s`` is nilpotent.

    Terms with some ``m_s >= index_s`` vanish, so the sum is finite and the value
    no longer depends on the cap once ``cap >= sum(index_s - 1)``.
    """
    b = _point(f.names, b)
    if set(b) != set(f.names):
        raise ValueError("the point must assign every variable")
    cert = has_eval(b)
    if not cert:
        raise EvaluationRefused(f"evaluation not defined at b: {cert.reason}")
    target = next(iter(b.values())).ring if b else f.ring
    return _eval_sum(f, _resolve_phi(f, target, phi), b, cert.indices, target)


def eval_total(f: TruncatedSeries, b, phi: RingHomHandle | None = None, polynomial: bool = False):
    """Totalized evaluation: zero where :func:`eval` refuses.

    With ``polynomial=True`` the series is read as the polynomial it stores and
    evaluated directly at any point. The dummy zero has weak algebraic properties;
    a :class:`RuntimeWarning` is raised each time it is produced.
    """
    b = _point(f.names, b)
    target = next(iter(b.values())).ring if b else f.ring
    if polynomial:
        return _eval_sum(f, _resolve_phi(f, target, phi), b, None, target)
    try:
        return eval(f, b, phi)
    except EvaluationRefused as exc:
        warnings.warn(f"totalized eval returns 0: {exc}", RuntimeWarning, stacklevel=2)
        return target.zero


# -- substitution --------------------------------------------------------------------


def has_subst(b) -> Certificate:
    """Each substituted series must have a nilpotent constant coefficient."""
    values = b.items() if isinstance(b, Mapping) else enumerate(b)
    indices = {}
    for s, g in values:
        k = nilpotency_index(g.constant_coeff())
        if k is None:
            return Certificate(False, indices, reason=f"constant coefficient of b[{s}] is not nilpotent")
        indices[s] = k
    return Certificate(True, indices, reason="all constant coefficients nilpotent")


def subst(f: TruncatedSeries, b, cap: int | None = None, polynomial: bool = False,
          phi: RingHomHandle | None = None) -> TruncatedSeries:
    """Substitute the series ``b[s]`` for the variables of ``f``.

    Output cap. Write ``b_s = c_s + h_s`` with ``h_s`` of positive order and
    ``c_s^{k_s} = 0``. Then ``b_s^{m_s}`` has a degree-``d`` part only when
    ``m_s <= d + k_s - 1``, so input monomials with ``m_s >= cap_out + k_s`` drop
    out, and degree ``d`` of the result needs ``f`` up to ``d + sum(k_s - 1)``.
    Since ``f`` is known up to its own cap, the result is exact up to
    ``min(cap_b, cap_f - sum(k_s - 1))``. ``polynomial=True`` declares that
    ``f`` has no terms above its cap, lifting the second bound. Asking for a
    larger ``cap`` recaps to this boundary with a :class:`RecapWarning`.
    """
    b = _point(f.names, b)
    if set(b) != set(f.names):
        raise ValueError("b must give a series for every variable")
    cert = has_subst(b)
    if not cert:
        raise SubstitutionRefused(f"substitution not defined: {cert.reason}")
    if not b:
        return constant(f.ring, (), f.cap if cap is None else cap, f.constant_coeff())
    gs = list(b.values())
    names_out, ring_out = gs[0].names, gs[0].ring
    if any(g.names != names_out or g.ring != ring_out for g in gs):
        raise RingError("substituted series must share ring and variables")
    phi = _resolve_phi(f, ring_out, phi)
    k = cert.indices
    cap_b = min(g.cap for g in gs)
    bound = cap_b if polynomial else min(cap_b, f.cap - sum(k[s] - 1 for s in f.names))
    if bound < 0:
        raise SubstitutionRefused("no coefficient of the result is determined by the data")
    if cap is None:
        cap_out = bound
    else:
        cap_out = min(cap, bound)
        if cap > bound:
            warnings.warn(f"substitution result recapped from {cap} to {bound}", RecapWarning, stacklevel=2)
    gs_cut = {s: b[s].truncate(cap_out) for s in f.names}
    powers: dict = {}

    def power(s, e):
        key = (s, e)
        if key not in powers:
            powers[key] = gs_cut[s] ** e
        return powers[key]

    out = TruncatedSeries(ring_out, names_out, cap_out)
    for e, c in f.terms():
        if any(m >= cap_out + k[s] for s, m in zip(f.names, e)):
            continue
        term = constant(ring_out, names_out, cap_out, phi(c))
        for s, m in zip(f.names, e):
            if m:
                term = term * power(s, m)
        out = out + term
    return out


def rescale(a, f: TruncatedSeries) -> TruncatedSeries:
    """``f(aX)``: the coefficient of ``X^m`` is multiplied by ``a^|m|``."""
    a = f.ring(a)
    return f._like({e: a ** sum(e) * c for e, c in f._coeffs.items()})
