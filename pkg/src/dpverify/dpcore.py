"""Divided power structures, the axiom verifier, dp morphisms and sub-dp-ideals.

A :class:`DividedPowerStructure` is an ideal ``I`` together with a total map
``dpow(n, x)`` that vanishes off ``I``.  Every theorem-shaped statement is turned
into a check returning a :class:`VerificationReport`; failures carry witnesses
that :func:`replay_witness` can re-evaluate.
"""

from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from .combinat import choose, uniform_bell
from .exactring import RingElement
from .ideals import (
    IdealHandle,
    RingHomHandle,
    enumerate_ideals,
    identity_hom,
    ideal_inf,
    ideal_mul,
    ideal_sum,
    span,
    zero_ideal,
)

__all__ = [
    "Status",
    "VerificationReport",
    "DividedPowerStructure",
    "DPMorphismWitness",
    "DpowBoundError",
    "ConstructionRefused",
    "AXIOMS",
    "dpow",
    "check_axioms",
    "is_dp_morphism",
    "dp_equalizer",
    "dp_morphism_from_generators",
    "dp_unique_on_generators",
    "is_sub_dp_ideal",
    "restrict_dp",
    "inter_sub_dp_iff",
    "span_sub_dp_iff",
    "mul_sub_dp",
    "kernel_lemma",
    "SubDPLattice",
    "sub_dp_lattice",
    "check_lattice",
    "quotient_dp",
    "quotient_uniqueness",
    "replay_witness",
]

MAX_WITNESSES = 10


class DpowBoundError(ValueError):
    """A tabulated structure was asked for ``dpow(n, x)`` with ``n > n_max``."""


class ConstructionRefused(ValueError):
    """A construction's hypothesis failed; ``report`` holds the failing witness."""

    def __init__(self, message: str, report: "VerificationReport | None" = None):
        super().__init__(message)
        self.report = report


class Status(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


@dataclass
class VerificationReport:
    check: str
    status: Status
    coverage: dict = field(default_factory=lambda: {"mode": "exhaustive"})
    witnesses: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    subreports: list = field(default_factory=list)
    failures: int = 0
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status is Status.PASS

    def find(self, check: str) -> "VerificationReport":
        """First report named ``check`` in this tree."""
        if self.check == check:
            return self
        for sub in self.subreports:
            try:
                return sub.find(check)
            except KeyError:
                pass
        raise KeyError(check)

    def to_dict(self) -> dict:
        out = {
            "check": self.check,
            "status": self.status.value,
            "coverage": dict(self.coverage),
            "witnesses": list(self.witnesses),
            "failures": self.failures,
            "params": dict(self.params),
        }
        if self.note:
            out["note"] = self.note
        if self.subreports:
            out["subreports"] = [s.to_dict() for s in self.subreports]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        return cls(
            check=d["check"],
            status=Status(d["status"]),
            coverage=d.get("coverage", {}),
            witnesses=d.get("witnesses", []),
            params=d.get("params", {}),
            subreports=[cls.from_dict(s) for s in d.get("subreports", [])],
            failures=d.get("failures", 0),
            note=d.get("note", ""),
        )


def combine(check: str, subreports: Sequence[VerificationReport], **params) -> VerificationReport:
    """Parent report: Fail if any child fails, else Inconclusive if any is, else Pass."""
    statuses = {s.status for s in subreports}
    if Status.FAIL in statuses:
        status = Status.FAIL
    elif Status.INCONCLUSIVE in statuses:
        status = Status.INCONCLUSIVE
    else:
        status = Status.PASS
    coverage = {"mode": "exhaustive"}
    for s in subreports:
        if s.coverage.get("mode") == "sampled":
            coverage = dict(s.coverage)
    return VerificationReport(check, status, coverage=coverage, params=params,
                              subreports=list(subreports),
                              failures=sum(s.failures for s in subreports))


class _Tally:
    """Accumulates relation outcomes for one check."""

    def __init__(self, check: str, relation: str, coverage: dict, params: dict):
        self.check = check
        self.relation = relation
        self.coverage = coverage
        self.params = params
        self.witnesses: list = []
        self.failures = 0
        self.evaluated = 0

    def record(self, inputs: dict, outcome: tuple) -> bool:
        ok, expected, actual = outcome
        self.evaluated += 1
        if not ok:
            self.failures += 1
            if len(self.witnesses) < MAX_WITNESSES:
                self.witnesses.append({
                    "relation": self.relation,
                    "inputs": {k: _dump(v) for k, v in inputs.items()},
                    "expected": _dump(expected),
                    "actual": _dump(actual),
                })
        return ok

    def report(self) -> VerificationReport:
        params = dict(self.params, evaluated=self.evaluated)
        status = Status.FAIL if self.failures else Status.PASS
        return VerificationReport(self.check, status, coverage=dict(self.coverage),
                                  witnesses=self.witnesses, params=params,
                                  failures=self.failures)


def _dump(v):
    if isinstance(v, (list, tuple)):
        return [_dump(x) for x in v]
    if isinstance(v, (bool, int)) or v is None:
        return v
    return str(v)


# -- the structure ---------------------------------------------------------------------


class DividedPowerStructure:
    """An ideal with divided powers, realized as a total function ``dpow(n, x)``.

    ``fn(n, x)`` is only consulted for ``x`` in the ideal. ``rule`` names how the
    values are produced (``tabulated``, ``inverse_factorial``, ``rat_algebra``,
    ``padic``, ``quotient``, ``ideal_add``, ``ideal_add_v1``, ``restricted``,
    ``induced``, ``trivial``). Only tabulated rules carry ``n_max``.
    """

    def __init__(self, ideal: IdealHandle, rule: str, fn: Callable[[int, RingElement], RingElement],
                 n_max: int | None = None, **meta):
        self.ideal = ideal
        self.ring = ideal.ring
        self.rule = rule
        self._fn = fn
        self.n_max = n_max
        self.meta = meta
        self._cache: dict = {}

    def __repr__(self):
        return f"DividedPowerStructure({self.rule} on {self.ideal})"

    def dpow(self, n: int, x) -> RingElement:
        if n < 0:
            raise ValueError("dpow index must be non-negative")
        x = self.ring(x)
        key = (n, x.value)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        if not self.ideal.mem(x):
            value = self.ring.zero
        else:
            if self.n_max is not None and n > self.n_max:
                raise DpowBoundError(f"dpow({n}, {x}) beyond n_max={self.n_max} of a tabulated rule")
            value = self.ring(self._fn(n, x))
        self._cache[key] = value
        return value

    __call__ = dpow

    def tabulate(self, n_max: int, overrides: dict | None = None) -> "DividedPowerStructure":
        """A table copy of this structure for ``n <= n_max`` over the (finite) ideal.

        ``overrides`` maps ``(n, element-or-literal)`` to replacement values; it is
        how planted violations are produced.
        """
        table = {(n, x.value): self.dpow(n, x) for x in self.ideal.elements() for n in range(n_max + 1)}
        for (n, x), v in (overrides or {}).items():
            x = self.ring(x)
            if (n, x.value) not in table:
                raise KeyError(f"override ({n}, {x}) is outside the table")
            table[(n, x.value)] = self.ring(v)
        return DividedPowerStructure(self.ideal, "tabulated", lambda n, x: table[(n, x.value)],
                                     n_max=n_max, source=self.rule, overrides=bool(overrides))

    def within_range(self, n: int) -> bool:
        return self.n_max is None or n <= self.n_max


def dpow(dp: DividedPowerStructure, n: int, x) -> RingElement:
    return dp.dpow(n, x)


# -- relations: each returns (ok, expected, actual) ----------------------------------


def _eq(expected, actual):
    return (expected == actual, expected, actual)


def _rel_dpow_zero(dp, x):
    return _eq(dp.ring.one, dp.dpow(0, x))


def _rel_dpow_one(dp, x):
    return _eq(x, dp.dpow(1, x))


def _rel_dpow_mem(dp, n, x):
    v = dp.dpow(n, x)
    return (dp.ideal.mem(v), f"member of {dp.ideal}", v)


def _rel_dpow_null(dp, n, x):
    return _eq(dp.ring.zero, dp.dpow(n, x))


def _rel_dpow_add(dp, n, x, y):
    rhs = dp.ring.zero
    for k in range(n + 1):
        rhs = rhs + dp.dpow(k, x) * dp.dpow(n - k, y)
    return _eq(rhs, dp.dpow(n, x + y))


def _rel_dpow_mul(dp, n, a, x):
    return _eq(a ** n * dp.dpow(n, x), dp.dpow(n, a * x))


def _rel_mul_dpow(dp, m, n, x):
    return _eq(choose(m + n, m) * dp.dpow(m + n, x), dp.dpow(m, x) * dp.dpow(n, x))


def _rel_dpow_comp(dp, m, n, x):
    return _eq(uniform_bell(m, n) * dp.dpow(m * n, x), dp.dpow(m, dp.dpow(n, x)))


AXIOMS: dict[str, Callable] = {
    "dpow_zero": _rel_dpow_zero,
    "dpow_one": _rel_dpow_one,
    "dpow_mem": _rel_dpow_mem,
    "dpow_add": _rel_dpow_add,
    "dpow_mul": _rel_dpow_mul,
    "mul_dpow": _rel_mul_dpow,
    "dpow_comp": _rel_dpow_comp,
}


def _axiom_inputs(dp: DividedPowerStructure, name: str, n_bound: int, ideal_elems, ring_elems):
    ns = range(n_bound + 1)
    if name in ("dpow_zero", "dpow_one"):
        for x in ideal_elems:
            yield {"x": x}
    elif name == "dpow_mem":
        for x in ideal_elems:
            for n in range(1, n_bound + 1):
                yield {"n": n, "x": x}
    elif name == "dpow_add":
        for x in ideal_elems:
            for y in ideal_elems:
                for n in ns:
                    yield {"n": n, "x": x, "y": y}
    elif name == "dpow_mul":
        for a in ring_elems:
            for x in ideal_elems:
                for n in ns:
                    yield {"n": n, "a": a, "x": x}
    elif name == "mul_dpow":
        for x in ideal_elems:
            for m in ns:
                for n in ns:
                    if dp.within_range(m + n):
                        yield {"m": m, "n": n, "x": x}
    elif name == "dpow_comp":
        for x in ideal_elems:
            for m in ns:
                for n in range(1, n_bound + 1):
                    if m * n <= n_bound:
                        yield {"m": m, "n": n, "x": x}
    else:
        raise KeyError(name)


def _coverage(mode: str, count: int | None, seed: int | None) -> dict:
    if mode == "exhaustive":
        return {"mode": "exhaustive"}
    if mode == "sampled":
        if seed is None:
            raise ValueError("sampled mode needs a seed")
        return {"mode": "sampled", "count": count, "seed": seed}
    raise ValueError(f"unknown mode {mode!r}")


def _domains(dp, mode, count, seed, label):
    """Ideal and ring element lists: everything, or seeded samples."""
    if mode == "exhaustive":
        if not dp.ideal.is_finite or not dp.ring.is_finite:
            raise ValueError("exhaustive checks need a finite ring and ideal")
        return dp.ideal.elements(), list(dp.ring.elements())
    rng = random.Random(f"{seed}:{label}")
    ideal_elems = [dp.ideal.sample(rng) for _ in range(count)]
    ring_elems = [dp.ring.sample(rng) for _ in range(count)]
    return ideal_elems, ring_elems


def _sampled_inputs(dp, name, n_bound, ideal_elems, ring_elems, count, seed):
    rng = random.Random(f"{seed}:{name}")
    for _ in range(count):
        x, y, a = rng.choice(ideal_elems), rng.choice(ideal_elems), rng.choice(ring_elems)
        n = rng.randint(0, n_bound)
        if name in ("dpow_zero", "dpow_one"):
            yield {"x": x}
        elif name == "dpow_mem":
            yield {"n": max(n, 1), "x": x}
        elif name == "dpow_add":
            yield {"n": n, "x": x, "y": y}
        elif name == "dpow_mul":
            yield {"n": n, "a": a, "x": x}
        elif name == "mul_dpow":
            m = rng.randint(0, n_bound)
            if dp.within_range(m + n):
                yield {"m": m, "n": n, "x": x}
        else:
            n = max(n, 1)
            m = rng.randint(0, n_bound // n)
            yield {"m": m, "n": n, "x": x}


def check_axioms(dp: DividedPowerStructure, n_bound: int = 6, mode: str = "exhaustive",
                 count: int = 200, seed: int | None = None) -> VerificationReport:
    """Verify the seven axioms, plus the off-ideal zero convention.

    Ranges: ``n <= n_bound``; ``mul_dpow`` takes ``m, n <= n_bound`` (skipping
    ``m + n > n_max`` for tabulated rules); ``dpow_comp`` takes ``m * n <= n_bound``.
    """
    coverage = _coverage(mode, count, seed)
    params = {"n_bound": n_bound, "seed": seed, "rule": dp.rule, "ring": str(dp.ring),
              "ideal": [str(g) for g in dp.ideal.generators]}
    ideal_elems, ring_elems = _domains(dp, mode, count, seed, "axioms")
    subs = []
    for name, rel in AXIOMS.items():
        tally = _Tally(name, name, coverage, {"n_bound": n_bound, "seed": seed})
        if mode == "exhaustive":
            inputs = _axiom_inputs(dp, name, n_bound, ideal_elems, ring_elems)
        else:
            inputs = _sampled_inputs(dp, name, n_bound, ideal_elems, ring_elems, count, seed)
        for inp in inputs:
            tally.record(inp, rel(dp, **inp))
        subs.append(tally.report())
    tally = _Tally("dpow_null", "dpow_null", coverage, {"n_bound": n_bound, "seed": seed})
    for a in ring_elems:
        if not dp.ideal.mem(a):
            for n in range(n_bound + 1):
                tally.record({"n": n, "x": a}, _rel_dpow_null(dp, n, a))
    subs.append(tally.report())
    return combine("axioms", subs, **params)


# -- morphisms ---------------------------------------------------------------------------


@dataclass
class DPMorphismWitness:
    """A ring hom ``hom`` proposed as a dp morphism ``source -> target``."""

    hom: RingHomHandle
    source: DividedPowerStructure
    target: DividedPowerStructure

    def __post_init__(self):
        if self.hom.source != self.source.ring or self.hom.target != self.target.ring:
            raise ValueError("hom does not connect the two structures' rings")


def _rel_ideal_comp(w, x):
    fx = w.hom(x)
    return (w.target.ideal.mem(fx), f"member of {w.target.ideal}", fx)


def _rel_morph_comp(w, n, x):
    return _eq(w.hom(w.source.dpow(n, x)), w.target.dpow(n, w.hom(x)))


def _elements_for(I: IdealHandle, mode, count, seed, label):
    if mode == "exhaustive":
        return I.elements()
    rng = random.Random(f"{seed}:{label}")
    return [I.sample(rng) for _ in range(count)]


def is_dp_morphism(w: DPMorphismWitness, n_bound: int = 6, mode: str = "exhaustive",
                   count: int = 200, seed: int | None = None,
                   domain: Sequence[RingElement] | None = None,
                   check: str = "is_dp_morphism") -> VerificationReport:
    """``f(I) <= J`` and ``delta_n(f(x)) = f(gamma_n(x))`` for ``n <= n_bound``, ``x`` in I."""
    coverage = _coverage(mode, count, seed)
    elems = list(domain) if domain is not None else _elements_for(w.source.ideal, mode, count, seed, check)
    base = {"n_bound": n_bound, "seed": seed}
    t1 = _Tally("ideal_comp", "ideal_comp", coverage, base)
    t2 = _Tally("dpow_comp", "morphism_dpow_comp", coverage, base)
    for x in elems:
        t1.record({"x": x}, _rel_ideal_comp(w, x))
        for n in range(n_bound + 1):
            if w.source.within_range(n) and w.target.within_range(n):
                t2.record({"n": n, "x": x}, _rel_morph_comp(w, n, x))
    return combine(check, [t1.report(), t2.report()], n_bound=n_bound, seed=seed, hom=w.hom.kind,
                   source=str(w.source.ideal), target=str(w.target.ideal))


def _in_equalizer(w: DPMorphismWitness, x, n_bound: int) -> bool:
    return w.source.ideal.mem(x) and all(
        _rel_morph_comp(w, n, x)[0] for n in range(n_bound + 1)
        if w.source.within_range(n) and w.target.within_range(n))


def _rel_equalizer_add(w, x, y, n_bound):
    ok = _in_equalizer(w, x + y, n_bound)
    return (ok, "x+y in equalizer", x + y)


def _rel_equalizer_absorb(w, a, x, n_bound):
    ok = _in_equalizer(w, a * x, n_bound)
    return (ok, "a*x in equalizer", a * x)


def dp_equalizer(f: RingHomHandle, source: DividedPowerStructure, target: DividedPowerStructure,
                 n_bound: int = 6) -> tuple[list[RingElement], VerificationReport]:
    """``{x in I : delta_n(f x) = f(gamma_n x) for n <= n_bound}`` and a check that it is an ideal."""
    w = DPMorphismWitness(f, source, target)
    if not all(target.ideal.mem(f(g)) for g in source.ideal.generators):
        raise ValueError("precondition f(I) <= J fails")
    if not source.ring.is_finite:
        raise ValueError("dp_equalizer needs a finite ring")
    eq = [x for x in source.ideal.elements() if _in_equalizer(w, x, n_bound)]
    coverage = {"mode": "exhaustive"}
    base = {"n_bound": n_bound, "seed": None}
    zero_t = _Tally("contains_zero", "equalizer_add", coverage, base)
    zero = source.ring.zero
    zero_t.record({"x": zero, "y": zero, "n_bound": n_bound}, _rel_equalizer_add(w, zero, zero, n_bound))
    add_t = _Tally("add_closed", "equalizer_add", coverage, base)
    for x, y in itertools.product(eq, repeat=2):
        add_t.record({"x": x, "y": y, "n_bound": n_bound}, _rel_equalizer_add(w, x, y, n_bound))
    abs_t = _Tally("absorbs", "equalizer_absorb", coverage, base)
    for a in source.ring.elements():
        for x in eq:
            abs_t.record({"a": a, "x": x, "n_bound": n_bound}, _rel_equalizer_absorb(w, a, x, n_bound))
    report = combine("dp_equalizer", [zero_t.report(), add_t.report(), abs_t.report()],
                     n_bound=n_bound, seed=None, size=len(eq), ideal_size=len(source.ideal),
                     equalizer=[str(x) for x in eq])
    return eq, report


def _implication(check: str, hypothesis: VerificationReport, conclusion: VerificationReport,
                 **params) -> VerificationReport:
    """Record both halves of ``hypothesis => conclusion``."""
    hypothesis.check = "hypothesis"
    conclusion.check = "conclusion"
    if not hypothesis.passed:
        status, note = Status.INCONCLUSIVE, "hypothesis fails; implication holds vacuously"
    elif conclusion.passed:
        status, note = Status.PASS, "hypothesis and conclusion both hold"
    else:
        status, note = Status.FAIL, "hypothesis holds but conclusion fails"
    params.setdefault("hypothesis", hypothesis.status.value)
    params.setdefault("conclusion", conclusion.status.value)
    return VerificationReport(check, status, coverage=dict(conclusion.coverage), params=params,
                              subreports=[hypothesis, conclusion],
                              failures=conclusion.failures if status is Status.FAIL else 0,
                              note=note)


def dp_morphism_from_generators(f: RingHomHandle, source: DividedPowerStructure,
                                target: DividedPowerStructure, S: Sequence, n_bound: int = 6,
                                mode: str = "exhaustive", count: int = 200,
                                seed: int | None = None) -> VerificationReport:
    """If ``f`` commutes with divided powers on a generating set ``S``, it is a dp morphism."""
    S = [source.ring(s) for s in S]
    if span(source.ring, S) != source.ideal:
        raise ValueError(f"S = {[str(s) for s in S]} does not generate {source.ideal}")
    w = DPMorphismWitness(f, source, target)
    hyp = is_dp_morphism(w, n_bound, domain=S)
    concl = is_dp_morphism(w, n_bound, mode=mode, count=count, seed=seed)
    return _implication("dp_morphism_from_generators", hyp, concl, n_bound=n_bound, seed=seed,
                        generators=[str(s) for s in S])


def dp_unique_on_generators(dp1: DividedPowerStructure, dp2: DividedPowerStructure, S: Sequence,
                            n_bound: int = 6, mode: str = "exhaustive", count: int = 200,
                            seed: int | None = None) -> VerificationReport:
    """Two structures on one ideal that agree on a generating set agree everywhere."""
    if dp1.ring != dp2.ring or dp1.ideal != dp2.ideal:
        raise ValueError("structures must share ring and ideal")
    report = dp_morphism_from_generators(identity_hom(dp1.ring), dp1, dp2, S, n_bound, mode, count, seed)
    report.check = "dp_unique_on_generators"
    return report


# -- sub-dp-ideals ---------------------------------------------------------------------


def _rel_subideal(dp, x, J):
    return (dp.ideal.mem(x), f"member of {dp.ideal}", x)


def _rel_sub_dpow_mem(dp, n, x, J):
    v = dp.dpow(n, x)
    return (J.mem(v), f"member of {J}", v)


def is_sub_dp_ideal(dp: DividedPowerStructure, J: IdealHandle, n_bound: int = 6,
                    check: str = "is_sub_dp_ideal", seed: int | None = None,
                    count: int = 200) -> VerificationReport:
    """``J <= I`` and ``gamma_n(x) in J`` for ``1 <= n <= n_bound``, ``x`` in J."""
    if J.ring != dp.ring:
        raise ValueError("J lives in another ring")
    finite = J.is_finite
    mode = "exhaustive" if finite else "sampled"
    if not finite and seed is None:
        seed = 0
    coverage = _coverage(mode, count, seed)
    elems = _elements_for(J, mode, count, seed, check)
    if not finite:
        elems = list(J.generators) + list(elems)
    gens = [str(g) for g in J.generators]
    base = {"n_bound": n_bound, "seed": seed}
    t1 = _Tally("is_subideal", "is_subideal", coverage, base)
    t2 = _Tally("dpow_mem", "sub_dpow_mem", coverage, base)
    for x in elems:
        t1.record({"x": x, "J": gens}, _rel_subideal(dp, x, J))
        for n in range(1, n_bound + 1):
            if dp.within_range(n):
                t2.record({"n": n, "x": x, "J": gens}, _rel_sub_dpow_mem(dp, n, x, J))
    return combine(check, [t1.report(), t2.report()], n_bound=n_bound, seed=seed, J=gens)


def restrict_dp(dp: DividedPowerStructure, J: IdealHandle, n_bound: int = 6) -> DividedPowerStructure:
    """The structure ``dpow n x := if x in J then dp.dpow n x else 0`` on a sub-dp-ideal J."""
    report = is_sub_dp_ideal(dp, J, n_bound)
    if not report.passed:
        raise ConstructionRefused(f"{J} is not a sub-dp-ideal of {dp.ideal}", report)
    return DividedPowerStructure(J, "restricted", dp.dpow, n_max=dp.n_max, parent=dp, audit=report)


def _rel_congruence(dp, n, a, b, J):
    d = dp.dpow(n, a) - dp.dpow(n, b)
    return (J.mem(d), f"member of {J}", d)


def inter_sub_dp_iff(dp: DividedPowerStructure, J: IdealHandle, n_bound: int = 6) -> VerificationReport:
    """Evaluate both sides of: ``J cap I`` is sub-dp  iff  ``a = b mod J`` implies ``gamma_n a = gamma_n b mod J``."""
    side_a = is_sub_dp_ideal(dp, ideal_inf(J, dp.ideal), n_bound, check="intersection_is_sub_dp")
    gens = [str(g) for g in J.generators]
    t = _Tally("congruence_preserved", "congruence", {"mode": "exhaustive"}, {"n_bound": n_bound, "seed": None})
    I_elems = dp.ideal.elements()
    for a in I_elems:
        for b in I_elems:
            if J.mem(a - b):
                for n in range(n_bound + 1):
                    if dp.within_range(n):
                        t.record({"n": n, "a": a, "b": b, "J": gens}, _rel_congruence(dp, n, a, b, J))
    side_b = t.report()
    return _iff("inter_sub_dp_iff", side_a, side_b, n_bound=n_bound, J=gens)


def _iff(check, side_a: VerificationReport, side_b: VerificationReport, **params) -> VerificationReport:
    agree = side_a.passed == side_b.passed
    params.update(left=side_a.passed, right=side_b.passed, seed=params.get("seed"))
    return VerificationReport(check, Status.PASS if agree else Status.FAIL,
                              params=params, subreports=[side_a, side_b],
                              failures=0 if agree else 1,
                              witnesses=[] if agree else [{
                                  "relation": "iff", "inputs": {},
                                  "expected": str(side_a.passed), "actual": str(side_b.passed)}],
                              note=f"left side {side_a.passed}, right side {side_b.passed}")


def span_sub_dp_iff(dp: DividedPowerStructure, S: Sequence, n_bound: int = 6) -> VerificationReport:
    """Both sides of: ``span(S)`` is sub-dp  iff  ``gamma_n(s) in span(S)`` for ``s`` in S, ``n >= 1``."""
    S = [dp.ring(s) for s in S]
    if not all(dp.ideal.mem(s) for s in S):
        raise ValueError("S must lie in the ideal")
    J = span(dp.ring, S)
    side_a = is_sub_dp_ideal(dp, J, n_bound, check="span_is_sub_dp")
    gens = [str(g) for g in J.generators]
    t = _Tally("generators_closed", "sub_dpow_mem", {"mode": "exhaustive"}, {"n_bound": n_bound, "seed": None})
    for s in S:
        for n in range(1, n_bound + 1):
            if dp.within_range(n):
                t.record({"n": n, "x": s, "J": gens}, _rel_sub_dpow_mem(dp, n, s, J))
    return _iff("span_sub_dp_iff", side_a, t.report(), n_bound=n_bound, S=[str(s) for s in S])


def mul_sub_dp(dp: DividedPowerStructure, J: IdealHandle, n_bound: int = 6) -> VerificationReport:
    """``I * J`` is a sub-dp-ideal of ``I`` for any ideal J."""
    report = is_sub_dp_ideal(dp, ideal_mul(dp.ideal, J), n_bound, check="mul_sub_dp")
    report.params["J_factor"] = [str(g) for g in J.generators]
    return report


def kernel_lemma(w: DPMorphismWitness, n_bound: int = 6) -> VerificationReport:
    """For a dp morphism: ``ker f cap I`` is sub-dp in the source, ``span f(I)`` in the target."""
    morph = is_dp_morphism(w, n_bound)
    ker = is_sub_dp_ideal(w.source, ideal_inf(w.hom.kernel(), w.source.ideal), n_bound,
                          check="kernel_inter_is_sub_dp")
    img = is_sub_dp_ideal(w.target, w.hom.image_ideal(w.source.ideal), n_bound,
                          check="image_span_is_sub_dp")
    concl = combine("conclusion", [ker, img])
    return _implication("kernel_lemma", morph, concl, n_bound=n_bound, seed=None)


# -- the lattice of sub-dp-ideals ---------------------------------------------------------


class SubDPLattice:
    """All sub-dp-ideals of a finite divided power ideal, ordered by inclusion."""

    def __init__(self, dp: DividedPowerStructure, n_bound: int = 6, gen_cap: int = 2):
        if not dp.ring.is_finite:
            raise ValueError("the sub-dp lattice is only built for finite rings")
        self.dp = dp
        self.n_bound = n_bound
        self.members = [J for J in enumerate_ideals(dp.ring, gen_cap)
                        if J <= dp.ideal and is_sub_dp_ideal(dp, J, n_bound).passed]

    @property
    def top(self) -> IdealHandle:
        return self.dp.ideal

    @property
    def bot(self) -> IdealHandle:
        return zero_ideal(self.dp.ring)

    def sup(self, J: IdealHandle, K: IdealHandle) -> IdealHandle:
        return ideal_sum(J, K)

    def inf(self, J: IdealHandle, K: IdealHandle) -> IdealHandle:
        return ideal_inf(J, K)

    def Inf(self, family: Iterable[IdealHandle]) -> IdealHandle:
        """``I cap (cap of family)``; the empty family gives ``I``, not the whole ring."""
        out = self.dp.ideal
        for J in family:
            out = ideal_inf(out, J)
        return out

    def Sup(self, family: Iterable[IdealHandle]) -> IdealHandle:
        out = self.bot
        for J in family:
            out = ideal_sum(out, J)
        return out

    def span(self, S: Sequence) -> IdealHandle:
        """Least sub-dp-ideal containing S: the infimum of all members containing it."""
        S = [self.dp.ring(s) for s in S]
        return self.Inf(J for J in self.members if all(J.mem(s) for s in S))

    def gamma_span(self, S: Sequence) -> IdealHandle:
        """Ideal spanned by ``gamma_n(s)``, ``s`` in S, ``1 <= n <= n_bound``."""
        S = [self.dp.ring(s) for s in S]
        return span(self.dp.ring, [self.dp.dpow(n, s) for s in S for n in range(1, self.n_bound + 1)
                                   if self.dp.within_range(n)])


def sub_dp_lattice(dp: DividedPowerStructure, n_bound: int = 6) -> SubDPLattice:
    return SubDPLattice(dp, n_bound)


def _bool_tally(name: str, items, n_bound: int) -> VerificationReport:
    t = _Tally(name, name, {"mode": "exhaustive"}, {"n_bound": n_bound, "seed": None})
    for inputs, ok, expected, actual in items:
        t.record(inputs, (ok, expected, actual))
    return t.report()


def check_lattice(dp: DividedPowerStructure, n_bound: int = 6) -> VerificationReport:
    """Closure, lattice laws, the empty-infimum convention, span two ways, and I*J lemma."""
    L = SubDPLattice(dp, n_bound)
    members = L.members
    known = set(members)
    pairs = list(itertools.product(members, repeat=2))
    triples = list(itertools.product(members, repeat=3))
    s = str

    sup_closed = _bool_tally("sup_closed", (
        ({"J": s(J), "K": s(K)}, L.sup(J, K) in known, "sub-dp", s(L.sup(J, K))) for J, K in pairs), n_bound)
    inf_closed = _bool_tally("inf_closed", (
        ({"J": s(J), "K": s(K)}, L.inf(J, K) in known, "sub-dp", s(L.inf(J, K))) for J, K in pairs), n_bound)

    def laws():
        for J, K in pairs:
            yield {"J": s(J), "K": s(K), "law": "comm"}, L.sup(J, K) == L.sup(K, J) and L.inf(J, K) == L.inf(K, J), "", ""
            yield {"J": s(J), "K": s(K), "law": "absorb"}, (
                L.sup(J, L.inf(J, K)) == J and L.inf(J, L.sup(J, K)) == J), s(J), ""
        for J, K, M in triples:
            yield {"J": s(J), "K": s(K), "M": s(M), "law": "assoc"}, (
                L.sup(L.sup(J, K), M) == L.sup(J, L.sup(K, M))
                and L.inf(L.inf(J, K), M) == L.inf(J, L.inf(K, M))), "", ""
        for J in members:
            yield {"J": s(J), "law": "bounds"}, L.bot <= J <= L.top, "", ""
    lattice_laws = _bool_tally("lattice_laws", laws(), n_bound)

    empty = L.Inf([])
    inf_empty = _bool_tally("inf_empty_is_I", [({}, empty == dp.ideal and empty in known,
                                                s(dp.ideal), s(empty))], n_bound)

    elems = dp.ideal.elements()
    subsets = [()] + [(x,) for x in elems] + list(itertools.combinations(elems, 2))
    if len(elems) <= 8:
        subsets = [c for k in range(len(elems) + 1) for c in itertools.combinations(elems, k)]
    span_two_way = _bool_tally("span_two_way", (
        ({"S": [s(x) for x in S]}, L.span(S) == L.gamma_span(S), s(L.span(S)), s(L.gamma_span(S)))
        for S in subsets), n_bound)

    mul = [mul_sub_dp(dp, J, n_bound) for J in enumerate_ideals(dp.ring)]
    mul_report = combine("mul_sub_dp_all", mul, n_bound=n_bound, count=len(mul))
    return combine("lattice", [sup_closed, inf_closed, lattice_laws, inf_empty, span_two_way, mul_report],
                   n_bound=n_bound, seed=None, members=[s(J) for J in members])


# -- quotients -------------------------------------------------------------------------


def quotient_dp(dp: DividedPowerStructure, f: RingHomHandle, n_bound: int = 6) -> DividedPowerStructure:
    """The structure induced on ``span(f(I))`` by a surjective ``f`` whose kernel meets I in a sub-dp-ideal.

    ``dpow(n, f(a)) = f(dpow(n, a))`` using the least preimage in I; the choice is
    audited against every other preimage up to ``n_bound``.
    """
    if f.source != dp.ring:
        raise ValueError("hom does not start at the structure's ring")
    if not f.is_surjective():
        raise ValueError("quotient_dp needs a surjective hom")
    hyp = is_sub_dp_ideal(dp, ideal_inf(f.kernel(), dp.ideal), n_bound, check="kernel_inter_is_sub_dp")
    if not hyp.passed:
        raise ConstructionRefused("ker f cap I is not a sub-dp-ideal", hyp)

    fibers: dict = {}
    for a in dp.ideal.elements():
        fibers.setdefault(f(a), []).append(a)
    t = _Tally("well_defined", "quotient_well_defined", {"mode": "exhaustive"}, {"n_bound": n_bound, "seed": None})
    for b, pre in fibers.items():
        a0 = pre[0]
        for a in pre[1:]:
            for n in range(n_bound + 1):
                if dp.within_range(n):
                    t.record({"n": n, "a": a0, "b": a}, _eq(f(dp.dpow(n, a0)), f(dp.dpow(n, a))))
    welldef = t.report()
    if not welldef.passed:
        raise ConstructionRefused("induced divided powers depend on the preimage", welldef)

    canonical = {b.value: pre[0] for b, pre in fibers.items()}
    K = f.image_ideal(dp.ideal)

    def fn(n, b):
        return f(dp.dpow(n, canonical[b.value]))

    return DividedPowerStructure(K, "quotient", fn, n_max=dp.n_max, parent=dp, hom=f,
                                 audits=[hyp, welldef])


def quotient_uniqueness(dp: DividedPowerStructure, f: RingHomHandle, candidate: DividedPowerStructure,
                        n_bound: int = 6) -> VerificationReport:
    """If ``f`` is a dp morphism into ``candidate``, then ``candidate`` is the quotient structure."""
    induced = quotient_dp(dp, f, n_bound)
    if candidate.ideal != induced.ideal:
        raise ValueError("candidate must live on span(f(I))")
    hyp = is_dp_morphism(DPMorphismWitness(f, dp, candidate), n_bound)
    t = _Tally("agrees", "structures_agree", {"mode": "exhaustive"}, {"n_bound": n_bound, "seed": None})
    for b in induced.ideal.elements():
        for n in range(n_bound + 1):
            if candidate.within_range(n):
                t.record({"n": n, "x": b}, _rel_agree((induced, candidate), n, b))
    return _implication("quotient_uniqueness", hyp, t.report(), n_bound=n_bound, seed=None)


# -- replay ----------------------------------------------------------------------------


def replay_witness(ctx, witness: dict):
    """Re-evaluate a stored witness; returns ``(ok, expected, actual)`` as strings.

    ``ctx`` is the structure the witness came from, a :class:`DPMorphismWitness`
    for morphism relations, or a ``(reference, candidate)`` pair for relations
    comparing two structures. A faithful replay of a failure gives ``ok == False``.
    """
    rel = witness["relation"]
    inputs = dict(witness["inputs"])
    if isinstance(ctx, DPMorphismWitness):
        ring = ctx.source.ring
    elif isinstance(ctx, tuple):
        ring = ctx[0].ring
    else:
        ring = ctx.ring
    for key, val in list(inputs.items()):
        if key in ("n", "m", "n_bound"):
            inputs[key] = int(val)
        elif key == "J":
            inputs[key] = span(ring, [ring(g) for g in val])
        elif isinstance(val, str):
            inputs[key] = ring(val)
    if rel in AXIOMS:
        out = AXIOMS[rel](ctx, **inputs)
    else:
        out = _REPLAY[rel](ctx, **inputs)
    ok, expected, actual = out
    return ok, _dump(expected), _dump(actual)


def _rel_agree(pair, n, x):
    reference, candidate = pair
    return _eq(reference.dpow(n, x), candidate.dpow(n, x))


_REPLAY: dict[str, Callable] = {
    "dpow_null": _rel_dpow_null,
    "ideal_comp": _rel_ideal_comp,
    "morphism_dpow_comp": _rel_morph_comp,
    "equalizer_add": _rel_equalizer_add,
    "equalizer_absorb": _rel_equalizer_absorb,
    "is_subideal": _rel_subideal,
    "sub_dpow_mem": _rel_sub_dpow_mem,
    "congruence": _rel_congruence,
    "structures_agree": _rel_agree,
    "restricts": _rel_agree,
}
