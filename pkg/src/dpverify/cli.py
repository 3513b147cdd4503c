"""Command line harness: ``dpverify run``, ``dpverify eval`` and ``dpverify subst``.

Suite files are TOML::

    [suite]
    n_bound = 6            # default for every case
    degree_cap = 8
    mode = "exhaustive"    # or "sampled" (needs seed)
    seed = 0
    count = 200
    output = "report.json"

    [[case]]
    name = "square zero on (2) in Z/4"
    ring = "Z/4"                        # Q | Z/m | Zp:p^N | B[x:e,..], B in {Q, Z/m}
    ideal = ["2"]                       # generators in the element grammar
    construction = "square_zero"        # or a table {name, params, corrupt}
    checks = ["axioms", "exp"]

Elements are written ``3``, ``1/2``, ``x*y + 2*x^2``. ``corrupt`` is a list of
``[n, x, value]`` overrides applied to a tabulated copy of the structure.
Structures referenced by a case (``target``, ``second``, construction
parameters ``left``/``right``/``of``) use the same keys; their ``ring``
defaults to the case's ring. See ``suites/`` for complete examples.

Exit codes: 0 when every check passes, 1 when any fails or is inconclusive,
2 on configuration or parse errors. ``DPVERIFY_SEED`` overrides the seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import constructions as C
from . import dpcore as D
from . import mvps
from .exactring import RingError, parse_ring
from .expmod import NotExponential, dp_exp, dp_exp_linear
from .ideals import RingHomHandle, natural_hom, padic_lift, quotient_ring, span, enumerate_ideals

__all__ = ["main", "load_suite", "Suite", "Case", "ConfigError", "CHECKS", "CONSTRUCTIONS", "run_suite"]


class ConfigError(ValueError):
    pass


CONSTRUCTIONS = {
    "trivial", "inverse_factorial", "square_zero", "prime_nilpotent", "char_p", "rat_algebra",
    "padic", "induced", "restricted", "quotient", "ideal_add", "ideal_add_v1",
}

# check name -> case keys it needs
CHECKS = {
    "axioms": (),
    "exp": (),
    "morphism": ("target",),
    "equalizer": ("target",),
    "morphism_generators": ("target", "generators"),
    "kernel_lemma": ("target",),
    "unique_generators": ("second",),
    "sub_dp": ("sub_ideal",),
    "restrict": ("sub_ideal",),
    "inter_sub_dp": ("sub_ideal",),
    "mul_sub_dp": (),
    "span_sub_dp": ("span_set",),
    "lattice": (),
    "quotient": ("quotient_by",),
    "ideal_add_equiv": (),
    "ideal_add_uniqueness": ("second",),
    "padic_valuation": (),
}


def _as_construction(spec) -> dict:
    c = spec.get("construction")
    if isinstance(c, str):
        return {"name": c, "params": {}, "corrupt": []}
    if isinstance(c, dict):
        out = {"name": c.get("name"), "params": dict(c.get("params", {})), "corrupt": list(c.get("corrupt", []))}
        for k, v in c.items():
            if k not in ("name", "params", "corrupt"):
                out["params"][k] = v
        return out
    raise ConfigError(f"missing construction in {spec}")


def _validate_structure(spec: dict, ring_text: str, where: str) -> None:
    ring_text = spec.get("ring", ring_text)
    try:
        R = parse_ring(ring_text)
    except RingError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    c = _as_construction(spec)
    if c["name"] not in CONSTRUCTIONS:
        raise ConfigError(f"{where}: unknown construction {c['name']!r}")
    try:
        for g in spec.get("ideal", []):
            R(str(g))
        for n, x, v in c["corrupt"]:
            int(n), R(str(x)), R(str(v))
    except (RingError, ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: bad element: {exc}") from exc
    for key in ("left", "right", "of", "target"):
        sub = c["params"].get(key)
        if isinstance(sub, dict):
            _validate_structure(sub, ring_text, f"{where}.{key}")


@dataclass
class Case:
    name: str
    spec: dict
    checks: list
    n_bound: int
    degree_cap: int
    mode: str
    seed: int | None
    count: int
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def ring(self):
        return parse_ring(self.spec["ring"])

    def structure(self) -> D.DividedPowerStructure:
        if "dp" not in self._cache:
            self._cache["dp"] = build_structure(self.spec, self.spec["ring"], self.n_bound)
        return self._cache["dp"]

    def sub(self, key: str) -> D.DividedPowerStructure:
        if key not in self._cache:
            self._cache[key] = build_structure(self.spec[key], self.spec["ring"], self.n_bound)
        return self._cache[key]

    def elements(self, key: str) -> list:
        R = self.structure().ring
        return [R(str(x)) for x in self.spec[key]]

    def ideal(self, key: str):
        R = self.structure().ring
        return span(R, self.elements(key))

    def hom(self) -> RingHomHandle:
        src, tgt = self.structure(), self.sub("target")
        kind = self.spec.get("hom", "natural")
        if kind == "natural":
            return natural_hom(src.ring, tgt.ring)
        if kind == "padic_lift":
            return padic_lift(src.ring)
        raise ConfigError(f"unknown hom {kind!r}")

    def witness_context(self, check: str):
        """The object a witness from ``check`` replays against."""
        if check in ("morphism", "equalizer", "morphism_generators", "kernel_lemma"):
            return D.DPMorphismWitness(self.hom(), self.structure(), self.sub("target"))
        if check in ("unique_generators", "ideal_add_uniqueness"):
            ref = self.structure()
            if check == "ideal_add_uniqueness":
                ref = C.ideal_add_dp(ref.meta["input"])
            return (ref, self.sub("second"))
        return self.structure()


@dataclass
class Suite:
    cases: list
    output: str | None = None


def build_structure(spec: dict, default_ring: str, n_bound: int) -> D.DividedPowerStructure:
    R = parse_ring(spec.get("ring", default_ring))
    ring_text = str(R)
    c = _as_construction(spec)
    name, params = c["name"], c["params"]
    I = span(R, [R(str(g)) for g in spec.get("ideal", [])])

    def nested(key):
        return build_structure(params[key], ring_text, n_bound)

    if name == "trivial":
        dp = C.dp_trivial(R)
    elif name == "inverse_factorial":
        dp = C.dp_of_invertible_factorial(I, int(params["n"]))
    elif name == "square_zero":
        dp = C.dp_square_zero(I)
    elif name == "prime_nilpotent":
        dp = C.dp_prime_nilpotent(I, int(params["p"]))
    elif name == "char_p":
        dp = C.dp_char_p(I)
    elif name == "rat_algebra":
        dp = C.dp_rat_algebra(I)
    elif name == "padic":
        if not hasattr(R, "p"):
            raise ConfigError(f"padic construction needs a Zp ring, got {R}")
        dp = C.dp_padic(R.p, R.N)
    elif name == "induced":
        target = nested("target")
        hom = padic_lift(R) if params.get("hom") == "padic_lift" else natural_hom(R, target.ring)
        dp = C.dp_induced_via_hom(hom, target, I, n_bound)
    elif name == "restricted":
        dp = D.restrict_dp(nested("of"), I, n_bound)
    elif name == "quotient":
        parent = nested("of")
        _, f = quotient_ring(parent.ring, span(parent.ring, [parent.ring(str(g)) for g in params["by"]]))
        dp = D.quotient_dp(parent, f, n_bound)
    elif name in ("ideal_add", "ideal_add_v1"):
        inp = C.IdealAddInput(nested("left"), nested("right"), int(params.get("compat_bound", n_bound)))
        dp = C.ideal_add_dp(inp) if name == "ideal_add" else C.ideal_add_dp_v1(inp)
    else:
        raise ConfigError(f"unknown construction {name!r}")
    if c["corrupt"]:
        overrides = {(int(n), dp.ring(str(x))): dp.ring(str(v)) for n, x, v in c["corrupt"]}
        n_max = n_bound if dp.n_max is None else min(n_bound, dp.n_max)
        inner = dp
        dp = dp.tabulate(n_max, overrides)
        dp.meta.update({k: v for k, v in inner.meta.items() if k == "input"})
    return dp


def load_suite(path: str) -> Suite:
    """Parse and validate a suite file; raises :class:`ConfigError` on any problem."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    suite = raw.get("suite", {})
    mode = suite.get("mode", "exhaustive")
    seed = suite.get("seed")
    if "DPVERIFY_SEED" in os.environ:
        try:
            seed = int(os.environ["DPVERIFY_SEED"])
        except ValueError as exc:
            raise ConfigError("DPVERIFY_SEED must be an integer") from exc
    cases = []
    for i, spec in enumerate(raw.get("case", [])):
        name = spec.get("name", f"case{i}")
        if "ring" not in spec:
            raise ConfigError(f"{name}: missing ring")
        case_mode = spec.get("mode", mode)
        if case_mode not in ("exhaustive", "sampled"):
            raise ConfigError(f"{name}: unknown mode {case_mode!r}")
        case_seed = spec.get("seed", seed) if "DPVERIFY_SEED" not in os.environ else seed
        if case_mode == "sampled" and case_seed is None:
            raise ConfigError(f"{name}: sampled mode needs a seed")
        checks = list(spec.get("checks", ["axioms"]))
        for check in checks:
            if check not in CHECKS:
                raise ConfigError(f"{name}: unknown check {check!r}")
            for key in CHECKS[check]:
                if key not in spec:
                    raise ConfigError(f"{name}: check {check!r} needs {key!r}")
        _validate_structure(spec, spec["ring"], name)
        for key in ("target", "second"):
            if key in spec:
                _validate_structure(spec[key], spec["ring"], f"{name}.{key}")
        R = parse_ring(spec["ring"])
        for key in ("sub_ideal", "span_set", "generators", "quotient_by"):
            try:
                [R(str(x)) for x in spec.get(key, [])]
            except (RingError, ValueError) as exc:
                raise ConfigError(f"{name}: bad element in {key}: {exc}") from exc
        cases.append(Case(name, spec, checks, int(spec.get("n_bound", suite.get("n_bound", 6))),
                          int(spec.get("degree_cap", suite.get("degree_cap", 8))), case_mode,
                          case_seed, int(spec.get("count", suite.get("count", 200)))))
    if not cases:
        raise ConfigError(f"{path}: no [[case]] entries")
    return Suite(cases, suite.get("output"))


# -- checks ------------------------------------------------------------------------------


def _exp_check(case: Case) -> D.VerificationReport:
    dp = case.structure()
    cap = case.degree_cap if dp.n_max is None else min(case.degree_cap, dp.n_max)
    t = D._Tally("dp_exp_certificates", "dp_exp", {"mode": "exhaustive"}, {"n_bound": cap, "seed": None})
    for a in dp.ideal.elements():
        try:
            dp_exp(dp, a, cap)
            t.record({"x": a}, (True, None, None))
        except NotExponential as exc:
            t.record({"x": a}, (False, "exponential", f"fails at {exc.certificate.witness}"))
    subs = [t.report()]
    try:
        subs.append(dp_exp_linear(dp, cap).report)
    except Exception as exc:  # linear map refusal carries its report
        subs.append(getattr(exc, "report", None) or _error_report("dp_exp_linear", exc))
    return D.combine("exp", subs, n_bound=cap, seed=None)


def _quotient_check(case: Case) -> D.VerificationReport:
    dp = case.structure()
    J = case.ideal("quotient_by")
    _, f = quotient_ring(dp.ring, J)
    n = case.n_bound
    q = D.quotient_dp(dp, f, n)
    hyp, welldef = q.meta["audits"]
    axioms = D.check_axioms(q, n)
    morph = D.is_dp_morphism(D.DPMorphismWitness(f, dp, q), n)
    table = q.tabulate(n)
    unique = D.quotient_uniqueness(dp, f, table, n)
    return D.combine("quotient", [hyp, welldef, axioms, morph, unique], n_bound=n, seed=None,
                     quotient=str(f.target))


def _run_check(case: Case, check: str) -> D.VerificationReport:
    n, dp = case.n_bound, case.structure()
    if check == "axioms":
        return D.check_axioms(dp, n, case.mode, case.count, case.seed)
    if check == "exp":
        return _exp_check(case)
    if check in ("morphism", "equalizer", "morphism_generators", "kernel_lemma"):
        w = case.witness_context(check)
        if check == "morphism":
            return D.is_dp_morphism(w, n, case.mode, case.count, case.seed)
        if check == "equalizer":
            return D.dp_equalizer(w.hom, w.source, w.target, n)[1]
        if check == "morphism_generators":
            return D.dp_morphism_from_generators(w.hom, w.source, w.target, case.elements("generators"), n)
        return D.kernel_lemma(w, n)
    if check == "unique_generators":
        gens = case.elements("generators") if "generators" in case.spec else dp.ideal.generators
        return D.dp_unique_on_generators(dp, case.sub("second"), gens, n)
    if check == "sub_dp":
        return D.is_sub_dp_ideal(dp, case.ideal("sub_ideal"), n)
    if check == "restrict":
        r = D.restrict_dp(dp, case.ideal("sub_ideal"), n)
        report = D.check_axioms(r, n)
        report.check = "restrict"
        return report
    if check == "inter_sub_dp":
        return D.inter_sub_dp_iff(dp, case.ideal("sub_ideal"), n)
    if check == "mul_sub_dp":
        Js = [case.ideal("sub_ideal")] if "sub_ideal" in case.spec else enumerate_ideals(dp.ring)
        return D.combine("mul_sub_dp", [D.mul_sub_dp(dp, J, n) for J in Js], n_bound=n, seed=None)
    if check == "span_sub_dp":
        return D.span_sub_dp_iff(dp, case.elements("span_set"), n)
    if check == "lattice":
        return D.check_lattice(dp, n)
    if check == "quotient":
        return _quotient_check(case)
    if check == "ideal_add_equiv":
        inp = dp.meta.get("input")
        if inp is None:
            raise ConfigError("ideal_add_equiv needs an ideal_add construction")
        return C.ideal_add_report(inp, n)
    if check == "ideal_add_uniqueness":
        inp = dp.meta.get("input")
        if inp is None:
            raise ConfigError("ideal_add_uniqueness needs an ideal_add construction")
        return C.ideal_add_uniqueness(inp, case.sub("second"), n)
    if check == "padic_valuation":
        p = case.spec.get("p") or getattr(dp.ring, "p", None)
        if p is None:
            raise ConfigError("padic_valuation needs p")
        return C.padic_valuation_check(int(p), int(case.spec.get("precision", 4)), n)
    raise ConfigError(f"unknown check {check!r}")


def _error_report(check: str, exc: Exception) -> D.VerificationReport:
    report = getattr(exc, "report", None)
    subs = [report] if report is not None else []
    witnesses = [] if report is not None else [{"relation": "refused", "inputs": {},
                                                "expected": "construction", "actual": str(exc)}]
    return D.VerificationReport(check, D.Status.FAIL, witnesses=witnesses, subreports=subs,
                                failures=max(1, report.failures if report else 1),
                                note=f"refused: {exc}")


def run_one(case: Case, check: str) -> dict:
    try:
        report = _run_check(case, check)
    except D.ConstructionRefused as exc:
        report = _error_report(check, exc)
    report.params = dict(report.params, case=case.name, n_bound=case.n_bound,
                         seed=case.seed if case.mode == "sampled" else report.params.get("seed"))
    if report.check != check:
        report.params["check_detail"] = report.check
        report.check = check
    return report.to_dict()


def run_suite(suite: Suite, jobs: int = 1) -> list[dict]:
    """Run every (case, check) pair; results come back in config order."""
    tasks = [(case, check) for case in suite.cases for check in case.checks]
    for case in suite.cases:
        try:
            case.structure()  # config errors surface before any check runs
        except D.ConstructionRefused:
            pass  # reported per check
    if jobs <= 1:
        return [run_one(c, k) for c, k in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda t: run_one(*t), tasks))


def render_human(reports: list[dict]) -> str:
    rows = [("case", "check", "status", "failures", "coverage")]
    for r in reports:
        cov = r["coverage"].get("mode", "")
        if cov == "sampled":
            cov += f"({r['coverage'].get('count')}, seed {r['coverage'].get('seed')})"
        rows.append((r["params"].get("case", ""), r["check"], r["status"].upper(), str(r["failures"]), cov))
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    for r in reports:
        for w in _first_witnesses(r):
            lines.append(f"  witness [{r['params'].get('case')}/{r['check']}] {w['relation']} "
                         f"{json.dumps(w['inputs'], sort_keys=True)}: expected {w['expected']}, got {w['actual']}")
    return "\n".join(lines)


def _first_witnesses(report: dict, limit: int = 3):
    out = list(report.get("witnesses", []))[:limit]
    for sub in report.get("subreports", []):
        if len(out) >= limit:
            break
        out.extend(_first_witnesses(sub, limit - len(out)))
    return out


def dumps(reports: list[dict]) -> str:
    return json.dumps(reports, indent=2, sort_keys=True) + "\n"


# -- entry points --------------------------------------------------------------------


def _cmd_run(args) -> int:
    try:
        suite = load_suite(args.file)
        reports = run_suite(suite, args.jobs)
    except (ConfigError, RingError, KeyError, ValueError) as exc:
        print(f"dpverify: config error: {exc}", file=sys.stderr)
        return 2
    output = args.output or suite.output
    text = dumps(reports)
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    if args.human:
        print(render_human(reports))
    elif not output:
        sys.stdout.write(text)
    return 0 if all(r["status"] == "pass" for r in reports) else 1


def _parse_vars(text: str | None, default: tuple) -> tuple:
    return tuple(v.strip() for v in text.split(",")) if text else default


def _cmd_eval(args) -> int:
    try:
        R = parse_ring(args.ring)
        names = _parse_vars(args.vars, ("X",))
        f = mvps.parse_series(args.series, R, args.cap, names)
        target = parse_ring(args.target) if args.target else R
        point = [target(a) for a in args.at]
        if len(point) != len(names):
            raise ConfigError(f"need {len(names)} values for --at")
    except (RingError, ValueError) as exc:
        print(f"dpverify: {exc}", file=sys.stderr)
        return 2
    if args.totalized:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            value = mvps.eval_total(f, point)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        print(value)
        return 0
    try:
        print(mvps.eval(f, point))
    except mvps.EvaluationRefused as exc:
        print(f"dpverify: {exc}", file=sys.stderr)
        return 1
    return 0


def _cmd_subst(args) -> int:
    try:
        R = parse_ring(args.ring)
        names = _parse_vars(args.vars, ("X",))
        out_names = _parse_vars(args.out_vars, ("Y",))
        f = mvps.parse_series(args.series, R, args.cap, names)
        out_cap = args.out_cap if args.out_cap is not None else args.cap
        b = {}
        for item in args.with_:
            var, _, text = item.partition("=")
            if var.strip() not in names or not text:
                raise ConfigError(f"bad --with {item!r}; expected VAR=SERIES")
            b[var.strip()] = mvps.parse_series(text, R, out_cap, out_names)
        if set(b) != set(names):
            raise ConfigError("every variable needs a --with")
    except (RingError, ValueError) as exc:
        print(f"dpverify: {exc}", file=sys.stderr)
        return 2
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = mvps.subst(f, b, polynomial=args.polynomial)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except mvps.SubstitutionRefused as exc:
        if not args.totalized:
            print(f"dpverify: {exc}", file=sys.stderr)
            return 1
        print(f"warning: totalized substitution returns 0: {exc}", file=sys.stderr)
        result = mvps.TruncatedSeries(R, out_names, out_cap)
    if args.json:
        print(json.dumps({"cap": result.cap, "terms": result.to_terms()}, sort_keys=True))
    else:
        print(result)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpverify", description="Exact divided power verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a TOML suite")
    p_run.add_argument("file")
    p_run.add_argument("--human", action="store_true", help="print a table instead of JSON")
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--output", "-o", help="write the JSON report here")
    p_run.set_defaults(func=_cmd_run)

    p_eval = sub.add_parser("eval", help="evaluate a truncated series at a nilpotent point")
    p_eval.add_argument("--ring", required=True)
    p_eval.add_argument("--series", required=True, help="e.g. '1 + 2X + X^3'")
    p_eval.add_argument("--cap", type=int, default=8)
    p_eval.add_argument("--vars", help="comma-separated variable names (default X)")
    p_eval.add_argument("--at", action="append", required=True, help="value for each variable, in order")
    p_eval.add_argument("--target", help="ring of the point, if different")
    p_eval.add_argument("--totalized", action="store_true", help="return 0 instead of refusing")
    p_eval.set_defaults(func=_cmd_eval)

    p_sub = sub.add_parser("subst", help="substitute series into a series")
    p_sub.add_argument("--ring", required=True)
    p_sub.add_argument("--series", required=True)
    p_sub.add_argument("--cap", type=int, default=8)
    p_sub.add_argument("--vars", help="variables of the series (default X)")
    p_sub.add_argument("--out-vars", help="variables of the substituted series (default Y)")
    p_sub.add_argument("--out-cap", type=int)
    p_sub.add_argument("--with", dest="with_", action="append", required=True, help="VAR=SERIES")
    p_sub.add_argument("--polynomial", action="store_true", help="the series is an exact polynomial")
    p_sub.add_argument("--totalized", action="store_true", help="return 0 instead of refusing")
    p_sub.add_argument("--json", action="store_true")
    p_sub.set_defaults(func=_cmd_subst)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
