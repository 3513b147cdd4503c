"""Replay every witness in a suite's JSON reports through the library."""

from dpverify.cli import load_suite
from dpverify.dpcore import replay_witness


def iter_witnesses(report):
    yield from report.get("witnesses", [])
    for sub in report.get("subreports", []):
        yield from iter_witnesses(sub)


def replay_suite_failures(path, reports):
    """Return ``(replayed, reproduced)`` counts over all failing reports."""
    cases = {c.name: c for c in load_suite(str(path)).cases}
    replayed = reproduced = 0
    for r in reports:
        if r["status"] != "fail":
            continue
        case = cases[r["params"]["case"]]
        ctx = case.witness_context(r["check"])
        for w in iter_witnesses(r):
            ok, expected, actual = replay_witness(ctx, w)
            replayed += 1
            if not ok and (expected, actual) == (w["expected"], w["actual"]):
                reproduced += 1
    return replayed, reproduced
