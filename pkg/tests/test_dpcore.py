import json
from fractions import Fraction

import pytest

from dpverify.constructions import dp_padic, dp_rat_algebra, dp_square_zero, dp_trivial
from dpverify.dpcore import (
    AXIOMS,
    ConstructionRefused,
    DividedPowerStructure,
    DPMorphismWitness,
    DpowBoundError,
    Status,
    SubDPLattice,
    VerificationReport,
    check_axioms,
    check_lattice,
    dp_equalizer,
    dp_morphism_from_generators,
    dp_unique_on_generators,
    inter_sub_dp_iff,
    is_dp_morphism,
    is_sub_dp_ideal,
    kernel_lemma,
    mul_sub_dp,
    quotient_dp,
    quotient_uniqueness,
    replay_witness,
    restrict_dp,
    span_sub_dp_iff,
)
from dpverify.exactring import parse_ring
from dpverify.ideals import enumerate_ideals, identity_hom, mod_reduction, precision_drop, span, unit_ideal

from conftest import ideal


@pytest.fixture
def z16():
    return dp_square_zero(ideal("Z/16", "4"))


@pytest.fixture
def z16_to_z8(z16):
    return DPMorphismWitness(mod_reduction(z16.ring, 8), z16, dp_square_zero(ideal("Z/8", "4")))


def leaves(report):
    if not report.subreports:
        yield report
    for s in report.subreports:
        yield from leaves(s)


def all_witnesses(report):
    for leaf in leaves(report):
        yield from leaf.witnesses


# -- dpow -------------------------------------------------------------------------


def test_dpow_examples():
    Q = parse_ring("Q")
    assert dp_rat_algebra(unit_ideal(Q)).dpow(3, Fraction(1, 2)) == Q(Fraction(1, 48))
    dp = dp_square_zero(ideal("Z/4", "2"))
    assert dp.dpow(2, 2) == dp.ring(0)
    assert dp.dpow(5, 1) == dp.ring(0)  # 1 is off the ideal
    assert dp.dpow(0, 3) == dp.ring(0)  # total convention: zero off the ideal for every n


def test_tabulated_bound_error(z16):
    table = z16.tabulate(4)
    assert table.dpow(4, 4) == z16.dpow(4, 4)
    with pytest.raises(DpowBoundError):
        table.dpow(5, 4)
    assert table.dpow(9, 3) == table.ring.zero  # off the ideal there is nothing to look up


def test_tabulate_rejects_overrides_outside_table(z16):
    with pytest.raises(KeyError):
        z16.tabulate(3, {(2, "3"): "0"})


# -- axioms -----------------------------------------------------------------------


def test_check_axioms_reports_each_axiom(z16):
    r = check_axioms(z16, 6)
    assert r.passed and r.coverage == {"mode": "exhaustive"}
    assert [s.check for s in r.subreports] == list(AXIOMS) + ["dpow_null"]


def test_planted_gamma1_violation_is_caught(z16):
    bad = z16.tabulate(6, {(1, "4"): "0"})
    r = check_axioms(bad, 6)
    assert r.status is Status.FAIL
    one = r.find("dpow_one")
    assert one.status is Status.FAIL
    assert one.witnesses[0] == {"relation": "dpow_one", "inputs": {"x": "4"}, "expected": "4", "actual": "0"}


def test_fail_reports_carry_replayable_witnesses(z16):
    bad = z16.tabulate(6, {(2, "8"): "4", (1, "12"): "4"})
    r = check_axioms(bad, 6)
    ws = list(all_witnesses(r))
    assert ws
    for leaf in leaves(r):
        assert (leaf.status is Status.FAIL) == bool(leaf.witnesses)
    for w in ws:
        ok, expected, actual = replay_witness(bad, w)
        assert not ok and expected == w["expected"] and actual == w["actual"]


def test_sampled_mode_is_seeded_and_deterministic():
    dp = dp_rat_algebra(span(parse_ring("Q[x:3]"), [parse_ring("Q[x:3]")("x")]))
    a = check_axioms(dp, 5, mode="sampled", count=40, seed=7)
    b = check_axioms(dp, 5, mode="sampled", count=40, seed=7)
    assert a.passed
    assert a.coverage == {"mode": "sampled", "count": 40, "seed": 7}
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)
    with pytest.raises(ValueError):
        check_axioms(dp, 5, mode="sampled", count=40)
    with pytest.raises(ValueError):
        check_axioms(dp, 5)  # exhaustive on an infinite ideal


@pytest.mark.parametrize("dp", [
    dp_square_zero(ideal("Z/16", "4")), dp_padic(3, 3), dp_trivial(parse_ring("Z/6")),
    dp_square_zero(ideal("Z/2[x:2,y:2]", "x")),
])
def test_dpow_of_zero_vanishes(dp):
    assert all(dp.dpow(n, 0).is_zero() for n in range(1, 10))


def test_report_round_trip(z16):
    r = check_axioms(z16.tabulate(6, {(1, "4"): "0"}), 6)
    d = r.to_dict()
    assert VerificationReport.from_dict(d).to_dict() == d


# -- morphisms -------------------------------------------------------------------------


def test_identity_is_a_dp_morphism(z16):
    assert is_dp_morphism(DPMorphismWitness(identity_hom(z16.ring), z16, z16)).passed


def test_reduction_is_a_dp_morphism(z16_to_z8):
    assert is_dp_morphism(z16_to_z8).passed


def test_ideal_comp_failure(z16):
    target = dp_square_zero(ideal("Z/16", "8"))
    r = is_dp_morphism(DPMorphismWitness(identity_hom(z16.ring), z16, target))
    assert r.find("ideal_comp").status is Status.FAIL
    w = r.find("ideal_comp").witnesses[0]
    assert w["inputs"] == {"x": "4"}


def test_equalizer_for_a_dp_morphism_is_the_ideal(z16, z16_to_z8):
    eq, r = dp_equalizer(z16_to_z8.hom, z16, z16_to_z8.target)
    assert r.passed
    assert set(eq) == set(z16.ideal.elements())


def test_equalizer_with_incompatible_target_is_a_proper_ideal():
    src = dp_padic(2, 8)
    f = precision_drop(src.ring, 2)
    target = dp_square_zero(span(f.target, [f.target(2)]))
    eq, r = dp_equalizer(f, src, target)
    assert r.passed
    assert 0 < len(eq) < len(src.ideal)
    # independent oracle: x is in the equalizer iff every commuting square holds
    oracle = [x for x in src.ideal.elements()
              if all(target.dpow(n, f(x)) == f(src.dpow(n, x)) for n in range(7))]
    assert eq == oracle
    assert set(eq) == set(span(src.ring, [src.ring(4)]).elements())


def test_equalizer_precondition(z16):
    with pytest.raises(ValueError):
        dp_equalizer(identity_hom(z16.ring), z16, dp_square_zero(ideal("Z/16", "8")))


def test_morphism_from_generators(z16, z16_to_z8):
    r = dp_morphism_from_generators(z16_to_z8.hom, z16, z16_to_z8.target, ["4"])
    assert r.passed
    assert r.params["hypothesis"] == "pass" and r.params["conclusion"] == "pass"
    with pytest.raises(ValueError):
        dp_morphism_from_generators(z16_to_z8.hom, z16, z16_to_z8.target, ["8"])
    full = dp_morphism_from_generators(z16_to_z8.hom, z16, z16_to_z8.target, z16.ideal.elements())
    assert full.passed


def test_unique_on_generators(z16):
    assert dp_unique_on_generators(z16, z16.tabulate(6), ["4"]).passed
    Z4 = dp_square_zero(ideal("Z/4", "2"))
    # a second structure on (2) in Z/4, found by search over all tables up to n = 6
    other = Z4.tabulate(6, {(2, "2"): "2", (4, "2"): "2"})
    assert check_axioms(other, 6).passed
    r = dp_unique_on_generators(Z4, other, ["2"])
    assert r.status is Status.INCONCLUSIVE
    assert r.params["hypothesis"] == "fail"


# -- sub-dp-ideals ---------------------------------------------------------------------


def test_sub_dp_examples(z16):
    assert is_sub_dp_ideal(z16, z16.ideal).passed
    assert is_sub_dp_ideal(z16, ideal("Z/16")).passed
    assert is_sub_dp_ideal(z16, ideal("Z/16", "8")).passed
    assert is_sub_dp_ideal(z16, ideal("Z/16", "2")).find("is_subideal").status is Status.FAIL


def test_restrict(z16):
    same = restrict_dp(z16, z16.ideal)
    assert all(same.dpow(n, x) == z16.dpow(n, x) for x in z16.ring.elements() for n in range(7))
    zero = restrict_dp(z16, ideal("Z/16"))
    trivial = dp_trivial(z16.ring)
    assert all(zero.dpow(n, x) == trivial.dpow(n, x) for x in z16.ring.elements() for n in range(7))
    eight = restrict_dp(z16, ideal("Z/16", "8"))
    assert check_axioms(eight, 6).passed
    assert eight.dpow(1, 4).is_zero()
    bad = z16.tabulate(6, {(2, "8"): "4"})
    with pytest.raises(ConstructionRefused) as exc:
        restrict_dp(bad, ideal("Z/16", "8"))
    assert exc.value.report.status is Status.FAIL


def test_inter_sub_dp_iff(z16):
    for gens in ([], ["1"], ["8"], ["2"]):
        r = inter_sub_dp_iff(z16, ideal("Z/16", *gens))
        assert r.passed
    r = inter_sub_dp_iff(z16, ideal("Z/16", "8"))
    assert r.params["left"] is True and r.params["right"] is True
    bad = z16.tabulate(6, {(2, "8"): "4"})
    r = inter_sub_dp_iff(bad, ideal("Z/16", "8"))
    assert r.passed and r.params["left"] is False and r.params["right"] is False


def test_span_sub_dp_iff(z16):
    assert span_sub_dp_iff(z16, ["4"]).passed
    r = span_sub_dp_iff(z16, ["8"])
    assert r.passed and r.params["left"] and r.params["right"]
    bad = z16.tabulate(6, {(2, "8"): "4"})
    r = span_sub_dp_iff(bad, ["8"])
    assert r.passed and not r.params["left"] and not r.params["right"]


def test_mul_sub_dp(z16):
    for J in enumerate_ideals(z16.ring):
        assert mul_sub_dp(z16, J).passed
    assert mul_sub_dp(z16, ideal("Z/16", "2")).params["J"] == ["8"]


def test_kernel_lemma(z16_to_z8):
    assert kernel_lemma(z16_to_z8).passed


# -- lattice -------------------------------------------------------------------------------


def test_lattice_examples(z16):
    L = SubDPLattice(z16)
    assert L.Inf([]) == z16.ideal
    assert L.Inf([]) != unit_ideal(z16.ring)
    assert L.sup(ideal("Z/16", "8"), ideal("Z/16")) == ideal("Z/16", "8")
    assert L.span(["8"]) == ideal("Z/16", "8")
    assert L.top == z16.ideal and L.bot.is_zero()
    assert sorted(len(J) for J in L.members) == [1, 2, 4]


def test_lattice_span_against_brute_force():
    dp = dp_square_zero(ideal("Z/2[x:2,y:2]", "x"))
    L = SubDPLattice(dp)
    # oracle: smallest member containing S by direct search
    for s in dp.ideal.elements():
        containing = [J for J in L.members if J.mem(s)]
        least = min(containing, key=len)
        assert all(least <= J for J in containing)
        assert L.span([s]) == least == L.gamma_span([s])


@pytest.mark.parametrize("dp", [dp_square_zero(ideal("Z/16", "4")), dp_square_zero(ideal("Z/2[x:2]", "x")),
                                dp_square_zero(ideal("Z/2[x:2,y:2]", "x"))])
def test_check_lattice(dp):
    r = check_lattice(dp)
    assert r.passed, json.dumps(r.to_dict())[:2000]


# -- quotients ----------------------------------------------------------------------------


def test_quotient_identity(z16):
    q = quotient_dp(z16, identity_hom(z16.ring))
    assert all(q.dpow(n, x) == z16.dpow(n, x) for x in z16.ring.elements() for n in range(7))


def test_quotient_z16_to_z8(z16):
    f = mod_reduction(z16.ring, 8)
    q = quotient_dp(z16, f)
    assert q.ideal == ideal("Z/8", "4")
    assert check_axioms(q, 6).passed
    assert is_dp_morphism(DPMorphismWitness(f, z16, q)).passed
    hyp, welldef = q.meta["audits"]
    assert hyp.passed and welldef.passed and welldef.params["evaluated"] > 0
    assert quotient_uniqueness(z16, f, q.tabulate(6)).passed
    other = q.tabulate(6, {(2, "4"): "4"})
    assert quotient_uniqueness(z16, f, other).status is Status.INCONCLUSIVE


def test_quotient_refused_when_kernel_not_sub_dp(z16):
    bad = z16.tabulate(6, {(2, "8"): "4"})
    with pytest.raises(ConstructionRefused) as exc:
        quotient_dp(bad, mod_reduction(bad.ring, 8))
    w = next(all_witnesses(exc.value.report))
    ok, _, actual = replay_witness(bad, w)
    assert not ok and actual == "4"
