from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, strategies as st

from dpverify.combinat import uniform_bell
from dpverify.constructions import (
    IdealAddInput,
    ValuationBoundViolated,
    dp_char_p,
    dp_induced_via_hom,
    dp_of_invertible_factorial,
    dp_padic,
    dp_prime_nilpotent,
    dp_rat_algebra,
    dp_square_zero,
    dp_trivial,
    ideal_add_dp,
    ideal_add_dp_v1,
    ideal_add_report,
    ideal_add_uniqueness,
    padic_valuation_check,
)
from dpverify.dpcore import ConstructionRefused, Status, check_axioms, restrict_dp
from dpverify.exactring import padic_valuation, parse_ring
from dpverify.ideals import identity_hom, padic_lift, span, unit_ideal

from conftest import ideal


def test_trivial():
    R = parse_ring("Z/6")
    dp = dp_trivial(R)
    assert dp.ideal.is_zero()
    assert dp.dpow(0, 0) == R.one and dp.dpow(3, 0) == R.zero
    assert check_axioms(dp, 6).passed


def test_inverse_factorial_examples():
    Z4 = dp_square_zero(ideal("Z/4", "2"))
    assert Z4.dpow(1, 2) == Z4.ring(2) and Z4.dpow(2, 2).is_zero()
    Z9 = dp_square_zero(ideal("Z/9", "3"))
    assert Z9.dpow(2, 3).is_zero() and Z9.dpow(1, 6) == Z9.ring(6)
    R = parse_ring("Z/3[x:3]")
    dp = dp_of_invertible_factorial(span(R, [R("x")]), 3)
    assert dp.dpow(2, R("x")) == R("2*x^2")
    assert check_axioms(dp, 5).passed


def test_inverse_factorial_vanishes_from_n_on():
    R = parse_ring("Z/3[x:3]")
    dp = dp_of_invertible_factorial(span(R, [R("x")]), 3)
    for x in dp.ideal.elements():
        for m in range(3, 9):
            assert dp.dpow(m, x).is_zero()


def test_inverse_factorial_refusals():
    with pytest.raises(ConstructionRefused) as exc:
        dp_of_invertible_factorial(ideal("Z/4", "2"), 3)  # 2! is not a unit
    assert exc.value.report.status is Status.FAIL
    with pytest.raises(ConstructionRefused):
        dp_square_zero(ideal("Z/8", "2"))  # (2)^2 = (4) is not zero
    with pytest.raises(ValueError):
        dp_of_invertible_factorial(ideal("Z/4", "2"), 0)


def test_prime_nilpotent_and_char_p():
    dp = dp_prime_nilpotent(ideal("Z/2[x:2]", "x"), 2)
    assert check_axioms(dp, 6).passed
    with pytest.raises(ConstructionRefused):
        dp_prime_nilpotent(ideal("Z/9", "3"), 2)
    with pytest.raises(ValueError):
        dp_prime_nilpotent(ideal("Z/9", "3"), 4)
    dp = dp_char_p(ideal("Z/3[x:3]", "x"))
    assert check_axioms(dp, 6).passed
    with pytest.raises(ConstructionRefused):
        dp_char_p(ideal("Z/4", "2"))


def test_rat_algebra_examples():
    Q = parse_ring("Q")
    dp = dp_rat_algebra(unit_ideal(Q))
    assert dp.dpow(2, Fraction(1, 3)) == Q(Fraction(1, 18))
    assert dp.dpow(3, Fraction(1, 2)) == Q(Fraction(1, 48))
    assert dp.dpow(7, 0).is_zero()
    with pytest.raises(ValueError):
        dp_rat_algebra(ideal("Z/4", "2"))


@given(st.fractions(max_denominator=50).filter(lambda q: abs(q) < 20), st.integers(1, 4), st.integers(1, 4))
def test_rat_algebra_dpow_comp_on_monomials(c, m, n):
    # gamma_m(gamma_n(c x)) against the closed form in Q[x]
    R = parse_ring("Q[x:17]")
    dp = dp_rat_algebra(span(R, [R("x")]))
    a = R(c) * R("x")
    lhs = dp.dpow(m, dp.dpow(n, a))
    closed = R(Fraction(c) ** (m * n) / (factorial(n) ** m * factorial(m))) * R("x") ** (m * n)
    assert lhs == closed == R(uniform_bell(m, n)) * dp.dpow(m * n, a)


def test_padic_examples():
    dp = dp_padic(2, 8)
    assert dp.dpow(2, 2) == dp.ring(2)
    assert dp.dpow(2, 4) == dp.ring(8)
    dp3 = dp_padic(3, 5)
    assert dp3.dpow(3, 3) == dp3.ring(126)  # 27/6 = 9/2 mod 243
    assert (dp3.dpow(3, 3) * 2) == dp3.ring(9)
    assert dp_padic(5, 3).dpow(1, 5) == dp_padic(5, 3).ring(5)
    with pytest.raises(ValueError):
        dp_padic(2, 1)


@pytest.mark.parametrize("p,N", [(2, 8), (3, 5), (5, 3)])
def test_padic_values_are_in_the_ideal(p, N):
    dp = dp_padic(p, N)
    for x in dp.ideal.elements():
        for n in range(1, 9):
            y = dp.dpow(n, x)
            assert dp.ring.valuation(y) >= 1


def test_padic_claim_guard():
    dp = dp_padic(2, 4)
    with pytest.raises(ValuationBoundViolated):
        dp._fn(2, dp.ring(1))  # 1/2 is not 2-integral, the raw rule must not silently reduce it


@pytest.mark.parametrize("p,N", [(2, 6), (3, 4), (5, 3)])
def test_padic_valuation_check(p, N):
    r = padic_valuation_check(p, N, 8)
    assert r.passed
    assert r.find("routes_agree").params["evaluated"] == (p ** (N - 1) - 1) * 8


def test_padic_axioms():
    assert check_axioms(dp_padic(2, 6), 6).passed
    assert check_axioms(dp_padic(3, 4), 6).passed


def test_induced_along_identity():
    target = dp_square_zero(ideal("Z/16", "4"))
    dp = dp_induced_via_hom(identity_hom(target.ring), target, target.ideal)
    assert all(dp.dpow(n, x) == target.dpow(n, x) for x in target.ring.elements() for n in range(7))


def test_induced_from_rationals_matches_padic():
    R = parse_ring("Zp:3^4")
    I = span(R, [R(3)])
    Q = parse_ring("Q")
    dp = dp_induced_via_hom(padic_lift(R), dp_rat_algebra(unit_ideal(Q)), I, n_bound=8)
    ref = dp_padic(3, 4)
    for x in I.elements():
        for n in range(9):
            assert dp.dpow(n, x) == ref.dpow(n, x)


def test_induced_refused_on_span_mismatch():
    target = dp_square_zero(ideal("Z/16", "4"))
    with pytest.raises(ConstructionRefused) as exc:
        dp_induced_via_hom(identity_hom(target.ring), target, ideal("Z/16", "8"))
    assert exc.value.report.status is Status.FAIL


# -- sums of ideals --------------------------------------------------------------------


@pytest.fixture
def xy_input():
    R = parse_ring("Z/2[x:2,y:2]")
    return IdealAddInput(dp_square_zero(span(R, [R("x")])), dp_square_zero(span(R, [R("y")])))


def test_ideal_add_examples(xy_input):
    R = xy_input.ring
    dp = ideal_add_dp(xy_input)
    assert dp.ideal == span(R, [R("x"), R("y")])
    assert dp.dpow(2, R("x+y")) == R("x*y")  # x*y from the cross term, the squares vanish
    assert dp.dpow(3, R("x+y")).is_zero()
    assert check_axioms(dp, 6).passed


def test_ideal_add_routes_agree(xy_input):
    v1, v2 = ideal_add_dp_v1(xy_input), ideal_add_dp(xy_input)
    for z in v2.ideal.elements():
        for n in range(7):
            assert v1.dpow(n, z) == v2.dpow(n, z)


def test_ideal_add_report(xy_input):
    r = ideal_add_report(xy_input)
    assert r.passed
    names = {s.check for s in r.subreports}
    assert {"pointwise_equal", "axioms_v1", "axioms_v2", "uniqueness_v1", "uniqueness_v2"} <= names


def test_ideal_add_overlapping_ideals():
    left = dp_square_zero(ideal("Z/16", "4"))
    right = restrict_dp(left, ideal("Z/16", "8"))
    inp = IdealAddInput(left, right)
    dp = ideal_add_dp(inp)
    assert all(dp.dpow(n, x) == left.dpow(n, x) for x in left.ideal.elements() for n in range(7))


def test_ideal_add_refuses_disagreement():
    Z4 = dp_square_zero(ideal("Z/4", "2"))
    other = Z4.tabulate(6, {(2, "2"): "2", (4, "2"): "2"})
    with pytest.raises(ConstructionRefused) as exc:
        IdealAddInput(Z4, other)
    w = exc.value.report.witnesses[0]
    assert w["inputs"] == {"n": 2, "x": "2"}


def test_ideal_add_uniqueness_detects_perturbation(xy_input):
    ref = ideal_add_dp(xy_input)
    assert ideal_add_uniqueness(xy_input, ref.tabulate(6)).passed
    bad = ref.tabulate(6, {(2, "x+y"): "0"})
    r = ideal_add_uniqueness(xy_input, bad)
    assert r.status is Status.FAIL
    assert r.params["hypothesis"] == "pass" and r.params["conclusion"] == "fail"
    bad_side = ref.tabulate(6, {(1, "x"): "0"})
    assert ideal_add_uniqueness(xy_input, bad_side).status is Status.INCONCLUSIVE
