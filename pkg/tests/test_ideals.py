import itertools

import pytest

from dpverify.exactring import RingError, parse_ring
from dpverify.ideals import (
    UnsupportedQuotient,
    audit_ideal_list,
    enumerate_ideals,
    ideal_inf,
    ideal_mul,
    ideal_pow,
    ideal_sum,
    mod_reduction,
    quotient_ring,
    span,
    unit_ideal,
    zero_ideal,
)

from conftest import ideal

FINITE = ["Z/8", "Z/16", "Z/12", "Z/9", "Z/2[x:2]", "Z/2[x:2,y:2]", "Z/3[x:3]", "Zp:2^4"]


def brute_span(R, gens):
    """Oracle: close {0} u gens under + and multiplication by every ring element."""
    elems = list(R.elements())
    current = {R.zero} | set(gens)
    while True:
        new = {a + b for a in current for b in current} | {r * a for r in elems for a in current}
        if new <= current:
            return current
        current |= new


@pytest.mark.parametrize("text", FINITE)
def test_span_matches_brute_force(text):
    R = parse_ring(text)
    elems = list(R.elements())
    for g in elems:
        assert set(span(R, [g]).elements()) == brute_span(R, [g])
    for g, h in list(itertools.combinations(elems, 2))[:60]:
        assert set(span(R, [g, h]).elements()) == brute_span(R, [g, h])


def test_span_examples():
    assert [str(a) for a in ideal("Z/8", "2").elements()] == ["0", "2", "4", "6"]
    assert span(parse_ring("Z/8"), []).is_zero()
    assert ideal("Q", "5").is_unit_ideal()


def test_membership_examples():
    I = ideal("Z/8", "2")
    assert I.mem(parse_ring("Z/8")(6))
    assert not I.mem(parse_ring("Z/8")(3))
    P = ideal("Zp:3^5", "3")
    assert P.mem(P.ring(18))


def test_ideal_algebra_examples():
    assert ideal_sum(ideal("Z/16", "4"), ideal("Z/16", "8")) == ideal("Z/16", "4")
    assert ideal_inf(ideal("Z/2[x:2,y:2]", "x"), ideal("Z/2[x:2,y:2]", "y")) == ideal("Z/2[x:2,y:2]", "x*y")
    assert ideal_pow(ideal("Z/4", "2"), 2).is_zero()
    assert ideal_mul(ideal("Z/16", "4"), ideal("Z/16", "2")) == ideal("Z/16", "8")


def test_ideal_algebra_over_q_algebra():
    R = parse_ring("Q[x:3,y:2]")
    I, J = span(R, [R("x")]), span(R, [R("y")])
    assert ideal_inf(I, J) == span(R, [R("x*y")])
    assert ideal_pow(I, 3).is_zero()
    assert not ideal_pow(I, 2).is_zero()
    assert ideal_sum(I, J).mem(R("x + 3*y"))


def test_mixed_rings_rejected():
    with pytest.raises(RingError):
        ideal_sum(ideal("Z/4", "2"), ideal("Z/8", "2"))


@pytest.mark.parametrize("text", FINITE)
def test_enumerated_ideals_are_ideals_and_complete(text):
    R = parse_ring(text)
    ideals = enumerate_ideals(R)
    elems = list(R.elements())
    for I in ideals:
        members = set(I.elements())
        assert all(a + b in members for a in members for b in members)
        assert all(r * a in members for r in elems for a in members)
    assert audit_ideal_list(ideals) == []
    # every principal ideal found by brute force is in the list
    found = {frozenset(I.elements()) for I in ideals}
    assert all(frozenset(brute_span(R, [g])) in found for g in elems)


def test_enumerate_ideals_examples():
    assert [str(I.generators[0]) if I.generators else "0" for I in enumerate_ideals(parse_ring("Z/8"), 1)] \
        == ["0", "4", "2", "1"]
    assert len(enumerate_ideals(parse_ring("Z/7"), 1)) == 2
    assert len(enumerate_ideals(parse_ring("Z/2[x:2]"), 1)) == 3


@pytest.mark.parametrize("text", FINITE)
def test_sum_is_least_upper_bound_and_mul_below_inf(text):
    ideals = enumerate_ideals(parse_ring(text))
    for I, J in itertools.product(ideals, repeat=2):
        S = ideal_sum(I, J)
        assert I <= S and J <= S
        assert all(S <= K for K in ideals if I <= K and J <= K)
        assert ideal_mul(I, J) <= ideal_inf(I, J)


def test_quotient_examples():
    S, f = quotient_ring(parse_ring("Z/16"), ideal("Z/16", "8"))
    assert str(S) == "Z/8" and f.kind == "mod_reduction"
    S, f = quotient_ring(parse_ring("Z/4"), zero_ideal(parse_ring("Z/4")))
    assert str(S) == "Z/4" and f.kind == "identity"
    R = parse_ring("Z/2[x:2,y:2]")
    S, f = quotient_ring(R, span(R, [R("y")]))
    assert S.cardinality == 4 and str(S) == "Z/2[x:2]"
    with pytest.raises(UnsupportedQuotient):
        quotient_ring(R, span(R, [R("x+y")]))


@pytest.mark.parametrize("text,gens", [("Z/16", ["8"]), ("Z/12", ["4"]), ("Zp:2^4", ["4"]),
                                       ("Z/2[x:2,y:2]", ["y"]), ("Z/3[x:3]", ["x^2"])])
def test_projection_kernel_is_the_ideal(text, gens):
    R = parse_ring(text)
    J = span(R, [R(g) for g in gens])
    S, f = quotient_ring(R, J)
    assert set(f.fiber(S.zero)) == set(J.elements())
    assert f.is_surjective()
    assert f.failures() == []


def test_unit_and_zero_ideal():
    R = parse_ring("Z/6")
    assert unit_ideal(R).is_unit_ideal() and len(unit_ideal(R)) == 6
    assert len(zero_ideal(R)) == 1


def test_mod_reduction_requires_divisor():
    with pytest.raises(RingError):
        mod_reduction(parse_ring("Z/16"), 6)
