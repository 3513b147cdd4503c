import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dpverify.exactring import (
    InfiniteRingError,
    IntegersMod,
    MonomialQuotient,
    Rationals,
    RingError,
    TruncatedPadic,
    characteristic,
    enumerate_elements,
    is_nilpotent,
    nilpotency_index,
    parse_ring,
    ring_inverse,
)
from dpverify.ideals import precision_drop

RING_TEXTS = ["Q", "Z/12", "Z/9", "Zp:2^5", "Zp:3^3", "Z/2[x:2,y:2]", "Z/3[x:3]", "Q[x:3]", "Z/4[x:2]"]


@st.composite
def triples(draw, text):
    R = parse_ring(text)
    rng = random.Random(draw(st.integers(0, 2**32)))
    return R, R.sample(rng), R.sample(rng), R.sample(rng)


@pytest.mark.parametrize("text", RING_TEXTS)
@given(data=st.data())
def test_commutative_ring_laws(text, data):
    R, a, b, c = data.draw(triples(text))
    assert a + b == b + a
    assert a * b == b * a
    assert a * (b * c) == (a * b) * c
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert R.one * a == a
    assert a + (-a) == R.zero


@pytest.mark.parametrize("text", RING_TEXTS)
@given(data=st.data())
def test_canonical_form_round_trips(text, data):
    R, a, _, _ = data.draw(triples(text))
    assert R(str(a)) == a
    assert R(str(R(str(a)))) == R(str(a))


@pytest.mark.parametrize("text", ["Z/4", "Z/12", "Z/9", "Zp:2^4", "Z/2[x:2,y:2]", "Z/3[x:3]", "Z/4[x:2]"])
def test_ring_inverse_exhaustive(text):
    R = parse_ring(text)
    elems = list(R.elements())
    for a in elems:
        # brute-force oracle: search for an inverse
        units = [b for b in elems if a * b == R.one]
        inv = ring_inverse(a)
        if units:
            assert inv * a == R.one
            assert inv in units
        else:
            assert inv == R.zero


def test_ring_inverse_examples():
    Z4 = parse_ring("Z/4")
    assert ring_inverse(Z4(3)) == Z4(3)
    assert ring_inverse(Z4(2)) == Z4(0)
    Q = parse_ring("Q")
    assert ring_inverse(Q(0)) == Q(0)
    assert ring_inverse(Q("2/3")) == Q("3/2")
    R = parse_ring("Q[x:3]")
    assert ring_inverse(R("1+x")) == R("1 - x + x^2")


def test_is_nilpotent_examples():
    assert is_nilpotent(parse_ring("Z/8")(2), 8)
    assert not is_nilpotent(parse_ring("Q")(Fraction(1, 2)), 10)
    R = parse_ring("Z/2[x:2,y:2]")
    assert is_nilpotent(R("x+y"), 4)
    assert nilpotency_index(R("x+y")) == 2  # (x+y)^2 = 2xy = 0 in characteristic 2
    assert not is_nilpotent(R("x+y"), 1)


@pytest.mark.parametrize("text", ["Z/8", "Z/12", "Zp:3^3", "Z/2[x:2,y:2]", "Z/4[x:2]"])
def test_nilpotency_index_matches_brute_force(text):
    R = parse_ring(text)
    n = R.cardinality
    for a in R.elements():
        powers = [a ** k for k in range(1, n + 1)]
        oracle = next((k + 1 for k, p in enumerate(powers) if p.is_zero()), None)
        assert nilpotency_index(a) == oracle


def test_characteristic():
    assert characteristic(parse_ring("Z/9")) == 9
    assert characteristic(parse_ring("Q")) == 0
    assert characteristic(parse_ring("Z/3[x:3]")) == 3
    assert characteristic(parse_ring("Zp:2^8")) == 256


def test_enumerate_elements():
    assert [str(a) for a in enumerate_elements(parse_ring("Z/4"))] == ["0", "1", "2", "3"]
    F = parse_ring("Z/2[x:2]")
    assert sorted(str(a) for a in enumerate_elements(F)) == sorted(["0", "1", "x", "1+x"])
    with pytest.raises(InfiniteRingError):
        list(enumerate_elements(parse_ring("Q")))


@pytest.mark.parametrize("text", ["Z/4", "Z/12", "Zp:2^5", "Z/2[x:2,y:2]", "Z/3[x:3]"])
def test_cardinality_matches_enumeration(text):
    R = parse_ring(text)
    elems = list(R.elements())
    assert len(elems) == R.cardinality == len(set(elems))


def test_monomial_quotient_cardinality():
    assert parse_ring("Z/2[x:2,y:2]").cardinality == 2 ** 4
    assert parse_ring("Z/3[x:3]").cardinality == 3 ** 3
    assert not parse_ring("Q[x:3]").is_finite


def test_parse_ring_grammar():
    assert parse_ring("Q") == Rationals()
    assert parse_ring("Z/12") == IntegersMod(12)
    assert parse_ring("Zp:2^8") == TruncatedPadic(p=2, N=8)
    R = parse_ring("Z/2[x:2,y:2]")
    assert isinstance(R, MonomialQuotient) and R.names == ("x", "y") and R.caps == (2, 2)
    for bad in ["GF(4)", "Z/1", "Zp:4^2", "Z/2[x:0]", ""]:
        with pytest.raises(RingError):
            parse_ring(bad)


def test_truncated_padic_valuation_bookkeeping():
    R = parse_ring("Zp:3^5")
    assert R.valuation(R(18)) == 2
    assert R.valuation(R(0)) == 5  # read as ">= N"


@pytest.mark.parametrize("p,N,M", [(2, 5, 3), (3, 3, 1), (2, 4, 4)])
def test_precision_drop_is_a_ring_hom(p, N, M):
    f = precision_drop(TruncatedPadic(p=p, N=N), M)
    assert f.failures() == []


def test_mixed_rings_rejected():
    with pytest.raises(RingError):
        parse_ring("Z/4")(1) + parse_ring("Z/8")(1)


def test_fraction_coercion():
    Z9 = parse_ring("Z/9")
    assert Z9(Fraction(1, 2)) == Z9(5)
    with pytest.raises(RingError):
        Z9(Fraction(1, 3))
