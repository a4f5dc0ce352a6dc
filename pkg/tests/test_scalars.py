from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import exponents, nonzero_scalars, scalars
from tatekit.errors import ZeroInverse
from tatekit.scalars import (
    BOTTOM,
    ONE,
    ZERO,
    LogNorm,
    ValuedScalar,
    density_witness,
    join_all,
    scalar_add,
    scalar_inverse_trunc,
    scalar_mul,
)

t = ValuedScalar.mono(1)


def test_add_cancellation():
    assert scalar_add(t, -t) == ZERO
    assert not scalar_add(t, -t).terms


def test_add_min_valuation():
    s = scalar_add(t, t ** 2)
    assert [e for e, _ in s.terms] == [1, 2]
    assert s.norm == LogNorm(-1)


def test_add_constant_cancels():
    s = scalar_add(ValuedScalar.const(3) + t, ValuedScalar.const(-3))
    assert s == t and s.norm == -1


def test_mul_examples():
    assert scalar_mul(t, t) == t ** 2
    assert scalar_mul(t, t).norm == -2
    assert scalar_mul(ONE + t, ONE - t) == ONE - t ** 2
    third = ValuedScalar.mono(Fraction(1, 3))
    assert scalar_mul(third, ValuedScalar.mono(Fraction(2, 3))) == t


def test_inverse_examples():
    assert scalar_inverse_trunc(t, 5) == ValuedScalar.mono(-1)
    assert scalar_inverse_trunc(ONE - t, 3) == ONE + t + t ** 2
    assert scalar_inverse_trunc(ValuedScalar.const(2), 1) == ValuedScalar.const(Fraction(1, 2))
    with pytest.raises(ZeroInverse):
        scalar_inverse_trunc(ZERO, 3)


def test_lognorm_order_and_laws():
    assert BOTTOM < LogNorm(-1000)
    assert (BOTTOM + LogNorm(3)).is_bottom
    assert BOTTOM.join(LogNorm(2)) == 2
    assert join_all([LogNorm(1), BOTTOM, LogNorm(Fraction(3, 2))]) == Fraction(3, 2)
    assert LogNorm.from_json(LogNorm(Fraction(-5, 3)).to_json()) == Fraction(-5, 3)
    assert LogNorm.from_json("bottom").is_bottom
    assert LogNorm(2).to_json() == "2/1"


@given(scalars, scalars)
def test_ultrametric(a, b):
    s = a + b
    assert s.norm <= a.norm.join(b.norm)
    if a.norm != b.norm:
        assert s.norm == a.norm.join(b.norm)


@given(scalars, scalars)
def test_multiplicative(a, b):
    assert (a * b).norm == a.norm + b.norm


@given(scalars, scalars, scalars)
def test_ring_axioms(a, b, c):
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a + b == b + a


@given(nonzero_scalars, st.integers(0, 6))
def test_inverse_precision(a, prec):
    b = scalar_inverse_trunc(a, prec)
    err = a * b - ONE
    assert all(e >= prec for e, _ in err.terms)


@given(exponents, exponents)
def test_density(p, q):
    if p == q:
        return
    p, q = min(p, q), max(p, q)
    assert p < density_witness(p, q).norm < q


@given(scalars)
def test_json_roundtrip(a):
    assert ValuedScalar.from_json(a.to_json()) == a
    assert all(isinstance(x, str) for triple in a.to_json() for x in triple)
