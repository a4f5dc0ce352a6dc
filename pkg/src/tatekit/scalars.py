"""Exact arithmetic in a valued field with dense value group.

Scalars are finitely supported series ``sum q_e t**e`` with rational
exponents ``e`` and rational coefficients ``q_e``.  The absolute value is
``|t| = 1/2``, so the norm of a nonzero scalar is ``2**(-valuation)`` and
every norm used in this package is an exact power of two.  Norms are
therefore carried on a log-2 scale as :class:`LogNorm` values.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, total_ordering
from typing import Iterable, Mapping, Union

from .errors import ZeroInverse

Rational = Union[int, Fraction]


def as_fraction(value: Rational | str) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {value!r}")


def format_fraction(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


@total_ordering
class LogNorm:
    """Exact ``log2`` of a norm value; ``BOTTOM`` stands for the norm of zero.

    Addition is the log of a product of norms (``BOTTOM`` absorbs), and
    :meth:`join` is the log of a maximum (``BOTTOM`` is its identity).
    """

    __slots__ = ("_value",)

    def __init__(self, value: Rational | str | None):
        self._value = None if value is None else as_fraction(value)

    @property
    def value(self) -> Fraction | None:
        return self._value

    @property
    def is_bottom(self) -> bool:
        return self._value is None

    @staticmethod
    def coerce(other: LogNorm | Rational) -> LogNorm:
        return other if isinstance(other, LogNorm) else LogNorm(other)

    def join(self, other: LogNorm | Rational) -> LogNorm:
        if not isinstance(other, LogNorm):
            other = LogNorm(other)
        if other._value is None:
            return self
        if self._value is None or other._value > self._value:
            return other
        return self

    def __add__(self, other: LogNorm | Rational) -> LogNorm:
        other = LogNorm.coerce(other)
        if self._value is None or other._value is None:
            return BOTTOM
        return LogNorm(self._value + other._value)

    __radd__ = __add__

    def scale(self, k: Rational) -> LogNorm:
        """Log of ``norm**k``; only defined for ``k >= 0`` on BOTTOM."""
        k = as_fraction(k)
        if self._value is None:
            if k < 0:
                raise ValueError("negative power of the zero norm")
            return BOTTOM if k > 0 else LogNorm(0)
        return LogNorm(self._value * k)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            other = LogNorm(other)
        if not isinstance(other, LogNorm):
            return NotImplemented
        return self._value == other._value

    def __lt__(self, other):
        if not isinstance(other, LogNorm):
            if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
                other = LogNorm(other)
            else:
                return NotImplemented
        if other._value is None:
            return False
        return self._value is None or self._value < other._value

    def __le__(self, other):
        if not isinstance(other, LogNorm):
            if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
                other = LogNorm(other)
            else:
                return NotImplemented
        if self._value is None:
            return True
        return other._value is not None and self._value <= other._value

    def __hash__(self):
        return hash(self._value)

    def __repr__(self):
        return "LogNorm(BOTTOM)" if self._value is None else f"LogNorm({self._value})"

    def __str__(self):
        return self.to_json()

    def to_json(self) -> str:
        return "bottom" if self._value is None else format_fraction(self._value)

    @classmethod
    def from_json(cls, text: str) -> LogNorm:
        return BOTTOM if text.strip() == "bottom" else cls(text)


BOTTOM = LogNorm(None)


def join_all(values: Iterable[LogNorm]) -> LogNorm:
    out = BOTTOM
    for v in values:
        out = out.join(v)
    return out


@dataclass(frozen=True)
class ValuedScalar:
    """Finitely supported series in ``t`` with rational exponents.

    ``terms`` is a tuple of ``(exponent, coefficient)`` pairs sorted by
    exponent, with every coefficient nonzero.
    """

    terms: tuple[tuple[Fraction, Fraction], ...] = ()

    @classmethod
    def from_mapping(cls, mapping: Mapping[Rational, Rational]) -> ValuedScalar:
        clean = {}
        for e, q in mapping.items():
            q = as_fraction(q)
            if q:
                clean[as_fraction(e)] = q
        return cls(tuple(sorted(clean.items())))

    @classmethod
    def const(cls, q: Rational) -> ValuedScalar:
        return cls.from_mapping({0: q})

    @classmethod
    def mono(cls, exponent: Rational, coeff: Rational = 1) -> ValuedScalar:
        """``coeff * t**exponent``."""
        return cls.from_mapping({exponent: coeff})

    def as_dict(self) -> dict[Fraction, Fraction]:
        return dict(self.terms)

    def __bool__(self):
        return bool(self.terms)

    @property
    def valuation(self) -> Fraction | None:
        return self.terms[0][0] if self.terms else None

    @cached_property
    def norm(self) -> LogNorm:
        return BOTTOM if not self.terms else LogNorm(-self.terms[0][0])

    @property
    def leading(self) -> tuple[Fraction, Fraction]:
        if not self.terms:
            raise ValueError("zero scalar has no leading term")
        return self.terms[0]

    def __add__(self, other: ValuedScalar | Rational) -> ValuedScalar:
        other = _coerce(other)
        acc = dict(self.terms)
        for e, q in other.terms:
            acc[e] = acc.get(e, 0) + q
        return ValuedScalar.from_mapping(acc)

    __radd__ = __add__

    def __neg__(self) -> ValuedScalar:
        return ValuedScalar(tuple((e, -q) for e, q in self.terms))

    def __sub__(self, other: ValuedScalar | Rational) -> ValuedScalar:
        return self + (-_coerce(other))

    def __rsub__(self, other: ValuedScalar | Rational) -> ValuedScalar:
        return _coerce(other) - self

    def __mul__(self, other: ValuedScalar | Rational) -> ValuedScalar:
        other = _coerce(other)
        if not self.terms or not other.terms:
            return ZERO
        if len(other.terms) == 1:
            e2, q2 = other.terms[0]
            return ValuedScalar(tuple((e + e2, q * q2) for e, q in self.terms))
        acc: dict[Fraction, Fraction] = {}
        for e1, q1 in self.terms:
            for e2, q2 in other.terms:
                acc[e1 + e2] = acc.get(e1 + e2, 0) + q1 * q2
        return ValuedScalar.from_mapping(acc)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> ValuedScalar:
        if k < 0:
            raise ValueError("use inverse_trunc for negative powers")
        out, base = ONE, self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def exact_inverse(self) -> ValuedScalar:
        """Inverse of a monomial scalar (always exact)."""
        if not self.terms:
            raise ZeroInverse("inverse of zero scalar")
        if len(self.terms) != 1:
            raise ValueError("exact inverse only exists for monomial scalars")
        e, q = self.terms[0]
        return ValuedScalar(((-e, 1 / q),))

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, q in self.terms:
            parts.append(f"{q}" if e == 0 else f"{q}*t^({e})")
        return " + ".join(parts)

    def to_json(self) -> list[list[str]]:
        return [[format_fraction(e), str(q.numerator), str(q.denominator)] for e, q in self.terms]

    @classmethod
    def from_json(cls, data: list[list[str]]) -> ValuedScalar:
        return cls.from_mapping({Fraction(e): Fraction(int(n), int(d)) for e, n, d in data})


def _coerce(value: ValuedScalar | Rational) -> ValuedScalar:
    if isinstance(value, ValuedScalar):
        return value
    return ValuedScalar.const(value)


ZERO = ValuedScalar()
ONE = ValuedScalar.const(1)


def scalar_add(a: ValuedScalar, b: ValuedScalar) -> ValuedScalar:
    return a + b


def scalar_mul(a: ValuedScalar, b: ValuedScalar) -> ValuedScalar:
    return a * b


def scalar_inverse_trunc(a: ValuedScalar, precision: Rational) -> ValuedScalar:
    """Truncated inverse: every exponent of ``a*b - 1`` is ``>= precision``.

    Writes ``a = c t**v (1 + u)`` with ``u`` of positive valuation and sums
    the geometric series in ``-u`` until the error term is small enough.
    Terms of the result whose product with ``a`` can only land at exponent
    ``>= precision`` are dropped, except the leading term.
    """
    if not a:
        raise ZeroInverse("inverse of zero scalar")
    precision = as_fraction(precision)
    v, c = a.leading
    lead_inv = ValuedScalar(((-v, 1 / c),))
    u = a * lead_inv - ONE
    if not u:
        return lead_inv
    step = u.valuation
    neg_u = -u
    # (K+1) * step >= precision - 0 makes (-u)**(K+1) negligible
    n_terms = max(1, -(-precision // step)) if precision > 0 else 1
    acc, power = ONE, ONE
    for _ in range(n_terms - 1):
        power = power * neg_u
        acc = acc + power
    b = acc * lead_inv
    cutoff = precision - v
    kept = [(e, q) for i, (e, q) in enumerate(b.terms) if i == 0 or e < cutoff]
    return ValuedScalar(tuple(kept))


def density_witness(p: Rational, q: Rational) -> ValuedScalar:
    """A scalar whose LogNorm lies strictly between ``p < q``."""
    p, q = as_fraction(p), as_fraction(q)
    if not p < q:
        raise ValueError("need p < q")
    return ValuedScalar.mono(-(p + q) / 2)
