"""Sparse weighted Tate-algebra elements in the variables ``U, X, T``.

Elements are finitely supported maps from monomials ``U^u X^x T^t`` to
:class:`~tatekit.scalars.ValuedScalar`.  An :class:`AlgebraDescriptor`
fixes the weight of each monomial (the log of its Gauss-norm contribution)
and which monomials are admissible:

* ``FULL``       the polydisc ``k{U, r^-1 X}`` (optionally with ``T``).
* ``STAIRCASE``  the closed subalgebra ``k{r^-a_i U^i X^a_i}``: support in
                 ``x >= b_u``.
* ``LOCALIZED``  the image of the localisation at ``|X| <= 1`` of the
                 staircase algebra inside ``k<U>[[X]]``; same support, but a
                 monomial ``U^i X^j`` weighs ``b_i * log r`` independently of
                 ``j``.

Truncation caps bound the exponents.  Monomials that fall outside a cap in
a sum or product are dropped and the result carries ``truncated=True``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, NamedTuple

from .errors import DescriptorMismatch, NotInAlgebra, StaircaseViolation
from .scalars import (
    BOTTOM,
    ONE,
    ZERO,
    LogNorm,
    Rational,
    ValuedScalar,
    as_fraction,
    format_fraction,
)


def a_seq(i: int) -> int:
    """Least integer strictly greater than ``log2 i``; ``a_0 = 1``."""
    if i < 0:
        raise ValueError("a_seq is defined on naturals")
    if i == 0:
        return 1
    # bit_length is the least a with 2**a > i
    return i.bit_length()


def b_seq(i: int) -> int:
    return 0 if i == 0 else a_seq(i)


class Monomial(NamedTuple):
    u: int = 0
    x: int = 0
    t: int = 0

    def __mul__(self, other):  # type: ignore[override]
        return Monomial(self.u + other.u, self.x + other.x, self.t + other.t)

    def __str__(self):
        parts = [f"{v}^{e}" for v, e in (("U", self.u), ("X", self.x), ("T", self.t)) if e]
        return "*".join(parts) or "1"


class Support(enum.Enum):
    FULL = "full"
    STAIRCASE = "staircase"
    LOCALIZED = "localized"


@dataclass(frozen=True)
class AlgebraDescriptor:
    """Radii (log2) of ``U, X, T`` plus the support rule.

    ``r_log`` is the log radius of the staircase; it is required for
    STAIRCASE (where it equals ``radius_x``) and LOCALIZED.
    """

    radius_u: Fraction = Fraction(0)
    radius_x: Fraction = Fraction(0)
    radius_t: Fraction = Fraction(0)
    support: Support = Support.FULL
    laurent_t: bool = False
    r_log: Fraction | None = None

    def __post_init__(self):
        if self.support is Support.STAIRCASE:
            if self.radius_u != 0 or self.r_log is None or self.radius_x != self.r_log:
                raise ValueError("STAIRCASE needs radius_u = 0 and radius_x = r_log")
            if self.r_log <= 0:
                raise ValueError("STAIRCASE needs r > 1")
        if self.support is Support.LOCALIZED:
            if self.r_log is None or self.r_log <= 0:
                raise ValueError("LOCALIZED needs r_log > 0")
            if self.radius_u != 0 or self.radius_x != 0:
                raise ValueError("LOCALIZED weights come from b_i; radii must be 0")

    @classmethod
    def staircase(cls, r_log: Rational, laurent_t: bool = False) -> AlgebraDescriptor:
        r = as_fraction(r_log)
        return cls(Fraction(0), r, Fraction(0), Support.STAIRCASE, laurent_t, r)

    @classmethod
    def bidisc(cls, r_log: Rational, laurent_t: bool = False) -> AlgebraDescriptor:
        """The full algebra ``k{U, r^-1 X}`` containing the staircase."""
        r = as_fraction(r_log)
        return cls(Fraction(0), r, Fraction(0), Support.FULL, laurent_t, r)

    @classmethod
    def localized(cls, r_log: Rational, laurent_t: bool = False) -> AlgebraDescriptor:
        r = as_fraction(r_log)
        return cls(Fraction(0), Fraction(0), Fraction(0), Support.LOCALIZED, laurent_t, r)

    def weight(self, m: Monomial) -> Fraction:
        w = m.t * self.radius_t
        if self.support is Support.LOCALIZED:
            return w + b_seq(m.u) * self.r_log
        return w + m.u * self.radius_u + m.x * self.radius_x

    def admissible(self, m: Monomial) -> bool:
        if m.u < 0 or m.x < 0:
            return False
        if m.t < 0 and not self.laurent_t:
            return False
        if self.support is Support.FULL:
            return True
        return m.x >= b_seq(m.u)

    def to_json(self) -> dict:
        return {
            "radius_u": format_fraction(self.radius_u),
            "radius_x": format_fraction(self.radius_x),
            "radius_t": format_fraction(self.radius_t),
            "support": self.support.value,
            "laurent_t": self.laurent_t,
            "r_log": None if self.r_log is None else format_fraction(self.r_log),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> AlgebraDescriptor:
        return cls(
            Fraction(data["radius_u"]),
            Fraction(data["radius_x"]),
            Fraction(data["radius_t"]),
            Support(data["support"]),
            bool(data["laurent_t"]),
            None if data.get("r_log") is None else Fraction(data["r_log"]),
        )


def _min_cap(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


@dataclass(frozen=True, eq=False)
class TateElement:
    """Immutable sparse element; build with :meth:`make` to get validation."""

    algebra: AlgebraDescriptor
    coeffs: Mapping[Monomial, ValuedScalar] = field(default_factory=dict)
    trunc_u: int | None = None
    trunc_x: int | None = None
    trunc_t: int | None = None
    truncated: bool = False

    @classmethod
    def make(
        cls,
        algebra: AlgebraDescriptor,
        coeffs: Mapping[Monomial | tuple, ValuedScalar | Rational] | Iterable = (),
        *,
        trunc_u: int | None = None,
        trunc_x: int | None = None,
        trunc_t: int | None = None,
        truncated: bool = False,
        strict: bool = True,
    ) -> TateElement:
        """Validated constructor.

        With ``strict`` a non-admissible monomial raises :class:`NotInAlgebra`;
        otherwise such monomials (and those beyond the caps) are dropped and
        flagged as truncation.
        """
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        clean: dict[Monomial, ValuedScalar] = {}
        for m, c in items:
            m = Monomial(*m)
            if not isinstance(c, ValuedScalar):
                c = ValuedScalar.const(c)
            if not c:
                continue
            if not algebra.admissible(m):
                if strict:
                    raise NotInAlgebra(f"monomial {m} not admissible in {algebra.support.value}")
                truncated = True
                continue
            if _over_cap(m, trunc_u, trunc_x, trunc_t):
                truncated = True
                continue
            prev = clean.get(m)
            c = c if prev is None else prev + c
            if c:
                clean[m] = c
            else:
                clean.pop(m, None)
        return cls(algebra, clean, trunc_u, trunc_x, trunc_t, truncated)

    @classmethod
    def zero(cls, algebra: AlgebraDescriptor) -> TateElement:
        return cls(algebra, {})

    @classmethod
    def monomial(
        cls, algebra: AlgebraDescriptor, u: int = 0, x: int = 0, t: int = 0, coeff=ONE
    ) -> TateElement:
        return cls.make(algebra, {Monomial(u, x, t): coeff})

    def __bool__(self):
        return bool(self.coeffs)

    def __iter__(self) -> Iterator[tuple[Monomial, ValuedScalar]]:
        return iter(sorted(self.coeffs.items()))

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, m) -> ValuedScalar:
        return self.coeffs.get(Monomial(*m), ZERO)

    def __eq__(self, other):
        if not isinstance(other, TateElement):
            return NotImplemented
        return self.algebra == other.algebra and dict(self.coeffs) == dict(other.coeffs)

    __hash__ = None  # type: ignore[assignment]

    def term_lognorm(self, m: Monomial) -> LogNorm:
        return self.coeffs[m].norm + self.algebra.weight(m)

    def with_algebra(self, algebra: AlgebraDescriptor, strict: bool = True) -> TateElement:
        return TateElement.make(
            algebra,
            self.coeffs,
            trunc_u=self.trunc_u,
            trunc_x=self.trunc_x,
            trunc_t=self.trunc_t,
            truncated=self.truncated,
            strict=strict,
        )

    def scale(self, c: ValuedScalar | Rational) -> TateElement:
        if not isinstance(c, ValuedScalar):
            c = ValuedScalar.const(c)
        if not c:
            return replace(self, coeffs={})
        return replace(self, coeffs={m: v * c for m, v in self.coeffs.items()})

    def __add__(self, other: TateElement) -> TateElement:
        return series_add(self, other)

    def __neg__(self) -> TateElement:
        return self.scale(-1)

    def __sub__(self, other: TateElement) -> TateElement:
        return series_add(self, -other)

    def __mul__(self, other):
        if isinstance(other, TateElement):
            return series_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> TateElement:
        out = TateElement.monomial(self.algebra)
        out = replace(out, trunc_u=self.trunc_u, trunc_x=self.trunc_x, trunc_t=self.trunc_t)
        for _ in range(k):
            out = out * self
        return out

    def t_degree(self) -> int | None:
        return max((m.t for m in self.coeffs), default=None)

    def t_layer(self, h: int) -> TateElement:
        """Coefficient of ``T^h`` as a T-free element."""
        return TateElement(
            self.algebra,
            {Monomial(m.u, m.x, 0): c for m, c in self.coeffs.items() if m.t == h},
        )

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join(f"({c})*{m}" for m, c in self)

    def to_json(self) -> dict:
        return {
            "algebra": self.algebra.to_json(),
            "terms": [
                {"u": m.u, "x": m.x, "t": m.t, "scalar": c.to_json()} for m, c in self
            ],
            "trunc": {"u": self.trunc_u, "x": self.trunc_x, "t": self.trunc_t},
            "truncated": self.truncated,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> TateElement:
        trunc = data.get("trunc", {})
        return cls.make(
            AlgebraDescriptor.from_json(data["algebra"]),
            {
                Monomial(rec["u"], rec["x"], rec["t"]): ValuedScalar.from_json(rec["scalar"])
                for rec in data["terms"]
            },
            trunc_u=trunc.get("u"),
            trunc_x=trunc.get("x"),
            trunc_t=trunc.get("t"),
            truncated=bool(data.get("truncated", False)),
        )


def _over_cap(m: Monomial, cu, cx, ct) -> bool:
    return (
        (cu is not None and m.u > cu)
        or (cx is not None and m.x > cx)
        or (ct is not None and abs(m.t) > ct)
    )


def _check_same(f: TateElement, g: TateElement) -> None:
    if f.algebra != g.algebra:
        raise DescriptorMismatch(f"{f.algebra} vs {g.algebra}")


def series_add(f: TateElement, g: TateElement) -> TateElement:
    _check_same(f, g)
    cu, cx, ct = _min_cap(f.trunc_u, g.trunc_u), _min_cap(f.trunc_x, g.trunc_x), _min_cap(f.trunc_t, g.trunc_t)
    acc = dict(f.coeffs)
    for m, c in g.coeffs.items():
        s = acc.get(m)
        s = c if s is None else s + c
        if s:
            acc[m] = s
        else:
            acc.pop(m, None)
    truncated = f.truncated or g.truncated
    out = {}
    for m, c in acc.items():
        if _over_cap(m, cu, cx, ct):
            truncated = True
        else:
            out[m] = c
    return TateElement(f.algebra, out, cu, cx, ct, truncated)


def series_mul(f: TateElement, g: TateElement) -> TateElement:
    """Product; on STAIRCASE/LOCALIZED supports, closure is checked per term.

    The product of two admissible monomials is admissible because
    ``b_(i+i') <= b_i + b_i'``; a violation raises :class:`StaircaseViolation`.
    """
    _check_same(f, g)
    alg = f.algebra
    cu, cx, ct = _min_cap(f.trunc_u, g.trunc_u), _min_cap(f.trunc_x, g.trunc_x), _min_cap(f.trunc_t, g.trunc_t)
    truncated = f.truncated or g.truncated
    acc: dict[Monomial, ValuedScalar] = {}
    check = alg.support is not Support.FULL
    for m1, c1 in f.coeffs.items():
        for m2, c2 in g.coeffs.items():
            m = Monomial(m1.u + m2.u, m1.x + m2.x, m1.t + m2.t)
            if check and m.x < b_seq(m.u):
                raise StaircaseViolation(f"{m1} * {m2} = {m} leaves the staircase")
            if _over_cap(m, cu, cx, ct):
                truncated = True
                continue
            prod = c1 * c2
            prev = acc.get(m)
            acc[m] = prod if prev is None else prev + prod
    out = {m: c for m, c in acc.items() if c}
    return TateElement(alg, out, cu, cx, ct, truncated)


def gauss_norm(f: TateElement) -> LogNorm:
    out = BOTTOM
    for m, c in f.coeffs.items():
        out = out.join(c.norm + f.algebra.weight(m))
    return out


def leading_terms(f: TateElement) -> list[Monomial]:
    """Support monomials attaining the Gauss norm, in (u, x, t) order."""
    top = gauss_norm(f)
    return sorted(m for m in f.coeffs if f.term_lognorm(m) == top)


def staircase_member(f: TateElement) -> bool:
    if f.algebra.support is not Support.FULL:
        raise ValueError("staircase_member expects an element of the full bidisc")
    return all(m.x >= b_seq(m.u) for m in f.coeffs)


def in_unit_ball(f: TateElement) -> bool:
    """Membership in the Gauss unit ball, checked term by term."""
    return all(c.norm + f.algebra.weight(m) <= 0 for m, c in f.coeffs.items())


def lattice_norm(f: TateElement, lattice: AlgebraDescriptor) -> LogNorm:
    """``inf { r : f in k(r) W }`` for ``W`` the Gauss unit ball of ``lattice``.

    Only uses scalar multiplication and the membership test of ``W``.
    Membership of ``t**e * f`` can only change at the exponents ``e`` that
    put some single term on the unit sphere, so the infimum is the least
    such candidate whose scaled element lies in ``W``; density of the
    value group shows nothing smaller works.
    """
    if not f:
        return BOTTOM
    g = f.with_algebra(lattice)
    # t**e * f is in W iff e >= lognorm of every term; |t**-e| = 2**e
    candidates = sorted({(c.norm + lattice.weight(m)).value for m, c in g.coeffs.items()})
    best = next(
        (e for e in candidates if in_unit_ball(g.scale(ValuedScalar.mono(e)))), None
    )
    if best is None:
        raise AssertionError("no scaling puts the element in the unit ball")
    if in_unit_ball(g.scale(ValuedScalar.mono(best - Fraction(1, 2**20)))):
        raise AssertionError("scaling below the candidate still lands in the ball")
    return LogNorm(best)


def adic_closure_member(f: TateElement, ball: LogNorm | Rational) -> bool:
    """Membership in ``(k(2**ball) W)^ac``: the closed Gauss ball of that radius."""
    ball = LogNorm.coerce(ball)
    if not f:
        return True
    if ball.is_bottom:
        return False
    return lattice_norm(f, f.algebra) <= ball


def generated_monomials(max_u: int, max_x: int) -> set[tuple[int, int]]:
    """Exponents ``(i, j)`` reachable as products of generators ``U^i X^a_i``.

    Products are enumerated with all exponents bounded by the box; the
    unit (empty product) is included.
    """
    gens = [(i, a_seq(i)) for i in range(max_u + 1) if a_seq(i) <= max_x]
    reach = {(0, 0)}
    frontier = [(0, 0)]
    while frontier:
        nxt = []
        for u, x in frontier:
            for gi, gx in gens:
                m = (u + gi, x + gx)
                if m[0] <= max_u and m[1] <= max_x and m not in reach:
                    reach.add(m)
                    nxt.append(m)
        frontier = nxt
    return reach


def staircase_discrepancies(max_u: int, max_x: int) -> list[tuple[int, int]]:
    """Box monomials where generated-closure and support rule disagree."""
    gen = generated_monomials(max_u, max_x)
    rule = {(i, j) for i in range(max_u + 1) for j in range(max_x + 1) if j >= b_seq(i)}
    return sorted(gen ^ rule)
