"""Weierstrass localisation ``A<a> = A{T}/(T - a)`` with quotient norms.

The adjoined element ``a`` is a single term ``alpha * U^p X^q``.  Then
``T - a`` is homogeneous for the grading "evaluate at ``T = a``": the
monomial ``U^i X^j T^h`` has evaluation degree ``(i + p h, j + q h)``, and
multiplication by ``T - a`` shifts that degree by ``(p, q)``.  So the
quotient-norm problem splits into independent blocks, one per evaluation
degree.  Inside a block the positions are the T-degrees ``h``; a reducer can
move mass between adjacent positions ``h, h+1`` as long as the reducer term
of T-degree ``h`` is allowed (``h <= depth`` and admissible).  Within a
connected run of positions the weighted sum ``sum_h c_h alpha**h`` is
invariant, and the ultrametric inequality shows the best residual puts all
of it on the cheapest position.

This gives both an explicit optimal reducer (the upper bound) and, from
the invariant, a certified lower bound valid for reducers of any depth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .errors import NotInAlgebra, PreconditionFailed
from .scalars import BOTTOM, ONE, ZERO, LogNorm, Rational, ValuedScalar, as_fraction
from .series import (
    AlgebraDescriptor,
    Monomial,
    Support,
    TateElement,
    b_seq,
    gauss_norm,
)


@dataclass(frozen=True)
class LocalizationPresentation:
    """``A<a>`` presented as ``A{T}/(T - a)``; ``T`` has radius 1."""

    base: AlgebraDescriptor
    adjoined: TateElement

    def __post_init__(self):
        if len(self.adjoined) != 1:
            raise ValueError("only single-term adjoined elements are supported")
        (m, c), = self.adjoined.coeffs.items()
        if m.t != 0 or (m.u == 0 and m.x == 0):
            raise ValueError("adjoined element must be a T-free non-constant monomial")
        if not c.is_monomial():
            raise ValueError("adjoined coefficient must be a monomial scalar")
        if self.base.radius_t != 0:
            raise ValueError("T must have radius 1")
        if self.adjoined.algebra != self.base:
            raise ValueError("adjoined element must live in the base algebra")

    @classmethod
    def at_x(cls, r_log: Rational) -> LocalizationPresentation:
        """The localisation ``|X| <= 1`` of the staircase algebra."""
        base = AlgebraDescriptor.staircase(r_log)
        return cls(base, TateElement.monomial(base, 0, 1))

    @property
    def shift(self) -> tuple[int, int]:
        (m,) = self.adjoined.coeffs
        return m.u, m.x

    @property
    def alpha(self) -> ValuedScalar:
        (c,) = self.adjoined.coeffs.values()
        return c

    @property
    def relation(self) -> TateElement:
        return TateElement.monomial(self.base, 0, 0, 1) - self.adjoined

    def to_json(self) -> dict:
        return {"base": self.base.to_json(), "adjoined": self.adjoined.to_json(), "relation": "T - a"}


@dataclass(frozen=True)
class Violation:
    """First failing step of a certificate replay.

    ``kind`` is one of ``precondition``, ``outside_algebra``, ``identity``,
    ``support_exhausted``, ``norm``, ``bound`` or ``spec_break``; the last
    means no step failed, which the theory rules out.
    """

    kind: str
    step: int | None
    equation: str
    observed: str
    expected: str
    trace: tuple = ()

    @property
    def refuted(self) -> bool:
        return self.kind != "spec_break"

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "step": self.step,
            "equation": self.equation,
            "observed": self.observed,
            "expected": self.expected,
            "trace": list(self.trace),
        }


@dataclass(frozen=True)
class Reduction:
    """``f = (T - a) * reducer + residual`` with ``upper = gauss_norm(residual)``."""

    residual: TateElement
    reducer: TateElement
    upper: LogNorm
    depth: int
    depth_exhausted: bool = False


@dataclass(frozen=True)
class QuotientNormBound:
    upper: LogNorm
    lower: LogNorm
    reducer: TateElement
    certificate: str | None = None

    @property
    def exact(self) -> bool:
        return self.upper == self.lower

    def to_json(self) -> dict:
        return {
            "upper": self.upper.to_json(),
            "lower": self.lower.to_json(),
            "exact": self.exact,
            "certificate": self.certificate,
            "reducer": self.reducer.to_json(),
        }


# -- block structure -------------------------------------------------------


class _Blocks:
    def __init__(self, pres: LocalizationPresentation):
        self.alg = pres.base
        self.p, self.q = pres.shift
        self.alpha = pres.alpha
        self.alpha_inv = self.alpha.exact_inverse()
        self.alpha_log = self.alpha.norm.value

    def key(self, m: Monomial) -> tuple[int, int]:
        return m.u + self.p * m.t, m.x + self.q * m.t

    def mono(self, key, h: int) -> Monomial:
        return Monomial(key[0] - self.p * h, key[1] - self.q * h, h)

    def admissible(self, key, h: int) -> bool:
        m = self.mono(key, h)
        return h >= 0 and self.alg.admissible(m)

    def positions(self, key) -> list[int]:
        """All admissible T-degrees of a block."""
        out, h = [], 0
        while key[0] - self.p * h >= 0 and key[1] - self.q * h >= 0:
            if self.admissible(key, h):
                out.append(h)
            h += 1
        return out

    def cost(self, key, h: int) -> Fraction:
        """Log weight of ``t_mass / alpha**h`` at position ``h``, less the mass."""
        return self.alg.weight(self.mono(key, h)) - h * self.alpha_log

    def linked(self, key, h: int, depth: int | None) -> bool:
        """Whether positions ``h`` and ``h+1`` are joined by a reducer term."""
        return (depth is None or h <= depth) and self.admissible(key, h + 1)

    def split(self, f: TateElement) -> dict[tuple[int, int], dict[int, ValuedScalar]]:
        blocks: dict[tuple[int, int], dict[int, ValuedScalar]] = {}
        for m, c in f.coeffs.items():
            if m.t < 0:
                raise ValueError("reduction needs non-negative T-degrees")
            blocks.setdefault(self.key(m), {})[m.t] = c
        return blocks

    def invariant(self, layer: dict[int, ValuedScalar]) -> ValuedScalar:
        total = ZERO
        for h, c in layer.items():
            total = total + c * self.alpha ** h
        return total


def _check_ring(f: TateElement, pres: LocalizationPresentation) -> None:
    if f.algebra != pres.base:
        raise ValueError("element must live in the presentation's base algebra")


def _block_optimum(blocks: _Blocks, key, layer, depth):
    """Optimal residual and reducer coefficients for one block."""
    residual: dict[int, ValuedScalar] = {}
    reducer: dict[int, ValuedScalar] = {}
    done: set[int] = set()
    for h0 in sorted(layer):
        if h0 in done:
            continue
        lo = h0
        while lo > 0 and blocks.linked(key, lo - 1, depth):
            lo -= 1
        hi = h0
        while blocks.linked(key, hi, depth):
            hi += 1
        run = range(lo, hi + 1)
        done.update(run)
        f_run = {h: layer[h] for h in run if h in layer}
        mass = blocks.invariant(f_run)
        target = min(run, key=lambda h: (blocks.cost(key, h), blocks.mono(key, h)))
        c = {h: ZERO for h in run}
        if mass:
            c[target] = mass * blocks.alpha_inv ** target
        # c_h = f_h - g_(h-1) + alpha g_h  =>  g_h = (c_h - f_h + g_(h-1)) / alpha
        g_prev = ZERO
        for h in range(lo, hi):
            g = (c[h] - f_run.get(h, ZERO) + g_prev) * blocks.alpha_inv
            if g:
                reducer[h] = g
            g_prev = g
        for h, v in c.items():
            if v:
                residual[h] = v
    return residual, reducer


def _assemble(pres, blocks: _Blocks, per_block) -> tuple[TateElement, TateElement]:
    res, red = {}, {}
    for key, (residual, reducer) in per_block.items():
        for h, c in residual.items():
            res[blocks.mono(key, h)] = c
        for h, g in reducer.items():
            # reducer term of T-degree h sits in block key - (p, q)
            res_key = (key[0] - blocks.p, key[1] - blocks.q)
            red[blocks.mono(res_key, h)] = g
    return TateElement.make(pres.base, res), TateElement.make(pres.base, red)


def quotient_norm_upper(
    f: TateElement, pres: LocalizationPresentation, depth: int
) -> tuple[LogNorm, TateElement]:
    """Least Gauss norm of ``f - (T - a) G`` over reducers of T-degree <= depth."""
    red = reduce_optimal(f, pres, depth)
    return red.upper, red.reducer


def reduce_optimal(f: TateElement, pres: LocalizationPresentation, depth: int | None) -> Reduction:
    """Block-wise optimal reduction; ``depth=None`` means unbounded."""
    _check_ring(f, pres)
    blocks = _Blocks(pres)
    per_block = {
        key: _block_optimum(blocks, key, layer, depth) for key, layer in blocks.split(f).items()
    }
    residual, reducer = _assemble(pres, blocks, per_block)
    # the identity is re-checked by explicit expansion, not trusted
    if f - pres.relation * reducer != residual:
        raise AssertionError("reducer does not reproduce the residual")
    upper = gauss_norm(residual)
    exhausted = depth is not None and upper > quotient_norm_lower(f, pres)
    return Reduction(residual, reducer, upper, -1 if depth is None else depth, exhausted)


def quotient_norm_lower(f: TateElement, pres: LocalizationPresentation) -> LogNorm:
    """Certified lower bound valid for every reducer in the completion.

    ``f - (T - a) G`` has the same block invariants as ``f``, and in a block
    ``|sum_h c_h alpha**h| <= max_h |c_h| |alpha|**h``; dividing by the
    cheapest position's weight gives the bound.
    """
    _check_ring(f, pres)
    blocks = _Blocks(pres)
    out = BOTTOM
    for key, layer in blocks.split(f).items():
        mass = blocks.invariant(layer)
        if not mass:
            continue
        cheapest = min(blocks.cost(key, h) for h in blocks.positions(key))
        out = out.join(mass.norm + cheapest)
    return out


def quotient_norm_bounds(
    f: TateElement, pres: LocalizationPresentation, depth: int
) -> QuotientNormBound:
    red = reduce_optimal(f, pres, depth)
    lower = quotient_norm_lower(f, pres)
    if lower > red.upper:
        raise AssertionError("lower bound exceeds an achieved residual")
    return QuotientNormBound(red.upper, lower, red.reducer, "evaluation invariant at T = a")


def greedy_reductions(
    f: TateElement, pres: LocalizationPresentation, depth: int
) -> Iterator[Reduction]:
    """Push residual terms one T-step at a time, heaviest first.

    A term ``c M_h`` moves to ``(c / alpha) M_(h+1)`` whenever the reducer
    term of T-degree ``h`` is allowed and the move lowers its weight; ties
    break on the monomial order.  Every intermediate state is yielded, the
    last one being a local optimum (the global one when ``a`` is ``X``).
    """
    _check_ring(f, pres)
    blocks = _Blocks(pres)
    residual = dict(f.coeffs)
    reducer: dict[Monomial, ValuedScalar] = {}

    def state():
        res = TateElement.make(pres.base, residual)
        red = TateElement.make(pres.base, reducer)
        return Reduction(res, red, gauss_norm(res), depth)

    yield state()
    while True:
        best = None
        for m, c in residual.items():
            key, h = blocks.key(m), m.t
            if not blocks.linked(key, h, depth):
                continue
            old = c.norm.value + pres.base.weight(m)
            new = c.norm.value + blocks.cost(key, h + 1) + h * blocks.alpha_log
            if new >= old:
                continue
            rank = (-old, m)
            if best is None or rank < best[0]:
                best = (rank, m, c)
        if best is None:
            return
        _, m, c = best
        key = blocks.key(m)
        moved = c * blocks.alpha_inv
        nxt = blocks.mono(key, m.t + 1)
        del residual[m]
        s = residual.get(nxt, ZERO) + moved
        if s:
            residual[nxt] = s
        else:
            residual.pop(nxt, None)
        # c M_h = (c/alpha) T M'_h - (T - a)(c/alpha) M'_h with M'_h = M_(h+1) / T
        m_red = Monomial(nxt.u, nxt.x, m.t)
        s = reducer.get(m_red, ZERO) - moved
        if s:
            reducer[m_red] = s
        else:
            reducer.pop(m_red, None)
        yield state()


def evaluate_at_x(f: TateElement) -> TateElement:
    """Image of ``f`` under ``T -> X`` in the localized representation."""
    r_log = f.algebra.r_log
    if r_log is None:
        raise ValueError("need a staircase descriptor")
    acc: dict[Monomial, ValuedScalar] = {}
    for m, c in f.coeffs.items():
        key = Monomial(m.u, m.x + m.t, 0)
        acc[key] = acc.get(key, ZERO) + c
    return TateElement.make(AlgebraDescriptor.localized(r_log), acc)


def localized_norm(f: TateElement) -> LogNorm:
    """Norm in ``A<X>``: ``max |F_ij| r**b_i`` on the image of ``f``."""
    if f.algebra.support is Support.LOCALIZED:
        return gauss_norm(f)
    return gauss_norm(evaluate_at_x(f))


# -- the staircase localisation at |X| <= 1 --------------------------------


def monomial_quotient_norm_exact(i0: int, j0: int, r_log: Rational) -> LogNorm:
    """Norm of ``U^i0 X^j0`` in ``A<X>``: ``b_i0 * log r``."""
    r_log = as_fraction(r_log)
    if r_log <= 0:
        raise PreconditionFailed("need r > 1")
    if j0 < b_seq(i0):
        raise NotInAlgebra(f"U^{i0} X^{j0} is not in the staircase (b_{i0} = {b_seq(i0)})")
    return LogNorm(b_seq(i0) * r_log)


def _coef(el: TateElement, h: int, i: int, j: int) -> ValuedScalar:
    return el.coeffs.get(Monomial(i, j, h), ZERO)


def lower_bound_certificate(
    i0: int,
    j0: int,
    candidate_G: TateElement,
    candidate_rem: TateElement,
    r_log: Rational,
) -> Violation:
    """Refute ``U^i0 X^j0 = (T - X) G + rem`` with ``|rem| < r**b_i0``.

    Replays the coefficient equations of that identity in the block of
    ``U^i0 X^j0`` along the T-degrees ``h = 0, 1, ...`` (monomials
    ``U^i0 X^(j0-h) T^h``).  While the equations hold, the small remainder
    forces ``|G_(h, i0, j0-1-h)| = 1``; at ``j0 - h = b_i0`` the equation
    leaves no reducer slot, so the unit mass must sit in ``rem``.  The first
    failing equation (or the final norm contradiction) is returned.
    """
    r_log = as_fraction(r_log)
    b = b_seq(i0)
    if j0 < b:
        raise NotInAlgebra(f"U^{i0} X^{j0} is not in the staircase")
    alg = AlgebraDescriptor.staircase(r_log)
    bound = LogNorm(b * r_log)
    G = candidate_G.with_algebra(AlgebraDescriptor.bidisc(r_log))
    rem = candidate_rem.with_algebra(AlgebraDescriptor.bidisc(r_log))
    rem_norm = gauss_norm(rem)
    if rem_norm >= bound:
        return Violation(
            "precondition", None, "gauss_norm(rem) < b_i0 * log r", rem_norm.to_json(), f"< {bound.to_json()}"
        )
    for el, name in ((G, "G"), (rem, "rem")):
        for m in el.coeffs:
            if not alg.admissible(m):
                return Violation(
                    "outside_algebra", m.t, f"{name} monomial {m} must satisfy x >= b_u", str(m), "staircase support"
                )
    g_top = G.t_degree()
    trace = []
    for h in range(0, j0 - b + 1):
        j = j0 - h
        lhs = _coef(rem, h, i0, j)
        terms = [f"rem[{h},{i0},{j}]"]
        if h >= 1:
            lhs = lhs + _coef(G, h - 1, i0, j)
            terms.insert(0, f"G[{h - 1},{i0},{j}]")
        if j - 1 >= b:
            lhs = lhs - _coef(G, h, i0, j - 1)
            terms.insert(1 if h else 0, f"- G[{h},{i0},{j - 1}]")
        expected = ONE if h == 0 else ZERO
        equation = " + ".join(terms).replace("+ -", "-") + f" = {1 if h == 0 else 0}"
        if lhs != expected:
            missing = j - 1 >= b and not _coef(G, h, i0, j - 1) and (g_top is None or h > g_top)
            return Violation(
                "support_exhausted" if missing else "identity",
                h,
                equation,
                repr(lhs),
                repr(expected),
                tuple(trace),
            )
        if j - 1 >= b:
            forced = _coef(G, h, i0, j - 1).norm
            trace.append({"step": h, "equation": equation, "forced": f"|G[{h},{i0},{j - 1}]|", "lognorm": forced.to_json()})
            if forced != 0:
                return Violation("spec_break", h, "forced unit coefficient", forced.to_json(), "0", tuple(trace))
        else:
            forced = _coef(rem, h, i0, j).norm + alg.weight(Monomial(i0, j, h))
            return Violation(
                "norm",
                h,
                f"|rem[{h},{i0},{j}]| r^{b} = |G[{h - 1},{i0},{j}]| r^{b} = r^{b}" if h else f"rem[0,{i0},{b}] = 1",
                forced.to_json(),
                f"< {bound.to_json()}",
                tuple(trace),
            )
    return Violation("spec_break", None, "no step failed", "", "", tuple(trace))


def certificate_candidates(
    i0: int, j0: int, r_log: Rational, depth: int
) -> list[tuple[TateElement, TateElement]]:
    """Candidates proposed below the exact norm by the reducer search.

    Each greedy state ``(G, residual)`` yields the claim ``rem = residual``
    minus every term of weight ``>= b_i0 log r``.
    """
    pres = LocalizationPresentation.at_x(r_log)
    f = TateElement.monomial(pres.base, i0, j0)
    bound = monomial_quotient_norm_exact(i0, j0, r_log)
    out = []
    for state in greedy_reductions(f, pres, depth):
        kept = {m: c for m, c in state.residual.coeffs.items() if state.residual.term_lognorm(m) < bound}
        out.append((state.reducer, TateElement.make(pres.base, kept)))
    return out


def spectral_radius_seq(n_max: int, r_log: Rational) -> list[LogNorm]:
    """``log ||(UX)^n|| / n`` for ``n = 1..n_max``; the infimum is ``log rho(UX)``."""
    return [
        LogNorm(monomial_quotient_norm_exact(n, n, r_log).value / n) for n in range(1, n_max + 1)
    ]


@dataclass(frozen=True)
class WitnessTerm:
    i: int
    exponent: int
    d: int
    spectral_lognorm: LogNorm
    banach_lognorm: LogNorm
    banach_floor: Fraction

    def to_json(self) -> dict:
        from .scalars import format_fraction

        return {
            "i": self.i,
            "exponent": self.exponent,
            "d": self.d,
            "spectral_lognorm": self.spectral_lognorm.to_json(),
            "banach_lognorm": self.banach_lognorm.to_json(),
            "banach_floor": format_fraction(self.banach_floor),
        }


@dataclass(frozen=True)
class WitnessReport:
    N: int
    c_log: Fraction
    r_log: Fraction
    terms: list[WitnessTerm] = field(default_factory=list)
    verdict: str = "NOT_BANACH_FUNCTION_ALGEBRA"

    def to_json(self) -> dict:
        from .scalars import format_fraction

        return {
            "N": self.N,
            "c_log": format_fraction(self.c_log),
            "r_log": format_fraction(self.r_log),
            "verdict": self.verdict,
            "terms": [t.to_json() for t in self.terms],
        }


def uniformity_witness(N: int, c_log: Rational, i_max: int, r_log: Rational) -> WitnessReport:
    """Terms ``c^d (UX)^(N i)`` with ``d = floor(b_(N i) / N)``.

    Their spectral seminorms ``|c|^d`` go to zero while their norms
    ``|c|^d r^b`` stay above ``(|c|^(1/N) r)^b`` and blow up.
    """
    c_log, r_log = as_fraction(c_log), as_fraction(r_log)
    if N < 1 or c_log >= 0 or c_log + N * r_log <= 0:
        raise PreconditionFailed("need |c| < 1 and |c| r^N > 1")
    terms = []
    for i in range(1, i_max + 1):
        e = N * i
        b = b_seq(e)
        d = b // N
        spectral = LogNorm(d * c_log)
        banach = monomial_quotient_norm_exact(e, e, r_log) + d * c_log
        floor_ = b * (c_log / N + r_log)
        if banach < floor_:
            raise AssertionError("norm lower bound violated")
        terms.append(WitnessTerm(i, e, d, spectral, banach, floor_))
    return WitnessReport(N, c_log, r_log, terms)


def presentation_nonuniqueness(r_log: Rational) -> dict:
    """Compare ``||UX||`` in ``A{X}`` and in ``A{X, UX}``."""
    r_log = as_fraction(r_log)
    if r_log <= 0:
        raise PreconditionFailed("need r in (1, oo)")
    pres_x = LocalizationPresentation.at_x(r_log)
    ux = TateElement.monomial(pres_x.base, 1, 1)
    in_x = quotient_norm_bounds(ux, pres_x, depth=2)
    if not in_x.exact:
        raise AssertionError("norm of UX in A{X} is not certified")
    # in A{X, UX} the element UX is the class of a variable of radius 1
    pres_ux = LocalizationPresentation(pres_x.base, ux)
    in_ux, reducer = quotient_norm_upper(ux, pres_ux, depth=0)
    differ = in_x.upper > in_ux
    return {
        "witness": "UX",
        "r_log": LogNorm(r_log).to_json(),
        "rows": [
            {"algebra": "A{X}", "relation": "=", "lognorm": in_x.upper.to_json()},
            {"algebra": "A{X,UX}", "relation": "<=", "lognorm": in_ux.to_json()},
        ],
        "reducer_A{X,UX}": reducer.to_json(),
        "presentations_differ": differ,
    }
