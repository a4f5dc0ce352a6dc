"""Function algebras on finite point sets, where Čech complexes are exact.

An element of ``k^X`` is a tuple of scalars indexed by the points; the norm
is the maximum of the pointwise norms.  A rational domain given by
``(f_0, ..., f_m)`` is a subset of points, and localising at it is
restriction to that subset (multiplication by its characteristic function).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Sequence

import sympy

from .errors import CoverIncomplete, NotGenerating
from .scalars import BOTTOM, ONE, ZERO, LogNorm, ValuedScalar


@dataclass(frozen=True)
class FiniteFunctionAlgebra:
    points: tuple[str, ...]

    def element(self, values: Sequence[ValuedScalar]) -> FiniteFunction:
        if len(values) != len(self.points):
            raise ValueError("one value per point")
        return FiniteFunction(self, tuple(values))

    def const(self, c: ValuedScalar) -> FiniteFunction:
        return self.element([c] * len(self.points))

    def indicator(self, subset: Iterable[str]) -> FiniteFunction:
        subset = set(subset)
        return self.element([ONE if p in subset else ZERO for p in self.points])

    def restrict(self, subset: Iterable[str]) -> FiniteFunctionAlgebra:
        subset = set(subset)
        return FiniteFunctionAlgebra(tuple(p for p in self.points if p in subset))


@dataclass(frozen=True)
class FiniteFunction:
    algebra: FiniteFunctionAlgebra
    values: tuple[ValuedScalar, ...]

    def __getitem__(self, point: str) -> ValuedScalar:
        return self.values[self.algebra.points.index(point)]

    def _zip(self, other: FiniteFunction):
        if other.algebra != self.algebra:
            raise ValueError("functions on different point sets")
        return zip(self.values, other.values)

    def __add__(self, other):
        return FiniteFunction(self.algebra, tuple(a + b for a, b in self._zip(other)))

    def __sub__(self, other):
        return FiniteFunction(self.algebra, tuple(a - b for a, b in self._zip(other)))

    def __mul__(self, other):
        return FiniteFunction(self.algebra, tuple(a * b for a, b in self._zip(other)))

    def __pow__(self, k: int):
        return FiniteFunction(self.algebra, tuple(a ** k for a in self.values))

    @property
    def norm(self) -> LogNorm:
        out = BOTTOM
        for v in self.values:
            out = out.join(v.norm)
        return out

    def restrict(self, sub: FiniteFunctionAlgebra) -> FiniteFunction:
        return FiniteFunction(sub, tuple(self[p] for p in sub.points))

    def extend(self, full: FiniteFunctionAlgebra) -> FiniteFunction:
        """Zero extension to a larger point set."""
        own = dict(zip(self.algebra.points, self.values))
        return FiniteFunction(full, tuple(own.get(p, ZERO) for p in full.points))


def _check_generating(fs: Sequence[FiniteFunction]) -> FiniteFunctionAlgebra:
    if not fs:
        raise NotGenerating("empty presentation")
    alg = fs[0].algebra
    for p in alg.points:
        if not any(f[p] for f in fs):
            raise NotGenerating(f"every function vanishes at {p}")
    return alg


def rational_domain(fs: Sequence[FiniteFunction]) -> tuple[str, ...]:
    """Points with ``|f_i(x)| <= |f_0(x)|`` for every ``i >= 1``."""
    alg = _check_generating(fs)
    f0, rest = fs[0], fs[1:]
    return tuple(p for p in alg.points if all(f[p].norm <= f0[p].norm for f in rest))


@dataclass(frozen=True)
class FiniteLocalization:
    domain: FiniteFunctionAlgebra
    idempotent: FiniteFunction
    surjective: bool
    norm_preserving: bool
    point_certificates: tuple[tuple[str, str, str], ...]

    def to_json(self) -> dict:
        return {
            "domain": list(self.domain.points),
            "idempotent": [v.norm.to_json() for v in self.idempotent.values],
            "surjective": self.surjective,
            "norm_preserving": self.norm_preserving,
            "points": [list(c) for c in self.point_certificates],
        }


def localize_finite(
    fs: Sequence[FiniteFunction], samples: Sequence[FiniteFunction] = ()
) -> FiniteLocalization:
    """Localisation of ``k^X`` at the rational domain of ``fs``.

    Pointwise, ``k{T_1..T_m}/(f_0 T_i - f_i)`` is ``k`` (with ``T_i`` sent to
    ``f_i/f_0``, of norm <= 1) on the domain, and zero off it, where some
    ``f_0 T_i - f_i`` has a dominant constant term and is a unit.  The
    certificates record which case applies at each point.
    """
    alg = _check_generating(fs)
    dom = rational_domain(fs)
    sub = alg.restrict(dom)
    e = alg.indicator(dom)
    f0 = fs[0]
    certs = []
    for p in alg.points:
        if p in dom:
            worst = max((f[p].norm + (-f0[p].norm.value) for f in fs[1:]), default=LogNorm(0))
            certs.append((p, "kept", f"max |f_i/f_0| = {worst.to_json()}"))
        else:
            i = next(i for i, f in enumerate(fs[1:], 1) if f0[p].norm < f[p].norm)
            certs.append((p, "killed", f"f_0 T_{i} - f_{i} has dominant constant term"))
    tests = list(samples) + list(fs) + [alg.const(ONE)]
    norm_ok = all((e * g).norm == g.restrict(sub).norm for g in tests)
    # every function on the domain is the restriction of its zero extension
    basis = [sub.indicator([p]) for p in sub.points]
    surj = all(b.extend(alg).restrict(sub) == b for b in basis)
    idem_ok = e * e == e
    return FiniteLocalization(sub, e, surj and idem_ok, norm_ok, tuple(certs))


def _restriction_matrix(source: Sequence[str], targets: Sequence[Sequence[str]]) -> sympy.Matrix:
    rows = []
    for tgt in targets:
        for p in tgt:
            rows.append([1 if q == p else 0 for q in source])
    return sympy.Matrix(len(rows), len(source), lambda i, j: rows[i][j]) if rows else sympy.zeros(0, len(source))


@dataclass(frozen=True)
class CechVerdict:
    verdict: str
    domains: tuple[tuple[str, ...], ...]
    dims: tuple[int, int, int]
    ranks: tuple[int, int]
    composite_zero: bool

    @property
    def exact(self) -> bool:
        return self.verdict == "EXACT"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "domains": [list(d) for d in self.domains],
            "dims": list(self.dims),
            "ranks": list(self.ranks),
            "composite_zero": self.composite_zero,
        }


def cech_complex(points: Sequence[str], domains: Sequence[Sequence[str]]):
    """Matrices of ``k^X -> prod k^(U_i) -> prod_(i<j) k^(U_i & U_j)``."""
    offsets, c0 = [], []
    for d in domains:
        offsets.append(len(c0))
        c0.extend(d)
    d0 = _restriction_matrix(points, domains)
    pairs = list(combinations(range(len(domains)), 2))
    rows = []
    for i, j in pairs:
        inter = [p for p in domains[i] if p in domains[j]]
        for p in inter:
            row = [0] * len(c0)
            row[offsets[j] + list(domains[j]).index(p)] += 1
            row[offsets[i] + list(domains[i]).index(p)] -= 1
            rows.append(row)
    d1 = sympy.Matrix(rows) if rows else sympy.zeros(0, len(c0))
    return d0, d1


def cech_exactness_finite(cover: Sequence[Sequence[FiniteFunction]]) -> CechVerdict:
    if not cover:
        raise CoverIncomplete("empty cover")
    alg = cover[0][0].algebra
    domains = tuple(rational_domain(fs) for fs in cover)
    covered = set().union(*domains)
    missing = [p for p in alg.points if p not in covered]
    if missing:
        raise CoverIncomplete(f"points not covered: {missing}")
    d0, d1 = cech_complex(alg.points, domains)
    composite = d1 * d0
    composite_zero = composite.is_zero_matrix if composite.shape[0] else True
    r0 = d0.rank()
    r1 = d1.rank() if d1.shape[0] else 0
    dims = (len(alg.points), d0.shape[0], d1.shape[0])
    exact = composite_zero and r0 == dims[0] and r0 + r1 == dims[1]
    return CechVerdict("EXACT" if exact else "NOT_EXACT", domains, dims, (r0, r1), composite_zero)


DEFAULT_POOL = (ZERO, ONE, ValuedScalar.mono(1), ValuedScalar.mono(-1))


def point_labels(n: int) -> tuple[str, ...]:
    return tuple(f"p{k}" for k in range(n))


def presentations(alg: FiniteFunctionAlgebra, pool: Sequence[ValuedScalar] = DEFAULT_POOL):
    """All generating pairs ``(f_0, f_1)`` with values in the pool."""
    funcs = [alg.element(v) for v in product(pool, repeat=len(alg.points))]
    for f0 in funcs:
        for f1 in funcs:
            if all(a or b for a, b in zip(f0.values, f1.values)):
                yield (f0, f1)


def domains_by_subset(alg: FiniteFunctionAlgebra, pool=DEFAULT_POOL) -> dict[tuple[str, ...], list]:
    out: dict[tuple[str, ...], list] = {}
    for pres in presentations(alg, pool):
        out.setdefault(rational_domain(pres), []).append(pres)
    return out


def generated_covers(alg: FiniteFunctionAlgebra, pool=DEFAULT_POOL, max_sets: int = 3):
    """Covers by up to ``max_sets`` distinct nonempty realised domains."""
    realised = domains_by_subset(alg, pool)
    reps = [(d, ps[0]) for d, ps in sorted(realised.items()) if d]
    for size in range(1, max_sets + 1):
        for combo in combinations(reps, size):
            if set().union(*(d for d, _ in combo)) == set(alg.points):
                yield [list(p) for _, p in combo]


def presentation_independence(alg: FiniteFunctionAlgebra, pool=DEFAULT_POOL) -> tuple[int, list]:
    """Compare localisations of every presentation against one per subset.

    Returns the number of comparisons and the list of disagreeing subsets.
    """
    # sup norms are pointwise, so point indicators separate everything
    samples = [alg.indicator([p]) for p in alg.points]
    checked, bad = 0, []
    for dom, pres_list in sorted(domains_by_subset(alg, pool).items()):
        ref = localize_finite(pres_list[0])
        ref_norms = [(ref.idempotent * g).norm for g in samples]
        for pres in pres_list[1:]:
            loc = localize_finite(pres)
            checked += 1
            same = (
                loc.domain == ref.domain
                and loc.idempotent == ref.idempotent
                and [(loc.idempotent * g).norm for g in samples] == ref_norms
            )
            if not same:
                bad.append(dom)
    return checked, bad


def exhaustive_finite_check(max_points: int, pool=DEFAULT_POOL) -> dict:
    rows = []
    for size in range(1, max_points + 1):
        alg = FiniteFunctionAlgebra(point_labels(size))
        covers = exact = 0
        failures = []
        for cover in generated_covers(alg, pool):
            covers += 1
            verdict = cech_exactness_finite(cover)
            if verdict.exact:
                exact += 1
            else:
                failures.append(verdict.to_json())
        checked, bad = presentation_independence(alg, pool)
        rows.append(
            {
                "points": size,
                "covers": covers,
                "exact": exact,
                "failures": failures,
                "presentation_pairs": checked,
                "presentation_mismatches": [list(d) for d in bad],
            }
        )
    passed = all(r["covers"] == r["exact"] and not r["presentation_mismatches"] for r in rows)
    return {"verdict": "EXACT" if passed else "NOT_EXACT", "rows": rows}
