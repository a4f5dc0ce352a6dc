from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, strategies as st

from conftest import elements
from tatekit.errors import NotInAlgebra, PreconditionFailed
from tatekit.localize import (
    LocalizationPresentation,
    certificate_candidates,
    evaluate_at_x,
    greedy_reductions,
    localized_norm,
    lower_bound_certificate,
    monomial_quotient_norm_exact,
    presentation_nonuniqueness,
    quotient_norm_bounds,
    quotient_norm_lower,
    quotient_norm_upper,
    reduce_optimal,
    spectral_radius_seq,
    uniformity_witness,
)
from tatekit.scalars import BOTTOM, LogNorm, ValuedScalar
from tatekit.series import AlgebraDescriptor, Monomial, TateElement, b_seq, gauss_norm

PRES = LocalizationPresentation.at_x(1)
ALG = PRES.base


def mono(u, x, h=0, c=1):
    return TateElement.make(ALG, {Monomial(u, x, h): c})


def test_upper_examples():
    up, G = quotient_norm_upper(mono(0, 1), PRES, 0)
    assert up == 0 and G == mono(0, 0, 0, -1)
    assert quotient_norm_upper(mono(3, 5), PRES, 3)[0] == 2
    up, G = quotient_norm_upper(TateElement.zero(ALG), PRES, 2)
    assert up is BOTTOM and not G


def depth_oracle(i, j, depth, r_log=1):
    # pushes move X^j T^h to X^(j-1) T^(h+1); mass stops at max(b, j - 1 - depth)
    return max(b_seq(i), j - 1 - depth) * r_log if j > b_seq(i) else b_seq(i) * r_log


@pytest.mark.parametrize("i", range(0, 10))
@pytest.mark.parametrize("depth", [0, 1, 3, 6])
def test_monomial_depth_profile(i, depth):
    for j in range(b_seq(i), b_seq(i) + 8):
        assert quotient_norm_upper(mono(i, j), PRES, depth)[0] == depth_oracle(i, j, depth)


def brute_force_min(f, depth, coeffs=(-1, 0, 1)):
    # every reducer supported on the block of a monomial, coefficients in coeffs
    (m,) = f.coeffs
    slots = [Monomial(m.u, m.x - 1 - h, h) for h in range(depth + 1) if m.x - 1 - h >= b_seq(m.u)]
    best = gauss_norm(f)
    for cs in product(coeffs, repeat=len(slots)):
        G = TateElement.make(ALG, dict(zip(slots, cs)))
        best = min(best, gauss_norm(f - PRES.relation * G))
    return best


@pytest.mark.parametrize("i,j,depth", [(0, 3, 1), (1, 4, 2), (3, 5, 1), (3, 6, 4), (4, 7, 2), (2, 2, 3)])
def test_upper_matches_brute_force(i, j, depth):
    assert quotient_norm_upper(mono(i, j), PRES, depth)[0] == brute_force_min(mono(i, j), depth)


def test_exact_examples():
    assert monomial_quotient_norm_exact(3, 5, 1) == 2
    assert monomial_quotient_norm_exact(0, 7, 1) == 0
    assert monomial_quotient_norm_exact(1, 1, 1) == 1
    with pytest.raises(NotInAlgebra):
        monomial_quotient_norm_exact(3, 1, 1)


def test_bounds_sandwich_monomials():
    for i in range(0, 17):
        for j in range(b_seq(i), b_seq(i) + 5):
            f = mono(i, j)
            depth = max(i + 2, j - b_seq(i) - 1)
            qb = quotient_norm_bounds(f, PRES, depth)
            assert qb.exact and qb.upper == monomial_quotient_norm_exact(i, j, 1)
            assert qb.upper <= gauss_norm(f)


def test_depth_i_plus_2_is_not_enough_for_small_i():
    # X^4 needs a reducer of T-degree 3
    qb = quotient_norm_bounds(mono(0, 4), PRES, 2)
    assert (qb.upper, qb.lower) == (1, 0)
    assert reduce_optimal(mono(0, 4), PRES, 2).depth_exhausted


def test_certificate_precondition():
    v = lower_bound_certificate(3, 5, TateElement.zero(ALG), mono(3, 5), 1)
    assert v.kind == "precondition" and v.observed == "5/1"


def test_certificate_at_staircase_edge():
    # j0 = b_3 = 2: nothing can absorb U^3 X^2, the remainder must carry it
    v = lower_bound_certificate(3, 2, TateElement.zero(ALG), TateElement.zero(ALG), 1)
    assert v.kind == "identity" and v.step == 0
    assert v.equation == "rem[0,3,2] = 1"


def test_certificate_truncated_support():
    G = mono(1, 1, 0, -1)
    v = lower_bound_certificate(1, 2, G, TateElement.zero(ALG), 1)
    assert v.refuted and v.step == G.t_degree() + 1
    assert v.trace[-1]["lognorm"] == "0/1"  # the unit coefficient persists


def test_certificate_rejects_outside_support():
    bad = TateElement(ALG.__class__.bidisc(1), {Monomial(3, 1, 0): ValuedScalar.const(1)})
    v = lower_bound_certificate(3, 5, bad, TateElement.zero(ALG), 1)
    assert v.kind == "outside_algebra"


@pytest.mark.parametrize("i", range(0, 17))
def test_every_search_candidate_refuted(i):
    for j in range(b_seq(i), b_seq(i) + 5):
        for G, rem in certificate_candidates(i, j, 1, i + 3):
            assert gauss_norm(rem) < b_seq(i)
            assert lower_bound_certificate(i, j, G, rem, 1).refuted


def test_spectral_examples():
    seq = spectral_radius_seq(1024, 1)
    assert seq[3] == Fraction(3, 4)
    assert seq[0] == 1
    assert seq[-1] == Fraction(11, 1024)


def test_spectral_properties():
    seq = spectral_radius_seq(4096, 1)
    pows = [seq[(1 << m) - 1] for m in range(13)]
    assert all(v > 0 for v in seq)
    assert all(a >= b for a, b in zip(pows, pows[1:]))
    assert all(v <= Fraction(m + 2, 1 << m) for m, v in enumerate(pows))


def test_uniformity_examples():
    wr = uniformity_witness(2, -1, 8, 1)
    term = next(t for t in wr.terms if t.exponent == 16)
    assert (term.d, term.banach_lognorm, term.spectral_lognorm) == (2, 3, -2)
    with pytest.raises(PreconditionFailed):
        uniformity_witness(1, -1, 4, 1)


def test_presentation_gap():
    for r_log in (1, 2):
        res = presentation_nonuniqueness(r_log)
        assert res["rows"][0]["lognorm"] == LogNorm(r_log).to_json()
        assert LogNorm.from_json(res["rows"][1]["lognorm"]) <= 0
        assert res["presentations_differ"]
    with pytest.raises(PreconditionFailed):
        presentation_nonuniqueness(0)


def test_general_adjoined_element():
    # a = t UX on the localized algebra: T^2 reduces along its block
    alg = AlgebraDescriptor.localized(1)
    a = TateElement.make(alg, {Monomial(1, 1, 0): ValuedScalar.mono(Fraction(1, 3))})
    pres = LocalizationPresentation(alg, a)
    f = TateElement.make(alg, {Monomial(0, 0, 2): 1})
    red = reduce_optimal(f, pres, 4)
    assert f - pres.relation * red.reducer == red.residual
    assert quotient_norm_lower(f, pres) <= red.upper <= gauss_norm(f)


@given(elements(ALG, t_max=2), st.integers(0, 5))
def test_submetric_and_identity(f, depth):
    red = reduce_optimal(f, PRES, depth)
    assert red.upper <= gauss_norm(f)
    assert quotient_norm_lower(f, PRES) <= red.upper
    assert f - PRES.relation * red.reducer == red.residual


@given(elements(ALG, t_max=2), st.integers(0, 5))
def test_greedy_matches_block_optimum(f, depth):
    last = list(greedy_reductions(f, PRES, depth))[-1]
    assert last.upper == reduce_optimal(f, PRES, depth).upper
    assert f - PRES.relation * last.reducer == last.residual


@given(elements(ALG, t_max=2))
def test_unbounded_depth_is_localized_norm(f):
    assert reduce_optimal(f, PRES, None).upper == localized_norm(f) == quotient_norm_lower(f, PRES)
    assert localized_norm(evaluate_at_x(f)) == localized_norm(f)
