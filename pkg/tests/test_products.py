import math
import random
from fractions import Fraction as Q

import pytest
from hypothesis import given, strategies as st

from tatekit.errors import AssertLn, Mismatch
from tatekit.localize import LocalizationPresentation, reduce_optimal
from tatekit.products import (
    SELECT,
    PiSequence,
    ProductElement,
    admissibility_gap,
    build_cech_witness,
    maximize_objective,
    preimage_refutation,
    product_localization_isometry_check,
    product_norm,
    random_product_element,
    refutation_candidates,
    scan_bound,
    select_factor,
    witness_parameters,
)
from tatekit.scalars import BOTTOM, ValuedScalar
from tatekit.series import AlgebraDescriptor, Monomial, TateElement, gauss_norm

PI = PiSequence()
STAIR = AlgebraDescriptor.staircase(1)
t = ValuedScalar.mono(1)


def b_oracle(i):
    return 0 if i == 0 else len(bin(i)) - 2


def params_oracle(eps, r_log, limit):
    # brute force over every i up to limit
    vals = [-i * eps + b_oracle(i) * r_log for i in range(limit + 1)]
    R = max(vals)
    i = vals.index(R)
    l = math.floor(R / (2 * eps))
    N = next(N for N in range(10 ** 6) if -N * eps + R <= 0 and -N * eps + r_log <= 0)
    return R, i, l, N


# (n, R_log, i, l, N) for eps_n = 1/(3(n+1)), r_log = 1, frozen from params_oracle
FROZEN = [
    (0, Q(5, 3), 4, 2, 5),
    (1, Q(8, 3), 8, 8, 16),
    (2, Q(29, 9), 16, 14, 29),
    (3, Q(11, 3), 16, 22, 44),
    (4, Q(59, 15), 16, 29, 59),
    (5, Q(38, 9), 32, 38, 76),
    (6, Q(94, 21), 32, 47, 94),
    (7, Q(14, 3), 32, 56, 112),
]


def test_product_norm_examples():
    X = TateElement.monomial(STAIR, 0, 1)
    tX = X.scale(t)
    assert product_norm(ProductElement([X, tX])) == 1
    assert product_norm(ProductElement([TateElement.zero(STAIR)] * 3)) is BOTTOM
    assert product_norm(ProductElement([TateElement.monomial(STAIR, 3, 2), X])) == 2


def test_isometry_examples():
    z = TateElement.zero(STAIR)
    res = product_localization_isometry_check(ProductElement([TateElement.monomial(STAIR, 3, 5), z, z]), 6)
    assert res.joint == res.per_factor_max == 2
    res = product_localization_isometry_check(ProductElement([z, z]), 6)
    assert res.joint is BOTTOM and res.per_factor_max is BOTTOM
    f = ProductElement([TateElement.monomial(STAIR, 1, 1), TateElement.monomial(STAIR, 3, 3)])
    res = product_localization_isometry_check(f, 6)
    assert res.joint == 2 and list(res.per_factor) == [1, 2]


@given(st.integers(0, 10 ** 6))
def test_isometry_random(seed):
    rng = random.Random(seed)
    assert product_localization_isometry_check(random_product_element(rng, 3, 1), 4).passed


def test_isometry_mismatch_names_factor(monkeypatch):
    import tatekit.products as P

    monkeypatch.setattr(P, "_joint_greedy", lambda f, depth: BOTTOM)
    f = ProductElement([TateElement.zero(STAIR), TateElement.monomial(STAIR, 1, 1)])
    with pytest.raises(Mismatch) as err:
        P.product_localization_isometry_check(f, 2)
    assert err.value.factor == 1


def test_params_n0_against_oracle():
    p = witness_parameters(0, PI, 1)
    assert (p.R_log, p.i, p.l, p.N) == params_oracle(Q(1, 3), 1, 64) == (Q(5, 3), 4, 2, 5)


@pytest.mark.parametrize("row", FROZEN)
def test_params_frozen(row):
    n, R, i, l, N = row
    p = witness_parameters(n, PI, 1)
    assert (p.R_log, p.i, p.l, p.N) == (R, i, l, N)
    assert params_oracle(p.epsilon, 1, 4096) == (R, i, l, N)


def test_params_assert_ln():
    with pytest.raises(AssertLn):
        witness_parameters(0, PiSequence(10), 1)


def test_params_monotone_and_scan_stable():
    Rs = [witness_parameters(n, PI, 1).R_log for n in range(64)]
    assert all(a <= b for a, b in zip(Rs, Rs[1:]))
    for n in range(64):
        eps = PI.epsilon(n)
        assert maximize_objective(eps, 1) == maximize_objective(eps, 1, 2 * scan_bound(eps, 1))


def test_params_large_radius():
    # log r well above 1 needs a longer scan than ceil(2/eps)
    eps, r_log = Q(1, 3), 5
    R, i = maximize_objective(eps, r_log)
    assert (R, i) == params_oracle(eps, r_log, 1 << 10)[:2]


def test_witness_identity_and_shape():
    w = build_cech_witness(1, PI, 1)
    F0 = w.F.factors[0]
    assert sorted({m.t for m in F0.coeffs}) == list(range(-5, 5))
    assert gauss_norm(w.G_minus.factors[0]) == 0
    w3 = build_cech_witness(3, PI, 1)
    assert w3.identity_holds and len(w3.F) == 3
    for n in range(3):
        rel = TateElement.monomial(w3.algebra, 0, 0, 1) - TateElement.make(
            w3.algebra, {Monomial(1, 1, 0): PI(n)}
        )
        assert rel * w3.F.factors[n] == w3.G_plus.factors[n] - w3.G_minus.factors[n]


def test_witness_bounds_and_growth():
    w = build_cech_witness(8, PI, 1)
    assert all(row["within"] for row in w.factor_bounds())
    growth = [p.growth for p in w.params]
    assert growth == [Q(2, 3), Q(7, 6), Q(14, 9), Q(7, 4), Q(29, 15), Q(37, 18), Q(46, 21), Q(55, 24)]
    assert all(p.obstruction(1) >= p.growth for p in w.params)


def test_refutation_trivial_candidate():
    w = build_cech_witness(8, PI, 1)
    zero = ProductElement([])
    v = preimage_refutation(zero, zero, w, 0)
    assert (v.kind, v.step) == ("bound", 0)
    assert v.expected == "< -2/3"
    assert w.params[0].bound == Q(-2, 3)


def test_refutation_walk_hits_support_edge():
    # H follows the chain for two steps and then stops
    w = build_cech_witness(8, PI, 1)
    p = w.params[1]
    alg = w.algebra
    pi = PI(1)
    H = TateElement.make(alg, {Monomial(k, k, p.i - k): pi ** (p.l + k) for k in range(2)})
    empty = [TateElement.zero(alg)]
    v = preimage_refutation(ProductElement(empty * 8), ProductElement(empty + [H] + empty * 6), w, 1)
    assert (v.kind, v.step) == ("bound", 2)


def test_select_and_exact_truncated_preimage():
    w = build_cech_witness(8, PI, 1)
    cands = {name: (f, H) for name, f, H in refutation_candidates(w, 4)}
    f, H = cands["full+f/all"]
    # on the represented factors this pair is an exact preimage
    for n in range(8):
        rel = TateElement.monomial(w.algebra, 0, 0, 1) - TateElement.make(w.algebra, {Monomial(1, 1, 0): PI(n)})
        assert w.G_plus.factors[n] - f.factors[n] - rel * H.factors[n] == TateElement.zero(w.algebra)
    n = select_factor(f, H, PI, 1)
    assert n >= 8
    v = preimage_refutation(f, H, w, SELECT)
    assert v.refuted and v.step == 0


def test_all_depth4_candidates_refuted():
    w = build_cech_witness(8, PI, 1)
    cands = refutation_candidates(w, 4)
    assert len(cands) > 50
    for name, f, H in cands:
        assert preimage_refutation(f, H, w).refuted, name


def gap_oracle(target, scale=Q(1, 3), r_log=1, n_max=50):
    # least n0 with some i: -i eps + b_i r > target, scanning i directly
    for n in range(n_max):
        eps = scale / (n + 1)
        if any(-i * eps + b_oracle(i) * r_log > target for i in range(1, 4096)):
            return n
    return None


def test_admissibility_small_targets():
    g2 = admissibility_gap(2, PI, 1)
    assert g2.succeeded and g2.materialized and g2.image_lognorm == 0
    assert g2.n0 == gap_oracle(2)
    assert (g2.i0, g2.N) == (4, 30)
    g10 = admissibility_gap(10, PI, 1)
    assert g10.succeeded and g10.materialized and g10.n0 == 341
    g50 = admissibility_gap(50, PI, 1)
    assert g50.succeeded and not g50.materialized
    assert g2.input_lognorm <= g10.input_lognorm <= g50.input_lognorm


def test_admissibility_unit_target():
    g = admissibility_gap(1, PI, 1)
    assert g.n0 == gap_oracle(1) and g.succeeded
