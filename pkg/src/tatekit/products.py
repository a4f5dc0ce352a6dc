"""Sup-norm direct products of the staircase algebra and the Čech witness.

Every factor ring is ``A<X>``, the staircase algebra localised at
``|X| <= 1``, represented with the LOCALIZED descriptor (``U^i X^j`` weighs
``b_i log r``).  ``T`` has radius 1 and may carry negative exponents.

The sequence ``pi(n) = t**eps_n`` has ``|pi(n)| -> 1`` from below.  From it
come the per-factor parameters ``(R_n, i_n, l_n, N_n)`` and the elements
``F, G_+, G_-`` with ``(T - Pi UX) F = G_+ - G_-``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import AssertLn, IdentityFailure, Mismatch, PreconditionFailed
from .localize import LocalizationPresentation, Violation, reduce_optimal
from .scalars import BOTTOM, ZERO, LogNorm, Rational, ValuedScalar, as_fraction, format_fraction
from .series import AlgebraDescriptor, Monomial, TateElement, b_seq, gauss_norm

SELECT = "SELECT"
SELECT_LIMIT = 256


@dataclass(frozen=True)
class ProductElement:
    factors: tuple[TateElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    def __len__(self):
        return len(self.factors)

    def factor(self, n: int, algebra: AlgebraDescriptor) -> TateElement:
        """Entry ``n``; entries past the represented ones are zero."""
        return self.factors[n] if n < len(self.factors) else TateElement.zero(algebra)

    def is_zero(self) -> bool:
        return not any(self.factors)

    def to_json(self) -> list:
        return [f.to_json() for f in self.factors]


def product_norm(v: ProductElement) -> LogNorm:
    out = BOTTOM
    for f in v.factors:
        out = out.join(gauss_norm(f))
    return out


@dataclass(frozen=True)
class PiSequence:
    """``pi(n) = t**eps_n`` with ``eps_n = scale / (n + 1)``."""

    scale: Fraction = Fraction(1, 3)

    def __post_init__(self):
        object.__setattr__(self, "scale", as_fraction(self.scale))
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def epsilon(self, n: int) -> Fraction:
        return self.scale / (n + 1)

    def epsilons(self, count: int) -> list[Fraction]:
        return [self.epsilon(n) for n in range(count)]

    def __call__(self, n: int) -> ValuedScalar:
        return ValuedScalar.mono(self.epsilon(n))

    def to_json(self) -> dict:
        return {"rule": "scale/(n+1)", "scale": format_fraction(self.scale)}


@dataclass(frozen=True)
class WitnessParams:
    n: int
    epsilon: Fraction
    R_log: Fraction
    i: int
    l: int
    N: int

    @property
    def growth(self) -> Fraction:
        """Log of ``|pi|**(l+1) R``, the lower bound the refutation chain reaches."""
        return -(self.l + 1) * self.epsilon + self.R_log

    def obstruction(self, r_log: Fraction) -> Fraction:
        """Exact log-norm of ``pi**l (pi UX)**(i+1)``."""
        return -(self.l + self.i + 1) * self.epsilon + b_seq(self.i + 1) * r_log

    @property
    def bound(self) -> Fraction:
        """Log of ``|pi|**(N+l) R``."""
        return -(self.N + self.l) * self.epsilon + self.R_log

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "epsilon": format_fraction(self.epsilon),
            "R_log": format_fraction(self.R_log),
            "i": self.i,
            "l": self.l,
            "N": self.N,
        }


def _objective(i: int, eps: Fraction, r_log: Fraction) -> Fraction:
    return -i * eps + b_seq(i) * r_log


def scan_bound(eps: Fraction, r_log: Fraction) -> int:
    """Bit length ``K`` such that the scan over ``i < 2**K`` is complete.

    On ``[2**(k-1), 2**k)`` the objective ``-i eps + b_i log r`` is maximal at
    the left end, where it equals ``-2**(k-1) eps + k log r``; consecutive
    left ends differ by ``log r - 2**(k-1) eps``, negative once
    ``2**(k-1) > log r / eps``.  The default ``ceil(2 / eps)`` covers
    ``log r <= 1`` and is enlarged otherwise.
    """
    k = math.ceil(2 / eps)
    need = math.ceil(r_log / eps).bit_length() + 1
    return max(k, need)


def maximize_objective(eps: Fraction, r_log: Fraction, bits: int | None = None) -> tuple[Fraction, int]:
    """``(max, least argmax)`` of ``-i eps + b_i log r`` over ``i < 2**bits``."""
    bits = scan_bound(eps, r_log) if bits is None else bits
    best, arg = Fraction(0), 0
    for k in range(1, bits + 1):
        i = 1 << (k - 1)
        v = _objective(i, eps, r_log)
        if v > best:
            best, arg = v, i
    return best, arg


def witness_parameters(n: int, pi: PiSequence, r_log: Rational) -> WitnessParams:
    r_log = as_fraction(r_log)
    if r_log <= 0:
        raise PreconditionFailed("need r > 1")
    eps = pi.epsilon(n)
    R, i = maximize_objective(eps, r_log)
    l = math.floor(R / (2 * eps))
    if l < 1:
        raise AssertLn(f"l_{n} = 0 for eps = {eps}: |pi|^-1 exceeds sqrt(R)")
    N = math.ceil(max(R, r_log) / eps)
    return WitnessParams(n, eps, R, i, l, N)


def _factor_algebra(r_log: Fraction) -> AlgebraDescriptor:
    return AlgebraDescriptor.localized(r_log, laurent_t=True)


def _term(alg, coeff: ValuedScalar, k: int, h: int) -> TateElement:
    """``coeff * (UX)**k * T**h``."""
    return TateElement.make(alg, {Monomial(k, k, h): coeff})


def _geometric(alg, params: WitnessParams, pi_n: ValuedScalar, lo: int) -> TateElement:
    """``pi**l * sum_{h=lo}^{i} (pi UX)**(i-h) T**h``."""
    p, L = params.i, params.l
    return TateElement.make(
        alg, {Monomial(p - h, p - h, h): pi_n ** (L + p - h) for h in range(lo, p + 1)}
    )


@dataclass(frozen=True)
class CechWitness:
    r_log: Fraction
    pi: PiSequence
    params: tuple[WitnessParams, ...]
    F: ProductElement
    G_plus: ProductElement
    G_minus: ProductElement
    identity_holds: bool = True

    @property
    def algebra(self) -> AlgebraDescriptor:
        return _factor_algebra(self.r_log)

    def params_for(self, n: int) -> WitnessParams:
        if n < len(self.params):
            return self.params[n]
        return witness_parameters(n, self.pi, self.r_log)

    def growth_table(self) -> list[dict]:
        return growth_table(self.pi, self.r_log, len(self.params))

    def factor_bounds(self) -> list[dict]:
        """Per factor: ``||F_n||`` sits in ``[sqrt(R_n), |pi|^-1 sqrt(R_n))``."""
        rows = []
        for p, f in zip(self.params, self.F.factors):
            norm = gauss_norm(f)
            lo, hi = p.R_log / 2, p.R_log / 2 + p.epsilon
            rows.append(
                {
                    "n": p.n,
                    "F_lognorm": norm.to_json(),
                    "lower": format_fraction(lo),
                    "upper": format_fraction(hi),
                    "within": lo <= norm.value < hi,
                    "G_minus_lognorm": gauss_norm(self.G_minus.factors[p.n]).to_json(),
                }
            )
        return rows

    def to_json(self) -> dict:
        return {
            "r_log": format_fraction(self.r_log),
            "pi": self.pi.to_json(),
            "params": [p.to_json() for p in self.params],
            "identity": "holds" if self.identity_holds else "fails",
            "F_bounds": self.factor_bounds(),
            "growth": self.growth_table(),
            "F": self.F.to_json(),
            "G_plus": self.G_plus.to_json(),
            "G_minus": self.G_minus.to_json(),
        }


def build_cech_witness(N_factors: int, pi: PiSequence, r_log: Rational) -> CechWitness:
    r_log = as_fraction(r_log)
    if N_factors < 1:
        raise PreconditionFailed("need at least one factor")
    alg = _factor_algebra(r_log)
    params, Fs, Gp, Gm = [], [], [], []
    for n in range(N_factors):
        p = witness_parameters(n, pi, r_log)
        pi_n = pi(n)
        F = _geometric(alg, p, pi_n, -p.N)
        G_plus = _term(alg, pi_n ** p.l, 0, p.i + 1)
        G_minus = _term(alg, pi_n ** (p.l + p.N + p.i + 1), p.N + p.i + 1, -p.N)
        relation = TateElement.monomial(alg, 0, 0, 1) - _term(alg, pi_n, 1, 0)
        if relation * F != G_plus - G_minus:
            raise IdentityFailure(f"(T - pi UX) F != G+ - G- at factor {n}")
        params.append(p)
        Fs.append(F)
        Gp.append(G_plus)
        Gm.append(G_minus)
    return CechWitness(
        r_log, pi, tuple(params), ProductElement(Fs), ProductElement(Gp), ProductElement(Gm)
    )


def growth_table(pi: PiSequence, r_log: Rational, count: int) -> list[dict]:
    r_log = as_fraction(r_log)
    rows = []
    for n in range(count):
        p = witness_parameters(n, pi, r_log)
        rows.append(
            {
                "n": n,
                "growth": format_fraction(p.growth),
                "obstruction_lognorm": format_fraction(p.obstruction(r_log)),
                "F_lower": format_fraction(p.R_log - p.l * p.epsilon),
            }
        )
    return rows


# -- refutation of preimage candidates --------------------------------------


def select_factor(
    candidate_f: ProductElement, candidate_H: ProductElement, pi: PiSequence, r_log: Fraction
) -> int:
    """Least ``n`` with ``l_n > 1`` and obstruction above ``max(||f||, ||H||)``."""
    cap = product_norm(candidate_f).join(product_norm(candidate_H))
    for n in range(SELECT_LIMIT):
        p = witness_parameters(n, pi, r_log)
        if p.l > 1 and cap < p.obstruction(r_log):
            return n
    raise PreconditionFailed(f"no admissible factor below {SELECT_LIMIT}")


def preimage_refutation(
    candidate_f: ProductElement,
    candidate_H: ProductElement,
    witness: CechWitness,
    n: int | str = SELECT,
) -> Violation:
    """Refute ``||G_+ - f - (T - Pi UX) H|| < |pi(n)|^(N+l) R`` at factor ``n``.

    With ``p = i_n``, ``L = l_n``, ``a = pi UX`` and ``beta`` the bound, the
    claim gives, coefficient by coefficient,

    * step 0:      ``|pi^L - H[p; 1]| < beta``
    * step k<=p:   ``|-H[p-k; (UX)^k] + pi H[p-k+1; (UX)^(k-1)]| r^b_k < beta``
    * step p+1:    ``|-f[(UX)^(p+1)] + pi H[0; (UX)^p]| r^b_(p+1) < beta``

    Scaled by ``pi^(p+1-k)`` these telescope to ``pi^L a^(p+1) - f[...]``,
    whose weight exceeds every scaled bound when ``||f||`` is below
    ``||pi^L a^(p+1)||``.  So some step must fail; the first one is returned.
    """
    r_log = witness.r_log
    alg = witness.algebra
    if n == SELECT:
        n = select_factor(candidate_f, candidate_H, witness.pi, r_log)
    params = witness.params_for(n)
    p, L = params.i, params.l
    pi_n = witness.pi(n)
    beta = LogNorm(params.bound)
    f_n = candidate_f.factor(n, alg)
    H_n = candidate_H.factor(n, alg)
    gamma = LogNorm(params.obstruction(r_log))
    f_norm = gauss_norm(f_n)
    if any(m.t != 0 for m in f_n.coeffs) or any(m.t < 0 for m in H_n.coeffs):
        return Violation("precondition", None, "f is T-free and H has no negative T-powers", "", "", ())
    if params.l <= 1 or not f_norm < gamma:
        return Violation(
            "precondition",
            None,
            f"l_n > 1 and ||f_n|| < ||pi^l (pi UX)^(i+1)|| at n = {n}",
            f"l = {params.l}, ||f_n|| = {f_norm.to_json()}",
            f"||.|| = {gamma.to_json()}",
        )

    def H(h, k):
        return H_n.coeffs.get(Monomial(k, k, h), ZERO)

    trace = []
    steps = [(0, "pi^L - H[%d;1]" % p, pi_n ** L - H(p, 0), 0)]
    for k in range(1, p + 1):
        value = -H(p - k, k) + pi_n * H(p - k + 1, k - 1)
        steps.append((k, f"-H[{p - k};(UX)^{k}] + pi H[{p - k + 1};(UX)^{k - 1}]", value, k))
    final = -f_n.coeffs.get(Monomial(p + 1, p + 1, 0), ZERO) + pi_n * H(0, p)
    steps.append((p + 1, f"-f[(UX)^{p + 1}] + pi H[0;(UX)^{p}]", final, p + 1))
    for step, text, value, k in steps:
        observed = value.norm + b_seq(k) * r_log
        record = {"step": step, "equation": f"|{text}| r^b_{k} < beta", "lognorm": observed.to_json()}
        if not observed < beta:
            return Violation(
                "bound", step, record["equation"], observed.to_json(), f"< {beta.to_json()}", tuple(trace)
            )
        trace.append(record)
    return Violation("spec_break", None, "every step held", "", f"< {beta.to_json()}", tuple(trace))


def refutation_candidates(witness: CechWitness, depth: int) -> list[tuple[str, ProductElement, ProductElement]]:
    """Candidate ``(f, H)`` pairs from bounded reduction of ``G_+``.

    Pushing ``pi^L T^(p+1)`` down ``k`` steps uses the reducer
    ``pi^L sum_{h<k} a^h T^(p-h)`` and leaves ``pi^L a^k T^(p+1-k)``.  For
    each ``k <= depth`` (and the full push ``k = p+1``) this yields the pair
    with ``f = 0`` and the pair whose ``f`` absorbs the T-free residual, both
    on every factor at once and on a single factor.
    """
    alg = witness.algebra
    count = len(witness.params)

    def stage(n: int, k: int) -> tuple[TateElement, TateElement]:
        p = witness.params[n]
        k = min(k, p.i + 1)
        pi_n = witness.pi(n)
        H = TateElement.make(
            alg, {Monomial(h, h, p.i - h): pi_n ** (p.l + h) for h in range(k)}
        )
        f = TateElement.zero(alg)
        if k == p.i + 1:
            f = _term(alg, pi_n ** (p.l + k), k, 0)
        return f, H

    zero = TateElement.zero(alg)
    out = []
    pushes = [(f"push{k}", k) for k in range(depth + 1)]
    pushes.append(("full", max(p.i for p in witness.params) + 1))
    for label, k in pushes:
        stages = [stage(n, k) for n in range(count)]
        for with_f in (False, True):
            tag = f"{label}{'+f' if with_f else ''}"
            f_all = ProductElement([s[0] if with_f else zero for s in stages])
            H_all = ProductElement([s[1] for s in stages])
            out.append((f"{tag}/all", f_all, H_all))
            for n in range(count):
                f_one = ProductElement([stages[m][0] if (with_f and m == n) else zero for m in range(count)])
                H_one = ProductElement([stages[m][1] if m == n else zero for m in range(count)])
                out.append((f"{tag}/factor{n}", f_one, H_one))
    return out


# -- product-localisation isometry -------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    joint: LogNorm
    per_factor: tuple[LogNorm, ...]
    passed: bool

    @property
    def per_factor_max(self) -> LogNorm:
        out = BOTTOM
        for v in self.per_factor:
            out = out.join(v)
        return out

    def to_json(self) -> dict:
        return {
            "joint": self.joint.to_json(),
            "per_factor": [v.to_json() for v in self.per_factor],
            "per_factor_max": self.per_factor_max.to_json(),
            "passed": self.passed,
        }


def _joint_greedy(f: ProductElement, depth: int) -> LogNorm:
    """Quotient upper bound on the product with one shared reducer.

    Terms are tagged with their factor; the heaviest pushable term over all
    factors moves ``c U^i X^j T^h -> c U^i X^(j-1) T^(h+1)`` (reducer term
    ``-c U^i X^(j-1) T^h``) until nothing improves.
    """
    state: dict[tuple[int, Monomial], ValuedScalar] = {}
    algs = []
    for n, el in enumerate(f.factors):
        algs.append(el.algebra)
        for m, c in el.coeffs.items():
            state[(n, m)] = c
    while True:
        best = None
        for (n, m), c in state.items():
            nxt = Monomial(m.u, m.x - 1, m.t + 1)
            if m.t > depth or not algs[n].admissible(nxt):
                continue
            old = c.norm.value + algs[n].weight(m)
            if c.norm.value + algs[n].weight(nxt) >= old:
                continue
            rank = (-old, n, m)
            if best is None or rank < best[0]:
                best = (rank, n, m, nxt, c)
        if best is None:
            break
        _, n, m, nxt, c = best
        del state[(n, m)]
        s = state.get((n, nxt), ZERO) + c
        if s:
            state[(n, nxt)] = s
        else:
            state.pop((n, nxt), None)
    out = BOTTOM
    for (n, m), c in state.items():
        out = out.join(c.norm + algs[n].weight(m))
    return out


def product_localization_isometry_check(f: ProductElement, depth: int) -> CheckResult:
    per = []
    for n, el in enumerate(f.factors):
        if el.algebra.support.value != "staircase":
            raise PreconditionFailed(f"factor {n} is not in the staircase algebra")
        pres = LocalizationPresentation(el.algebra, TateElement.monomial(el.algebra, 0, 1))
        per.append(reduce_optimal(el, pres, depth).upper)
    joint = _joint_greedy(f, depth)
    result = CheckResult(joint, tuple(per), False)
    if joint != result.per_factor_max:
        worst = max(range(len(per)), key=lambda k: per[k]) if per else None
        raise Mismatch(
            f"joint {joint.to_json()} != per-factor max {result.per_factor_max.to_json()}", worst
        )
    return CheckResult(joint, tuple(per), True)


def random_product_element(rng: random.Random, factors: int, r_log: Rational) -> ProductElement:
    """Sparse staircase elements with a few colliding blocks per factor."""
    alg = AlgebraDescriptor.staircase(r_log)
    out = []
    for _ in range(factors):
        coeffs = {}
        for _ in range(rng.randint(0, 4)):
            u = rng.randint(0, 8)
            m = Monomial(u, b_seq(u) + rng.randint(0, 5), rng.randint(0, 2))
            c = ValuedScalar.mono(Fraction(rng.randint(-4, 4), rng.randint(1, 3)), rng.choice([-2, -1, 1, 3]))
            coeffs[m] = coeffs.get(m, ZERO) + c
        out.append(TateElement.make(alg, coeffs))
    return ProductElement(out)


# -- non-admissibility of multiplication by T - Pi UX --------------------------


@dataclass(frozen=True)
class GapReport:
    target: Fraction
    n0: int
    epsilon: Fraction
    i0: int
    N: int
    input_lognorm: Fraction
    image_lognorm: LogNorm
    materialized: bool

    @property
    def ratio_lognorm(self) -> Fraction:
        """Log lower bound for the operator norm of the inverse."""
        return self.input_lognorm - self.image_lognorm.value

    @property
    def succeeded(self) -> bool:
        return self.input_lognorm > self.target and self.image_lognorm == 0

    def to_json(self) -> dict:
        return {
            "target": format_fraction(self.target),
            "n0": self.n0,
            "epsilon": format_fraction(self.epsilon),
            "i0": self.i0,
            "N": self.N,
            "element": f"sum_(h<{self.N}) (pi({self.n0}) UX)^({self.N - 1}-h) e_{self.n0} T^h",
            "input_lognorm": format_fraction(self.input_lognorm),
            "image_lognorm": self.image_lognorm.to_json(),
            "inverse_norm_lower": format_fraction(self.ratio_lognorm),
            "materialized": self.materialized,
            "succeeded": self.succeeded,
        }


MATERIALIZE_LIMIT = 20000


def _least_n(k: int, target: Fraction, pi: PiSequence, r_log: Fraction) -> int:
    """Least ``n`` with ``-2**(k-1) eps_n + k log r > target`` (needs ``k log r > target``)."""
    # eps_n < (k r - target) / 2**(k-1)  <=>  n + 1 > scale 2**(k-1) / (k r - target)
    bound = pi.scale * (1 << (k - 1)) / (k * r_log - target)
    return math.floor(bound)


def _least_contracting(i0: int, eps: Fraction, r_log: Fraction) -> int:
    """Least ``N > i0`` with ``-N eps + b_N log r <= 0``."""
    k = (i0 + 1).bit_length()
    while True:
        lo, hi = max(i0 + 1, 1 << (k - 1)), (1 << k) - 1
        need = math.ceil(k * r_log / eps)
        cand = max(lo, need)
        if cand <= hi:
            return cand
        k += 1


def _max_objective_below(N: int, eps: Fraction, r_log: Fraction) -> Fraction:
    """``max_{0 <= m < N} -m eps + b_m log r`` via bit-length blocks."""
    best = Fraction(0)
    for k in range(1, (N - 1).bit_length() + 1):
        best = max(best, _objective(1 << (k - 1), eps, r_log))
    return best


def admissibility_gap(R_target: Rational, pi: PiSequence, r_log: Rational) -> GapReport:
    """Element whose norm exceeds ``R_target`` (log) but whose image has norm 1.

    Picks ``i0 = 2**(k-1)`` and the least ``n0`` with
    ``|pi(n0)|**i0 r**b_i0 > 2**R_target``, then the least ``N > i0`` with
    ``||(pi(n0) UX)**N|| <= 1``.  The element is
    ``sum_{h<N} (pi UX)**(N-1-h) T**h`` in factor ``n0``; multiplying by
    ``T - pi UX`` telescopes to ``T**N - (pi UX)**N``.
    """
    target, r_log = as_fraction(R_target), as_fraction(r_log)
    if target <= 0 or r_log <= 0:
        raise PreconditionFailed("need R_target > 0 and r > 1")
    k_lo = math.floor(target / r_log) + 1
    best = None
    for k in range(k_lo, k_lo + 64):
        n = _least_n(k, target, pi, r_log)
        if best is None or n < best[0]:
            best = (n, k)
    n0, k = best
    eps = pi.epsilon(n0)
    i0 = 1 << (k - 1)
    if not _objective(i0, eps, r_log) > target:
        raise AssertionError("selected (i0, n0) misses the target")
    N = _least_contracting(i0, eps, r_log)
    input_log = _max_objective_below(N, eps, r_log)
    image = LogNorm(0).join(_objective(N, eps, r_log))
    materialized = N <= MATERIALIZE_LIMIT
    if materialized:
        alg = _factor_algebra(r_log)
        pi_n = pi(n0)
        element = TateElement.make(
            alg, {Monomial(N - 1 - h, N - 1 - h, h): pi_n ** (N - 1 - h) for h in range(N)}
        )
        relation = TateElement.monomial(alg, 0, 0, 1) - _term(alg, pi_n, 1, 0)
        product = relation * element
        expected = TateElement.monomial(alg, 0, 0, N) - _term(alg, pi_n ** N, N, 0)
        if product != expected:
            raise IdentityFailure("telescoping identity fails")
        if gauss_norm(element) != input_log:
            raise AssertionError("closed-form input norm disagrees with expansion")
        image = gauss_norm(product)
    return GapReport(target, n0, eps, i0, N, input_log, image, materialized)
