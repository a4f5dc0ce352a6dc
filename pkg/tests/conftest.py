from fractions import Fraction

from hypothesis import HealthCheck, settings, strategies as st

from tatekit.scalars import ValuedScalar
from tatekit.series import AlgebraDescriptor, Monomial, Support, TateElement, b_seq

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=200,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

exponents = st.builds(Fraction, st.integers(-6, 6), st.integers(1, 4))
coefficients = st.integers(-5, 5).filter(bool).map(Fraction)

scalars = st.dictionaries(exponents, coefficients, max_size=4).map(ValuedScalar.from_mapping)
nonzero_scalars = scalars.filter(bool)


@st.composite
def elements(draw, algebra: AlgebraDescriptor, max_terms: int = 4, max_u: int = 5, t_max: int = 2):
    """Sparse elements whose support respects the descriptor."""
    coeffs = {}
    for _ in range(draw(st.integers(0, max_terms))):
        u = draw(st.integers(0, max_u))
        lo = 0 if algebra.support is Support.FULL else b_seq(u)
        x = draw(st.integers(lo, lo + 5))
        t = draw(st.integers(0, t_max))
        coeffs[Monomial(u, x, t)] = draw(nonzero_scalars)
    return TateElement.make(algebra, coeffs)
