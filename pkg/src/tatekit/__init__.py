"""Exact computations with weighted Tate algebras over a dense valued field."""

from .errors import (
    AssertLn,
    ConfigError,
    CoverIncomplete,
    DescriptorMismatch,
    IdentityFailure,
    Mismatch,
    NotGenerating,
    NotInAlgebra,
    PreconditionFailed,
    SpecBreak,
    StaircaseViolation,
    TatekitError,
    ZeroInverse,
)
from .scalars import BOTTOM, ONE, ZERO, LogNorm, ValuedScalar
from .series import AlgebraDescriptor, Monomial, Support, TateElement, a_seq, b_seq, gauss_norm

__version__ = "0.1.0"
