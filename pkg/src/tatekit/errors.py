"""Exception hierarchy shared by all modules."""


class TatekitError(Exception):
    pass


class ZeroInverse(TatekitError, ZeroDivisionError):
    pass


class DescriptorMismatch(TatekitError):
    pass


class NotInAlgebra(TatekitError):
    pass


class PreconditionFailed(TatekitError):
    pass


class AssertLn(TatekitError):
    """Witness parameters give l_n = 0, so the construction does not apply."""


class NotGenerating(TatekitError):
    pass


class CoverIncomplete(TatekitError):
    pass


class ConfigError(TatekitError):
    pass


class SpecBreak(TatekitError):
    """A mechanical check of a mathematical claim failed.

    Raised (or reported) whenever an identity or inequality that the theory
    guarantees does not hold on the computed data.
    """


class StaircaseViolation(SpecBreak):
    pass


class IdentityFailure(SpecBreak):
    pass


class Mismatch(SpecBreak):
    def __init__(self, message: str, factor: int | None = None):
        super().__init__(message)
        self.factor = factor
