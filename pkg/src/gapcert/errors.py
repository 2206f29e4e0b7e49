"""Exception types raised by the certification engine."""


class GapCertError(Exception):
    """Base class for all engine errors."""


class DivisionByIntervalContainingZero(GapCertError):
    pass


class NegativeRadicand(GapCertError):
    pass


class NonzeroRemainder(GapCertError):
    """Exact division left a nonzero remainder (corrupt coefficient table)."""


class NegativePowerNeedsEi(GapCertError):
    """Antiderivative of e^{ar} r^k with k < 0 has no elementary closed form."""


class DivergentIntegral(GapCertError):
    pass


class SingularityInsideDisk(GapCertError):
    pass


class DomainMismatch(GapCertError):
    pass


class DomainBelowR7(GapCertError):
    pass


class DenominatorMayVanish(GapCertError):
    pass


class TableMissing(GapCertError):
    pass


class MatchingDenominatorZero(GapCertError):
    pass


class MatchingResidualNonzero(GapCertError):
    pass


class CheckFailed(GapCertError):
    """A certified inequality failed (only raised in fail-fast mode)."""


class DependencyUnsatisfied(GapCertError):
    pass


class ParseError(GapCertError):
    pass


class SchemaMismatch(GapCertError):
    pass


class NonCanonicalRational(GapCertError):
    pass


class BoundFailure(GapCertError):
    """A bounding routine could not certify the requested inequality."""
