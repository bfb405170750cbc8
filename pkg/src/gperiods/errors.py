"""Exception hierarchy shared by every module.

Each error carries a short machine-readable ``code`` used by the CLI and the
HTTP service to map failures onto exit codes and status payloads.
"""


class GPeriodError(Exception):
    code = "error"
    exit_code = 2


class UsageError(GPeriodError):
    code = "usage"
    exit_code = 1


class NotImplementedCase(GPeriodError):
    code = "not_implemented_case"
    exit_code = 3


# numerics
class DivisorContainsZero(GPeriodError, ZeroDivisionError):
    code = "divisor_contains_zero"


class BranchCutStraddle(GPeriodError, ValueError):
    code = "branch_cut_straddle"


class NotFound(GPeriodError, LookupError):
    code = "not_found"


class AmbiguousCandidate(GPeriodError, LookupError):
    code = "ambiguous_candidate"


# family
class PoleAtInput(GPeriodError, ZeroDivisionError):
    code = "pole_at_input"


class CMDetectionInconclusive(GPeriodError):
    code = "cm_detection_inconclusive"


class FamilyFormatError(UsageError):
    code = "family_format"


# picard_fuchs
class NotDefinedAtChart(GPeriodError):
    code = "not_defined_at_chart"


class ResonanceUnresolved(GPeriodError, ArithmeticError):
    code = "resonance_unresolved"


class NotSingular(GPeriodError):
    code = "not_singular"


# periods
class NonConvergence(GPeriodError, ArithmeticError):
    code = "non_convergence"


class DomainError(GPeriodError, ValueError):
    code = "domain_error"


class TruncationDominates(GPeriodError):
    code = "truncation_dominates"


# gfunctions
class TooFewCoefficients(GPeriodError, ValueError):
    code = "too_few_coefficients"


class UndecidableAtPrecision(GPeriodError):
    code = "undecidable_at_precision"


# cm
class InvalidDiscriminant(GPeriodError, ValueError):
    code = "invalid_discriminant"
    exit_code = 1


class NotReduced(GPeriodError, ValueError):
    code = "not_reduced"


class NonFundamental(GPeriodError, ValueError):
    code = "non_fundamental"


# relations
class ResidualNonZero(GPeriodError):
    code = "residual_nonzero"


class ResidualExcludesZero(GPeriodError):
    code = "residual_excludes_zero"


class UnexpectedRelationFound(GPeriodError):
    code = "unexpected_relation_found"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class RecognitionFailed(GPeriodError):
    code = "recognition_failed"


class NotCMFiber(GPeriodError):
    code = "not_cm_fiber"


class NonCMFiber(NotCMFiber):
    code = "non_cm_fiber"


class NotGAOAdmissible(GPeriodError):
    code = "not_gao_admissible"


class TrivialRelationProduced(GPeriodError):
    code = "trivial_relation_produced"


# heights_siegel
class RootIsolationFailed(GPeriodError):
    code = "root_isolation_failed"


class MissingCertificates(GPeriodError):
    code = "missing_certificates"
