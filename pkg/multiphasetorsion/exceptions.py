from typing import Any, Dict, Optional


class TorsionException(Exception):
    """
    Base class for every error raised by the library.

    Subclasses set ``exit_code`` (used by the command line), ``default_detail``
    and ``default_code``. Extra keyword arguments are kept in ``context`` so
    that callers can inspect residuals, traces or offending parameters.
    """

    exit_code = 1
    default_detail = "An internal error occurred."
    default_code = "error"

    def __init__(
        self, detail: Optional[str] = None, code: Optional[str] = None, **context
    ):
        if detail is None:
            detail = self.default_detail
        if code is None:
            code = self.default_code
        self.detail = detail
        self.code = code
        self.context: Dict[str, Any] = context
        super().__init__(detail)

    def as_dict(self) -> Dict[str, Any]:
        return {"code": self.code, "detail": str(self.detail)}


class ValidationError(TorsionException):
    exit_code = 2
    default_detail = "Invalid input."
    default_code = "invalid"


class ConfigurationError(ValidationError):
    default_detail = "Invalid configuration."
    default_code = "configuration"


class InvalidCurveError(ValidationError):
    default_detail = "Curve radius must be positive everywhere."
    default_code = "invalid_curve"


class InvalidPerturbationError(ValidationError):
    default_detail = "Perturbation collapses the unit circle."
    default_code = "invalid_perturbation"


class GeometryError(ValidationError):
    default_detail = "Interfaces are not nested."
    default_code = "geometry"


class DomainError(ValidationError):
    default_detail = "Argument outside the domain of the operation."
    default_code = "domain"


class KernelObstructionError(DomainError):
    default_detail = "Data has a component in the kernel of the operator."
    default_code = "kernel_obstruction"


class AmplitudeError(ValidationError):
    default_detail = "Perturbation amplitude exceeds the configured cap."
    default_code = "amplitude"


class DegenerateCoefficientError(ValidationError):
    default_detail = "Linearisation coefficient vanishes; sigma_3 must differ from 1."
    default_code = "degenerate_coefficient"


class NumericalError(TorsionException):
    exit_code = 3
    default_detail = "Numerical failure."
    default_code = "numerical"


class NonConvergenceError(NumericalError):
    default_detail = "Iteration did not converge."
    default_code = "non_converged"


class ConditioningError(NumericalError):
    default_detail = "Collocation system is rank deficient."
    default_code = "ill_conditioned"


class ZeroAverageError(NumericalError):
    default_detail = "Flux mismatch does not have zero average."
    default_code = "zero_average"


class ContractViolationError(TorsionException):
    default_detail = "Operation called outside its contract."
    default_code = "contract_violation"


class ReportWriteError(TorsionException):
    default_detail = "Unable to write report."
    default_code = "io"
