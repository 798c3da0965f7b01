"""Exception hierarchy shared by all modules."""


class DecompLabError(Exception):
    """Base class for every error raised by the package."""


class ModelError(DecompLabError, ValueError):
    """Invalid model specification."""


class UnstableModelError(ModelError):
    """No clause of the stability condition holds."""


class InfiniteRateWithNonpositiveDriftError(ModelError):
    """An infinite interaction rate is attached to a company with nonpositive drift."""


class DegenerateModelError(ModelError):
    """Queue rates with rho1 * rho2 >= 1 where the analysis requires < 1 (or != 1)."""


class HypothesisError(ModelError):
    """Model is valid but outside the hypotheses of the requested identity."""


class DomainError(DecompLabError, ValueError):
    """Argument outside the domain where a transform is defined or validated."""


class DriftError(DecompLabError, ValueError):
    """Operation requires a drift sign the model does not have."""


class NoConvergenceError(DecompLabError, ArithmeticError):
    """Root tracking failed to converge."""


class QuadratureFailure(DecompLabError, ArithmeticError):
    """Wiener-Hopf quadrature did not reach the requested accuracy."""


class OnKernelCurveError(DecompLabError, ArithmeticError):
    """Kernel factor vanishes; the bivariate transform cannot be recovered there."""


class NodesBelowDomainError(DecompLabError, ValueError):
    """Laplace inversion would need transform values left of the admissible abscissa."""


class InversionUnstableError(DecompLabError, ArithmeticError):
    """Laplace inversion results disagree between consecutive term counts."""


class BracketFailure(DecompLabError, RuntimeError):
    """Upper bracket for the minimal initial capital never led to survival."""


class AcceptanceTooLowError(DecompLabError, RuntimeError):
    """Rejection sampler acceptance rate fell below the allowed floor."""


class ConfigError(DecompLabError, ValueError):
    """Experiment configuration could not be parsed or validated."""


class StationarityWarning(UserWarning):
    """First and second half of a time-average estimate disagree."""
