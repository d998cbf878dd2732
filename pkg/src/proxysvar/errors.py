"""Exception types shared across the package."""


class ProxySvarError(Exception):
    """Base class for all package-specific errors."""


class InsufficientSampleError(ProxySvarError):
    """Too few observations for the requested regression."""


class SingularDesignError(ProxySvarError):
    """Regressor matrix is rank deficient."""


class SingularMatrixError(ProxySvarError):
    """Impact matrix is numerically singular."""


class DistributionDomainError(ProxySvarError):
    """Distribution parameters outside their admissible region."""


class DegenerateInputError(ProxySvarError):
    """Input data carries no usable variation (e.g. constant vector)."""


class MisalignedDataError(ProxySvarError):
    """Sample lengths or dimensions of jointly-used inputs disagree."""


class WeakProxyError(ProxySvarError):
    """First-stage covariance between proxy and target residual is too close
    to zero for the ratio estimator to be trusted."""

    def __init__(self, message, first_stage_cov):
        super().__init__(message)
        self.first_stage_cov = first_stage_cov


class MappingDegenerateError(ProxySvarError):
    """Closed-form parameter mapping hit a singular sub-system."""


class InitializationError(ProxySvarError):
    """Posterior is not finite at the chain's starting point."""


class StuckChainError(ProxySvarError):
    """A proposal block stopped accepting entirely during adaptation."""


class OptimizerError(ProxySvarError):
    """Mode search failed to converge; carries the best point found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(ProxySvarError):
    """Invalid run configuration; carries the full list of problems."""

    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


class DataFormatError(ProxySvarError):
    """Input data file violates the documented schema."""
