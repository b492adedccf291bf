"""Exception hierarchy shared across the package.

Two broad failure classes matter to callers: bad inputs (datasets, configs,
parameter domains) and numerical breakdowns (optimizer non-convergence,
indefinite information matrices, curve inconsistencies). The CLI maps them
to exit codes 2 and 3 respectively.
"""


class HotaError(Exception):
    """Base class for all package errors."""


class ValidationError(HotaError):
    """Invalid input: bad config, out-of-domain parameter, schema violation."""


class DatasetError(ValidationError):
    """Dataset failed to parse or violated a schema invariant."""


class NumericalError(HotaError):
    """A numerical procedure failed (optimization, information matrix, MCMC)."""


class FitError(NumericalError):
    """Maximum-likelihood fit did not converge or produced an unusable Hessian."""


class CurveError(NumericalError):
    """A likelihood-root curve is inconsistent or could not be made monotone."""
