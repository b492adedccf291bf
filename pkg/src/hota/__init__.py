"""Tail-area sampling for marginal posteriors of scalar parameters.

The pipeline: fit the full model, profile out nuisance parameters on a
grid around the maximum, form the prior-adjusted signed-root pivot,
smooth and invert it, then push standard normal draws through the
inverse to get independent marginal posterior samples. Reference
implementations (exact quadrature for the one-parameter genetic linkage
model, random-walk Metropolis-Hastings for everything) live in
``hota.oracles`` for validation.
"""
from .core import (
    GridPolicy,
    RStarCurve,
    SampleSet,
    build_rstar_curve,
    hota_sample,
    laplace_marginal_density,
    q_b,
    q_b_matching,
    r_p,
    r_star_b,
    survivor_probability,
    tail_probability,
)
from .errors import (
    CurveError,
    DatasetError,
    FitError,
    HotaError,
    NumericalError,
    ValidationError,
)
from .models import (
    CensoredRegData,
    LinkageData,
    LogisticData,
    ModelSpec,
    build_model,
    censreg_model,
    linkage_model,
    load_dataset,
    logistic_model,
    resolve_dataset,
)
from .oracles import (
    MHConfig,
    exact_linkage_cdf,
    exact_linkage_sample,
    exact_linkage_summary,
    mh_sample,
)
from .priors import PriorSpec, log_prior_ratio, parse_prior
from .profiling import (
    FitResult,
    ProfileCurve,
    ProfilePoint,
    build_profile,
    fit_constrained,
    fit_mle,
)
from .summary import SummaryReport, hpd_interval, kde, summarize

__version__ = "0.1.0"

__all__ = [
    "CensoredRegData",
    "CurveError",
    "DatasetError",
    "FitError",
    "FitResult",
    "GridPolicy",
    "HotaError",
    "LinkageData",
    "LogisticData",
    "MHConfig",
    "ModelSpec",
    "NumericalError",
    "PriorSpec",
    "ProfileCurve",
    "ProfilePoint",
    "RStarCurve",
    "SampleSet",
    "SummaryReport",
    "ValidationError",
    "build_model",
    "build_profile",
    "build_rstar_curve",
    "censreg_model",
    "exact_linkage_cdf",
    "exact_linkage_sample",
    "exact_linkage_summary",
    "fit_constrained",
    "fit_mle",
    "hota_sample",
    "hpd_interval",
    "kde",
    "laplace_marginal_density",
    "linkage_model",
    "load_dataset",
    "log_prior_ratio",
    "logistic_model",
    "mh_sample",
    "parse_prior",
    "q_b",
    "q_b_matching",
    "r_p",
    "r_star_b",
    "resolve_dataset",
    "summarize",
    "survivor_probability",
    "tail_probability",
]
