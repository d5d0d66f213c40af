"""Deep Gaussian process surrogates with MCMC inference and active learning."""

from ._core import (
    Model,
    f_exp_2d,
    f_piecewise_1d,
    fit,
    lhs,
    load,
    rmse,
    run_campaign,
    score,
    selfcheck,
    __version__,
)

__all__ = [
    "Model",
    "f_exp_2d",
    "f_piecewise_1d",
    "fit",
    "lhs",
    "load",
    "rmse",
    "run_campaign",
    "score",
    "selfcheck",
    "__version__",
]
