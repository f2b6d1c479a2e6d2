"""Gamma approximation to the full conditional of a gamma shape parameter."""
from .approx import AlgoConfig, ApproxResult, approximate, approximate_data, fixed_point_residual, refine_once
from .errors import DomainError, NumericalError
from .model import (
    GammaParams,
    ShapePosterior,
    SufficientStats,
    compute_stats,
    compute_stats_from_log,
    d2log_f,
    dlog_f,
    log_f,
)
from .quadrature import DiscrepancyReport, QuadConfig, cdf_table, discrepancy, quad_nodes
from .sampler import (
    gibbs_update_mean,
    gibbs_update_shape,
    make_rng,
    mh_chain,
    mh_update_shape,
    sample_gamma,
)

__all__ = [
    "AlgoConfig", "ApproxResult", "approximate", "approximate_data", "fixed_point_residual",
    "refine_once", "DomainError", "NumericalError", "GammaParams", "ShapePosterior",
    "SufficientStats", "compute_stats", "compute_stats_from_log", "d2log_f", "dlog_f",
    "log_f", "DiscrepancyReport", "QuadConfig", "cdf_table", "discrepancy", "quad_nodes",
    "gibbs_update_mean", "gibbs_update_shape", "make_rng", "mh_chain", "mh_update_shape",
    "sample_gamma",
]
