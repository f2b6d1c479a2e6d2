"""
Deterministic importance quadrature against a gamma reference density g.

Nodes are the g-quantiles at u_i = (i - 0.5)/N, so (1/N) sum h(a_i)
approximates the integral of h g. With w = f~/g the same nodes give the
normalizer of f, the total variation distance, both KL divergences and the
moments of f. Everything runs on log weights shifted by their maximum, and
nodes are carried as log a so that quantiles below the smallest double do
not collapse to zero.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError
from .model import log_lik_kernel
from .specfun import gamma_log_quantile, reg_lower_inc_gamma


@dataclass(frozen=True)
class QuadConfig:
    num_points: int = 100_000

    def __post_init__(self):
        if int(self.num_points) != self.num_points or self.num_points < 1:
            raise DomainError(f"num_points must be a positive integer, got {self.num_points!r}")


@dataclass(frozen=True)
class DiscrepancyReport:
    log_z_hat: float
    tv: float
    kl_fg: float
    kl_gf: float
    mean_f: float
    var_f: float
    num_points: int
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def z_hat(self):
        """Normalizer estimate, or inf when it does not fit in a double."""
        if self.log_z_hat > 709.0:
            return math.inf
        return math.exp(self.log_z_hat)


def log_quad_nodes(g, cfg):
    """log a_i for a_i = G^{-1}((i - 0.5)/N), i = 1..N."""
    n = int(cfg.num_points)
    i = np.arange(1, n + 1, dtype=float)
    u = (i - 0.5) / n
    q = (n - i + 0.5) / n
    return np.asarray(gamma_log_quantile(u, g.shape, g.rate, q=q), dtype=float)


def quad_nodes(g, cfg):
    """The quadrature nodes a_i themselves (may underflow for tiny shapes)."""
    return np.exp(log_quad_nodes(g, cfg))


def _log_ratio(post, g, log_a):
    """log f~(a_i) - log g(a_i) at the nodes.

    The prior and proposal kernels are differenced before the likelihood is
    added, so identical gammas cancel to exactly zero.
    """
    a = np.exp(log_a)
    prior = post.prior
    kernel_gap = prior.log_kernel(a, log_a) - g.log_kernel(a, log_a)
    if post.stats.n:
        # overflow shows up as a non-finite weight, reported by the caller
        with np.errstate(over="ignore", invalid="ignore"):
            kernel_gap = log_lik_kernel(a, log_a, post.stats) + kernel_gap
    return kernel_gap - g.log_normalizer(), a


def _weights(post, g, cfg):
    log_a = log_quad_nodes(g, cfg)
    log_w, a = _log_ratio(post, g, log_a)
    if not np.all(np.isfinite(log_w)):
        i = int(np.nonzero(~np.isfinite(log_w))[0][0])
        raise NumericalError("non-finite log weight", node=float(a[i]), log_node=float(log_a[i]))
    shift = float(np.max(log_w))
    mean_w = float(np.mean(np.exp(log_w - shift)))
    log_z = shift + math.log(mean_w)
    log_r = log_w - log_z
    return a, log_a, log_r, log_z


def discrepancy(post, g, cfg=None):
    """Compare the full conditional f with the gamma g on g's quantile nodes."""
    cfg = cfg or QuadConfig()
    a, _, log_r, log_z = _weights(post, g, cfg)
    r = np.exp(log_r)
    if not np.all(np.isfinite(r)):
        i = int(np.nonzero(~np.isfinite(r))[0][0])
        raise NumericalError("density ratio overflowed", node=float(a[i]), log_ratio=float(log_r[i]))
    tv = float(np.mean(0.5 * np.abs(r - 1.0)))
    kl_fg_raw = float(np.mean(r * log_r))
    kl_gf_raw = float(-np.mean(log_r))
    # g's own moments are known exactly, so the nodes' error on them serves as
    # a control variate for the f moments; with r == 1 they come out exact
    mean_f = float(np.mean((r - 1.0) * a)) + g.mean
    dev = g.mean - mean_f
    var_f = float(np.mean((r - 1.0) * (a - mean_f) ** 2)) + g.var + dev * dev
    diagnostics = {"kl_fg_raw": kl_fg_raw, "kl_gf_raw": kl_gf_raw,
                   "max_ratio": float(r.max())}
    return DiscrepancyReport(
        log_z_hat=log_z,
        tv=min(tv, 1.0),
        kl_fg=max(kl_fg_raw, 0.0),
        kl_gf=max(kl_gf_raw, 0.0),
        mean_f=mean_f,
        var_f=var_f,
        num_points=int(cfg.num_points),
        diagnostics=diagnostics,
    )


def cdf_table(post, g, cfg=None, points=512):
    """Rows (a, true CDF, approximate CDF) at the g-quantiles (k - 0.5)/points.

    The true CDF integrates the quadrature density ratio in u = G(a): the
    ratio is piecewise constant over the N cells [(i-1)/N, i/N], so the CDF is
    piecewise linear in u and exact when f = g.
    """
    cfg = cfg or QuadConfig()
    n = int(cfg.num_points)
    _, _, log_r, _ = _weights(post, g, cfg)
    r = np.exp(log_r)
    r = r / np.mean(r)
    cum = np.concatenate(([0.0], np.cumsum(r) / n))

    k = np.arange(1, points + 1, dtype=float)
    log_grid = np.asarray(gamma_log_quantile((k - 0.5) / points, g.shape, g.rate,
                                             q=(points - k + 0.5) / points), dtype=float)
    grid = np.exp(log_grid)
    u = np.asarray(reg_lower_inc_gamma(g.shape, g.rate * grid), dtype=float)
    cell = np.clip(np.floor(u * n).astype(np.int64), 0, n - 1)
    true_cdf = np.clip(cum[cell] + (u - cell / n) * r[cell], 0.0, 1.0)
    return grid, true_cdf, u
