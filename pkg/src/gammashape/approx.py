"""
Gamma approximation to the full conditional of a gamma shape parameter.

Starting from a Stirling-based guess, repeatedly match the first two
derivatives of log Gamma(a | A, B) to those of log f at the current mean
a = A/B, until the mean stops moving.
"""
import math
from dataclasses import dataclass

from . import specfun
from .errors import DomainError, NumericalError
from .model import GammaParams, ShapePosterior, compute_stats, dlog_f


@dataclass(frozen=True)
class AlgoConfig:
    epsilon: float = 1e-8
    max_iters: int = 10

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise DomainError(f"max_iters must be a positive integer, got {self.max_iters!r}")


@dataclass(frozen=True)
class ApproxResult:
    params: GammaParams
    iterations: int
    converged: bool
    residual: float

    @property
    def A(self):
        return self.params.shape

    @property
    def B(self):
        return self.params.rate


def init_stirling(stats, prior):
    """(a0 + n/2, b0 + T): the large-a limit of the likelihood."""
    return GammaParams(prior.shape + 0.5 * stats.n, prior.rate + stats.T)


def init_small_a(stats, prior):
    """(a0 + n, b0 + T + n): the small-a limit; usually one iteration slower."""
    return GammaParams(prior.shape + stats.n, prior.rate + stats.T + stats.n)


def refine_once(a, stats, prior):
    """Match log-density derivatives at a; returns the new (A, B).

    A = a0 + n (a^2 psi'(a) - a) and B = b0 + (A - a0)/a - n (log a - psi(a)) + T,
    which are the textbook updates with the cancelling pairs evaluated as
    single functions.
    """
    if not (math.isfinite(a) and a > 0.0):
        raise NumericalError("matching point must be positive and finite",
                             a=a, stats=stats, prior=prior)
    a0, b0, n = prior.shape, prior.rate, stats.n
    if n == 0:
        return GammaParams(a0, b0)
    excess = n * specfun.a_sq_trigamma_minus_a(a)
    A = a0 + excess
    B = b0 + excess / a - n * specfun.log_minus_digamma(a) + stats.T
    if not (math.isfinite(A) and math.isfinite(B) and A > 0.0 and B > 0.0):
        raise NumericalError("derivative matching produced an invalid gamma",
                             a=a, A=A, B=B, stats=stats, prior=prior)
    return GammaParams(A, B)


def fixed_point_residual(params, post):
    """a * dlog_f(a) + 1 at a = shape/rate; zero exactly at fixed points."""
    a = params.mean
    if not a > 0.0:
        raise DomainError(f"mean must be positive, got {a!r}")
    return a * dlog_f(a, post) + 1.0


def approximate(stats, prior, cfg=None, init=init_stirling):
    """Fit Gamma(A, B) to the full conditional of the shape.

    Returns the last iterate even when ``cfg.max_iters`` runs out; check
    ``converged``. ``iterations`` counts derivative-matching steps, so it is
    at least 1.
    """
    cfg = cfg or AlgoConfig()
    g = init(stats, prior)
    converged = False
    j = 0
    for j in range(1, cfg.max_iters + 1):
        a = g.mean
        g = refine_once(a, stats, prior)
        if abs(a / g.mean - 1.0) < cfg.epsilon:
            converged = True
            break
    post = ShapePosterior(stats, prior)
    return ApproxResult(g, j, converged, fixed_point_residual(g, post))


def approximate_data(data, mu, prior, cfg=None):
    """Convenience wrapper: compute the statistics, then approximate."""
    return approximate(compute_stats(data, mu), prior, cfg)
