"""
The full conditional of a gamma shape parameter.

Data x_1..x_n ~ Gamma(shape=a, rate=a/mu) i.i.d. with a ~ Gamma(a0, b0). Given
mu the data enter only through (n, R, S, T), and up to an additive constant

    log f(a) = n a log a - n log Gamma(a) - (T + n) a + (a0 - 1) log a - b0 a.

The constant is fixed at zero throughout the package.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import specfun
from .errors import DomainError, NumericalError

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_STIRLING_FROM = 10.0


@dataclass(frozen=True)
class GammaParams:
    """Gamma(shape, rate); density proportional to a**(shape-1) exp(-rate a)."""

    shape: float
    rate: float

    def __post_init__(self):
        for name in ("shape", "rate"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        object.__setattr__(self, "shape", float(self.shape))
        object.__setattr__(self, "rate", float(self.rate))

    @property
    def mean(self):
        return self.shape / self.rate

    @property
    def var(self):
        return self.shape / self.rate**2

    def log_kernel(self, a, log_a=None):
        """(shape - 1) log a - rate a, the unnormalized log density."""
        if log_a is None:
            log_a = np.log(a)
        return (self.shape - 1.0) * log_a - self.rate * a

    def log_normalizer(self):
        """log of rate**shape / Gamma(shape)."""
        return self.shape * math.log(self.rate) - math.lgamma(self.shape)

    def logpdf(self, a, log_a=None):
        return self.log_kernel(a, log_a) + self.log_normalizer()


@dataclass(frozen=True)
class SufficientStats:
    """n, R = sum log x, S = sum x, T = sum(x/mu - log(x/mu) - 1) >= 0."""

    n: int
    R: float
    S: float
    T: float

    def __post_init__(self):
        if self.n < 0 or int(self.n) != self.n:
            raise DomainError(f"n must be a nonnegative integer, got {self.n!r}")
        if not (math.isfinite(self.T) and self.T >= 0.0):
            raise DomainError(f"T must be finite and nonnegative, got {self.T!r}")
        if not self.S >= 0.0:
            raise DomainError(f"S must be nonnegative, got {self.S!r}")
        if self.n == 0 and (self.R != 0.0 or self.S != 0.0 or self.T != 0.0):
            raise DomainError("empty data must have R = S = T = 0")
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class ShapePosterior:
    stats: SufficientStats
    prior: GammaParams
    mu: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu > 0.0):
            raise DomainError(f"mu must be positive and finite, got {self.mu!r}")


def _check_mu(mu):
    if not (math.isfinite(mu) and mu > 0.0):
        raise DomainError(f"mu must be positive and finite, got {mu!r}")


def _stats_from_log_ratio(z, log_x):
    """Assemble the statistics from z = log(x/mu) and log x."""
    n = z.size
    if n == 0:
        return SufficientStats(0, 0.0, 0.0, 0.0)
    T = float(np.sum(specfun.expm1mx(z)))
    if not math.isfinite(T):
        raise NumericalError("T overflowed", max_log_ratio=float(z.max()))
    R = float(np.sum(log_x))
    S = float(np.sum(np.exp(log_x)))
    return SufficientStats(n, R, S, max(T, 0.0))


def compute_stats(data, mu):
    """Reduce positive data to (n, R, S, T) given the mean mu.

    T is summed from the nonnegative per-observation terms rather than
    S/mu - R + n log mu - n, which cancels badly when S/mu and R are large.
    """
    _check_mu(mu)
    x = np.asarray(data, dtype=float).ravel()
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError("data must be positive and finite")
    with np.errstate(over="ignore", under="ignore"):
        u = x / mu
    ok = np.isfinite(u) & (u >= np.finfo(float).tiny)
    log_x = np.log(x)
    z = np.where(ok, np.log(np.where(ok, u, 1.0)), log_x - math.log(mu))
    return _stats_from_log_ratio(z, log_x)


def compute_stats_from_log(log_data, mu):
    """Same as compute_stats but for data supplied as log x.

    Simulated data with a tiny shape (1e-6) fall far below the smallest
    double, so the harness keeps them on the log scale.
    """
    _check_mu(mu)
    log_x = np.asarray(log_data, dtype=float).ravel()
    if not np.all(np.isfinite(log_x)):
        raise DomainError("log data must be finite")
    return _stats_from_log_ratio(log_x - math.log(mu), log_x)


def _per_obs_kernel(a, log_a):
    """a log a - log Gamma(a) - a, elementwise; equals log a / 2 + O(1)."""
    a = np.asarray(a, dtype=float)
    log_a = np.asarray(log_a, dtype=float)
    out = np.empty(np.broadcast(a, log_a).shape)
    a, log_a = np.broadcast_arrays(a, log_a)
    big = a >= _STIRLING_FROM
    if big.any():
        ab = a[big]
        out[big] = 0.5 * log_a[big] - _HALF_LOG_2PI - specfun.stirling_remainder(ab)
    small = ~big
    if small.any():
        a_s, la_s = a[small], log_a[small]
        # log Gamma(a) = log Gamma(1 + a) - log a also holds once a underflows
        lg = special.gammaln(1.0 + a_s) - la_s
        normal = a_s > 1e-300
        lg[normal] = special.gammaln(a_s[normal])
        out[small] = a_s * la_s - lg - a_s
    return out


def log_lik_kernel(a, log_a, stats):
    """n a log a - n log Gamma(a) - (T + n) a: the data's contribution to log f."""
    return stats.n * _per_obs_kernel(a, log_a) - stats.T * a


def log_f_from_log(a, log_a, post):
    """log f at a, with log a supplied so that a may have underflowed.

    Written so that for n = 0 it is bit-identical to the prior's log_kernel.
    """
    stats, prior = post.stats, post.prior
    prior_part = prior.log_kernel(a, log_a)
    if stats.n == 0:
        return prior_part
    return log_lik_kernel(a, log_a, stats) + prior_part


def _positive_a(a):
    arr = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"a must be positive and finite, got {a!r}")
    return arr


def _out(value, a):
    return float(value) if np.ndim(a) == 0 else value


def log_f(a, post):
    """Unnormalized log full conditional of the shape at a > 0."""
    arr = _positive_a(a)
    return _out(log_f_from_log(arr, np.log(arr), post), a)


def dlog_f(a, post):
    """First derivative of log f: n (log a - psi(a)) - T + (a0 - 1)/a - b0."""
    arr = _positive_a(a)
    stats, prior = post.stats, post.prior
    d = (prior.shape - 1.0) / arr - prior.rate
    if stats.n:
        d = stats.n * specfun.log_minus_digamma(arr) - stats.T + d
    return _out(d, a)


def d2log_f(a, post):
    """Second derivative of log f: -[n (a**2 psi'(a) - a) + a0 - 1] / a**2."""
    arr = _positive_a(a)
    stats, prior = post.stats, post.prior
    num = prior.shape - 1.0
    if stats.n:
        num = stats.n * specfun.a_sq_trigamma_minus_a(arr) + num
    return _out(-num / (arr * arr), a)
