"""
MCMC updates built on the gamma approximation.

``gibbs_update_shape`` samples the approximation directly (approximate
Gibbs); ``mh_update_shape`` uses it as an independence proposal so the full
conditional is preserved exactly. ``gibbs_update_mean`` is the conjugate
inverse-gamma update for mu.
"""
import math
from dataclasses import dataclass

import numpy as np

from .approx import AlgoConfig, approximate
from .errors import DomainError
from .model import (
    GammaParams,
    ShapePosterior,
    compute_stats,
    log_f,
    log_f_from_log,
)

_TINY = np.finfo(float).tiny
_UNDERFLOW_RETRIES = 16


def make_rng(seed):
    """Seeded PCG64 generator; the same 64-bit seed gives the same stream anywhere."""
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def sample_log_gamma(rng, shape, rate, size=None):
    """log of Gamma(shape, rate) draws.

    Shapes below one use the boost X = Y * U**(1/shape), Y ~ Gamma(shape + 1),
    taken in logs so draws far below the smallest double survive.
    """
    if not (shape > 0.0 and rate > 0.0 and math.isfinite(shape) and math.isfinite(rate)):
        raise DomainError(f"shape and rate must be positive, got {shape!r}, {rate!r}")
    if shape >= 1.0:
        out = np.log(rng.standard_gamma(shape, size=size))
    else:
        y = rng.standard_gamma(shape + 1.0, size=size)
        u = 1.0 - rng.random(size=size)  # (0, 1]
        out = np.log(y) + np.log(u) / shape
    out = out - math.log(rate)
    return float(out) if size is None else out


def sample_gamma(rng, params, size=None):
    """Gamma(shape, rate) draws, strictly positive.

    A draw that underflows is redrawn a bounded number of times, then floored
    at the smallest normal double.
    """
    x = np.exp(sample_log_gamma(rng, params.shape, params.rate, size))
    if size is None:
        for _ in range(_UNDERFLOW_RETRIES):
            if x > 0.0:
                return float(x)
            x = math.exp(sample_log_gamma(rng, params.shape, params.rate))
        return max(float(x), _TINY)
    x = np.atleast_1d(x)
    for _ in range(_UNDERFLOW_RETRIES):
        zero = x == 0.0
        if not zero.any():
            break
        x[zero] = np.exp(sample_log_gamma(rng, params.shape, params.rate, int(zero.sum())))
    return np.reshape(np.maximum(x, _TINY), size)


def gibbs_update_shape(rng, data, mu, prior, cfg=None):
    """Approximate Gibbs step: a ~ Gamma(A, B) fitted to the full conditional."""
    fit = approximate(compute_stats(data, mu), prior, cfg)
    return sample_gamma(rng, fit.params)


@dataclass(frozen=True)
class MhOutcome:
    value: float
    accepted: bool
    log_accept_prob: float
    proposal: GammaParams


def mh_log_accept_prob(a_current, a_proposed, post, proposal):
    """log min(1, f(a') g(a) / (f(a) g(a'))) for the independence proposal g.

    Normalizers cancel, so only the kernels enter; grouping the terms this way
    makes the ratio exactly 1 when f and g share a kernel or a' == a.
    """
    d_target = log_f(a_proposed, post) - log_f(a_current, post)
    d_proposal = proposal.log_kernel(a_current) - proposal.log_kernel(a_proposed)
    return min(0.0, d_target + d_proposal)


def mh_update_shape(rng, a_current, data, mu, prior, cfg=None):
    """Metropolis-Hastings step for the shape with the gamma fit as proposal.

    The proposal is rebuilt from the current data and mu on every call.
    """
    if not (math.isfinite(a_current) and a_current > 0.0):
        raise DomainError(f"a_current must be positive, got {a_current!r}")
    stats = compute_stats(data, mu)
    post = ShapePosterior(stats, prior, mu)
    proposal = approximate(stats, prior, cfg).params
    a_new = sample_gamma(rng, proposal)
    log_alpha = mh_log_accept_prob(a_current, a_new, post, proposal)
    accepted = bool(math.log(1.0 - rng.random()) <= log_alpha)
    return MhOutcome(a_new if accepted else a_current, accepted, log_alpha, proposal)


def gibbs_update_mean(rng, data, a, mean_prior_shape, mean_prior_scale):
    """Draw mu | x, a under mu ~ InvGamma(alpha0, beta0) (shape, scale).

    The posterior is InvGamma(alpha0 + n a, beta0 + a S).
    """
    if not (a > 0.0 and mean_prior_shape > 0.0 and mean_prior_scale > 0.0):
        raise DomainError("a and the inverse-gamma prior parameters must be positive")
    x = np.asarray(data, dtype=float).ravel()
    if np.any(~(x > 0.0)):
        raise DomainError("data must be positive")
    shape, scale = mean_posterior(x, a, mean_prior_shape, mean_prior_scale)
    return 1.0 / sample_gamma(rng, GammaParams(shape, scale))


def mean_posterior(data, a, mean_prior_shape, mean_prior_scale):
    """(shape, scale) of the inverse-gamma full conditional of mu."""
    x = np.asarray(data, dtype=float).ravel()
    return mean_prior_shape + x.size * a, mean_prior_scale + a * float(np.sum(x))


def mh_chain(rng, a_init, stats, prior, steps, cfg=None):
    """Run ``steps`` independence-MH updates of the shape with data and mu held fixed.

    With data and mu fixed the proposal never changes, so it is fitted once;
    proposals and uniforms are drawn in bulk. Returns (chain, accept_count).
    """
    post = ShapePosterior(stats, prior)
    proposal = approximate(stats, prior, cfg).params
    log_prop = sample_log_gamma(rng, proposal.shape, proposal.rate, steps)
    prop = np.exp(log_prop)
    log_u = np.log(1.0 - rng.random(steps))
    # log importance weight log f - log g (kernels only) for each proposal
    w_prop = log_f_from_log(prop, log_prop, post) - proposal.log_kernel(prop, log_prop)
    a0 = float(a_init)
    w_cur = log_f(a0, post) - proposal.log_kernel(a0)

    chain = np.empty(steps)
    cur, accepts = a0, 0
    for i, (a_new, w_new, lu) in enumerate(zip(prop.tolist(), w_prop.tolist(), log_u.tolist())):
        if lu <= w_new - w_cur:
            cur, w_cur = a_new, w_new
            accepts += 1
        chain[i] = cur
    return chain, accepts


def integrated_autocorr_time(x):
    """Integrated autocorrelation time via Geyer's initial monotone sequence."""
    x = np.asarray(x, dtype=float)
    n = x.size
    xc = x - x.mean()
    var = np.dot(xc, xc) / n
    if var == 0.0:
        return 1.0
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, nfft)
    acf = np.fft.irfft(f * np.conj(f), nfft)[:n] / (n * var)
    # pair sums Gamma_k = rho_{2k} + rho_{2k+1}, truncated at the first negative
    m = (n - 1) // 2
    pairs = acf[0:2 * m:2] + acf[1:2 * m:2]
    neg = np.nonzero(pairs <= 0.0)[0]
    if neg.size:
        pairs = pairs[:neg[0]]
    pairs = np.minimum.accumulate(pairs)
    return max(1.0, -1.0 + 2.0 * float(np.sum(pairs)))


def mc_standard_error(x):
    """Standard error of the mean of a correlated chain."""
    x = np.asarray(x, dtype=float)
    tau = integrated_autocorr_time(x)
    return float(np.std(x) * math.sqrt(tau / x.size))
