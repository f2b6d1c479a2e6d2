"""Independent reference values used by the tests.

Nothing here calls into gammashape: densities come from scipy.stats and the
integrals from a plain trapezoid rule, so agreement is a real cross-check.
"""
import math

import numpy as np
from scipy import stats


def _logpdf(t, shape, rate):
    # density of log a when a ~ Gamma(shape, rate)
    return stats.gamma.logpdf(np.exp(t), shape, scale=1.0 / rate) + t


def trapezoid_discrepancy(f, g, panels=10_000_000, chunk=1_000_000):
    """tv, KL(f||g), KL(g||f) between two gammas, given as (shape, rate) pairs.

    Integrates over t = log a on a uniform grid covering both densities down
    to about 1e-300, where the integrands decay doubly exponentially.
    """
    lo = min(math.log(stats.gamma.ppf(1e-300 ** (1 / s) if s > 1 else 1e-300, s, scale=1 / r))
             for s, r in (f, g)) - 5.0
    hi = max(math.log(stats.gamma.isf(1e-300, s, scale=1 / r)) for s, r in (f, g)) + 1.0
    h = (hi - lo) / panels
    tv = kl_fg = kl_gf = 0.0
    for start in range(0, panels + 1, chunk):
        k = np.arange(start, min(start + chunk, panels + 1), dtype=float)
        t = lo + k * h
        lf = _logpdf(t, *f)
        lg = _logpdf(t, *g)
        pf, pg = np.exp(lf), np.exp(lg)
        wts = np.ones_like(t)
        wts[k == 0] = 0.5
        wts[k == panels] = 0.5
        tv += np.sum(wts * 0.5 * np.abs(pf - pg))
        kl_fg += np.sum(wts * np.where(pf > 0, pf * (lf - lg), 0.0))
        kl_gf += np.sum(wts * np.where(pg > 0, pg * (lg - lf), 0.0))
    return tv * h, kl_fg * h, kl_gf * h


def gamma_kl(f, g):
    """Closed-form KL(f||g) for gammas given as (shape, rate)."""
    from scipy.special import digamma, gammaln
    (a1, b1), (a2, b2) = f, g
    return ((a1 - a2) * digamma(a1) - gammaln(a1) + gammaln(a2)
            + a2 * (math.log(b1) - math.log(b2)) + a1 * (b2 - b1) / b1)
