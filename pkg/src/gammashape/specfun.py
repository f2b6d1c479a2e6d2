"""
Scalar special functions for the gamma family.

Every function accepts a float or an array and returns the same kind.
Digamma and trigamma shift their argument above ``_ASYMPTOTIC_FROM`` with
the upward recurrence and then sum the asymptotic (Bernoulli) series. The
composite forms ``log_minus_digamma`` and ``a_sq_trigamma_minus_a`` carry
their own series so that large arguments do not lose every digit to
cancellation.
"""
import math

import numpy as np
from scipy import special

from .errors import DomainError, NumericalError

_ASYMPTOTIC_FROM = 10.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# positive root of digamma, split into high and low parts
_DIGAMMA_ROOT_HI = 1.4616321449683622
_DIGAMMA_ROOT_LO = 9.549995429965697e-17
_DIGAMMA_ROOT_RADIUS = 0.05
# Taylor coefficients psi^(k)(x0) / k!, k = 1..18
_DIGAMMA_ROOT_TAYLOR = (
    0.9676722454476212,
    -0.4427631689835921,
    0.258499760955651,
    -0.16394270544240652,
    0.10782405069126237,
    -0.07219956125645471,
    0.04880428816414311,
    -0.03316112647484736,
    0.022597648232218104,
    -0.01542476590494896,
    0.010538791616612175,
    -0.007204534386356869,
    0.004926781395729853,
    -0.003369801655439328,
    0.002305126326734928,
    -0.0015769367714301972,
    0.0010788252019162967,
    -0.0007380709389960052,
)

_QUANTILE_MAXITER = 200
_QUANTILE_STALL = 30
_QUANTILE_LOOSEN = 4


def _positive(x, name):
    arr = np.array(x, dtype=float, ndmin=1)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"{name} must be positive and finite, got {x!r}")
    return arr


def _result(arr, *inputs):
    if all(np.ndim(x) == 0 for x in inputs):
        return float(np.reshape(arr, -1)[0])
    return arr


def _shift(x):
    """Return (k, z) with z = x + k >= _ASYMPTOTIC_FROM and k a whole number."""
    k = np.maximum(np.ceil(_ASYMPTOTIC_FROM - x), 0.0)
    return k, x + k


def _recurrence_sum(x, k, power):
    """sum_{j < k} (x + j) ** -power, elementwise."""
    kmax = int(k.max()) if k.size else 0
    if kmax == 0:
        return np.zeros_like(x)
    j = np.arange(kmax, dtype=float)
    terms = (x[:, None] + j) ** -power
    return np.where(j < k[:, None], terms, 0.0).sum(axis=1)


def _log_minus_digamma_series(z):
    # log z - psi(z) for z >= 10
    w = 1.0 / (z * z)
    tail = w * (1.0 / 12 - w * (1.0 / 120 - w * (1.0 / 252 - w * (
        1.0 / 240 - w * (1.0 / 132 - w * (691.0 / 32760 - w / 12.0))))))
    return 0.5 / z + tail


def _trigamma_series(z):
    w = 1.0 / (z * z)
    tail = (1.0 / 6 - w * (1.0 / 30 - w * (1.0 / 42 - w * (
        1.0 / 30 - w * (5.0 / 66 - w * (691.0 / 2730 - w * 7.0 / 6))))))
    return 1.0 / z + 0.5 * w + tail * w / z


def log_gamma(x):
    """Natural log of the gamma function for x > 0."""
    arr = _positive(x, "x")
    return _result(special.gammaln(arr), x)


def stirling_remainder(x):
    """lgamma(x) - [(x - 1/2) log x - x + log(2 pi)/2], accurate for large x."""
    arr = _positive(x, "x")
    out = np.empty_like(arr)
    big = arr >= _ASYMPTOTIC_FROM
    z = arr[big]
    w = 1.0 / (z * z)
    out[big] = (1.0 / 12 - w * (1.0 / 360 - w * (1.0 / 1260 - w * (
        1.0 / 1680 - w * (1.0 / 1188 - w * (691.0 / 360360 - w / 156.0)))))) / z
    z = arr[~big]
    out[~big] = special.gammaln(z) - ((z - 0.5) * np.log(z) - z + _HALF_LOG_2PI)
    return _result(out, x)


def digamma(x):
    """psi(x) = d/dx log Gamma(x) for x > 0."""
    arr = _positive(x, "x")
    k, z = _shift(arr)
    out = np.log(z) - _log_minus_digamma_series(z) - _recurrence_sum(arr, k, 1)
    near = np.abs(arr - _DIGAMMA_ROOT_HI) < _DIGAMMA_ROOT_RADIUS
    if near.any():
        d = (arr[near] - _DIGAMMA_ROOT_HI) - _DIGAMMA_ROOT_LO
        acc = np.zeros_like(d)
        for c in reversed(_DIGAMMA_ROOT_TAYLOR):
            acc = (acc + c) * d
        out[near] = acc
    return _result(out, x)


def trigamma(x):
    """psi'(x) for x > 0."""
    arr = _positive(x, "x")
    k, z = _shift(arr)
    out = _trigamma_series(z) + _recurrence_sum(arr, k, 2)
    return _result(out, x)


def log_minus_digamma(a):
    """log(a) - psi(a), positive for every a > 0 and about 1/(2a) for large a."""
    arr = _positive(a, "a")
    k, z = _shift(arr)
    out = (_recurrence_sum(arr, k, 1) - np.log1p(k / arr)
           + _log_minus_digamma_series(z))
    return _result(out, a)


def a_sq_trigamma_minus_a(a):
    """a**2 psi'(a) - a; tends to 1 as a -> 0 and to 1/2 as a -> inf."""
    arr = _positive(a, "a")
    out = np.empty_like(arr)
    big = arr >= _ASYMPTOTIC_FROM
    z = arr[big]
    w = 1.0 / (z * z)
    out[big] = 0.5 + (1.0 / 6 - w * (1.0 / 30 - w * (1.0 / 42 - w * (
        1.0 / 30 - w * (5.0 / 66 - w * (691.0 / 2730 - w * 7.0 / 6)))))) / z
    z = arr[~big]
    # the j = 0 recurrence term contributes a**2 / a**2 = 1 exactly
    k, zz = _shift(z + 1.0)
    rest = _trigamma_series(zz) + _recurrence_sum(z + 1.0, k, 2)
    out[~big] = (1.0 - z) + z * z * rest
    return _result(out, a)


def expm1mx(z):
    """exp(z) - 1 - z without cancellation near z = 0.

    With z = log(x/mu) this is x/mu - log(x/mu) - 1 >= 0.
    """
    arr = np.array(z, dtype=float, ndmin=1)
    out = np.expm1(arr) - arr
    small = np.abs(arr) < 0.5
    if small.any():
        zs = arr[small]
        acc = np.zeros_like(zs)
        for k in range(20, 1, -1):
            acc = (acc + 1.0) * zs / k
        out[small] = acc * zs
    return _result(np.maximum(out, 0.0), z)


def reg_lower_inc_gamma(shape, x):
    """Regularized lower incomplete gamma P(shape, x), the Gamma(shape, 1) CDF."""
    s = _positive(shape, "shape")
    xx = np.asarray(x, dtype=float)
    if np.any(np.isnan(xx)) or np.any(xx < 0.0):
        raise DomainError(f"x must be nonnegative, got {x!r}")
    s, xx = np.broadcast_arrays(s, xx)
    out = np.array(special.gammainc(s, xx), ndmin=1)
    # gammainc flushes to 0 once x is subnormal; the series does not
    tiny = (out < 1e-280) & (xx > 0.0)
    if tiny.any():
        st, xt = s[tiny], xx[tiny]
        out[tiny] = np.exp(_log_lower(st, xt, np.log(xt)))
    return _result(out, shape, x)


def _log_lower(s, x, logx):
    """log P(s, x), falling back to the power series where P underflows."""
    with np.errstate(divide="ignore"):
        out = np.log(special.gammainc(s, x))
    # subnormal x loses precision inside gammainc, so route it to the series
    tiny = ~(out > -650.0) | (logx < -690.0)
    if tiny.any():
        st, xt = s[tiny], x[tiny]
        term = np.ones_like(xt)
        total = np.ones_like(xt)
        for k in range(1, 2000):
            term = term * xt / (st + k)
            total += term
            if np.all(term <= 1e-17 * total):
                break
        out[tiny] = st * logx[tiny] - xt - special.gammaln(st + 1.0) + np.log(total)
    return out


def _log_upper(s, x, logx):
    """log Q(s, x); below x ~ 1e-300 Q comes from the log-space series for P."""
    with np.errstate(divide="ignore"):
        out = np.log(special.gammaincc(s, x))
    tiny = logx < -690.0
    if tiny.any():
        out[tiny] = np.log(-np.expm1(_log_lower(s[tiny], x[tiny], logx[tiny])))
    return out


def gamma_log_quantile(p, shape, rate=1.0, q=None):
    """log of the Gamma(shape, rate) quantile at probability p.

    Solved in y = log(rate * a) so quantiles far below the smallest double
    (tiny shapes, small p) stay representable. ``q`` may supply 1 - p when it
    is known more accurately than the subtraction.

    The iteration is Newton's method on log P (or -log Q above the median),
    both concave/convex and monotone in y, safeguarded by the bracket
    [(log p + lgamma(shape + 1)) / shape, log(shape) - log(1 - p)].
    """
    pp = np.asarray(p, dtype=float)
    if np.any(~(pp > 0.0)) or np.any(~(pp < 1.0)):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    s = _positive(shape, "shape")
    r = _positive(rate, "rate")
    qq = 1.0 - pp if q is None else np.asarray(q, dtype=float)
    pp, s, qq, r = np.broadcast_arrays(pp, s, qq, r)
    pp, s, qq = pp.ravel().copy(), s.ravel().copy(), qq.ravel().copy()
    # gammaincc is slow for shape < 1 and moderate x; there P loses at most
    # a factor 1e3 to cancellation, so solve on P instead
    lower = (pp <= 0.5) | ((s < 1.0) & (qq >= 1e-3))
    log_p, log_q = np.log(pp), np.log(qq)
    # an error e in log P is an error e p/q in log Q
    ftol = np.where(lower, np.minimum(1.0, qq / pp), 1.0)
    lgs = special.gammaln(s)

    lo = (log_p + special.gammaln(s + 1.0)) / s
    hi = np.log(s) - log_q
    y = lo.copy()
    big = s >= 1.0
    if big.any():
        z = np.where(lower, special.ndtri(pp), -special.ndtri(qq))[big]
        sb = s[big]
        c = 1.0 - 1.0 / (9.0 * sb) + z / (3.0 * np.sqrt(sb))
        with np.errstate(divide="ignore", invalid="ignore"):
            wh = np.where(c > 0.0, np.log(sb) + 3.0 * np.log(c), lo[big])
        y[big] = wh
    tail = ~big & ~lower
    if tail.any():
        # Q(s, x) ~ x**(s - 1) exp(-x) / Gamma(s) for large x; one fixed-point step
        st = s[tail]
        xt = -log_q[tail] - lgs[tail]
        with np.errstate(divide="ignore", invalid="ignore"):
            xt = np.where(xt > 1.0, xt + (st - 1.0) * np.log(xt), xt)
            y[tail] = np.where(xt > 1.0, np.log(xt), y[tail])
    y = np.clip(y, lo, hi)

    active = np.arange(pp.size)
    for it in range(_QUANTILE_MAXITER):
        if active.size == 0:
            break
        ya, sa = y[active], s[active]
        xa = np.exp(ya)
        low = lower[active]
        logtail = np.empty_like(ya)
        logtail[low] = _log_lower(sa[low], xa[low], ya[low])
        up = ~low
        logtail[up] = _log_upper(sa[up], xa[up], ya[up])
        f = np.where(low, logtail - log_p[active], log_q[active] - logtail)
        with np.errstate(over="ignore", invalid="ignore"):
            fp = np.exp(sa * ya - xa - lgs[active] - logtail)
        neg, pos = f < 0.0, f > 0.0
        lo[active] = np.where(neg, ya, lo[active])
        hi[active] = np.where(pos, ya, hi[active])
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ynew = ya - f / fp
        la, ha = lo[active], hi[active]
        bad = ~np.isfinite(ynew) | (ynew < la) | (ynew > ha) | ~np.isfinite(f)
        ynew = np.where(bad, 0.5 * (la + ha), ynew)
        ulps = 4.0 * np.spacing(np.maximum(np.abs(la), np.abs(ha)))
        # the log-tail evaluations themselves are only good to ~1e-15
        resolved = np.abs(f) <= (1e-14 if it < _QUANTILE_LOOSEN else 1e-13) * ftol[active]
        ynew = np.where(resolved, ya, ynew)
        done = resolved | (np.abs(ynew - ya) <= ulps) | (ha - la <= ulps)
        if it >= _QUANTILE_STALL:
            # the tail function is noisier than 1e-14 here; take the bracket
            done |= ha - la <= 1e-12 * np.maximum(1.0, np.abs(ya))
        y[active] = ynew
        active = active[~done]
    if active.size:
        i = int(active[0])
        raise NumericalError(
            "gamma quantile did not converge",
            p=float(pp[i]), shape=float(s[i]), bracket=(float(lo[i]), float(hi[i])),
        )
    out = (y - np.log(r.ravel())).reshape(r.shape)
    return _result(out, p, shape, rate)


def gamma_quantile(p, shape, rate=1.0):
    """Quantile a of Gamma(shape, rate): P(shape, rate * a) = p."""
    log_a = gamma_log_quantile(p, shape, rate)
    out = np.exp(np.asarray(log_a))
    if np.any(out <= 0.0) or not np.all(np.isfinite(out)):
        raise NumericalError(
            "gamma quantile is not representable; use gamma_log_quantile",
            p=p, shape=shape, rate=rate,
        )
    return _result(out, p, shape, rate)
