"""Special functions behind every pdf, cdf and tail probability in the package.

Everything is evaluated in the log domain first so tail probabilities far
below the double-precision underflow limit keep their exponent. The scalar
kernels (leading underscore) are numba-compiled and are called directly from
other kernels; the public wrappers validate arguments and return
:class:`Probability` pairs.
"""

import math
from typing import NamedTuple

import numpy as np

from ._accel import jit

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# terms below exp(-40) of the running sum are dropped from series
_SERIES_CUTOFF = 40.0
_EPS = 2.220446049250313e-16
_TINY = 1e-300


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


class Probability(NamedTuple):
    value: float
    log_value: float

    @classmethod
    def from_log(cls, log_value):
        log_value = min(float(log_value), 0.0)
        return cls(math.exp(log_value), log_value)

    def __float__(self):
        return self.value


# --------------------------------------------------------------------------
# scalar kernels


@jit
def _log1mexp(a):
    """log(1 - exp(a)) for a <= 0."""
    if a >= 0.0:
        return -math.inf
    if a > -0.6931471805599453:
        return math.log(-math.expm1(a))
    return math.log1p(-math.exp(a))


@jit
def _logaddexp(a, b):
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@jit
def _log_normal_q(y):
    """log Q(y), Q the standard normal upper tail."""
    if y < 20.0:
        return math.log(0.5 * math.erfc(y * 0.7071067811865476))
    # Mills ratio R(y) = Q(y)/phi(y) by its continued fraction (modified Lentz)
    f = y
    c = y
    d = 0.0
    for n in range(1, 500):
        an = float(n)
        d = y + an * d
        if d == 0.0:
            d = _TINY
        c = y + an / c
        if c == 0.0:
            c = _TINY
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return -0.5 * y * y - LOG_SQRT_2PI - math.log(f)


@jit
def _stirlerr(s):
    """log Gamma(s+1) - [(s + 1/2) log s - s + log sqrt(2 pi)]."""
    if s < 16.0:
        return math.lgamma(s + 1.0) - (s + 0.5) * math.log(s) + s - LOG_SQRT_2PI
    s2 = 1.0 / (s * s)
    return (
        (1.0 / 12.0 - s2 * (1.0 / 360.0 - s2 * (1.0 / 1260.0 - s2 * (1.0 / 1680.0 - s2 / 1188.0))))
        / s
    )


@jit
def _log_poisson_term(s, x):
    """log(x**s * exp(-x) / Gamma(s + 1)) without cancelling large terms."""
    if x == 0.0:
        return 0.0 if s == 0.0 else -math.inf
    if s == 0.0:
        return -x
    if x < 0.1 * s or x > 10.0 * s:
        # far from the peak nothing cancels, and log1p(t) would lose t near -1
        return s * math.log(x) - x - math.lgamma(s + 1.0)
    t = (x - s) / s
    return s * (math.log1p(t) - t) - 0.5 * math.log(s) - LOG_SQRT_2PI - _stirlerr(s)


@jit
def _log_gamma_pq(s, x):
    """(log P(s, x), log Q(s, x)) for the regularized incomplete gamma pair."""
    if x <= 0.0:
        return -math.inf, 0.0
    if x == math.inf:
        return 0.0, -math.inf
    lpre = _log_poisson_term(s, x)
    if x < s + 1.0:
        # P = x^s e^-x / Gamma(s+1) * sum_n x^n / ((s+1)...(s+n))
        term = 1.0
        acc = 1.0
        ap = s
        for _ in range(100000 + int(20.0 * math.sqrt(s))):
            ap += 1.0
            term *= x / ap
            acc += term
            if term < acc * 1e-17:
                break
        lp = lpre + math.log(acc)
        if lp > 0.0:
            lp = 0.0
        return lp, _log1mexp(lp)
    # Q = x^s e^-x / Gamma(s) * CF, continued fraction by modified Lentz
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 100000 + int(20.0 * math.sqrt(x))):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    lq = lpre + math.log(s) + math.log(h)
    if lq > 0.0:
        lq = 0.0
    return _log1mexp(lq), lq


@jit
def _lse_add(m, acc, v):
    """Add exp(v) to a running sum stored as exp(m) * acc."""
    if v == -math.inf:
        return m, acc
    if m == -math.inf:
        return v, 1.0
    if v > m:
        return v, acc * math.exp(m - v) + 1.0
    return m, acc + math.exp(v - m)


@jit
def _log_ncx_tails(nu, lam, x):
    """Log lower and upper tails of a Poisson(lam) mixture of Gamma(nu + k, 1).

    With nu = dof/2, lam = noncentrality/2 and x = chi-square value/2 this is
    the non-central chi-square cdf pair; with nu = M, lam = a^2/2 and
    x = b^2/2 the upper tail is the Marcum Q function Q_M(a, b).
    """
    if x <= 0.0:
        return -math.inf, 0.0
    if x == math.inf:
        return 0.0, -math.inf
    if lam <= 0.0:
        return _log_gamma_pq(nu, x)

    k0 = float(math.floor(lam))
    loglam = math.log(lam)
    lp0, lq0 = _log_gamma_pq(nu + k0, x)

    ml = -math.inf
    al = 0.0
    mu = -math.inf
    au = 0.0

    # upward sweep, k = k0, k0 + 1, ...
    lp = lp0
    lq = lq0
    k = k0
    prev_l = math.inf
    prev_u = -math.inf
    n_iter = 0
    while True:
        lw = -lam + k * loglam - math.lgamma(k + 1.0)
        tl = lw + lp
        tu = lw + lq
        ml, al = _lse_add(ml, al, tl)
        mu, au = _lse_add(mu, au, tu)
        done_l = tl < ml + math.log(al) - _SERIES_CUTOFF and tl <= prev_l
        done_u = tu < mu + math.log(au) - _SERIES_CUTOFF and tu <= prev_u
        if k > k0 and done_l and done_u:
            break
        prev_l = tl
        prev_u = tu
        s = nu + k
        t = _log_poisson_term(s, x)
        lq = _logaddexp(lq, t)
        if lp != -math.inf:
            lp = lp + _log1mexp(min(t - lp, 0.0))
        k += 1.0
        n_iter += 1
        if n_iter > 50000000:
            break

    # downward sweep, k = k0 - 1, ..., 0
    lp = lp0
    lq = lq0
    k = k0
    prev_l = math.inf
    prev_u = math.inf
    while k > 0.0:
        s = nu + k - 1.0
        t = _log_poisson_term(s, x)
        lp = _logaddexp(lp, t)
        if lq != -math.inf:
            lq = lq + _log1mexp(min(t - lq, 0.0))
        k -= 1.0
        lw = -lam + k * loglam - math.lgamma(k + 1.0)
        tl = lw + lp
        tu = lw + lq
        ml, al = _lse_add(ml, al, tl)
        mu, au = _lse_add(mu, au, tu)
        done_l = tl < ml + math.log(al) - _SERIES_CUTOFF and tl <= prev_l
        done_u = tu < mu + math.log(au) - _SERIES_CUTOFF and tu <= prev_u
        if done_l and done_u:
            break
        prev_l = tl
        prev_u = tu

    log_lower = ml + math.log(al)
    log_upper = mu + math.log(au)
    if log_lower > 0.0:
        log_lower = 0.0
    if log_upper > 0.0:
        log_upper = 0.0
    return log_lower, log_upper


@jit
def _log_ncx2_pdf(x, k, nc):
    """log density of the non-central chi-square law (k dof, noncentrality nc)."""
    h = 0.5 * k
    if x < 0.0:
        return -math.inf
    if x == 0.0:
        if h < 1.0:
            return math.inf
        if h > 1.0:
            return -math.inf
        return -0.5 * nc - math.log(2.0)
    logx = math.log(x)
    if nc <= 0.0:
        return (h - 1.0) * logx - 0.5 * x - h * math.log(2.0) - math.lgamma(h)
    lam = 0.5 * nc
    loglam = math.log(lam)
    # mode of the Poisson-mixture weights given x
    bq = h + 1.0
    disc = bq * bq - 4.0 * (h - lam * x * 0.5)
    j0 = 0.0
    if disc > 0.0:
        j0 = max(0.0, float(math.floor(0.5 * (-bq + math.sqrt(disc)))))
    m = -math.inf
    acc = 0.0
    j = j0
    prev = -math.inf
    while True:
        t = (
            -lam + j * loglam - math.lgamma(j + 1.0)
            + (h + j - 1.0) * logx - 0.5 * x - (h + j) * math.log(2.0) - math.lgamma(h + j)
        )
        m, acc = _lse_add(m, acc, t)
        if j > j0 and t < m + math.log(acc) - _SERIES_CUTOFF and t <= prev:
            break
        prev = t
        j += 1.0
    j = j0 - 1.0
    prev = math.inf
    while j >= 0.0:
        t = (
            -lam + j * loglam - math.lgamma(j + 1.0)
            + (h + j - 1.0) * logx - 0.5 * x - (h + j) * math.log(2.0) - math.lgamma(h + j)
        )
        m, acc = _lse_add(m, acc, t)
        if t < m + math.log(acc) - _SERIES_CUTOFF and t <= prev:
            break
        prev = t
        j -= 1.0
    return m + math.log(acc)


# --------------------------------------------------------------------------
# public wrappers


def normal_tail_q(y):
    """Standard normal upper tail Q(y) = P(N(0, 1) > y)."""
    y = float(y)
    if math.isnan(y):
        raise DomainError("y must not be NaN")
    if y == math.inf:
        return Probability(0.0, -math.inf)
    if y == -math.inf:
        return Probability(1.0, 0.0)
    return Probability.from_log(_log_normal_q(y))


def log_normal_tail_q(y):
    """Vectorised log Q(y)."""
    y = np.asarray(y, dtype=float)
    out = np.empty(y.shape)
    flat = y.ravel()
    res = out.ravel()
    for i in range(flat.size):
        v = flat[i]
        if v == math.inf:
            res[i] = -math.inf
        elif v == -math.inf:
            res[i] = 0.0
        else:
            res[i] = _log_normal_q(v)
    return out


def _check_gamma(shape, x):
    if not shape > 0:
        raise DomainError(f"shape must be positive, got {shape}")
    if not x >= 0:
        raise DomainError(f"x must be non-negative, got {x}")


def regularized_gamma_lower(shape, x):
    """P(shape, x) = gamma(shape, x) / Gamma(shape)."""
    shape = float(shape)
    x = float(x)
    _check_gamma(shape, x)
    return Probability.from_log(_log_gamma_pq(shape, x)[0])


def regularized_gamma_upper(shape, x):
    """Q(shape, x) = 1 - P(shape, x), accurate when it is tiny."""
    shape = float(shape)
    x = float(x)
    _check_gamma(shape, x)
    return Probability.from_log(_log_gamma_pq(shape, x)[1])


def log_gamma_tails(shape, x):
    """(log P, log Q) for the regularized incomplete gamma pair."""
    shape = float(shape)
    x = float(x)
    _check_gamma(shape, x)
    return _log_gamma_pq(shape, x)


def marcum_q(order, a, b):
    """Generalized Marcum Q function Q_order(a, b).

    Equals the upper tail P(X > b^2) of a non-central chi-square variable with
    2*order degrees of freedom and noncentrality a^2.
    """
    if int(order) != order or order < 1:
        raise DomainError(f"order must be a positive integer, got {order}")
    if not (a >= 0 and b >= 0):
        raise DomainError("a and b must be non-negative")
    if b == 0:
        return Probability(1.0, 0.0)
    return Probability.from_log(_log_ncx_tails(float(order), 0.5 * a * a, 0.5 * b * b)[1])


def marcum_q_complement(order, a, b):
    """1 - Q_order(a, b), computed directly rather than by subtraction."""
    if int(order) != order or order < 1:
        raise DomainError(f"order must be a positive integer, got {order}")
    if not (a >= 0 and b >= 0):
        raise DomainError("a and b must be non-negative")
    if b == 0:
        return Probability(0.0, -math.inf)
    return Probability.from_log(_log_ncx_tails(float(order), 0.5 * a * a, 0.5 * b * b)[0])


def noncentral_chi2_tails(x, dof, noncentrality):
    """(lower cdf, upper tail) of the non-central chi-square law at x."""
    _check_ncx2(x, dof, noncentrality)
    ll, lu = _log_ncx_tails(0.5 * dof, 0.5 * noncentrality, 0.5 * x)
    return Probability.from_log(ll), Probability.from_log(lu)


def _check_ncx2(x, dof, noncentrality):
    if not x >= 0:
        raise DomainError(f"x must be non-negative, got {x}")
    if not dof > 0:
        raise DomainError(f"dof must be positive, got {dof}")
    if not noncentrality >= 0:
        raise DomainError(f"noncentrality must be non-negative, got {noncentrality}")


def noncentral_chi2_logpdf(x, dof, noncentrality):
    _check_ncx2(x, dof, noncentrality)
    return _log_ncx2_pdf(float(x), float(dof), float(noncentrality))


def noncentral_chi2_pdf(x, dof, noncentrality):
    """Density of the non-central chi-square law with ``dof`` degrees of freedom."""
    return math.exp(noncentral_chi2_logpdf(x, dof, noncentrality))
