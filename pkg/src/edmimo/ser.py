"""Symbol error rate analysis for the energy detectors and the coherent baseline.

Per-symbol errors are assembled from adjacent-boundary tails: symbol p errs
upward past Delta_p or downward below Delta_{p-1}. With interval decision
regions this is the exact symbol error, not an approximation. Everything is
carried as natural-log probabilities so values far below 1e-300 survive the
slope fits.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special as sps

from . import detector as det
from .special import Probability, _log_gamma_pq, _log_ncx_tails, log_normal_tail_q

METHODS = (
    "ied_exact",
    "ied_gaussian",
    "aed_exact",
    "aed_chernoff",
    "coherent",
    "aed_floor",
    "montecarlo",
)

_NEG_INF = -math.inf


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class PostSnr:
    gamma_u: np.ndarray
    gamma_l: np.ndarray


@dataclass(frozen=True)
class SerReport:
    """Per-symbol and prior-weighted average SER.

    ``log_per_symbol`` and ``log_average`` are natural logs and stay finite
    where the linear values underflow. ``valid`` is False when the method was
    used outside its regime (e.g. a Chernoff parameter on the wrong side of 1);
    ``flags`` says why. Monte Carlo reports also carry counts and a Wilson
    interval.
    """

    log_per_symbol: np.ndarray
    priors: np.ndarray
    method: str
    valid: bool = True
    flags: tuple = ()
    trials: int = None
    errors: int = None
    symbol_trials: np.ndarray = None
    symbol_errors: np.ndarray = None
    ci: tuple = None
    log_average: float = field(init=False)

    def __post_init__(self):
        lp = np.asarray(self.log_per_symbol, dtype=float)
        lp = np.minimum(lp, 0.0)
        object.__setattr__(self, "log_per_symbol", lp)
        m = float(lp.max())
        la = m if m == _NEG_INF else m + math.log(float(np.dot(self.priors, np.exp(lp - m))))
        object.__setattr__(self, "log_average", min(la, 0.0))

    @classmethod
    def from_counts(cls, symbol_errors, symbol_trials, priors, z=1.959963984540054):
        """Monte Carlo report; the Wilson interval is on the pooled error count."""
        e = np.asarray(symbol_errors, dtype=np.int64)
        n = np.asarray(symbol_trials, dtype=np.int64)
        with np.errstate(divide="ignore", invalid="ignore"):
            lp = np.where(n > 0, np.log(e / np.maximum(n, 1)), _NEG_INF)
        total, errs = int(n.sum()), int(e.sum())
        if total < 1:
            raise ValueError("Monte Carlo report needs at least one trial")
        # symbols are allocated in proportion to the priors, so the prior-weighted
        # average and the pooled rate agree up to allocation rounding
        return cls(lp, np.asarray(priors, float), "montecarlo", trials=total, errors=errs,
                   symbol_trials=n, symbol_errors=e, ci=wilson_interval(errs, total, z))

    @property
    def per_symbol(self):
        return np.exp(self.log_per_symbol)

    @property
    def average(self):
        return math.exp(self.log_average)

    @property
    def probability(self):
        return Probability.from_log(self.log_average)

    @property
    def ci_halfwidth(self):
        if self.ci is None:
            return None
        return 0.5 * (self.ci[1] - self.ci[0])

    def csv_row(self, **extra):
        row = dict(
            method=self.method,
            ser=repr(self.average),
            log_ser=repr(self.log_average),
            ci_lo="" if self.ci is None else repr(self.ci[0]),
            ci_hi="" if self.ci is None else repr(self.ci[1]),
            trials="" if self.trials is None else str(self.trials),
            per_symbol=";".join(repr(float(v)) for v in self.per_symbol),
            valid=str(self.valid).lower(),
        )
        row.update(extra)
        return row


def wilson_interval(errors, trials, z=1.959963984540054):
    if trials < 1:
        raise ValueError("zero trials")
    p = errors / trials
    z2 = z * z
    den = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


def wilson_standard_error(errors, trials):
    """Wilson half-width at z = 1, used as a standard error that stays positive at 0 errors."""
    lo, hi = wilson_interval(errors, trials, z=1.0)
    return 0.5 * (hi - lo)


def _assemble(log_up, log_lo, constellation, method, valid=True, flags=()):
    """log_up[p]: symbol p above Delta_p; log_lo[p]: symbol p+1 below Delta_p."""
    P = constellation.size
    up = np.full(P, _NEG_INF)
    lo = np.full(P, _NEG_INF)
    up[:-1] = log_up
    lo[1:] = log_lo
    return SerReport(np.logaddexp(up, lo), constellation.priors, method, valid, tuple(flags))


def _thresholds_or(thresholds, maker, *args):
    return maker(*args) if thresholds is None else thresholds


# I-ED ------------------------------------------------------------------------


def ied_exact_ser(varsigma_h, sigma_n2, constellation, M, thresholds=None):
    """Exact conditional SER: 2Mz/sn2 is non-central chi-square, tails are Marcum Q values."""
    ts = _thresholds_or(thresholds, det.ied_gaussian_thresholds, varsigma_h, sigma_n2, constellation, M)
    e = constellation.energies
    d = ts.deltas
    log_up = np.empty(d.size)
    log_lo = np.empty(d.size)
    for p in range(d.size):
        x = M * d[p] / sigma_n2
        log_up[p] = _log_ncx_tails(float(M), M * varsigma_h * e[p] / sigma_n2, x)[1]
        log_lo[p] = _log_ncx_tails(float(M), M * varsigma_h * e[p + 1] / sigma_n2, x)[0]
    return _assemble(log_up, log_lo, constellation, "ied_exact")


def post_snr(energy_basis, sigma_n2, constellation, M, thresholds):
    mom = det.gaussian_moments(energy_basis, sigma_n2, constellation, M)
    d = thresholds.deltas
    gu = (d - mom.mean[:-1]) ** 2 / mom.var[:-1]
    gl = (d - mom.mean[1:]) ** 2 / mom.var[1:]
    return PostSnr(gu, gl)


def _gaussian_tails(energy_basis, sigma_n2, constellation, M, thresholds):
    mom = det.gaussian_moments(energy_basis, sigma_n2, constellation, M)
    d = thresholds.deltas
    sd = np.sqrt(mom.var)
    log_up = log_normal_tail_q((d - mom.mean[:-1]) / sd[:-1])
    log_lo = log_normal_tail_q((mom.mean[1:] - d) / sd[1:])
    return log_up, log_lo


def ied_gaussian_ser(varsigma_h, sigma_n2, constellation, M, thresholds=None):
    """Gaussian-approximation SER, sum of Q(sqrt(gamma)) terms; also returns the post-SNRs."""
    ts = _thresholds_or(thresholds, det.ied_gaussian_thresholds, varsigma_h, sigma_n2, constellation, M)
    log_up, log_lo = _gaussian_tails(varsigma_h, sigma_n2, constellation, M, ts)
    return (
        _assemble(log_up, log_lo, constellation, "ied_gaussian"),
        post_snr(varsigma_h, sigma_n2, constellation, M, ts),
    )


def coherent_ser(varsigma_h, sigma_n2, constellation, M):
    """Matched filter: Re(z_c) ~ N(sqrt(eps_p), sn2 / (2 M varsigma_h)), midpoint thresholds."""
    a = constellation.amplitudes
    sd = math.sqrt(sigma_n2 / (2.0 * M * varsigma_h))
    t = 0.5 * (a[:-1] + a[1:])
    log_up = log_normal_tail_q((t - a[:-1]) / sd)
    log_lo = log_normal_tail_q((a[1:] - t) / sd)
    return _assemble(log_up, log_lo, constellation, "coherent")


# A-ED ------------------------------------------------------------------------


def _aed_scales(sigma_h2, sigma_n2, constellation):
    return sigma_h2 * constellation.energies + sigma_n2


def aed_exact_ser(sigma_h2, sigma_n2, constellation, M, thresholds=None):
    """Exact SER over Rayleigh fading: z | eps_p ~ Gamma(M, (sigma_h2 eps_p + sn2)/M)."""
    ts = _thresholds_or(thresholds, det.aed_gaussian_thresholds, sigma_h2, sigma_n2, constellation, M)
    s = _aed_scales(sigma_h2, sigma_n2, constellation)
    d = ts.deltas
    log_up = np.array([_log_gamma_pq(float(M), M * d[p] / s[p])[1] for p in range(d.size)])
    log_lo = np.array([_log_gamma_pq(float(M), M * d[p] / s[p + 1])[0] for p in range(d.size)])
    return _assemble(log_up, log_lo, constellation, "aed_exact")


def chernoff_log_tail(delta, M):
    """log (delta e^{1-delta})^M."""
    delta = np.asarray(delta, dtype=float)
    with np.errstate(divide="ignore"):
        return M * (np.log(delta) + 1.0 - delta)


def aed_chernoff_ser(sigma_h2, sigma_n2, constellation, M, thresholds=None):
    """Chernoff tail approximations; regime violations are flagged, not raised."""
    ts = _thresholds_or(thresholds, det.aed_gaussian_thresholds, sigma_h2, sigma_n2, constellation, M)
    s = _aed_scales(sigma_h2, sigma_n2, constellation)
    d = ts.deltas
    du = d / s[:-1]
    dl = d / s[1:]
    flags = [f"upper tail of symbol {p}: delta={du[p]:.4g} <= 1" for p in range(d.size) if not du[p] > 1]
    flags += [f"lower tail of symbol {p + 1}: delta={dl[p]:.4g} >= 1" for p in range(d.size) if not dl[p] < 1]
    return _assemble(chernoff_log_tail(du, M), chernoff_log_tail(dl, M), constellation,
                     "aed_chernoff", valid=not flags, flags=flags)


def pam_floor(constellation, M):
    """High-SNR A-ED floor, sum_{p=1}^{P-2} [(eta e^{1-eta})^M + (e^{1-1/eta}/eta)^M] prior_p."""
    P = constellation.size
    if P < 3:
        return Probability(0.0, _NEG_INF)
    e = constellation.energies
    eta = np.sqrt(e[2:] / e[1:-1])
    terms = np.logaddexp(chernoff_log_tail(eta, M), chernoff_log_tail(1.0 / eta, M))
    with np.errstate(divide="ignore"):
        return Probability.from_log(float(sps.logsumexp(terms + np.log(constellation.priors[1:-1]))))


def pam_floor_terms(constellation, M):
    """Per-p log contributions to the floor, for dominance checks."""
    e = constellation.energies
    eta = np.sqrt(e[2:] / e[1:-1])
    return np.logaddexp(chernoff_log_tail(eta, M), chernoff_log_tail(1.0 / eta, M)) + np.log(
        constellation.priors[1:-1]
    )


# high-SNR equivalence --------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceReport:
    ied: PostSnr
    coherent: np.ndarray
    gap_u: np.ndarray
    gap_l: np.ndarray
    max_gap: float
    regime_ok: bool


def coherent_post_snr(constellation, M, rho_h):
    """M rho_h kappa_p, the squared half-distance over the matched-filter noise variance."""
    return M * rho_h * constellation.kappa()


def highsnr_coherent_equivalence_check(constellation, M, rho_h, min_regime_db=30.0):
    """Relative gaps between I-ED post-SNRs (from the quadratic thresholds) and coherent ones."""
    sigma_n2 = 1.0 / rho_h
    ts = det.ied_gaussian_thresholds(1.0, sigma_n2, constellation, M)
    g = post_snr(1.0, sigma_n2, constellation, M, ts)
    c = coherent_post_snr(constellation, M, rho_h)
    gu = np.abs(g.gamma_u - c) / c
    gl = np.abs(g.gamma_l - c) / c
    return EquivalenceReport(
        g, c, gu, gl, float(max(gu.max(), gl.max())), 10 * math.log10(rho_h) >= min_regime_db
    )


# channel averaging -----------------------------------------------------------


def rayleigh_average(conditional, M, sigma_h2, constellation, method, s_floor=0.0, epsrel=1e-10):
    """Average a conditional SER over varsigma_h ~ Gamma(M, sigma_h2 / M).

    ``conditional(s)`` returns the per-symbol log SER at channel energy s.
    The integral runs over u = log s; each symbol is rescaled by its own
    peak so that relative accuracy holds for tails of very different size.
    """
    log_scale = math.log(sigma_h2 / M)
    lgM = math.lgamma(M)

    def log_integrand(u):
        s = math.exp(u)
        log_pdf = (M - 1) * (u - log_scale) - s * M / sigma_h2 - lgM - log_scale
        return np.asarray(conditional(s), dtype=float) + log_pdf + u

    # below s_min adjacent thresholds are no longer resolvable in floating point;
    # that sliver of mass is added back with the SER frozen at s_min
    s_min = max(sigma_h2 * math.exp(-50.0), s_floor)
    u_lo = math.log(s_min)
    u_hi = math.log(sigma_h2 * (1.0 + 750.0 / M + math.sqrt(1500.0 / M)))
    if u_hi <= u_lo:
        raise ValueError("channel energy range too narrow for averaging")
    grid = np.linspace(u_lo, u_hi, 401)
    vals = np.array([log_integrand(u) for u in grid])
    peak = vals.max(axis=0)
    where = grid[np.unique(vals.argmax(axis=0))]
    finite = np.isfinite(peak)
    shift = np.where(finite, peak, 0.0)

    def f(u):
        v = log_integrand(u) - shift
        return np.where(finite, np.exp(v), 0.0)

    res, _ = integrate.quad_vec(f, u_lo, u_hi, epsrel=epsrel, epsabs=0.0, limit=4000,
                                points=where)
    with np.errstate(divide="ignore"):
        log_ps = np.where(finite, shift + np.log(res), _NEG_INF)
    log_mass_below = _log_gamma_pq(float(M), M * s_min / sigma_h2)[0]
    log_ps = np.logaddexp(log_ps, log_mass_below + np.asarray(conditional(s_min), dtype=float))
    return SerReport(log_ps, constellation.priors, method)



def _relaxed(s, sigma_n2, constellation, M):
    return det.ied_gaussian_thresholds(s, sigma_n2, constellation, M, relaxed=True)


def ied_exact_ser_rayleigh(sigma_h2, sigma_n2, constellation, M):
    """I-ED SER averaged over Rayleigh fading, exact conditional tails."""
    return rayleigh_average(
        lambda s: ied_exact_ser(s, sigma_n2, constellation, M, _relaxed(s, sigma_n2, constellation, M)).log_per_symbol,
        M, sigma_h2, constellation, "ied_exact",
    )


def ied_gaussian_ser_rayleigh(sigma_h2, sigma_n2, constellation, M):
    return rayleigh_average(
        lambda s: ied_gaussian_ser(s, sigma_n2, constellation, M, _relaxed(s, sigma_n2, constellation, M))[0].log_per_symbol,
        M, sigma_h2, constellation, "ied_gaussian",
    )


def coherent_ser_rayleigh(sigma_h2, sigma_n2, constellation, M):
    return rayleigh_average(
        lambda s: coherent_ser(s, sigma_n2, constellation, M).log_per_symbol,
        M, sigma_h2, constellation, "coherent",
    )


# slope fits ------------------------------------------------------------------


def slope_fit(x, ser=None, log_ser=None, base=10.0):
    """Least-squares slope of log_base(SER) against x.

    Pass ``log_ser`` (natural log) to fit values that underflow. Points with
    non-positive SER are dropped; fewer than three remaining is an error.
    """
    x = np.asarray(x, dtype=float)
    if log_ser is None:
        y = np.asarray(ser, dtype=float)
        keep = y > 0
        ly = np.full(y.shape, np.nan)
        ly[keep] = np.log(y[keep])
    else:
        ly = np.asarray(log_ser, dtype=float)
        keep = np.isfinite(ly)
    if keep.sum() < 3:
        raise InsufficientDataError(f"need >= 3 positive SER points, have {int(keep.sum())}")
    slope = np.polyfit(x[keep], ly[keep] / math.log(base), 1)[0]
    return float(slope)
