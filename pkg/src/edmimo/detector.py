"""Detection thresholds on the collected energy z and symbol decisions.

Threshold families:

* ``ied_gaussian`` - MAP boundary between Gaussian approximations of z given
  the instantaneous channel energy (quadratic root, bisection fallback).
* ``aed_gaussian`` - the same with the average channel energy.
* ``aed_bayesian`` - closed form from the Gamma law of z averaged over a
  Rayleigh channel.
* ``high_snr`` - the large-SNR limits of the Gaussian boundaries.
* ``coherent_amplitude`` - amplitude midpoints for the matched-filter baseline.
* ``ied_exact_map`` - crossing of the exact non-central chi-square densities,
  found numerically; used only to validate the Gaussian boundaries.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ._accel import jit
from .special import _log_ncx2_pdf

BASES = (
    "ied_gaussian",
    "aed_gaussian",
    "aed_bayesian",
    "high_snr",
    "coherent_amplitude",
    "ied_exact_map",
)


class DegenerateConstellationError(ValueError):
    """No separating threshold exists between two adjacent symbols."""


@dataclass(frozen=True)
class GaussianMoments:
    mean: np.ndarray
    var: np.ndarray


@dataclass(frozen=True)
class ThresholdSet:
    """Boundaries on z. Strict sets are finite and strictly increasing;
    relaxed sets may repeat values or hold +inf (empty decision regions)."""

    deltas: np.ndarray
    basis: str
    relaxed: bool = False

    def __post_init__(self):
        d = np.array(self.deltas, dtype=float).ravel()
        if self.basis not in BASES:
            raise ValueError(f"unknown threshold basis {self.basis!r}")
        if self.relaxed:
            if np.any(np.isnan(d)) or np.any(d[1:] < d[:-1]):
                raise DegenerateConstellationError(f"thresholds not non-decreasing: {d}")
        else:
            if not np.all(np.isfinite(d)):
                raise DegenerateConstellationError(f"non-finite thresholds {d}")
            if np.any(np.diff(d) <= 0):
                raise DegenerateConstellationError(f"thresholds not strictly increasing: {d}")
        d.setflags(write=False)
        object.__setattr__(self, "deltas", d)

    def __len__(self):
        return self.deltas.size

    @property
    def size(self):
        """Number of symbols the set separates."""
        return self.deltas.size + 1


def gaussian_moments(energy_basis, sigma_n2, constellation, M):
    """Mean and variance of z per symbol: mu = s*eps + sn2, var = sn2/M (2 s eps + sn2)."""
    e = constellation.energies
    mean = energy_basis * e + sigma_n2
    var = sigma_n2 / M * (2.0 * energy_basis * e + sigma_n2)
    return GaussianMoments(mean, var)


@jit
def _map_log_ratio(z, mu_p, v_p, mu_q, v_q, log_prior_ratio):
    """2 log[pi_q f_q(z) / (pi_p f_p(z))] for Gaussian f; positive favours q."""
    return (
        (z - mu_p) ** 2 / v_p
        - (z - mu_q) ** 2 / v_q
        - math.log(v_q / v_p)
        + 2.0 * log_prior_ratio
    )


@jit
def gauss_boundary(mu_p, v_p, mu_q, v_q, log_prior_ratio, tol):
    """MAP boundary between N(mu_p, v_p) and N(mu_q, v_q), mu_p < mu_q.

    The quadratic is written around mu_p, u = z - mu_p, d = mu_q - mu_p:
    r u^2 + 2 d u - (d^2 + L v_q) = 0 with r = v_q/v_p - 1 and
    L = log(v_q/v_p) - 2 log(pi_q/pi_p). The root inside (mu_p, mu_q) is
    returned; otherwise the log-ratio is bisected on that interval. NaN means
    no boundary exists.
    """
    d = mu_q - mu_p
    if not d > 0.0 or not v_p > 0.0 or not v_q > 0.0:
        return math.nan
    r = v_q / v_p - 1.0
    L = math.log(v_q / v_p) - 2.0 * log_prior_ratio
    disc = d * d * (v_q / v_p) + r * L * v_q
    if disc >= 0.0:
        sq = math.sqrt(disc)
        num = d * d + L * v_q
        den = d + sq
        if den != 0.0:
            u = num / den
            if 0.0 < u < d:
                return mu_p + u
        if r != 0.0:
            u = -(d + sq) / r
            if 0.0 < u < d:
                return mu_p + u
    # bisection on the log ratio over [mu_p, mu_q]
    lo = mu_p
    hi = mu_q
    g_lo = _map_log_ratio(lo, mu_p, v_p, mu_q, v_q, log_prior_ratio)
    g_hi = _map_log_ratio(hi, mu_p, v_p, mu_q, v_q, log_prior_ratio)
    if not (g_lo < 0.0 < g_hi):
        return math.nan
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol:
            break
        g = _map_log_ratio(mid, mu_p, v_p, mu_q, v_q, log_prior_ratio)
        if g < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@jit
def gauss_boundary_relaxed(mu_p, v_p, mu_q, v_q, log_prior_ratio):
    """Larger root of the MAP quadratic wherever it falls; +inf if it has none.

    Used where a decision must always be produced: at low SNR the Gaussian
    MAP boundary leaves (mu_p, mu_q) and the strict rule has no answer.
    """
    d = mu_q - mu_p
    if not d > 0.0:
        return math.inf
    r = v_q / v_p - 1.0
    L = math.log(v_q / v_p) - 2.0 * log_prior_ratio
    disc = d * d * (v_q / v_p) + r * L * v_q
    if disc < 0.0:
        return math.inf
    sq = math.sqrt(disc)
    if r < 0.0:
        # larger root is the one with the minus sign
        return mu_p - (d + sq) / r
    return mu_p + (d * d + L * v_q) / (d + sq)


@jit
def gauss_thresholds_into(out, energy_basis, sigma_n2, energies, log_prior_ratios, M, relaxed):
    """Fill ``out`` with Gaussian MAP thresholds; returns False on failure.

    The relaxed rule never fails: it takes the larger quadratic root and
    carries a running maximum so the set is non-decreasing (an empty region
    means that symbol is never chosen).
    """
    P = energies.shape[0]
    tol = 1e-12 * sigma_n2
    for p in range(P - 1):
        mu_p = energy_basis * energies[p] + sigma_n2
        mu_q = energy_basis * energies[p + 1] + sigma_n2
        v_p = sigma_n2 / M * (2.0 * energy_basis * energies[p] + sigma_n2)
        v_q = sigma_n2 / M * (2.0 * energy_basis * energies[p + 1] + sigma_n2)
        if relaxed:
            t = gauss_boundary_relaxed(mu_p, v_p, mu_q, v_q, log_prior_ratios[p])
            if p > 0 and t < out[p - 1]:
                t = out[p - 1]
        else:
            t = gauss_boundary(mu_p, v_p, mu_q, v_q, log_prior_ratios[p], tol)
            if math.isnan(t):
                return False
            if p > 0 and not t > out[p - 1]:
                return False
        out[p] = t
    return True


def log_prior_ratios(constellation):
    """log(pi_{p+1} / pi_p) for each adjacent pair."""
    with np.errstate(divide="ignore"):
        lp = np.log(constellation.priors)
    return np.diff(lp)


def _check_common(sigma_n2, M):
    if not sigma_n2 > 0:
        raise ValueError(f"noise variance must be positive, got {sigma_n2}")
    if int(M) != M or M < 1:
        raise ValueError(f"antenna count must be a positive integer, got {M}")


def _gaussian_set(energy_basis, sigma_n2, constellation, M, basis, relaxed):
    _check_common(sigma_n2, M)
    if not energy_basis >= 0:
        raise ValueError(f"channel energy must be non-negative, got {energy_basis}")
    out = np.empty(constellation.size - 1)
    ok = gauss_thresholds_into(
        out, float(energy_basis), float(sigma_n2), constellation.energies,
        log_prior_ratios(constellation), int(M), bool(relaxed),
    )
    if not ok:
        raise DegenerateConstellationError(
            f"no Gaussian MAP boundary for {constellation} at channel energy {energy_basis}"
        )
    ts = ThresholdSet(out, basis, relaxed=bool(relaxed))
    if constellation.is_uniform() and not relaxed:
        mom = gaussian_moments(energy_basis, sigma_n2, constellation, M)
        assert np.all(out > mom.mean[:-1]) and np.all(out < mom.mean[1:]), "threshold outside means"
    return ts


def ied_gaussian_thresholds(varsigma_h, sigma_n2, constellation, M, relaxed=False):
    """Gaussian-approximation MAP thresholds given the instantaneous channel energy.

    By default a boundary must fall strictly between adjacent means (root,
    then bisection) or DegenerateConstellationError is raised. ``relaxed``
    switches to the always-defined larger-root rule used by the simulator.
    """
    return _gaussian_set(varsigma_h, sigma_n2, constellation, M, "ied_gaussian", relaxed)


def aed_gaussian_thresholds(sigma_h2, sigma_n2, constellation, M, relaxed=False):
    """Gaussian-approximation MAP thresholds using the average channel energy."""
    if not sigma_h2 > 0:
        raise ValueError(f"average channel energy must be positive, got {sigma_h2}")
    return _gaussian_set(sigma_h2, sigma_n2, constellation, M, "aed_gaussian", relaxed)


def aed_bayesian_thresholds(sigma_h2, sigma_n2, constellation, M, large_m=False):
    """Closed-form MAP thresholds for z ~ Gamma(M, (sigma_h2 eps + sigma_n2)/M).

    With ``large_m`` the prior term, which decays as 1/M, is dropped.
    """
    _check_common(sigma_n2, M)
    if not sigma_h2 > 0:
        raise ValueError(f"average channel energy must be positive, got {sigma_h2}")
    rho = sigma_h2 / sigma_n2
    e = constellation.energies
    lo = rho * e[:-1] + 1.0
    hi = rho * e[1:] + 1.0
    gap = e[1:] - e[:-1]
    if np.any(gap <= 0):
        raise DegenerateConstellationError("adjacent energies must differ")
    term = np.log(hi / lo)
    if not large_m:
        term = term - log_prior_ratios(constellation) / M
    deltas = sigma_n2 * term * hi * lo / (rho * gap)
    return ThresholdSet(deltas, "aed_bayesian")


def highsnr_thresholds(varsigma_h, sigma_n2, constellation):
    """Large-SNR limits: sn2 sqrt(eps_1 rho/2) for the first, s sqrt(eps_p eps_{p+1}) after."""
    e = constellation.energies
    rho = varsigma_h / sigma_n2
    deltas = varsigma_h * np.sqrt(e[:-1] * e[1:])
    if e[0] == 0.0:
        deltas[0] = sigma_n2 * math.sqrt(e[1] * rho / 2.0)
    return ThresholdSet(deltas, "high_snr")


def coherent_thresholds(constellation):
    a = constellation.amplitudes
    return ThresholdSet(0.5 * (a[:-1] + a[1:]), "coherent_amplitude")


def _log_pdf_z(z, varsigma_h, sigma_n2, eps, M):
    # 2Mz/sn2 is non-central chi-square with 2M dof, noncentrality 2M s eps / sn2
    scale = 2.0 * M / sigma_n2
    return _log_ncx2_pdf(scale * z, 2.0 * M, scale * varsigma_h * eps) + math.log(scale)


def exact_map_thresholds(varsigma_h, sigma_n2, constellation, M):
    """Crossings of the exact conditional densities of z (validation oracle)."""
    _check_common(sigma_n2, M)
    e = constellation.energies
    lpr = log_prior_ratios(constellation)
    mom = gaussian_moments(varsigma_h, sigma_n2, constellation, M)
    out = []
    for p in range(constellation.size - 1):

        def g(z, p=p):
            return (
                _log_pdf_z(z, varsigma_h, sigma_n2, e[p + 1], M)
                - _log_pdf_z(z, varsigma_h, sigma_n2, e[p], M)
                + lpr[p]
            )

        lo, hi = mom.mean[p], mom.mean[p + 1]
        if not g(lo) < 0 < g(hi):
            raise DegenerateConstellationError(f"exact densities do not cross between symbols {p} and {p + 1}")
        out.append(optimize.brentq(g, lo, hi, xtol=1e-14 * sigma_n2, rtol=1e-14))
    return ThresholdSet(np.array(out), "ied_exact_map")


def decide(z, thresholds):
    """Symbol index for energy z; a value exactly on a boundary goes to the upper symbol."""
    d = thresholds.deltas if isinstance(thresholds, ThresholdSet) else np.asarray(thresholds)
    idx = np.searchsorted(d, z, side="right")
    if np.ndim(idx) == 0:
        return int(idx)
    return idx


def coherent_detect(y, h, constellation):
    """Matched-filter decision on Re(h^H y / ||h||^2) against amplitude midpoints."""
    y = np.asarray(y, dtype=complex)
    h = np.asarray(h.coefficients if hasattr(h, "coefficients") else h, dtype=complex)
    hh = float(np.vdot(h, h).real)
    if hh <= 0.0:
        raise DegenerateConstellationError("coherent detection needs a non-zero channel")
    zc = np.vdot(h, y) / hh
    return decide(zc.real, coherent_thresholds(constellation))


def relaxed_thresholds_batch(energy_basis, sigma_n2, constellation_energies, log_prior_ratios, M):
    """Vectorised twin of the relaxed rule, one row of thresholds per channel energy."""
    s = np.asarray(energy_basis, dtype=float)[:, None]
    e = np.asarray(constellation_energies, dtype=float)
    mu = s * e + sigma_n2
    v = sigma_n2 / M * (2.0 * s * e + sigma_n2)
    mu_p, mu_q, v_p, v_q = mu[:, :-1], mu[:, 1:], v[:, :-1], v[:, 1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        d = mu_q - mu_p
        r = v_q / v_p - 1.0
        L = np.log(v_q / v_p) - 2.0 * log_prior_ratios
        disc = d * d * (v_q / v_p) + r * L * v_q
        sq = np.sqrt(disc)
        t = np.where(r < 0.0, mu_p - (d + sq) / r, mu_p + (d * d + L * v_q) / (d + sq))
        t = np.where((d > 0.0) & (disc >= 0.0), t, np.inf)
    return np.maximum.accumulate(t, axis=1)
