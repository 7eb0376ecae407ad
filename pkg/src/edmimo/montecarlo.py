"""Monte Carlo SER engine.

Each trial simulates the full per-antenna chain y_i = h_i x + n_i, forms
z = (1/M) sum |y_i|^2 and hands it to every requested detector, so all
detectors see the same channels and noise. Trial t of sweep point k on
curve c draws its variates from the counter-based stream keyed by
(seed, c, k, t), and symbols are allocated deterministically in proportion
to the priors. The error counts are therefore a function of the seed and
the point alone: any sharding or thread count gives identical integers.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _accel
from . import detector as det
from . import ser
from ._accel import jit, prange
from .channel import Rayleigh, Sparse
from .constellation import Constellation
from .rng import child_key, child_keys_np, complex_normal, complex_normals_np, derive_key

log = logging.getLogger(__name__)

DETECTORS = ("aed_gaussian", "aed_bayesian", "ied", "coherent")
REGIMES = ("slow", "fast")
AXES = ("M", "snr_db")
_BLOCK = 2048


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    """One Monte Carlo sweep.

    The sweep runs over ``points`` on ``axis`` ("M" or "snr_db") with the
    other coordinate fixed. SNR is sigma_h^2 / sigma_n^2 in dB, where
    sigma_h^2 is the channel model's average per-antenna energy. Random
    streams are keyed by (seed, curve, point), so curves of one experiment
    never share variates. ``point_constellations`` lets each point use its
    own constellation (e.g. one optimised for that point).
    """

    constellation: Constellation
    channel: object
    detectors: tuple
    axis: str
    points: tuple
    antennas: int = 100
    snr_db: float = 0.0
    trials: int = 100_000
    seed: int = 1
    regime: str = "slow"
    overlays: bool = True
    name: str = "custom"
    curve: int = 0
    point_constellations: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "detectors", tuple(self.detectors))
        object.__setattr__(self, "points", tuple(self.points))
        if int(self.trials) != self.trials or self.trials < 1:
            raise ScenarioError(f"trials must be a positive integer, got {self.trials}")
        if self.axis not in AXES:
            raise ScenarioError(f"sweep axis must be one of {AXES}, got {self.axis!r}")
        if not self.points:
            raise ScenarioError("sweep needs at least one point")
        if any(b <= a for a, b in zip(self.points, self.points[1:])):
            raise ScenarioError("sweep points must be strictly increasing")
        if self.axis == "M" and any(int(m) != m or m < 1 for m in self.points):
            raise ScenarioError("antenna counts must be positive integers")
        if not self.detectors or any(d not in DETECTORS for d in self.detectors):
            raise ScenarioError(f"detectors must be a non-empty subset of {DETECTORS}")
        if self.regime not in REGIMES:
            raise ScenarioError(f"regime must be one of {REGIMES}")
        if self.regime == "fast" and "ied" in self.detectors:
            raise ScenarioError("I-ED needs the instantaneous channel energy, which fast fading does not expose")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ScenarioError("seed must be a non-negative integer")
        if not isinstance(self.channel, (Rayleigh, Sparse)):
            raise ScenarioError("channel must be a Rayleigh or Sparse model")
        if self.point_constellations is not None:
            object.__setattr__(self, "point_constellations", tuple(self.point_constellations))
            if len(self.point_constellations) != len(self.points):
                raise ScenarioError("need one constellation per sweep point")

    def constellation_at(self, index):
        if self.point_constellations is not None:
            return self.point_constellations[index]
        return self.constellation

    def point(self, index):
        """(M, snr_db) of sweep point ``index``."""
        v = self.points[index]
        if self.axis == "M":
            return int(v), float(self.snr_db)
        return int(self.antennas), float(v)

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


@dataclass
class PointResult:
    antennas: int
    snr_db: float
    montecarlo: dict
    analytic: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)


@dataclass
class SweepResult:
    scenario: Scenario
    points: list

    def rows(self):
        out = []
        for pr in self.points:
            for src, reports in (("montecarlo", pr.montecarlo), ("analytic", pr.analytic)):
                for name, rep in reports.items():
                    out.append(rep.csv_row(method=name, source=src, M=pr.antennas,
                                           snr_db=repr(pr.snr_db)))
        return out


# allocation -----------------------------------------------------------------


def allocate(trials, priors):
    """Deterministic per-symbol trial counts proportional to the priors (largest remainder)."""
    q = np.asarray(priors, dtype=float)
    raw = trials * q
    n = np.floor(raw).astype(np.int64)
    short = trials - int(n.sum())
    if short:
        order = np.argsort(-(raw - n), kind="stable")
        n[order[:short]] += 1
    return n


# kernels ---------------------------------------------------------------------


@jit(parallel=True)
def _simulate(key, t_lo, t_hi, block, sym_cum, energies, amps, mode, std_h,
              mean_re, mean_im, v_re, v_im, M, sigma_n2, fixed_t, do_ied, lpr, do_coh, coh_t):
    n = t_hi - t_lo
    nb = (n + block - 1) // block
    P = energies.shape[0]
    K = fixed_t.shape[0]
    Lr = v_re.shape[1]
    sigma_n = math.sqrt(sigma_n2)
    counts = np.zeros((nb, K + 2, P), dtype=np.int64)
    for b in prange(nb):
        h_re = np.empty(M)
        h_im = np.empty(M)
        g_re = np.empty(Lr)
        g_im = np.empty(Lr)
        scratch = np.empty(P - 1)
        lo = t_lo + b * block
        hi = min(lo + block, t_hi)
        for t in range(lo, hi):
            tk = child_key(key, t)
            p = 0
            while t >= sym_cum[p + 1]:
                p += 1
            x = amps[p]
            if mode == 0:
                for i in range(M):
                    a, c = complex_normal(tk, i, std_h)
                    h_re[i] = a
                    h_im[i] = c
                off = M
            else:
                for l in range(Lr):
                    a, c = complex_normal(tk, l, 1.0)
                    g_re[l] = a
                    g_im[l] = c
                for i in range(M):
                    ar = mean_re[i]
                    ai = mean_im[i]
                    for l in range(Lr):
                        ar += v_re[i, l] * g_re[l] - v_im[i, l] * g_im[l]
                        ai += v_re[i, l] * g_im[l] + v_im[i, l] * g_re[l]
                    h_re[i] = ar
                    h_im[i] = ai
                off = Lr
            yy = 0.0
            hh = 0.0
            hn = 0.0
            for i in range(M):
                nr, ni = complex_normal(tk, off + i, sigma_n)
                yr = h_re[i] * x + nr
                yi = h_im[i] * x + ni
                yy += yr * yr + yi * yi
                hh += h_re[i] * h_re[i] + h_im[i] * h_im[i]
                hn += h_re[i] * nr + h_im[i] * ni
            z = yy / M
            for k in range(K):
                idx = 0
                for j in range(P - 1):
                    if fixed_t[k, j] <= z:
                        idx += 1
                if idx != p:
                    counts[b, k, p] += 1
            if do_ied:
                det.gauss_thresholds_into(scratch, hh / M, sigma_n2, energies, lpr, M, True)
                idx = 0
                for j in range(P - 1):
                    if scratch[j] <= z:
                        idx += 1
                if idx != p:
                    counts[b, K, p] += 1
            if do_coh:
                zc = x + hn / hh if hh > 0.0 else 0.0
                idx = 0
                for j in range(P - 1):
                    if coh_t[j] <= zc:
                        idx += 1
                if idx != p:
                    counts[b, K + 1, p] += 1
    return counts.sum(axis=0)


def _simulate_np(key, t_lo, t_hi, sym_cum, energies, amps, mode, std_h, mean, V,
                 M, sigma_n2, fixed_t, do_ied, lpr, do_coh, coh_t):
    P = energies.shape[0]
    K = fixed_t.shape[0]
    counts = np.zeros((K + 2, P), dtype=np.int64)
    t = np.arange(t_lo, t_hi, dtype=np.int64)
    keys = child_keys_np(key, t)
    p = np.searchsorted(sym_cum, t, side="right") - 1
    x = amps[p][:, None]
    if mode == 0:
        H = complex_normals_np(keys, 0, M, std_h)
        off = M
    else:
        G = complex_normals_np(keys, 0, V.shape[1])
        H = mean[None, :] + G @ V.T
        off = V.shape[1]
    Nz = complex_normals_np(keys, off, M, math.sqrt(sigma_n2))
    Y = H * x + Nz
    z = np.sum(Y.real**2 + Y.imag**2, axis=1) / M
    hh = np.sum(H.real**2 + H.imag**2, axis=1)
    for k in range(K):
        idx = np.sum(fixed_t[k][None, :] <= z[:, None], axis=1)
        counts[k] = np.bincount(p[idx != p], minlength=P)
    if do_ied:
        T = det.relaxed_thresholds_batch(hh / M, sigma_n2, energies, lpr, M)
        idx = np.sum(T <= z[:, None], axis=1)
        counts[K] = np.bincount(p[idx != p], minlength=P)
    if do_coh:
        hn = np.sum(H.real * Nz.real + H.imag * Nz.imag, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            zc = np.where(hh > 0, amps[p] + hn / hh, 0.0)
        idx = np.sum(coh_t[None, :] <= zc[:, None], axis=1)
        counts[K + 1] = np.bincount(p[idx != p], minlength=P)
    return counts


# point runner ------------------------------------------------------------------


def fixed_thresholds(scenario, M, sigma_n2, c):
    """Thresholds that do not depend on the data-phase channel (built before any draw)."""
    sh2 = scenario.channel.average_energy
    out = {}
    for d in scenario.detectors:
        if d == "aed_gaussian":
            out[d] = det.aed_gaussian_thresholds(sh2, sigma_n2, c, M, relaxed=True)
        elif d == "aed_bayesian":
            out[d] = det.aed_bayesian_thresholds(sh2, sigma_n2, c, M)
    return out


def simulate_counts(constellation, channel, M, sigma_n2, key, trials, thresholds, do_ied, do_coh,
                    shard_count=1, threads=None, backend=None):
    """Per-detector, per-symbol error counts; rows follow ``thresholds`` then I-ED then coherent."""
    backend = backend or _accel.backend_name()
    n_sym = allocate(trials, constellation.priors)
    sym_cum = np.concatenate([[0], np.cumsum(n_sym)]).astype(np.int64)
    P = constellation.size
    fixed_t = np.array([ts.deltas for ts in thresholds], dtype=float).reshape(len(thresholds), P - 1)
    lpr = det.log_prior_ratios(constellation)
    coh_t = det.coherent_thresholds(constellation).deltas.copy()
    energies = constellation.energies.copy()
    amps = constellation.amplitudes
    model = channel.with_antennas(M)
    if isinstance(model, Rayleigh):
        mode, std_h = 0, math.sqrt(model.sigma_h2)
        mean, V = np.zeros(1, complex), np.zeros((1, 1), complex)
    else:
        mode, std_h = 1, 1.0
        mean, V = model.mixing()
    bounds = np.linspace(0, trials, max(1, int(shard_count)) + 1).astype(np.int64)
    total = np.zeros((len(thresholds) + 2, P), dtype=np.int64)
    if backend == "numba":
        _accel.set_kernel_threads(_accel.resolve_threads(threads))
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            if hi > lo:
                total += _simulate(
                    np.uint64(key), int(lo), int(hi), _BLOCK, sym_cum, energies, amps, mode, std_h,
                    np.ascontiguousarray(mean.real), np.ascontiguousarray(mean.imag),
                    np.ascontiguousarray(V.real), np.ascontiguousarray(V.imag),
                    int(M), float(sigma_n2), fixed_t, bool(do_ied), lpr, bool(do_coh), coh_t,
                )
    else:
        chunk = max(64, min(_BLOCK, 400_000 // max(M, V.shape[1])))
        spans = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            spans += [(a, min(a + chunk, hi)) for a in range(int(lo), int(hi), chunk)]

        def work(span):
            return _simulate_np(np.uint64(key), span[0], span[1], sym_cum, energies, amps, mode, std_h,
                                mean, V, int(M), float(sigma_n2), fixed_t, do_ied, lpr, do_coh, coh_t)

        with ThreadPoolExecutor(max_workers=_accel.resolve_threads(threads)) as pool:
            for c in pool.map(work, spans):
                total += c
    return total, n_sym


def run_point(scenario, point, shard_count=1, threads=None, backend=None):
    """Monte Carlo reports for every detector of the scenario at sweep point ``point``."""
    M, snr_db = scenario.point(point)
    sh2 = scenario.channel.average_energy
    sigma_n2 = sh2 / 10.0 ** (snr_db / 10.0)
    c = scenario.constellation_at(point)
    fixed = fixed_thresholds(scenario, M, sigma_n2, c)
    key = derive_key(scenario.seed, scenario.curve, point)
    counts, n_sym = simulate_counts(
        c, scenario.channel, M, sigma_n2, key, scenario.trials, list(fixed.values()),
        "ied" in scenario.detectors, "coherent" in scenario.detectors,
        shard_count=shard_count, threads=threads, backend=backend,
    )
    out = {}
    names = list(fixed) + ["ied", "coherent"]
    for row, name in enumerate(names):
        if name in scenario.detectors:
            out[name] = ser.SerReport.from_counts(counts[row], n_sym, c.priors)
    return out, fixed


def analytic_overlays(scenario, M, sigma_n2, fixed, c):
    """Closed-form SERs that apply to the scenario's channel (Rayleigh only)."""
    if not isinstance(scenario.channel, Rayleigh):
        return {}
    sh2 = scenario.channel.sigma_h2
    out = {}
    for name, ts in fixed.items():
        out[name] = ser.aed_exact_ser(sh2, sigma_n2, c, M, ts)
        out[name + "_chernoff"] = ser.aed_chernoff_ser(sh2, sigma_n2, c, M, ts)
        # Gaussian approximation of z with the channel energy frozen at its mean
        out[name + "_gaussian_approx"] = ser.ied_gaussian_ser(sh2, sigma_n2, c, M, ts)[0]
    if c.size > 2 and fixed:
        fl = ser.pam_floor(c, M)
        out["pam_floor"] = ser.SerReport(np.full(c.size, fl.log_value), c.priors, "aed_floor")
    if "ied" in scenario.detectors:
        out["ied_exact"] = ser.ied_exact_ser_rayleigh(sh2, sigma_n2, c, M)
        out["ied_gaussian"] = ser.ied_gaussian_ser_rayleigh(sh2, sigma_n2, c, M)
    if "coherent" in scenario.detectors:
        out["coherent"] = ser.coherent_ser_rayleigh(sh2, sigma_n2, c, M)
    return out


def run_sweep(scenario, shard_count=1, threads=None, backend=None, progress=None):
    points = []
    for k in range(len(scenario.points)):
        M, snr_db = scenario.point(k)
        mc, fixed = run_point(scenario, k, shard_count, threads, backend)
        sigma_n2 = scenario.channel.average_energy / 10.0 ** (snr_db / 10.0)
        c = scenario.constellation_at(k)
        an = analytic_overlays(scenario, M, sigma_n2, fixed, c) if scenario.overlays else {}
        points.append(PointResult(M, snr_db, mc, an, fixed))
        if progress:
            progress(k, M, snr_db)
        log.info("point %d: M=%d snr=%.2f dB done", k, M, snr_db)
    return SweepResult(scenario, points)
