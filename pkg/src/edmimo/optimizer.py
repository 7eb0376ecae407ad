"""Constellation design by cyclic coordinate descent.

One level at a time is moved along a one-dimensional path that keeps unit
average power: the chosen level is set to t and every other level is scaled
by (1 - prior_p t) / S, S being the power of the other levels. The ordering
constraints then reduce to an open interval for t, searched with a bounded
scalar minimiser. A step is kept only if it lowers the objective, so the
trace never increases.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sopt

from . import detector as det
from . import ser
from .constellation import Constellation, make_conventional_pam

log = logging.getLogger(__name__)

OBJECTIVES = ("ied_inst_ser", "minimax_gamma", "aed_avg_ser")


class InfeasibleError(ValueError):
    pass


@dataclass(frozen=True)
class OptimizationProblem:
    """What to minimise and at which operating point.

    ``energy_basis`` is the instantaneous channel energy for the I-ED
    objectives and the average one for A-ED. ``normalized_minimax`` uses
    ((g_l - g_u) / (g_l + g_u))^2 per pair instead of the raw squared
    mismatch, which otherwise rewards shrinking every post-SNR toward zero.
    """

    objective: str
    M: int
    sigma_n2: float
    P: int = 4
    energy_basis: float = 1.0
    priors: tuple = None
    max_sweeps: int = 200
    tol: float = 1e-10
    restarts: int = 5
    jitter: float = 0.3
    seed: int = 0
    initial: Constellation = None
    min_gap: float = 1e-9
    normalized_minimax: bool = True

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if int(self.P) != self.P or self.P < 2:
            raise InfeasibleError(f"need at least two levels, got P={self.P}")
        if self.priors is not None and (len(self.priors) != self.P or min(self.priors) <= 0):
            raise InfeasibleError("priors must be positive, one per level")
        if not (self.sigma_n2 > 0 and self.energy_basis > 0):
            raise ValueError("noise variance and channel energy must be positive")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError("M must be a positive integer")
        if self.restarts < 1 or self.max_sweeps < 1:
            raise ValueError("need at least one restart and one sweep")

    @classmethod
    def at_snr(cls, objective, M, snr_db, **kw):
        """Problem at SNR energy_basis / sigma_n2 given in dB (energy_basis defaults to 1)."""
        basis = kw.pop("energy_basis", 1.0)
        return cls(objective, M, basis / 10.0 ** (snr_db / 10.0), energy_basis=basis, **kw)

    def prior_array(self):
        if self.priors is None:
            return np.full(self.P, 1.0 / self.P)
        q = np.asarray(self.priors, dtype=float)
        return q / q.sum()


@dataclass
class OptimizationResult:
    constellation: Constellation
    objective_value: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    initial_objective: float = math.nan
    restart: int = 0

    @property
    def amplitude_gaps(self):
        return np.diff(self.constellation.amplitudes)


def objective_function(problem):
    """Callable energies -> objective (log SER or minimax mismatch); +inf if undefined."""
    q = problem.prior_array()
    M, sn2, s = int(problem.M), problem.sigma_n2, problem.energy_basis

    def f(energies):
        try:
            c = Constellation(energies, q)
        except ValueError:
            return math.inf
        if problem.objective == "ied_inst_ser":
            ts = det.ied_gaussian_thresholds(s, sn2, c, M, relaxed=True)
            return ser.ied_gaussian_ser(s, sn2, c, M, ts)[0].log_average
        if problem.objective == "aed_avg_ser":
            ts = det.aed_gaussian_thresholds(s, sn2, c, M, relaxed=True)
            return ser.aed_exact_ser(s, sn2, c, M, ts).log_average
        try:
            ts = det.ied_gaussian_thresholds(s, sn2, c, M)
        except det.DegenerateConstellationError:
            return math.inf
        g = ser.post_snr(s, sn2, c, M, ts)
        diff = g.gamma_l - g.gamma_u
        if problem.normalized_minimax:
            diff = diff / (g.gamma_l + g.gamma_u)
        return float(np.max(diff**2))

    return f


def _bracket(e, q, p, gap):
    """Admissible interval for the new value of level p under the power-preserving move."""
    S = float(q @ e - q[p] * e[p])
    P = e.size
    lo = 0.0 if p == 0 else e[p - 1] / (S + q[p] * e[p - 1])
    hi = 1.0 / q[p] if p == P - 1 else e[p + 1] / (S + q[p] * e[p + 1])
    return lo, hi, S


def _move(e, q, p, t, S):
    out = e * ((1.0 - q[p] * t) / S)
    out[p] = t
    return out


def _ordered(e, gap):
    return e[0] >= 0.0 and bool(np.all(np.diff(e) >= gap))


def _descend(f, e0, q, problem):
    e = np.array(e0, dtype=float)
    e /= q @ e
    fx = f(e)
    trace = [(0, fx)]
    converged = False
    sweeps = 0
    for sweeps in range(1, problem.max_sweeps + 1):
        f_start = fx
        for p in range(e.size):
            lo, hi, S = _bracket(e, q, p, problem.min_gap)
            if S <= 0.0:
                continue
            width = hi - lo
            a, b = lo + 1e-9 * width, hi - 1e-9 * width
            if not b > a:
                continue

            def g(t, p=p, S=S):
                cand = _move(e, q, p, t, S)
                return f(cand) if _ordered(cand, problem.min_gap) else math.inf

            res = sopt.minimize_scalar(g, bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-12 * max(1.0, abs(b))})
            cands = [(res.fun, res.x)]
            if p == 0:
                cands.append((g(0.0), 0.0))  # the zero-energy boundary is admissible
            best_f, best_t = min(cands, key=lambda c: c[0])
            if best_f < fx:
                e = _move(e, q, p, best_t, S)
                e /= q @ e
                fx = f(e)
        trace.append((sweeps, fx))
        if f_start - fx < problem.tol:
            converged = True
            break
    return e, fx, sweeps, converged, trace


def _starts(problem, q):
    base = problem.initial.energies if problem.initial is not None else make_conventional_pam(problem.P, q).energies
    yield np.array(base)
    rng = np.random.default_rng(problem.seed)
    a0 = np.sqrt(base)
    for _ in range(1, problem.restarts):
        gaps = np.diff(a0) * np.exp(problem.jitter * rng.standard_normal(problem.P - 1))
        a = np.concatenate([[a0[0]], a0[0] + np.cumsum(gaps)])
        yield a**2


def _solve(problem):
    q = problem.prior_array()
    f = objective_function(problem)
    best = None
    initial = None
    for r, e0 in enumerate(_starts(problem, q)):
        e, fx, it, conv, trace = _descend(f, e0, q, problem)
        if initial is None:
            initial = trace[0][1]
        log.debug("restart %d: objective %.6g after %d sweeps", r, fx, it)
        if best is None or fx < best[1]:
            best = (e, fx, it, conv, trace, r)
    e, fx, it, conv, trace, r = best
    c = Constellation(e, q)
    return OptimizationResult(c, fx, it, conv, trace, initial, r)


def optimize_ied(problem):
    """Minimise the Gaussian-approximation I-ED SER at the given channel energy."""
    if problem.objective != "ied_inst_ser":
        problem = _with_objective(problem, "ied_inst_ser")
    return _solve(problem)


def optimize_minimax_gamma(problem):
    """Equalise upper and lower post-SNRs at every boundary (worst pair first)."""
    if problem.objective != "minimax_gamma":
        problem = _with_objective(problem, "minimax_gamma")
    return _solve(problem)


def optimize_aed(problem):
    """Minimise the exact A-ED average SER over Rayleigh fading."""
    if problem.objective != "aed_avg_ser":
        problem = _with_objective(problem, "aed_avg_ser")
    return _solve(problem)


def _with_objective(problem, objective):
    from dataclasses import replace

    return replace(problem, objective=objective)
