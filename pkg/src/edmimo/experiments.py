"""Turn a parsed scenario file into curves, run them and write CSVs.

CSV schema (one row per curve point and method):

sweep     curve, family, channel, method, source, M, snr_db, ser, ci_lo,
          ci_hi, trials, per_symbol, log_ser, valid, energies
pdf       curve, M, snr_db, symbol, energy, z, log_pdf_exact, log_pdf_gaussian
optimize  curve, family, M, snr_db, objective_value, ser, ser_conventional,
          iterations, converged, energy_0 .. energy_{P-1}

``source`` is "montecarlo" or "analytic"; ``per_symbol`` and ``energies``
are ';'-joined. Floats are written with repr so files round-trip exactly.
"""

import csv
import itertools
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from . import detector as det
from . import ser
from .channel import Rayleigh, Sparse
from .constellation import make_conventional_pam, make_custom, make_ook
from .montecarlo import Scenario, run_sweep
from .optimizer import OptimizationProblem, optimize_aed, optimize_ied, optimize_minimax_gamma
from .special import noncentral_chi2_logpdf

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ["curve", "family", "channel", "method", "source", "M", "snr_db", "ser", "ci_lo", "ci_hi",
                 "trials", "per_symbol", "log_ser", "valid", "energies"]
PDF_COLUMNS = ["curve", "M", "snr_db", "symbol", "energy", "z", "log_pdf_exact", "log_pdf_gaussian"]
_OPTIMIZERS = {"opt_ied": optimize_ied, "opt_aed": optimize_aed, "opt_minimax": optimize_minimax_gamma}
_OBJECTIVES = {"opt_ied": "ied_inst_ser", "opt_aed": "aed_avg_ser", "opt_minimax": "minimax_gamma"}


@dataclass
class Curve:
    index: int
    label: str
    family: str
    channel_label: str
    scenario: object = None
    antennas: int = None
    snr_db: float = None


def apply_overrides(spec, trials=None, seed=None):
    kw = {}
    if trials is not None:
        kw["trials"] = int(trials)
    if seed is not None:
        kw["seed"] = int(seed)
    return replace(spec, **kw)


def base_constellation(spec, family):
    q = spec.priors
    if family == "ook":
        return make_ook()
    if family == "pam":
        return make_conventional_pam(spec.P, q)
    if family == "custom":
        return make_custom(spec.energies, q)
    raise ValueError(f"{family} is built per operating point")


class _OptCache:
    """Optimised constellations keyed by (family, M, snr); shared across curves."""

    def __init__(self, spec):
        self.spec = spec
        self.store = {}

    def result(self, family, M, snr_db):
        key = (family, int(M), float(snr_db))
        if key not in self.store:
            s = self.spec
            problem = OptimizationProblem.at_snr(
                _OBJECTIVES[family], int(M), float(snr_db), P=s.P,
                priors=tuple(s.priors) if s.priors else None, restarts=s.restarts, seed=s.opt_seed,
            )
            self.store[key] = _OPTIMIZERS[family](problem)
            log.info("optimised %s at M=%d, %.2f dB", family, M, snr_db)
        return self.store[key]

    def constellation(self, family, M, snr_db):
        return self.result(family, M, snr_db).constellation


def _channels(spec):
    if spec.channel_model == "rayleigh":
        return [("rayleigh", lambda M: Rayleigh(M, spec.sigma_h2))]
    out = []
    for L, prof in itertools.product(spec.paths, spec.profiles):
        label = f"sparse_L{L}_{prof}" + ("_los" if spec.los else "")

        def make(M, L=L, prof=prof):
            return Sparse(M, M if L == "M" else int(L), los=spec.los, rician_db=spec.rician_db, profile=prof,
                          decay_rate=spec.decay_rate, los_cos=spec.los_cos, track_antennas=(L == "M"))

        out.append((label, make))
    return out


def _fixed_values(spec):
    if spec.axis == "M":
        return [("snr_db", v) for v in spec.snr_db]
    return [("antennas", int(v)) for v in spec.antennas]


def _fixed_label(kind, v):
    return f"snr{v:g}dB" if kind == "snr_db" else f"M{v}"


def build_curves(spec, cache=None):
    """Sweep curves in the documented product order; index i seeds curve i."""
    cache = cache or _OptCache(spec)
    curves = []
    idx = 0
    for family in spec.families:
        for ch_label, make in _channels(spec):
            for kind, v in _fixed_values(spec):
                M0 = v if kind == "antennas" else int(spec.points[0])
                snr0 = v if kind == "snr_db" else float(spec.points[0])
                sc_kw = dict(
                    channel=make(M0), detectors=spec.detectors, axis=spec.axis, points=spec.points,
                    trials=spec.trials, seed=spec.seed, regime=spec.regime, overlays=spec.overlays,
                    name=spec.name, curve=idx,
                )
                if kind == "snr_db":
                    sc_kw.update(snr_db=float(v), antennas=M0)
                else:
                    sc_kw.update(antennas=int(v), snr_db=snr0)
                if family in _OPTIMIZERS:
                    pts = []
                    for p in spec.points:
                        M, snr = (int(p), float(v)) if spec.axis == "M" else (int(v), float(p))
                        pts.append(cache.constellation(family, M, snr))
                    sc = Scenario(constellation=pts[0], point_constellations=pts, **sc_kw)
                else:
                    sc = Scenario(constellation=base_constellation(spec, family), **sc_kw)
                label = f"{family}_{ch_label}_{_fixed_label(kind, v)}"
                curves.append(Curve(idx, label, family, ch_label, sc))
                idx += 1
    return curves


def sweep_rows(curve, result):
    rows = result.rows()
    # energies per point, to show which constellation produced each row
    by_point = {}
    for k in range(len(curve.scenario.points)):
        M, snr = curve.scenario.point(k)
        by_point[(M, repr(snr))] = ";".join(repr(float(e)) for e in curve.scenario.constellation_at(k).energies)
    for row in rows:
        row.update(curve=curve.label, family=curve.family, channel=curve.channel_label,
                   energies=by_point[(row["M"], row["snr_db"])])
    return rows


def pdf_rows(spec):
    """Log pdf of z given symbol p at channel energy sigma_h2: exact and Gaussian."""
    snr = spec.snr_db[0]
    s = spec.sigma_h2
    sigma_n2 = s / 10.0 ** (snr / 10.0)
    c = base_constellation(spec, spec.families[0])
    out = []
    for M in spec.antennas:
        mom = det.gaussian_moments(s, sigma_n2, c, M)
        sd = np.sqrt(mom.var)
        z_hi = float(mom.mean[-1] + 6.0 * sd[-1])
        z = np.linspace(z_hi / spec.grid_points, z_hi, spec.grid_points)
        scale = 2.0 * M / sigma_n2
        for p, e in enumerate(c.energies):
            exact = [noncentral_chi2_logpdf(scale * zi, 2.0 * M, scale * s * e) + math.log(scale) for zi in z]
            gauss = -0.5 * ((z - mom.mean[p]) / sd[p]) ** 2 - math.log(sd[p]) - 0.5 * math.log(2 * math.pi)
            for zi, le, lg in zip(z, exact, gauss):
                out.append(dict(curve=f"M{M}", M=M, snr_db=repr(float(snr)), symbol=p, energy=repr(float(e)),
                                z=repr(float(zi)), log_pdf_exact=repr(float(le)), log_pdf_gaussian=repr(float(lg))))
    return out


def _design_ser(family, c, M, sigma_n2, s):
    if family == "opt_aed":
        ts = det.aed_gaussian_thresholds(s, sigma_n2, c, M, relaxed=True)
        return ser.aed_exact_ser(s, sigma_n2, c, M, ts).average
    ts = det.ied_gaussian_thresholds(s, sigma_n2, c, M, relaxed=True)
    return ser.ied_gaussian_ser(s, sigma_n2, c, M, ts)[0].average


def optimize_rows(spec, cache=None):
    cache = cache or _OptCache(spec)
    M = int(spec.antennas[0])
    out = []
    for family in spec.families:
        for snr in spec.points:
            res = cache.result(family, M, snr)
            sigma_n2 = 1.0 / 10.0 ** (snr / 10.0)
            conv = make_conventional_pam(spec.P, spec.priors)
            row = dict(curve=f"{family}_M{M}", family=family, M=M, snr_db=repr(float(snr)),
                       objective_value=repr(float(res.objective_value)),
                       ser=repr(float(_design_ser(family, res.constellation, M, sigma_n2, 1.0))),
                       ser_conventional=repr(float(_design_ser(family, conv, M, sigma_n2, 1.0))),
                       iterations=res.iterations, converged=str(res.converged).lower())
            for p, e in enumerate(res.constellation.energies):
                row[f"energy_{p}"] = repr(float(e))
            out.append(row)
    return out


def optimize_columns(spec):
    return ["curve", "family", "M", "snr_db", "objective_value", "ser", "ser_conventional", "iterations",
            "converged"] + [f"energy_{p}" for p in range(spec.P)]


def write_csv(path, rows, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def run_experiment(spec, out_dir, threads=None, shard_count=1, backend=None, progress=None):
    """Run every curve, write per-curve and combined CSVs; returns the written file names."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if spec.kind == "pdf":
        rows = pdf_rows(spec)
        groups = {}
        for r in rows:
            groups.setdefault(r["curve"], []).append(r)
        columns = PDF_COLUMNS
    elif spec.kind == "optimize":
        rows = optimize_rows(spec)
        groups = {}
        for r in rows:
            groups.setdefault(r["curve"], []).append(r)
        columns = optimize_columns(spec)
    else:
        cache = _OptCache(spec)
        curves = build_curves(spec, cache)
        rows, groups = [], {}
        for cv in curves:
            if progress:
                progress(f"curve {cv.index + 1}/{len(curves)}: {cv.label}")
            res = run_sweep(cv.scenario, shard_count=shard_count, threads=threads, backend=backend)
            cr = sweep_rows(cv, res)
            groups[cv.label] = cr
            rows.extend(cr)
        columns = SWEEP_COLUMNS
    for label, grp in groups.items():
        name = f"{spec.prefix}__{label}.csv"
        write_csv(out_dir / name, grp, columns)
        written.append(name)
    name = f"{spec.prefix}.csv"
    write_csv(out_dir / name, rows, columns)
    written.append(name)
    return written
