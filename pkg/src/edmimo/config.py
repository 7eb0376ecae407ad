"""Scenario files: flat INI sections, no expressions.

Sections are [scenario], [constellation], [channel], [detector], [sweep]
and [output]. List values are comma separated. Any key that takes a list
turns into one curve per value; the curves of an experiment are the
cartesian product of the constellation families, path counts, power
profiles and the fixed sweep coordinate, in that order.
"""

import configparser
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .montecarlo import DETECTORS, REGIMES

KINDS = ("sweep", "pdf", "optimize")
FAMILIES = ("ook", "pam", "custom", "opt_ied", "opt_aed", "opt_minimax")
OPT_FAMILIES = ("opt_ied", "opt_aed", "opt_minimax")
MAX_PATHS_PER_ANTENNA = 8

SCHEMA = {
    "scenario": {"name", "kind", "seed", "trials", "regime", "description"},
    "constellation": {"family", "p", "energies", "priors", "restarts", "opt_seed"},
    "channel": {"model", "sigma_h2", "paths", "los", "rician_db", "profile", "decay_rate", "los_cos"},
    "detector": {"detectors", "overlays"},
    "sweep": {"axis", "points", "antennas", "snr_db", "grid_points"},
    "output": {"format", "prefix"},
}


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Diagnostic:
    path: str
    line: int
    section: str
    key: str
    message: str

    def __str__(self):
        where = f"[{self.section}]" + (f" {self.key}" if self.key else "")
        return f"{self.path}:{self.line}: {where}: {self.message}"


@dataclass
class ExperimentSpec:
    name: str
    kind: str
    seed: int
    trials: int
    regime: str
    families: list
    P: int
    energies: list
    priors: list
    restarts: int
    opt_seed: int
    channel_model: str
    sigma_h2: float
    paths: list
    los: bool
    rician_db: float
    profiles: list
    decay_rate: float
    los_cos: float
    detectors: list
    overlays: bool
    axis: str
    points: list
    antennas: list
    snr_db: list
    grid_points: int
    fmt: str
    prefix: str
    source_text: str = field(default="", repr=False)


def _line_map(text):
    """(section, key) -> 1-based line number, plus section header lines."""
    lines = {}
    section = None
    for n, raw in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", raw)
        if m:
            section = m.group(1).strip().lower()
            lines.setdefault((section, ""), n)
            continue
        m = re.match(r"\s*([A-Za-z_][\w-]*)\s*[=:]", raw)
        if m and section is not None:
            lines[(section, m.group(1).lower())] = n
    return lines


class _Reader:
    def __init__(self, cp, lines, path):
        self.cp = cp
        self.lines = lines
        self.path = path
        self.diags = []

    def line(self, section, key=""):
        return self.lines.get((section, key)) or self.lines.get((section, ""), 0)

    def error(self, section, key, message):
        self.diags.append(Diagnostic(self.path, self.line(section, key), section, key, message))

    def raw(self, section, key):
        if self.cp.has_option(section, key):
            return self.cp.get(section, key).strip()
        return None

    def get(self, section, key, conv, default=None, required=False, check=None, what=""):
        text = self.raw(section, key)
        if text is None or text == "":
            if required:
                self.error(section, key, "missing required value")
            return default
        try:
            value = conv(text)
        except (TypeError, ValueError) as exc:
            self.error(section, key, f"cannot parse {text!r}: {exc}")
            return default
        if check is not None and not check(value):
            self.error(section, key, f"{text!r} is not {what}")
            return default
        return value


def _split(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _floats(text):
    out = [float(t) for t in _split(text)]
    if any(not math.isfinite(v) for v in out):
        raise ValueError("values must be finite")
    return out


def _ints(text):
    out = []
    for t in _split(text):
        v = float(t)
        if v != int(v):
            raise ValueError(f"{t} is not an integer")
        out.append(int(v))
    return out


def _int(text):
    return _ints(text)[0] if len(_split(text)) == 1 else _raise("expected one integer")


def _float(text):
    v = _floats(text)
    return v[0] if len(v) == 1 else _raise("expected one number")


def _bool(text):
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


def _words(text):
    return [t.lower() for t in _split(text)]


def _paths(text):
    out = []
    for t in _split(text):
        if t.upper() == "M":
            out.append("M")
        else:
            out.append(_int(t))
    return out


def _raise(msg):
    raise ValueError(msg)


def _increasing(v):
    return len(v) > 0 and all(b > a for a, b in zip(v, v[1:]))


def parse_text(text, path="<config>"):
    """Parse and validate; returns (spec or None, diagnostics)."""
    lines = _line_map(text)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",), strict=True)
    try:
        cp.read_string(text, source=path)
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", 0) or 0
        return None, [Diagnostic(path, lineno, "", "", f"syntax error: {exc.message if hasattr(exc, 'message') else exc}")]
    r = _Reader(cp, lines, path)

    for sec in cp.sections():
        if sec.lower() not in SCHEMA:
            r.error(sec.lower(), "", f"unknown section; expected one of {sorted(SCHEMA)}")
            continue
        for key in cp.options(sec):
            if key not in SCHEMA[sec.lower()]:
                r.error(sec.lower(), key, f"unknown key; expected one of {sorted(SCHEMA[sec.lower()])}")
    for sec in ("scenario", "sweep"):
        if not cp.has_section(sec):
            r.diags.append(Diagnostic(path, 0, sec, "", "missing section"))
    if r.diags:
        return None, r.diags

    name = r.get("scenario", "name", str, default="custom")
    kind = r.get("scenario", "kind", str.lower, default="sweep", check=lambda v: v in KINDS, what=f"one of {KINDS}")
    seed = r.get("scenario", "seed", _int, required=True, check=lambda v: v >= 0, what="a non-negative integer")
    trials = r.get("scenario", "trials", _int, default=100_000, check=lambda v: v >= 1, what="a positive integer")
    regime = r.get("scenario", "regime", str.lower, default="slow", check=lambda v: v in REGIMES, what=f"one of {REGIMES}")

    families = r.get("constellation", "family", _words, default=["pam"],
                     check=lambda v: v and all(f in FAMILIES for f in v), what=f"a list drawn from {FAMILIES}")
    P = r.get("constellation", "p", _int, default=4, check=lambda v: v >= 2, what="an integer >= 2")
    energies = r.get("constellation", "energies", _floats, default=None)
    priors = r.get("constellation", "priors", _floats, default=None)
    restarts = r.get("constellation", "restarts", _int, default=5, check=lambda v: v >= 1, what="a positive integer")
    opt_seed = r.get("constellation", "opt_seed", _int, default=0, check=lambda v: v >= 0, what="a non-negative integer")
    if families and "ook" in families and P not in (None, 2) and r.raw("constellation", "p"):
        r.error("constellation", "p", "OOK has exactly two levels")
    if families and "custom" in families:
        if energies is None:
            r.error("constellation", "energies", "custom family needs energies")
        else:
            P = len(energies)
    if energies is not None and priors is None:
        priors_eff = [1.0 / len(energies)] * len(energies)
    else:
        priors_eff = priors
    if priors is not None:
        n_expected = len(energies) if energies is not None else P
        if len(priors) != n_expected:
            r.error("constellation", "priors", f"expected {n_expected} priors, got {len(priors)}")
        elif any(q < 0 for q in priors) or abs(sum(priors) - 1.0) > 1e-12:
            r.error("constellation", "priors", "priors must be non-negative and sum to 1")
    if energies is not None and priors_eff is not None and len(priors_eff) == len(energies):
        e = np.asarray(energies)
        if len(e) < 2 or e[0] < 0 or np.any(np.diff(e) <= 0):
            r.error("constellation", "energies", "energies must be non-negative and strictly increasing")
        else:
            power = float(np.dot(priors_eff, e))
            if abs(power - 1.0) > 1e-9:
                r.error("constellation", "energies",
                        f"average power sum(prior*energy) = {power:.12g}, must be 1 (divide the energies by it)")

    model = r.get("channel", "model", str.lower, default="rayleigh",
                  check=lambda v: v in ("rayleigh", "sparse"), what="rayleigh or sparse")
    sigma_h2 = r.get("channel", "sigma_h2", _float, default=1.0, check=lambda v: v > 0, what="positive")
    paths = r.get("channel", "paths", _paths, default=None)
    los = r.get("channel", "los", _bool, default=False)
    rician_db = r.get("channel", "rician_db", _float, default=9.0)
    profiles = r.get("channel", "profile", _words, default=["equal"],
                     check=lambda v: v and all(p in ("equal", "exponential") for p in v),
                     what="a list drawn from (equal, exponential)")
    decay = r.get("channel", "decay_rate", _float, default=1.0, check=lambda v: v >= 0, what="non-negative")
    los_cos = r.get("channel", "los_cos", _float, default=0.0, check=lambda v: -1 <= v <= 1, what="in [-1, 1]")
    if model == "sparse":
        if paths is None:
            r.error("channel", "paths", "sparse channel needs paths (L), e.g. 9 or M")
            paths = []
        for L in paths:
            if L != "M" and L < 1:
                r.error("channel", "paths", f"path count L = {L} must be >= 1")
            elif L != "M" and los and L < 2:
                r.error("channel", "paths", "line-of-sight channel needs L >= 2")
        if r.raw("channel", "sigma_h2"):
            r.error("channel", "sigma_h2", "sparse channels are normalized to unit power; drop sigma_h2")
    elif paths is not None or los:
        r.error("channel", "paths" if paths is not None else "los", "only meaningful for model = sparse")

    detectors = r.get("detector", "detectors", _words, default=["aed_gaussian"],
                      check=lambda v: v and all(d in DETECTORS for d in v), what=f"a list drawn from {DETECTORS}")
    overlays = r.get("detector", "overlays", _bool, default=True)
    if regime == "fast" and detectors and "ied" in detectors:
        r.error("detector", "detectors", "ied needs the instantaneous channel energy; not available with regime = fast")

    axis = r.get("sweep", "axis", str, default="M" if kind == "sweep" else "snr_db",
                 check=lambda v: v in ("M", "snr_db"), what="M or snr_db")
    points = r.get("sweep", "points", _floats, default=None)
    antennas = r.get("sweep", "antennas", _ints, default=None)
    snr_db = r.get("sweep", "snr_db", _floats, default=None)
    grid_points = r.get("sweep", "grid_points", _int, default=400, check=lambda v: v >= 2, what="an integer >= 2")
    if kind in ("sweep", "optimize"):
        if points is None:
            r.error("sweep", "points", "missing required value")
        elif not _increasing(points):
            r.error("sweep", "points", "sweep points must be non-empty and strictly increasing")
        elif axis == "M" and any(p != int(p) or p < 1 for p in points):
            r.error("sweep", "points", "antenna counts must be positive integers")
        fixed_key = "snr_db" if axis == "M" else "antennas"
        fixed = snr_db if axis == "M" else antennas
        if not fixed:
            r.error("sweep", fixed_key, f"axis = {axis} needs the fixed {fixed_key} value(s)")
    if kind == "pdf":
        if not antennas:
            r.error("sweep", "antennas", "pdf comparison needs antenna counts")
        if not snr_db or len(snr_db) != 1:
            r.error("sweep", "snr_db", "pdf comparison needs exactly one SNR")
    if kind == "optimize":
        if axis != "snr_db":
            r.error("sweep", "axis", "optimization runs sweep the SNR")
        if families and any(f not in OPT_FAMILIES for f in families):
            r.error("constellation", "family", f"optimize runs take objectives from {OPT_FAMILIES}")
    if antennas is not None and any(m < 1 for m in antennas):
        r.error("sweep", "antennas", "antenna counts must be positive")
    if model == "sparse" and paths:
        Ms = [int(p) for p in points] if (axis == "M" and points) else (antennas or [])
        for L in paths:
            if L != "M" and Ms and L > MAX_PATHS_PER_ANTENNA * max(Ms):
                r.error("channel", "paths", f"L = {L} exceeds {MAX_PATHS_PER_ANTENNA} x the largest M")

    fmt = r.get("output", "format", str.lower, default="csv", check=lambda v: v == "csv", what="csv")
    prefix = r.get("output", "prefix", str, default=name,
                   check=lambda v: re.fullmatch(r"[\w.-]+", v) is not None, what="a plain file name")

    if r.diags:
        return None, r.diags
    spec = ExperimentSpec(
        name=name, kind=kind, seed=seed, trials=trials, regime=regime, families=families, P=P,
        energies=energies, priors=priors, restarts=restarts, opt_seed=opt_seed, channel_model=model,
        sigma_h2=sigma_h2, paths=paths or [], los=los, rician_db=rician_db, profiles=profiles,
        decay_rate=decay, los_cos=los_cos, detectors=detectors, overlays=overlays, axis=axis,
        points=points or [], antennas=antennas or [], snr_db=snr_db or [], grid_points=grid_points,
        fmt=fmt, prefix=prefix, source_text=text,
    )
    return spec, []


def validate_config(path):
    """Diagnostics for a scenario file (empty list means valid). Raises OSError if unreadable."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_text(text, str(path))[1]


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return load_text(text, str(path))


def load_text(text, path="<config>"):
    spec, diags = parse_text(text, path)
    if diags:
        raise ConfigError(diags)
    return spec
