"""Non-negative energy constellations with unit average power."""

from dataclasses import dataclass

import numpy as np

_NORM_TOL = 1e-12


class ConstellationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Constellation:
    """Energy levels eps_0 < ... < eps_{P-1} and their priors.

    Construction always renormalizes so that sum_p prior_p * eps_p == 1; the
    transmitted amplitude for symbol p is sqrt(eps_p).
    """

    energies: np.ndarray
    priors: np.ndarray

    def __post_init__(self):
        e = np.array(self.energies, dtype=float).ravel()
        q = np.array(self.priors, dtype=float).ravel()
        if e.size < 2:
            raise ConstellationError("a constellation needs at least two levels")
        if q.size != e.size:
            raise ConstellationError(f"{e.size} energies but {q.size} priors")
        if not np.all(np.isfinite(e)) or np.any(e < 0):
            raise ConstellationError("energies must be finite and non-negative")
        if np.any(np.diff(e) <= 0):
            raise ConstellationError("energies must be strictly increasing")
        if np.any(q < 0) or abs(q.sum() - 1.0) > _NORM_TOL:
            raise ConstellationError("priors must be non-negative and sum to 1")
        power = float(q @ e)
        if power <= 0:
            raise ConstellationError("average power must be positive")
        # already-normalized input is kept bit-for-bit so normalization is idempotent
        if abs(power - 1.0) > 1e-14:
            e = e / power
        e.setflags(write=False)
        q = q.copy()
        q.setflags(write=False)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "priors", q)

    @property
    def size(self):
        return self.energies.size

    @property
    def amplitudes(self):
        return np.sqrt(self.energies)

    @property
    def average_power(self):
        return float(self.priors @ self.energies)

    def kappa(self):
        """((sqrt(eps_{p+1}) - sqrt(eps_p)) / sqrt(2))**2 for each adjacent pair."""
        return np.diff(self.amplitudes) ** 2 / 2.0

    def is_uniform(self):
        return bool(np.allclose(self.priors, 1.0 / self.size, rtol=0, atol=1e-15))

    def __eq__(self, other):
        if not isinstance(other, Constellation):
            return NotImplemented
        return (
            self.size == other.size
            and np.array_equal(self.energies, other.energies)
            and np.array_equal(self.priors, other.priors)
        )

    def __hash__(self):
        return hash((self.energies.tobytes(), self.priors.tobytes()))

    def __repr__(self):
        e = ", ".join(f"{v:.6g}" for v in self.energies)
        return f"Constellation(energies=[{e}], P={self.size})"

    def to_text(self):
        """Comma-separated energies and priors, as used in scenario files."""
        return (
            ", ".join(repr(float(v)) for v in self.energies),
            ", ".join(repr(float(v)) for v in self.priors),
        )


def _priors(P, priors):
    if priors is None:
        return np.full(P, 1.0 / P)
    q = np.asarray(priors, dtype=float)
    if q.shape != (P,):
        raise ConstellationError(f"expected {P} priors, got shape {q.shape}")
    return q


def make_custom(energies, priors=None):
    """Validate and normalize an arbitrary energy set."""
    e = np.asarray(energies, dtype=float).ravel()
    return Constellation(e, _priors(e.size, priors))


def make_conventional_pam(P, priors=None):
    """Equally spaced amplitudes 0, d, ..., (P-1)d scaled to unit average power."""
    if int(P) != P or P < 2:
        raise ConstellationError(f"P must be an integer >= 2, got {P}")
    P = int(P)
    return Constellation(np.arange(P, dtype=float) ** 2, _priors(P, priors))


def make_ook():
    """On-off keying, energies {0, 2}."""
    return make_conventional_pam(2)


def parse_float_list(text):
    return [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]
