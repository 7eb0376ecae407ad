"""Channel generators and the energy-collecting front end.

Every channel is written as h = mean + V g with g ~ CN(0, I). For i.i.d.
Rayleigh fading V = sigma_h I and mean = 0; for the sparse multipath model
the columns of V are steering vectors scaled by the per-path amplitudes and
the mean is the line-of-sight component. The Monte Carlo kernels consume the
same (mean, V) pair.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import Stream


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelRealization:
    coefficients: np.ndarray
    antennas: int = field(init=False)

    def __post_init__(self):
        h = np.asarray(self.coefficients, dtype=complex).ravel()
        if h.size < 1 or not np.all(np.isfinite(h)):
            raise ChannelError("channel must hold at least one finite coefficient")
        h.setflags(write=False)
        object.__setattr__(self, "coefficients", h)
        object.__setattr__(self, "antennas", h.size)

    @property
    def inst_energy(self):
        """(1/M) sum |h_i|^2."""
        h = self.coefficients
        return float(np.mean(h.real**2 + h.imag**2))


@dataclass(frozen=True)
class Rayleigh:
    antennas: int
    sigma_h2: float = 1.0

    def __post_init__(self):
        _check_antennas(self.antennas)
        if not self.sigma_h2 > 0 or not math.isfinite(self.sigma_h2):
            raise ChannelError(f"sigma_h2 must be positive, got {self.sigma_h2}")

    @property
    def average_energy(self):
        return self.sigma_h2

    def with_antennas(self, M):
        return Rayleigh(M, self.sigma_h2)


PROFILES = ("equal", "exponential")


@dataclass(frozen=True)
class Sparse:
    """L resolvable paths on a half-wavelength uniform linear array.

    With ``los`` the first path is a deterministic line-of-sight component
    at directional cosine ``los_cos`` whose power relative to the L-1
    scattered paths is ``rician_db``. Without it all L paths are scattered.
    Scattered paths sit on the directional-cosine grid -1 + 2l/L; with
    L = M their steering vectors are mutually orthogonal. ``track_antennas``
    keeps L equal to M when the model is resized.
    """

    antennas: int
    paths: int
    los: bool = False
    rician_db: float = 9.0
    profile: str = "equal"
    decay_rate: float = 1.0
    los_cos: float = 0.0
    track_antennas: bool = False

    def __post_init__(self):
        _check_antennas(self.antennas)
        if self.track_antennas:
            object.__setattr__(self, "paths", int(self.antennas))
        if int(self.paths) != self.paths or self.paths < 1:
            raise ChannelError(f"path count L must be an integer >= 1, got {self.paths}")
        if self.los and self.paths < 2:
            raise ChannelError("a line-of-sight channel needs L >= 2 (one LOS plus scattered paths)")
        if self.profile not in PROFILES:
            raise ChannelError(f"unknown power profile {self.profile!r}; expected one of {PROFILES}")
        if not self.decay_rate >= 0:
            raise ChannelError("decay rate must be non-negative")
        if not -1.0 <= self.los_cos <= 1.0:
            raise ChannelError("directional cosine must lie in [-1, 1]")

    @property
    def average_energy(self):
        return 1.0

    @property
    def rician_factor(self):
        return 10.0 ** (self.rician_db / 10.0) if self.los else 0.0

    def with_antennas(self, M):
        kw = dict(self.__dict__)
        kw["antennas"] = M
        return Sparse(**kw)

    def path_cosines(self):
        L = self.paths
        grid = -1.0 + 2.0 * np.arange(L) / L
        return grid[1:] if self.los else grid

    def path_powers(self):
        """Per scattered path power, summing to the scattered share of unit power."""
        n = self.paths - 1 if self.los else self.paths
        if self.profile == "equal":
            w = np.ones(n)
        else:
            w = np.exp(-self.decay_rate * np.arange(n))
        return w / w.sum() / (1.0 + self.rician_factor)

    def los_amplitude(self):
        K = self.rician_factor
        return math.sqrt(K / (1.0 + K)) if self.los else 0.0

    def mixing(self):
        """(mean, V) such that h = mean + V g, g ~ CN(0, I_L')."""
        M = self.antennas
        V = steering_matrix(M, self.path_cosines()) * np.sqrt(self.path_powers())
        mean = np.zeros(M, dtype=complex)
        if self.los:
            mean = self.los_amplitude() * steering_matrix(M, [self.los_cos])[:, 0]
        return mean, V


def _check_antennas(M):
    if int(M) != M or M < 1:
        raise ChannelError(f"antenna count M must be an integer >= 1, got {M}")


def steering_matrix(M, cosines):
    """Columns v(theta) = [1, e^{-j pi cos}, ..., e^{-j pi (M-1) cos}]."""
    i = np.arange(M)[:, None]
    c = np.asarray(cosines, dtype=float)[None, :]
    return np.exp(-1j * math.pi * i * c)


def draw_rayleigh(M, sigma_h2, stream):
    """i.i.d. CN(0, sigma_h2) entries."""
    model = Rayleigh(M, sigma_h2)
    return ChannelRealization(stream.complex_normal(model.antennas, math.sqrt(sigma_h2)))


def draw_sparse(model, stream):
    if not isinstance(model, Sparse):
        raise ChannelError("draw_sparse needs a Sparse model")
    mean, V = model.mixing()
    g = stream.complex_normal(V.shape[1])
    return ChannelRealization(mean + V @ g)


def draw(model, stream):
    if isinstance(model, Rayleigh):
        return draw_rayleigh(model.antennas, model.sigma_h2, stream)
    return draw_sparse(model, stream)


@dataclass(frozen=True)
class EnergySample:
    z: float
    per_antenna: np.ndarray = None
    noise_energy: float = math.nan
    cross: float = math.nan

    def decomposition(self, inst_energy, amplitude):
        """varsigma_h x^2 + varsigma_n + 2 x (1/M) Re(h^H n)."""
        return inst_energy * amplitude**2 + self.noise_energy + 2.0 * amplitude * self.cross


def collect_energy(h, amplitude, sigma_n2, stream, keep_samples=True):
    """y_i = h_i x + n_i with n_i ~ CN(0, sigma_n2); z = (1/M) sum |y_i|^2."""
    if not sigma_n2 > 0:
        raise ChannelError(f"noise variance must be positive, got {sigma_n2}")
    if not amplitude >= 0:
        raise ChannelError("amplitude must be non-negative")
    hc = h.coefficients if isinstance(h, ChannelRealization) else np.asarray(h, dtype=complex)
    n = stream.complex_normal(hc.size, math.sqrt(sigma_n2))
    y = hc * amplitude + n
    z = float(np.mean(y.real**2 + y.imag**2))
    return EnergySample(
        z=z,
        per_antenna=y if keep_samples else None,
        noise_energy=float(np.mean(n.real**2 + n.imag**2)),
        cross=float(np.vdot(hc, n).real) / hc.size,
    )


def stream(seed, *indices):
    """Named counter-based stream; distinct index tuples never share variates."""
    return Stream(seed, *indices)
