"""Counter-based random streams.

Every variate is a pure function of (key, counter): a SplitMix64 finalizer
applied to ``key + (counter + 1) * golden``. Keys are derived by hashing a
seed together with integer indices (sweep point, trial). Because nothing is
carried between draws, any partition of the trials across workers produces
the same numbers, which is what makes Monte Carlo counts shard-invariant.

Scalar kernels are numba-compiled; the ``*_np`` twins compute the identical
bit patterns on uint64 arrays for the vectorised fallback path.
"""

import math

import numpy as np

from ._accel import jit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_TWO_PI = 2.0 * math.pi
_MASK = (1 << 64) - 1


@jit
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@jit
def child_key(key, index):
    """Key of sub-stream ``index`` under ``key``."""
    return mix64(np.uint64(key) ^ mix64(np.uint64(index) * _GOLDEN + _ONE))


@jit
def uniform(key, counter):
    """Uniform in (0, 1]; never 0, so log() is always finite."""
    x = mix64(np.uint64(key) + (np.uint64(counter) + _ONE) * _GOLDEN)
    return (float(x >> _S11) + 1.0) * _INV53


@jit
def complex_normal(key, j, std):
    """j-th circular complex Gaussian with E|g|^2 = std**2, from counters 2j, 2j+1."""
    u1 = uniform(key, 2 * j)
    u2 = uniform(key, 2 * j + 1)
    r = std * math.sqrt(-math.log(u1))
    a = _TWO_PI * u2
    return r * math.cos(a), r * math.sin(a)


def _mix64_int(z):
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_key(seed, *indices):
    """Stream key from a seed and any number of non-negative integer indices."""
    if int(seed) < 0:
        raise ValueError("seed must be non-negative")
    # offset so that a bare seed never coincides with a child-index mix
    k = _mix64_int(_mix64_int(int(seed) & _MASK) ^ 0x6A09E667F3BCC909)
    for i in indices:
        k = k ^ _mix64_int(int(i) * 0x9E3779B97F4A7C15 + 1)
        k = _mix64_int(k)
    return np.uint64(k)


# vectorised twins -----------------------------------------------------------


def mix64_np(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def child_keys_np(key, indices):
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_np(np.uint64(key) ^ mix64_np(idx * _GOLDEN + _ONE))


def uniforms_np(keys, counters):
    """Array of uniforms, shape keys.shape + counters.shape."""
    keys = np.asarray(keys, dtype=np.uint64)[..., None]
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = mix64_np(keys + (c + _ONE) * _GOLDEN)
    return ((x >> _S11).astype(np.float64) + 1.0) * _INV53


def complex_normals_np(keys, j_start, count, std=1.0):
    """Complex Gaussians j_start..j_start+count-1 for each key, shape (len(keys), count)."""
    j = np.arange(j_start, j_start + count, dtype=np.uint64)
    u = uniforms_np(keys, np.stack([2 * j, 2 * j + _ONE], axis=-1).ravel())
    u = u.reshape(u.shape[:-1] + (count, 2))
    r = std * np.sqrt(-np.log(u[..., 0]))
    a = _TWO_PI * u[..., 1]
    return r * np.cos(a) + 1j * (r * np.sin(a))


class Stream:
    """Sequential view of a counter-based stream, for one-off draws outside the engine."""

    def __init__(self, seed, *indices):
        self.key = derive_key(seed, *indices)
        self._next = 0

    def complex_normal(self, n, std=1.0):
        out = complex_normals_np(np.array([self.key]), self._next, n, std)[0]
        self._next += n
        return out

    def uniform(self, n):
        # uniforms share the counter space with normals, two counters per slot
        c = np.arange(2 * self._next, 2 * self._next + n, dtype=np.uint64)
        self._next += (n + 1) // 2
        return uniforms_np(np.array([self.key]), c)[0]

    def spawn(self, index):
        child = Stream.__new__(Stream)
        child.key = child_keys_np(self.key, [index])[0]
        child._next = 0
        return child
