"""Energy detection for single-stream transmission to large receive arrays.

Submodules: special (probability kernels), constellation, channel,
detector (thresholds and decisions), ser (analytic error rates),
optimizer, montecarlo, and the scenario/CLI layer (config, presets,
experiments, cli).
"""

from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"
