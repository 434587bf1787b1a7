"""Radar-aided mmWave beam prediction toolkit.

Synthesizes FMCW radar frames from parametric drive-by scenes, turns them
into range-angle / range-velocity / radar-cube features, labels each frame
with the optimal codebook beam via exhaustive search, and trains/evaluates
CNN classifiers and a lookup-table baseline for top-K beam prediction.
"""

from .config import CommConfig, RadarConfig, ScenarioConfig
from .errors import ConfigError, DataError, FormatError, RadarBeamError

__version__ = "0.1.0"

__all__ = [
    "CommConfig",
    "ConfigError",
    "DataError",
    "FormatError",
    "RadarBeamError",
    "RadarConfig",
    "ScenarioConfig",
    "__version__",
]
