"""Exception types shared across the package.

The CLI maps these onto distinct exit codes (config=2, data=3, internal=4).
"""


class RadarBeamError(Exception):
    """Base class for all radarbeam errors."""


class ConfigError(RadarBeamError):
    """Invalid configuration values (physics, ranges, inconsistent settings)."""


class DataError(RadarBeamError):
    """Invalid data contents: bad shapes, out-of-range labels, contract violations."""


class FormatError(DataError):
    """On-disk format problems: bad magic, truncated files, version mismatches."""
