"""Feature extraction from raw IF cubes: range-angle maps, range-velocity
maps, and the full radar cube, plus per-sample standardization and
preprocessing cost estimates.

Conventions frozen here (and relied on by the dataset format and trained
models): the Doppler axis is FFT-shifted so zero velocity is centered, the
angle axis is FFT-shifted so boresight is centered, the range axis is not
shifted. Maps are magnitudes, not powers. No window function is applied.
Clutter removal (range-angle pipeline only) subtracts the across-chirp mean
of the complex range-FFT data per antenna and range bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import RadarConfig
from .errors import ConfigError, DataError
from .simulate import RadarFrame

KIND_RA = "ra"
KIND_RV = "rv"
KIND_RC = "rc"

# dataset/CLI tokens for concrete map configurations
TOKENS = ("ra4", "ra64", "rv", "rc")


@dataclass
class FeatureMap:
    """kind 'ra': data (S, M_F); 'rv': (S, A); 'rc': (M_r, S, A) with the
    antenna axis transformed to M_F = M_r angle bins."""

    kind: str
    data: np.ndarray
    angle_fft_size: int | None = None
    standardized: bool = False

    def __post_init__(self):
        if self.kind not in (KIND_RA, KIND_RV, KIND_RC):
            raise DataError(f"unknown feature map kind {self.kind!r}")
        if not np.all(np.isfinite(self.data)):
            raise DataError("feature map contains non-finite entries")

    @property
    def token(self) -> str:
        if self.kind == KIND_RA:
            return f"ra{self.angle_fft_size}"
        return self.kind


def _check_frame(frame: RadarFrame) -> np.ndarray:
    x = np.asarray(frame.data)
    if x.ndim != 3:
        raise DataError(f"expected a 3D cube, got shape {x.shape}")
    return x


def range_angle_map(frame: RadarFrame, angle_fft_size: int, clutter_removal: bool = False) -> FeatureMap:
    """Range FFT along fast time, optional clutter removal, zero-padded angle
    FFT across antennas, magnitudes summed over chirps. Output (S, M_F) with
    boresight at column M_F//2."""
    x = _check_frame(frame)
    m_r = x.shape[0]
    if angle_fft_size < m_r:
        raise ConfigError(f"angle_fft_size {angle_fft_size} < rx antenna count {m_r}")
    rng_fft = np.fft.fft(x, axis=1)
    if clutter_removal:
        rng_fft = rng_fft - rng_fft.mean(axis=2, keepdims=True)
    ang = np.fft.fftshift(np.fft.fft(rng_fft, n=angle_fft_size, axis=0), axes=0)
    ra = np.abs(ang).sum(axis=2).T  # (S, M_F)
    return FeatureMap(KIND_RA, ra, angle_fft_size=angle_fft_size)


def range_velocity_map(frame: RadarFrame) -> FeatureMap:
    """2D FFT over (fast time, chirps) per antenna, magnitudes summed over
    antennas. Output (S, A) with zero Doppler at column A//2."""
    x = _check_frame(frame)
    rv = np.fft.fftshift(np.fft.fft2(x, axes=(1, 2)), axes=2)
    return FeatureMap(KIND_RV, np.abs(rv).sum(axis=0))


def radar_cube(frame: RadarFrame) -> FeatureMap:
    """Magnitude of the 3D FFT with an M_F = M_r point angle FFT.
    Output (M_r, S, A): angle x range x Doppler, angle and Doppler centered."""
    x = _check_frame(frame)
    rc = np.fft.fftn(x, axes=(0, 1, 2))
    rc = np.fft.fftshift(rc, axes=(0, 2))
    return FeatureMap(KIND_RC, np.abs(rc), angle_fft_size=x.shape[0])


def standardize(fmap: FeatureMap, eps: float = 1e-8) -> FeatureMap:
    """Per-sample z-score over the whole map. A constant map standardizes to
    all zeros via the eps guard; re-standardizing is a numerical no-op."""
    data = fmap.data.astype(np.float64)
    centered = data - data.mean()
    std = data.std()
    out = centered / (std + eps)
    return replace(fmap, data=out.astype(fmap.data.dtype, copy=False), standardized=True)


def preprocessing_cost(token: str, config: RadarConfig) -> dict[str, float]:
    """Asymptotic FFT operation counts and network input sizes, instantiated
    with the config's constants (logs base 2)."""
    m_r = config.rx_antennas
    s = config.samples_per_chirp
    a = config.chirps_per_frame
    log2 = math.log2
    if token == "rc":
        flops = m_r * s * a * (log2(s) + log2(a) + log2(m_r))
        size = m_r * s * a
    elif token.startswith("ra"):
        try:
            m_f = int(token[2:])
        except ValueError:
            raise ConfigError(f"unknown preprocessing kind {token!r}") from None
        if m_f < m_r:
            raise ConfigError(f"angle_fft_size {m_f} < rx antenna count {m_r}")
        flops = m_r * s * a * log2(s) + m_f * s * a * log2(m_f)
        size = m_f * s
    elif token == "rv":
        flops = m_r * s * a * (log2(s) + log2(a))
        size = s * a
    else:
        raise ConfigError(f"unknown preprocessing kind {token!r}")
    return {"flop_estimate": flops, "input_size": size}


def compute_map(frame: RadarFrame, token: str, clutter_removal: bool = False) -> FeatureMap:
    """Dispatch on a dataset/CLI token: ra4, ra64, rv, rc."""
    if token == "rv":
        return range_velocity_map(frame)
    if token == "rc":
        return radar_cube(frame)
    if token.startswith("ra"):
        try:
            m_f = int(token[2:])
        except ValueError:
            raise ConfigError(f"unknown feature kind {token!r}") from None
        return range_angle_map(frame, m_f, clutter_removal=clutter_removal)
    raise ConfigError(f"unknown feature kind {token!r}")


def expected_bins(config: RadarConfig, range_m: float, velocity_mps: float,
                  azimuth_deg: float, angle_fft_size: int) -> tuple[int, int, int]:
    """Nearest (range, doppler, angle) bin for a point target under the
    conventions above. Used by placement tests and the LUT discussion."""
    f_if = config.chirp_slope_hz_per_s * 2.0 * range_m / 299792458.0
    r_bin = int(round(f_if / config.adc_rate_hz * config.samples_per_chirp))
    a = config.chirps_per_frame
    dopp_cycles = 2.0 * velocity_mps * config.chirp_repetition_s / config.wavelength_m
    d_bin = a // 2 + int(round(dopp_cycles * a))
    ang_cycles = config.rx_spacing_wavelengths * math.sin(math.radians(azimuth_deg))
    g_bin = angle_fft_size // 2 + int(round(ang_cycles * angle_fft_size))
    return r_bin, d_bin, g_bin
