"""Beamforming codebook, scene-to-channel model, and the exhaustive-search
optimal-beam label.

The codebook is N unit-norm steering vectors of a half-wavelength ULA at
azimuths uniformly spaced in sin-angle across the field of view. Measured
codebooks can be loaded from file instead (save_codebook/load_codebook).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .config import CommConfig
from .errors import ConfigError, DataError, FormatError
from .simulate import STREAM_CHANNEL, Scene, scene_stream

_CODEBOOK_MAGIC = b"RBCODEB1"


@dataclass
class BeamCodebook:
    weights: np.ndarray  # (N, M_A) complex128, unit-norm rows
    fov_deg: float
    kind: str = "oversampled-steering"

    @property
    def n_beams(self) -> int:
        return self.weights.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.weights.shape[1]


@dataclass
class ChannelState:
    """Multipath narrowband channel: per-path complex gain and angles.
    Elevation is carried for completeness but the ULA ignores it."""

    gains: np.ndarray  # (P,) complex
    azimuths_deg: np.ndarray  # (P,)
    elevations_deg: np.ndarray = field(default=None)
    comm_tx_gain: float = 1.0

    def __post_init__(self):
        self.gains = np.atleast_1d(np.asarray(self.gains, dtype=np.complex128))
        self.azimuths_deg = np.atleast_1d(np.asarray(self.azimuths_deg, dtype=np.float64))
        if self.elevations_deg is None:
            self.elevations_deg = np.zeros_like(self.azimuths_deg)
        self.elevations_deg = np.atleast_1d(np.asarray(self.elevations_deg, dtype=np.float64))
        if not (len(self.gains) == len(self.azimuths_deg) == len(self.elevations_deg)):
            raise DataError("channel path arrays must have equal length")
        if len(self.gains) < 1:
            raise DataError("channel must have at least one path")
        if not np.all(np.isfinite(self.gains)):
            raise DataError("channel gains must be finite")


def steering_vector(azimuth_deg, n_antennas: int) -> np.ndarray:
    """Unnormalized half-wavelength ULA response; vectorized over azimuths.
    Returns (..., n_antennas)."""
    az = np.radians(np.asarray(azimuth_deg, dtype=np.float64))
    m = np.arange(n_antennas)
    return np.exp(1j * np.pi * np.sin(az)[..., None] * m)


def build_codebook(n_beams: int = 64, n_antennas: int = 16, fov_deg: float = 60.0) -> BeamCodebook:
    """Oversampled steering codebook: beams at n_beams sin-uniform azimuths
    spanning [-fov_deg, +fov_deg], each row normalized to unit norm."""
    if n_beams < 1:
        raise ConfigError(f"n_beams must be >= 1, got {n_beams}")
    if n_beams < n_antennas:
        raise ConfigError(f"oversampled codebook needs n_beams >= n_antennas ({n_beams} < {n_antennas})")
    if not 0 < fov_deg <= 90:
        raise ConfigError("fov_deg must be in (0, 90]")
    sin_grid = np.linspace(-math.sin(math.radians(fov_deg)), math.sin(math.radians(fov_deg)), n_beams)
    m = np.arange(n_antennas)
    weights = np.exp(1j * np.pi * sin_grid[:, None] * m) / math.sqrt(n_antennas)
    return BeamCodebook(weights=weights, fov_deg=fov_deg)


def channel_from_scene(scene: Scene, comm: CommConfig) -> ChannelState:
    """Single LOS path at the user's azimuth with |gain| = ref_range/d and a
    phase drawn from the scene seed; optional weaker NLOS paths at random
    azimuths for robustness experiments."""
    user = scene.user
    if user is None:
        raise DataError("scene has no user target; cannot build a channel")
    rng = scene_stream(scene.seed, STREAM_CHANNEL)
    los_gain = (comm.ref_range_m / user.range_m) * np.exp(2j * np.pi * rng.uniform())
    gains = [los_gain]
    azimuths = [user.azimuth_deg]
    for _ in range(comm.nlos_paths):
        rel_amp = math.sqrt(comm.nlos_rel_power)
        gains.append(abs(los_gain) * rel_amp * np.exp(2j * np.pi * rng.uniform()))
        azimuths.append(rng.uniform(-comm.fov_deg, comm.fov_deg))
    return ChannelState(
        gains=np.array(gains),
        azimuths_deg=np.array(azimuths),
        comm_tx_gain=comm.tx_gain,
    )


def channel_vector(channel: ChannelState, n_antennas: int) -> np.ndarray:
    """h = sum_p alpha_p * a(phi_p) over the ULA (elevation ignored)."""
    steer = steering_vector(channel.azimuths_deg, n_antennas)  # (P, M_A)
    return (channel.gains[:, None] * steer).sum(axis=0)


def optimal_beam(channel: ChannelState, codebook: BeamCodebook) -> tuple[int, np.ndarray]:
    """Receive power per beam |h^H f_n|^2 and the argmax index (exhaustive
    search; ties to the lowest index via argmax)."""
    h = channel_vector(channel, codebook.n_antennas)
    proj = codebook.weights @ np.conj(h)
    powers = np.abs(proj) ** 2
    return int(np.argmax(powers)), powers


def save_codebook(codebook: BeamCodebook, path) -> None:
    """16-byte header (magic, uint32 N, uint32 M_A) then N x M_A complex64
    little-endian row-major."""
    header = _CODEBOOK_MAGIC + struct.pack("<II", codebook.n_beams, codebook.n_antennas)
    body = codebook.weights.astype("<c8").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


def load_codebook(path, fov_deg: float = 60.0) -> BeamCodebook:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16 or raw[:8] != _CODEBOOK_MAGIC:
        raise FormatError(f"{path}: not a codebook file (bad magic)")
    n, m_a = struct.unpack("<II", raw[8:16])
    expected = 16 + n * m_a * 8
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for {n}x{m_a} codebook, got {len(raw)}")
    weights = np.frombuffer(raw[16:], dtype="<c8").reshape(n, m_a).astype(np.complex128)
    return BeamCodebook(weights=weights, fov_deg=fov_deg, kind="imported")
