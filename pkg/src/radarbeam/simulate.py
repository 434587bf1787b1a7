"""FMCW frame synthesis and parametric drive-by scene generation.

A frame is the complex IF measurement cube of shape (rx_antennas,
samples_per_chirp, chirps_per_frame). Each point reflector contributes a
separable phase ramp along the three axes:

  fast time : 2*pi * f_if * s / f_s          with f_if = 2*d*mu/c
  antennas  : 2*pi * (d_rx/lambda) * sin(az) * m
  chirps    : 4*pi * v * T_rep / lambda * a  (positive v = receding)

plus a constant per-target phase 2*pi*f_c*tau - pi*mu*tau^2 (residual video
phase). Range migration within one frame is neglected (stop-and-hop).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import SPEED_OF_LIGHT, RadarConfig, ScenarioConfig
from .errors import ConfigError, DataError

# spawn keys for per-scene derived RNG streams
STREAM_NOISE = 0
STREAM_CHANNEL = 1


@dataclass
class RadarLimits:
    range_resolution_m: float
    r_max_m: float
    v_max_mps: float
    velocity_resolution_mps: float


@dataclass
class Target:
    """Point reflector. reflectivity is the linear round-trip amplitude
    (sqrt of the reflected energy); is_clutter marks static environment
    reflectors and forces radial_velocity_mps to 0."""

    range_m: float
    radial_velocity_mps: float
    azimuth_deg: float
    reflectivity: float
    is_clutter: bool = False

    def __post_init__(self):
        if self.is_clutter:
            self.radial_velocity_mps = 0.0
        if self.range_m <= 0:
            raise DataError(f"target range must be positive, got {self.range_m}")
        if self.reflectivity < 0:
            raise DataError("target reflectivity must be >= 0")


@dataclass
class Scene:
    """One frame's worth of reflectors. targets[0] is the communication user
    when present; clutter and distractors follow."""

    targets: list[Target] = field(default_factory=list)
    seed: int = 0
    timestamp_index: int = 0

    @property
    def user(self) -> Target | None:
        return self.targets[0] if self.targets else None


@dataclass
class RadarFrame:
    data: np.ndarray  # complex128, (M_r, S, A)
    config: RadarConfig
    scene: Scene

    def __post_init__(self):
        expected = (
            self.config.rx_antennas,
            self.config.samples_per_chirp,
            self.config.chirps_per_frame,
        )
        if self.data.shape != expected:
            raise DataError(f"frame shape {self.data.shape} != expected {expected}")


def scene_stream(seed: int, purpose: int) -> np.random.Generator:
    """Deterministic per-scene RNG stream, disjoint across purposes."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(purpose,)))


def derive_radar_limits(config: RadarConfig) -> RadarLimits:
    """Resolution and unambiguous limits implied by the radar parameters.

    range_resolution = c/(2B); r_max = f_s*c/(2*mu); v_max = lambda/(4*T_rep);
    v_res = 2*v_max/A.
    """
    r_res = SPEED_OF_LIGHT / (2.0 * config.bandwidth_hz)
    r_max = config.adc_rate_hz * SPEED_OF_LIGHT / (2.0 * config.chirp_slope_hz_per_s)
    v_max = config.wavelength_m / (4.0 * config.chirp_repetition_s)
    v_res = 2.0 * v_max / config.chirps_per_frame
    return RadarLimits(r_res, r_max, v_max, v_res)


def _validate_targets(config: RadarConfig, scene: Scene, limits: RadarLimits):
    for i, t in enumerate(scene.targets):
        if t.range_m >= limits.r_max_m:
            raise DataError(
                f"target {i} at {t.range_m:.2f} m is beyond the unambiguous range "
                f"{limits.r_max_m:.2f} m (would alias)"
            )
        if abs(t.radial_velocity_mps) >= limits.v_max_mps:
            raise DataError(
                f"target {i} at {t.radial_velocity_mps:.2f} m/s exceeds the unambiguous "
                f"speed {limits.v_max_mps:.2f} m/s (would alias)"
            )


def synthesize_frame(config: RadarConfig, scene: Scene, rng: np.random.Generator) -> RadarFrame:
    """Build the raw IF cube for one scene. rng supplies the additive noise;
    pass scene_stream(scene.seed, STREAM_NOISE) for reproducible pipelines."""
    limits = derive_radar_limits(config)
    _validate_targets(config, scene, limits)

    m_r = config.rx_antennas
    s = config.samples_per_chirp
    a = config.chirps_per_frame
    lam = config.wavelength_m
    m_idx = np.arange(m_r)
    s_idx = np.arange(s)
    a_idx = np.arange(a)

    cube = np.zeros((m_r, s, a), dtype=np.complex128)
    for t in scene.targets:
        tau = 2.0 * t.range_m / SPEED_OF_LIGHT
        f_if = config.chirp_slope_hz_per_s * tau
        theta = math.radians(t.azimuth_deg)
        const_phase = (
            2.0 * math.pi * config.carrier_freq_hz * tau
            - math.pi * config.chirp_slope_hz_per_s * tau * tau
        )
        amp = config.tx_gain * t.reflectivity * np.exp(1j * const_phase)
        # separable phase ramps: one small exp per axis, then an outer product
        fast = np.exp(2j * np.pi * f_if / config.adc_rate_hz * s_idx)
        ant = np.exp(2j * np.pi * config.rx_spacing_wavelengths * math.sin(theta) * m_idx)
        dopp = np.exp(
            1j * (4.0 * np.pi * t.radial_velocity_mps * config.chirp_repetition_s / lam) * a_idx
        )
        cube += amp * ant[:, None, None] * fast[None, :, None] * dopp[None, None, :]

    if config.noise_power > 0:
        sigma = math.sqrt(config.noise_power / 2.0)
        cube += sigma * (rng.standard_normal(cube.shape) + 1j * rng.standard_normal(cube.shape))

    return RadarFrame(cube, config, scene)


def reflect_amplitude(range_m: float, rcs: float, ref_range_m: float) -> float:
    """Two-way path loss folded into amplitude: sqrt(E_r) = rcs*(d_ref/d)^2."""
    return rcs * (ref_range_m / range_m) ** 2


def generate_scenario(
    config: ScenarioConfig,
    n_samples: int,
    rng: np.random.Generator,
    radar_config: RadarConfig | None = None,
) -> list[Scene]:
    """Drive-by scene sequence: the user crosses the field of view left to
    right along a lane parallel to the array, lane offset and speed re-drawn
    per pass; azimuth is monotone within a pass. Clutter (static) and
    distractor (moving) targets are re-drawn every frame.
    """
    if n_samples <= 0:
        raise ConfigError(f"n_samples must be positive, got {n_samples}")
    radar = radar_config if radar_config is not None else RadarConfig()
    limits = derive_radar_limits(radar)

    az_span = math.radians(config.azimuth_span_deg)
    worst_range = config.lane_offset_max_m / math.cos(az_span)
    if worst_range >= limits.r_max_m:
        raise ConfigError(
            f"trajectory reaches {worst_range:.1f} m, beyond the unambiguous range "
            f"{limits.r_max_m:.1f} m; shrink lane offset or azimuth span"
        )
    if config.clutter_range_max_m >= limits.r_max_m:
        raise ConfigError("clutter_range_max_m is beyond the unambiguous range")
    if config.speed_max_mps >= limits.v_max_mps:
        raise ConfigError(
            f"user speed {config.speed_max_mps} m/s can exceed the unambiguous "
            f"speed {limits.v_max_mps:.2f} m/s"
        )
    if config.distractor_count > 0 and config.distractor_speed_max_mps >= limits.v_max_mps:
        raise ConfigError("distractor speed bound exceeds the unambiguous speed")

    seeds = np.random.SeedSequence(entropy=rng.integers(0, 2**63)).generate_state(
        n_samples, dtype=np.uint64
    )
    scenes: list[Scene] = []
    frame_in_pass = config.frames_per_pass
    lane_y = speed = 0.0
    rcs_user = 1.0
    x_edge = 0.0
    for i in range(n_samples):
        if frame_in_pass >= config.frames_per_pass:
            frame_in_pass = 0
            lane_y = rng.uniform(config.lane_offset_min_m, config.lane_offset_max_m)
            speed = rng.uniform(config.speed_min_mps, config.speed_max_mps)
            rcs_user = rng.uniform(config.user_rcs_min, config.user_rcs_max)
            x_edge = lane_y * math.tan(az_span)
        step = 2.0 * x_edge / config.frames_per_pass
        jitter = rng.uniform(-config.position_jitter, config.position_jitter)
        x = -x_edge + (frame_in_pass + 0.5 + jitter) * step
        frame_in_pass += 1

        d = math.hypot(x, lane_y)
        sin_az = x / d
        v_radial = speed * sin_az  # receding once past boresight
        user = Target(
            range_m=d,
            radial_velocity_mps=v_radial,
            azimuth_deg=math.degrees(math.asin(sin_az)),
            reflectivity=reflect_amplitude(d, rcs_user, config.reflect_ref_range_m),
        )
        targets = [user]
        for _ in range(config.clutter_count):
            cd = rng.uniform(config.clutter_range_min_m, config.clutter_range_max_m)
            targets.append(
                Target(
                    range_m=cd,
                    radial_velocity_mps=0.0,
                    azimuth_deg=rng.uniform(-config.azimuth_span_deg, config.azimuth_span_deg),
                    reflectivity=reflect_amplitude(
                        cd,
                        rng.uniform(config.clutter_rcs_min, config.clutter_rcs_max),
                        config.reflect_ref_range_m,
                    ),
                    is_clutter=True,
                )
            )
        for _ in range(config.distractor_count):
            dd = rng.uniform(config.clutter_range_min_m, config.clutter_range_max_m)
            dv = rng.uniform(-config.distractor_speed_max_mps, config.distractor_speed_max_mps)
            targets.append(
                Target(
                    range_m=dd,
                    radial_velocity_mps=dv,
                    azimuth_deg=rng.uniform(-config.azimuth_span_deg, config.azimuth_span_deg),
                    reflectivity=reflect_amplitude(
                        dd,
                        rng.uniform(config.clutter_rcs_min, config.clutter_rcs_max),
                        config.reflect_ref_range_m,
                    ),
                )
            )
        scenes.append(Scene(targets=targets, seed=int(seeds[i]), timestamp_index=i))
    return scenes


def user_metadata(scenes: list[Scene]) -> dict[str, np.ndarray]:
    """Per-scene ground-truth arrays for dataset metadata."""
    n = len(scenes)
    out = {
        "user_range_m": np.zeros(n),
        "user_velocity_mps": np.zeros(n),
        "user_azimuth_deg": np.zeros(n),
        "n_targets": np.zeros(n, dtype=np.int32),
        "scene_seed": np.zeros(n, dtype=np.uint64),
    }
    for i, sc in enumerate(scenes):
        if sc.user is None:
            raise DataError(f"scene {i} has no user target")
        out["user_range_m"][i] = sc.user.range_m
        out["user_velocity_mps"][i] = sc.user.radial_velocity_mps
        out["user_azimuth_deg"][i] = sc.user.azimuth_deg
        out["n_targets"][i] = len(sc.targets)
        out["scene_seed"][i] = sc.seed
    return out
