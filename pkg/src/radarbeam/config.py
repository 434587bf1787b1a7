"""Configuration objects and the plain-text key/value config file format.

Config files are lines of ``key = value``; ``#`` starts a comment. Keys are
namespaced with dots (``radar.bandwidth_hz``, ``scenario.clutter_count``,
``comm.n_beams``). Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

from .errors import ConfigError

SPEED_OF_LIGHT = 299792458.0


@dataclass
class RadarConfig:
    """FMCW radar parameters.

    Defaults follow the TI short-range-radar style setup: 77 GHz carrier,
    750 MHz bandwidth, 15 MHz/us slope, 256 samples x 128 chirps x 4 RX
    antennas (half-wavelength ULA, single active TX). The ADC rate of
    4.5 MHz puts the maximum unambiguous range at ~45 m and the default
    chirp repetition interval puts the maximum unambiguous speed at
    56 km/h. The ADC window S/f_s (56.9 us) is used as the effective chirp
    sampling span; it may exceed the idealized ramp time B/mu (50 us), which
    is why the S/f_s <= T_c check only applies when chirp_duration_s is
    given explicitly.
    """

    carrier_freq_hz: float = 77e9
    bandwidth_hz: float = 750e6
    chirp_slope_hz_per_s: float = 15e12
    samples_per_chirp: int = 256
    chirps_per_frame: int = 128
    rx_antennas: int = 4
    chirp_repetition_s: float = 6.2573e-5
    adc_rate_hz: float = 4.5e6
    rx_spacing_wavelengths: float = 0.5
    noise_power: float = 0.0
    tx_gain: float = 1.0
    chirp_duration_s: float | None = None

    def __post_init__(self):
        positive = [
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("chirp_slope_hz_per_s", self.chirp_slope_hz_per_s),
            ("samples_per_chirp", self.samples_per_chirp),
            ("chirps_per_frame", self.chirps_per_frame),
            ("rx_antennas", self.rx_antennas),
            ("chirp_repetition_s", self.chirp_repetition_s),
            ("adc_rate_hz", self.adc_rate_hz),
            ("rx_spacing_wavelengths", self.rx_spacing_wavelengths),
            ("tx_gain", self.tx_gain),
        ]
        for name, value in positive:
            if value <= 0:
                raise ConfigError(f"radar.{name} must be positive, got {value}")
        if self.noise_power < 0:
            raise ConfigError(f"radar.noise_power must be >= 0, got {self.noise_power}")
        adc_window = self.samples_per_chirp / self.adc_rate_hz
        if self.chirp_duration_s is not None:
            implied = self.bandwidth_hz / self.chirp_duration_s
            if abs(implied - self.chirp_slope_hz_per_s) > 1e-9 * self.chirp_slope_hz_per_s:
                raise ConfigError(
                    "chirp_slope_hz_per_s inconsistent with bandwidth_hz/chirp_duration_s: "
                    f"{self.chirp_slope_hz_per_s} vs {implied}"
                )
            if adc_window > self.chirp_duration_s:
                raise ConfigError(
                    f"ADC window S/f_s = {adc_window:.3e}s exceeds chirp duration "
                    f"{self.chirp_duration_s:.3e}s"
                )
        if adc_window > self.chirp_repetition_s:
            raise ConfigError(
                f"ADC window S/f_s = {adc_window:.3e}s exceeds chirp repetition interval "
                f"{self.chirp_repetition_s:.3e}s"
            )

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq_hz

    @property
    def chirp_duration_effective_s(self) -> float:
        """Ramp time: explicit if given, else derived as B/mu."""
        if self.chirp_duration_s is not None:
            return self.chirp_duration_s
        return self.bandwidth_hz / self.chirp_slope_hz_per_s


@dataclass
class ScenarioConfig:
    """Synthetic drive-by scenario: a user vehicle crosses the field of view
    left to right on a straight lane, with optional static clutter and moving
    distractor targets re-drawn per frame.

    One pass spans azimuths [-azimuth_span_deg, +azimuth_span_deg] over
    frames_per_pass frames; datasets longer than one pass chain passes with
    independently drawn lane offset and speed per pass.
    """

    frames_per_pass: int = 100
    azimuth_span_deg: float = 50.0
    lane_offset_min_m: float = 8.0
    lane_offset_max_m: float = 20.0
    speed_min_mps: float = 8.0
    speed_max_mps: float = 14.0
    user_rcs_min: float = 0.8
    user_rcs_max: float = 1.2
    clutter_count: int = 0
    clutter_range_min_m: float = 3.0
    clutter_range_max_m: float = 42.0
    clutter_rcs_min: float = 0.1
    clutter_rcs_max: float = 1.0
    distractor_count: int = 0
    distractor_speed_max_mps: float = 12.0
    position_jitter: float = 0.3
    reflect_ref_range_m: float = 10.0

    def __post_init__(self):
        if self.frames_per_pass < 1:
            raise ConfigError("scenario.frames_per_pass must be >= 1")
        if not 0 < self.azimuth_span_deg < 90:
            raise ConfigError("scenario.azimuth_span_deg must be in (0, 90)")
        bounds = [
            ("lane_offset", self.lane_offset_min_m, self.lane_offset_max_m),
            ("speed", self.speed_min_mps, self.speed_max_mps),
            ("user_rcs", self.user_rcs_min, self.user_rcs_max),
            ("clutter_rcs", self.clutter_rcs_min, self.clutter_rcs_max),
        ]
        for name, lo, hi in bounds:
            if not 0 < lo <= hi:
                raise ConfigError(f"scenario.{name} bounds invalid: [{lo}, {hi}]")
        if self.clutter_count < 0 or self.distractor_count < 0:
            raise ConfigError("scenario target counts must be >= 0")
        if not 0 < self.clutter_range_min_m <= self.clutter_range_max_m:
            raise ConfigError("scenario.clutter_range bounds invalid")
        if not 0 <= self.position_jitter < 0.5:
            raise ConfigError("scenario.position_jitter must be in [0, 0.5)")
        if self.reflect_ref_range_m <= 0:
            raise ConfigError("scenario.reflect_ref_range_m must be positive")


@dataclass
class CommConfig:
    """Communication side: codebook geometry and the scene-to-channel model."""

    n_beams: int = 64
    n_antennas: int = 16
    fov_deg: float = 60.0
    tx_gain: float = 1.0
    ref_range_m: float = 10.0
    nlos_paths: int = 0
    nlos_rel_power: float = 0.1

    def __post_init__(self):
        if self.n_beams < 1:
            raise ConfigError("comm.n_beams must be >= 1")
        if self.n_antennas < 1:
            raise ConfigError("comm.n_antennas must be >= 1")
        if not 0 < self.fov_deg <= 90:
            raise ConfigError("comm.fov_deg must be in (0, 90]")
        if self.nlos_paths < 0:
            raise ConfigError("comm.nlos_paths must be >= 0")
        if self.nlos_rel_power < 0:
            raise ConfigError("comm.nlos_rel_power must be >= 0")


_SECTIONS = {"radar": RadarConfig, "scenario": ScenarioConfig, "comm": CommConfig}


def _parse_value(field_type, raw: str, key: str):
    raw = raw.strip()
    if field_type == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected int, got {raw!r}") from None
    if field_type in ("float", "float | None"):
        if field_type.endswith("None") and raw.lower() in ("none", ""):
            return None
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected float, got {raw!r}") from None
    raise ConfigError(f"{key}: unsupported field type {field_type}")


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' comments and blank lines ignored."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def configs_from_kv(kv: dict[str, str]) -> dict[str, object]:
    """Build {'radar': RadarConfig, 'scenario': ScenarioConfig, 'comm': CommConfig}
    from namespaced key/value pairs. Missing keys take defaults; unknown keys
    raise ConfigError.
    """
    overrides: dict[str, dict[str, object]] = {name: {} for name in _SECTIONS}
    for key, raw in kv.items():
        if "." not in key:
            raise ConfigError(f"config key {key!r} is missing a section prefix")
        section, field_name = key.split(".", 1)
        cls = _SECTIONS.get(section)
        if cls is None:
            raise ConfigError(f"unknown config section {section!r} in key {key!r}")
        by_name = {f.name: f for f in fields(cls)}
        if field_name not in by_name:
            raise ConfigError(f"unknown config key {key!r}")
        overrides[section][field_name] = _parse_value(str(by_name[field_name].type), raw, key)
    return {name: cls(**overrides[name]) for name, cls in _SECTIONS.items()}


def load_config_file(path) -> dict[str, object]:
    with open(path, "r", encoding="utf-8") as fh:
        return configs_from_kv(parse_kv_text(fh.read()))


def config_to_kv(cfg) -> dict[str, str]:
    """Flatten one of the config dataclasses to namespaced key/value strings."""
    section = {RadarConfig: "radar", ScenarioConfig: "scenario", CommConfig: "comm"}[type(cfg)]
    out = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        out[f"{section}.{f.name}"] = "none" if value is None else repr(value)
    return out


def dump_configs(cfgs: dict[str, object]) -> str:
    """Render configs back to the file format (used for run snapshots)."""
    lines = []
    for name in ("radar", "scenario", "comm"):
        if name in cfgs:
            for key, value in config_to_kv(cfgs[name]).items():
                lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def replace(cfg, **kwargs):
    """dataclasses.replace that reruns validation."""
    return dataclasses.replace(cfg, **kwargs)
