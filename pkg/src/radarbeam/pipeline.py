"""End-to-end synthesis: scenes -> raw frames -> feature maps -> beam labels.

Per-scene work is pure and seeded, so it can run on a thread pool without
changing results; map() preserves sample order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .beams import BeamCodebook, build_codebook, channel_from_scene, optimal_beam
from .config import CommConfig, RadarConfig, ScenarioConfig, config_to_kv
from .dsp import TOKENS, compute_map
from .errors import ConfigError
from .simulate import STREAM_NOISE, Scene, generate_scenario, scene_stream, synthesize_frame, user_metadata

_MAP_DTYPE = np.float32


def validate_tokens(tokens) -> list[str]:
    tokens = list(tokens)
    for t in tokens:
        if t not in TOKENS:
            raise ConfigError(f"unknown feature kind {t!r}; choose from {TOKENS}")
    return tokens


def synthesize_sample(radar: RadarConfig, scene: Scene, codebook: BeamCodebook,
                      comm: CommConfig, kinds: list[str], clutter_removal: bool,
                      keep_raw: bool) -> dict:
    """One scene's frame, feature maps, and optimal-beam label."""
    frame = synthesize_frame(radar, scene, scene_stream(scene.seed, STREAM_NOISE))
    out: dict = {}
    for token in kinds:
        fmap = compute_map(frame, token, clutter_removal=clutter_removal)
        out[token] = fmap.data.astype(_MAP_DTYPE)
    label, _ = optimal_beam(channel_from_scene(scene, comm), codebook)
    out["label"] = np.int32(label)
    if keep_raw:
        out["raw"] = frame.data.astype(np.complex64)
    return out


def build_labeled_fields(scenario: ScenarioConfig, radar: RadarConfig, comm: CommConfig,
                         n_samples: int, seed: int, kinds=(), clutter_removal: bool = False,
                         keep_raw: bool = False, threads: int = 1) -> dict[str, np.ndarray]:
    """Generate a labeled dataset as stacked arrays keyed by field name
    ('raw', feature tokens, 'label', and scene metadata)."""
    kinds = validate_tokens(kinds)
    scenes = generate_scenario(scenario, n_samples, np.random.default_rng(seed), radar)
    codebook = build_codebook(comm.n_beams, comm.n_antennas, comm.fov_deg)

    def work(scene: Scene) -> dict:
        return synthesize_sample(radar, scene, codebook, comm, kinds, clutter_removal, keep_raw)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(work, scenes))
    else:
        samples = [work(s) for s in scenes]

    fields: dict[str, np.ndarray] = {}
    if keep_raw:
        fields["raw"] = np.stack([s["raw"] for s in samples])
    for token in kinds:
        fields[token] = np.stack([s[token] for s in samples])
    fields["label"] = np.array([s["label"] for s in samples], dtype=np.int32)
    fields.update(user_metadata(scenes))
    return fields


def snapshot_kv(scenario: ScenarioConfig, radar: RadarConfig, comm: CommConfig,
                extra: dict[str, str] | None = None) -> dict[str, str]:
    """Flat provenance strings for the dataset manifest / run snapshot."""
    out: dict[str, str] = {}
    for cfg in (radar, scenario, comm):
        out.update(config_to_kv(cfg))
    if extra:
        out.update(extra)
    return out
