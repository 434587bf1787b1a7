"""Top-K accuracy, multi-seed experiment orchestration, and micro-benchmarks.

Reports are plot-ready tables emitted as CSV and line-delimited JSON. Wall
clock numbers are medians over repeated single-sample runs and are only
meaningful as relative orderings on one machine.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .config import RadarConfig
from .dataset import Dataset, subset_training
from .dsp import FeatureMap, compute_map, preprocessing_cost
from .errors import ConfigError, DataError
from .lut import fit_lut, predict_lut_topk
from .nn import TrainConfig, TrainData, build_model, predict_logits, save_model, topk_indices, train
from .simulate import Scene, Target, synthesize_frame

REPORT_SCHEMA_VERSION = 1
CNN_PREDICTORS = ("rc", "rv", "ra64", "ra4")
LUT_PREDICTORS = ("lut4", "lut64")


def topk_accuracy(predictions, labels, k_list=(1, 3, 5)) -> np.ndarray:
    """Fraction of samples whose label appears among the first K predicted
    indices, for each K in k_list."""
    labels = np.asarray(labels)
    preds = [np.asarray(p) for p in predictions]
    if len(preds) != len(labels):
        raise DataError(f"{len(preds)} prediction lists vs {len(labels)} labels")
    k_max = max(k_list)
    for i, p in enumerate(preds):
        if len(p) < k_max:
            raise DataError(f"prediction list {i} has {len(p)} entries, need >= {k_max}")
    out = np.zeros(len(k_list))
    for j, k in enumerate(k_list):
        hits = [label in p[:k] for p, label in zip(preds, labels)]
        out[j] = float(np.mean(hits)) if len(hits) else 0.0
    return out


def feature_tensor(maps: np.ndarray, token: str) -> np.ndarray:
    """Standardize per sample and add the channel axis expected by the CNNs."""
    x = np.asarray(maps, dtype=np.float64)
    reduce_axes = tuple(range(1, x.ndim))
    mean = x.mean(axis=reduce_axes, keepdims=True)
    std = x.std(axis=reduce_axes, keepdims=True)
    x = (x - mean) / (std + 1e-8)
    x = x.astype(np.float32)
    if token == "rc":
        return x
    return x[:, None, :, :]


def _lut_maps(maps: np.ndarray, m_f: int) -> list[FeatureMap]:
    return [FeatureMap("ra", np.asarray(m), angle_fft_size=m_f) for m in maps]


@dataclass
class ExperimentSpec:
    dataset: Dataset
    predictors: tuple[str, ...] = ("ra64",)
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    k_list: tuple[int, ...] = (1, 3, 5)
    train_percents: tuple[float, ...] = (100.0,)
    train_config: TrainConfig = field(default_factory=TrainConfig)
    measure_timing: bool = True
    checkpoint_dir: str | None = None

    def __post_init__(self):
        for p in self.predictors:
            if p not in CNN_PREDICTORS + LUT_PREDICTORS:
                raise ConfigError(f"unknown predictor {p!r}")
        if not self.seeds or not self.k_list:
            raise ConfigError("seeds and k_list must be non-empty")


@dataclass
class EvalReport:
    rows: list[dict]
    k_list: tuple[int, ...]
    schema_version: int = REPORT_SCHEMA_VERSION

    def accuracy(self, predictor: str, k: int, percent: float = 100.0, seed="mean") -> float:
        for row in self.rows:
            if (row["predictor"], row["percent"], row["seed"]) == (predictor, percent, seed):
                return row[f"top{k}"]
        raise DataError(f"no report row for {predictor!r} percent={percent} seed={seed!r}")

    def to_csv(self, path) -> None:
        write_csv(self.rows, path)

    def to_jsonl(self, path) -> None:
        write_jsonl(self.rows, path)


def _dataset_field_token(predictor: str) -> str:
    return {"lut4": "ra4", "lut64": "ra64"}.get(predictor, predictor)


def _require_field(ds: Dataset, token: str) -> np.ndarray:
    if not ds.has_field(token):
        raise DataError(
            f"dataset at {ds.path} has no {token!r} feature maps; run preprocessing first"
        )
    return ds.field(token)


def run_experiment(spec: ExperimentSpec) -> EvalReport:
    """Train/fit each predictor per (percent, seed), evaluate top-K on the
    test split, and aggregate per-seed rows into mean and std rows."""
    ds = spec.dataset
    splits = ds.splits()
    labels = ds.labels
    k_max = max(spec.k_list)
    rows: list[dict] = []

    for predictor in spec.predictors:
        token = _dataset_field_token(predictor)
        maps = _require_field(ds, token)
        test_idx = splits["test"]
        y_test = labels[test_idx]
        is_lut = predictor in LUT_PREDICTORS
        if not is_lut:
            x_all_val = feature_tensor(np.asarray(maps[splits["val"]]), token)
            x_test = feature_tensor(np.asarray(maps[test_idx]), token)
        for percent in spec.train_percents:
            for seed in spec.seeds:
                sub_idx = subset_training(splits["train"], percent, seed)
                t0 = time.perf_counter()
                if is_lut:
                    m_f = int(token[2:])
                    table = fit_lut(
                        list(zip(_lut_maps(np.asarray(maps[sub_idx]), m_f), labels[sub_idx])),
                        n_beams=ds.n_beams,
                    )
                    fit_seconds = time.perf_counter() - t0
                    t1 = time.perf_counter()
                    preds = [predict_lut_topk(table, fm, k_max)
                             for fm in _lut_maps(np.asarray(maps[test_idx]), m_f)]
                    infer_s = time.perf_counter() - t1
                    param_count = table.param_count()
                else:
                    x_sub = feature_tensor(np.asarray(maps[sub_idx]), token)
                    model = build_model(predictor, seed=seed)
                    cfg = replace(spec.train_config, seed=seed)
                    train(model, TrainData(x_sub, labels[sub_idx],
                                           x_all_val, labels[splits["val"]]), cfg)
                    fit_seconds = time.perf_counter() - t0
                    t1 = time.perf_counter()
                    logits = predict_logits(model, x_test)
                    infer_s = time.perf_counter() - t1
                    preds = topk_indices(logits, k_max)
                    param_count = model.param_count()
                    if spec.checkpoint_dir is not None:
                        os.makedirs(spec.checkpoint_dir, exist_ok=True)
                        save_model(model, os.path.join(
                            spec.checkpoint_dir,
                            f"{predictor}_p{percent:g}_seed{seed}.ckpt"))
                acc = topk_accuracy(list(preds), y_test, spec.k_list)
                row = {
                    "predictor": predictor, "percent": percent, "seed": seed,
                    "n_train": len(sub_idx), "n_test": len(test_idx),
                    "param_count": param_count, "train_seconds": fit_seconds,
                }
                if spec.measure_timing:
                    row["inference_us_per_sample"] = infer_s / max(len(test_idx), 1) * 1e6
                for k, a in zip(spec.k_list, acc):
                    row[f"top{k}"] = float(a)
                rows.append(row)
            rows.extend(_aggregate(rows, predictor, percent, spec))
    return EvalReport(rows=rows, k_list=spec.k_list)


def _aggregate(rows: list[dict], predictor: str, percent: float, spec: ExperimentSpec) -> list[dict]:
    seed_rows = [r for r in rows
                 if r["predictor"] == predictor and r["percent"] == percent
                 and isinstance(r["seed"], int)]
    out = []
    for stat, fn in (("mean", np.mean), ("std", np.std)):
        row = {"predictor": predictor, "percent": percent, "seed": stat,
               "n_train": seed_rows[0]["n_train"], "n_test": seed_rows[0]["n_test"],
               "param_count": seed_rows[0]["param_count"]}
        for k in spec.k_list:
            row[f"top{k}"] = float(fn([r[f"top{k}"] for r in seed_rows]))
        if spec.measure_timing:
            row["inference_us_per_sample"] = float(fn([r["inference_us_per_sample"]
                                                       for r in seed_rows]))
        row["train_seconds"] = float(fn([r["train_seconds"] for r in seed_rows]))
        out.append(row)
    return out


@dataclass
class BenchSpec:
    radar: RadarConfig = field(default_factory=RadarConfig)
    kinds: tuple[str, ...] = ("rc", "rv", "ra64", "ra4")
    variants: tuple[str, ...] = ("rc", "rv", "ra64", "ra4")
    include_luts: bool = True
    repeats: int = 20
    warmup: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.repeats < 1 or self.warmup < 0:
            raise ConfigError("repeats must be >= 1 and warmup >= 0")


def _time_loop(fn, warmup: int, repeats: int) -> tuple[float, float]:
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - t0) * 1e6)
    return float(np.median(samples)), float(np.percentile(samples, 90))


def benchmark(spec: BenchSpec) -> list[dict]:
    """Median/p90 per-sample wall time for preprocessing and model inference,
    plus parameter counts and input sizes."""
    radar = spec.radar
    scene = Scene(targets=[Target(range_m=18.0, radial_velocity_mps=4.0, azimuth_deg=12.0,
                                  reflectivity=0.3)], seed=spec.seed)
    noisy = replace(radar, noise_power=1e-4) if radar.noise_power == 0 else radar
    frame = synthesize_frame(noisy, scene, np.random.default_rng(spec.seed))
    rows: list[dict] = []
    for token in spec.kinds:
        cost = preprocessing_cost(token, radar)
        med, p90 = _time_loop(lambda t=token: compute_map(frame, t), spec.warmup, spec.repeats)
        rows.append({"name": token, "role": "preprocess", "median_us": med, "p90_us": p90,
                     "input_size": int(cost["input_size"]),
                     "flop_estimate": cost["flop_estimate"]})
    for variant in spec.variants:
        model = build_model(variant, seed=spec.seed)
        x = np.zeros((1, *model.input_shape), dtype=np.float32)
        med, p90 = _time_loop(lambda m=model, a=x: m.forward(a), spec.warmup, spec.repeats)
        rows.append({"name": variant, "role": "inference", "median_us": med, "p90_us": p90,
                     "param_count": model.param_count()})
    if spec.include_luts:
        s = radar.samples_per_chirp
        for m_f in (4, 64):
            rows.append({"name": f"lut{m_f}", "role": "params", "param_count": s * m_f})
    return rows


_CSV_COLUMNS = ["predictor", "name", "role", "percent", "seed", "n_train", "n_test",
                "top1", "top2", "top3", "top5", "top10", "median_us", "p90_us",
                "inference_us_per_sample", "preprocess_us_per_sample", "param_count",
                "input_size", "flop_estimate", "train_seconds"]


def _columns_for(rows: list[dict]) -> list[str]:
    keys = {k for row in rows for k in row}
    ordered = [c for c in _CSV_COLUMNS if c in keys]
    ordered += sorted(keys - set(ordered))
    return ordered


def write_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_columns_for(rows), restval="")
        writer.writeheader()
        writer.writerows(rows)


def write_jsonl(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps({"schema_version": REPORT_SCHEMA_VERSION, **row}) + "\n")


def load_jsonl(path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows
