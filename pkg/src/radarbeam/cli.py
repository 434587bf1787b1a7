"""Command-line entry point.

Subcommands: simulate, preprocess, train, eval, baseline, bench, ingest.
Every run writes a resolved-config snapshot next to its outputs so it can be
reproduced exactly. Exit codes: 0 success, 2 configuration errors, 3 data or
file-format errors, 4 internal errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import dataset as dsio
from .beams import build_codebook, save_codebook
from .config import (
    CommConfig,
    RadarConfig,
    ScenarioConfig,
    dump_configs,
    load_config_file,
)
from .dsp import TOKENS, FeatureMap, compute_map
from .errors import ConfigError, DataError, RadarBeamError
from .evaluate import (
    BenchSpec,
    ExperimentSpec,
    benchmark,
    feature_tensor,
    run_experiment,
    topk_accuracy,
    write_csv,
    write_jsonl,
)
from .lut import fit_lut, predict_lut_topk, save_lut
from .nn import TrainConfig, load_model, predict_logits, topk_indices
from .pipeline import build_labeled_fields, snapshot_kv, validate_tokens
from .simulate import RadarFrame, Scene

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _load_configs(args) -> dict:
    if getattr(args, "config", None):
        cfgs = load_config_file(args.config)
    else:
        cfgs = {"radar": RadarConfig(), "scenario": ScenarioConfig(), "comm": CommConfig()}
    overrides = {}
    for name in ("clutter", "distractors"):
        value = getattr(args, name, None)
        if value is not None:
            overrides["clutter_count" if name == "clutter" else "distractor_count"] = value
    if overrides:
        cfgs["scenario"] = replace(cfgs["scenario"], **overrides)
    if getattr(args, "noise", None) is not None:
        cfgs["radar"] = replace(cfgs["radar"], noise_power=args.noise)
    return cfgs


def _write_snapshot(out_dir: str, cfgs: dict, extra: dict[str, str] | None = None) -> None:
    os.makedirs(out_dir, exist_ok=True)
    text = dump_configs(cfgs)
    if extra:
        text += "".join(f"run.{k} = {v}\n" for k, v in sorted(extra.items()))
    with open(os.path.join(out_dir, "config_snapshot.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)


def _parse_kinds(raw: str) -> list[str]:
    return validate_tokens([t.strip() for t in raw.split(",") if t.strip()])


def cmd_simulate(args) -> int:
    cfgs = _load_configs(args)
    kinds = _parse_kinds(args.kinds) if args.kinds else []
    fields = build_labeled_fields(
        cfgs["scenario"], cfgs["radar"], cfgs["comm"], args.samples, args.seed,
        kinds=kinds, clutter_removal=args.clutter_removal,
        keep_raw=not args.no_raw, threads=args.threads,
    )
    extra = {"subcommand": "simulate", "samples": str(args.samples), "seed": str(args.seed),
             "kinds": ",".join(kinds), "clutter_removal": str(args.clutter_removal),
             "keep_raw": str(not args.no_raw)}
    ds = dsio.write_dataset(
        args.out, fields, n_beams=cfgs["comm"].n_beams,
        config_kv=snapshot_kv(cfgs["scenario"], cfgs["radar"], cfgs["comm"], extra),
        split_seed=args.seed,
    )
    _write_snapshot(args.out, cfgs, extra)
    print(f"wrote {ds.n_samples} samples to {args.out} (fields: {', '.join(ds.fields)})")
    return EXIT_OK


def _radar_from_manifest(ds: dsio.Dataset) -> RadarConfig:
    kv = {k: v for k, v in ds.config_kv.items() if k.startswith("radar.")}
    if not kv:
        return RadarConfig()
    kwargs = {}
    for key, raw in kv.items():
        name = key.split(".", 1)[1]
        if raw == "none":
            kwargs[name] = None
        elif name in ("samples_per_chirp", "chirps_per_frame", "rx_antennas"):
            kwargs[name] = int(raw)
        else:
            kwargs[name] = float(raw)
    return RadarConfig(**kwargs)


def cmd_preprocess(args) -> int:
    ds = dsio.read_dataset(args.dataset)
    kinds = _parse_kinds(args.kinds)
    missing = [t for t in kinds if not ds.has_field(t)]
    for t in kinds:
        if ds.has_field(t):
            print(f"{t}: already present, skipping (hash verified)")
    if not missing:
        ds.verify_hashes()
        return EXIT_OK
    if not ds.has_field("raw"):
        raise DataError("dataset has no raw cubes; re-run simulate without --no-raw")
    radar = _radar_from_manifest(ds)
    raw = ds.field("raw")
    new_fields: dict[str, np.ndarray] = {}
    for t in missing:
        maps = []
        for i in range(ds.n_samples):
            frame = RadarFrame(np.asarray(raw[i], dtype=np.complex128), radar, Scene(seed=0))
            maps.append(compute_map(frame, t, clutter_removal=args.clutter_removal).data.astype(np.float32))
        new_fields[t] = np.stack(maps)
        print(f"{t}: computed {ds.n_samples} maps")
    dsio.add_fields(ds, new_fields)
    return EXIT_OK


def _seed_list(args) -> tuple[int, ...]:
    if args.seeds:
        return tuple(int(s) for s in args.seeds.split(","))
    return tuple(range(args.num_seeds))


def cmd_train(args) -> int:
    ds = dsio.read_dataset(args.dataset)
    train_cfg = TrainConfig(lr=args.lr, batch_size=args.batch_size, epochs=args.epochs)
    spec = ExperimentSpec(
        dataset=ds, predictors=(args.variant,), seeds=_seed_list(args),
        k_list=tuple(int(k) for k in args.topk.split(",")),
        train_percents=(args.percent,), train_config=train_cfg,
        checkpoint_dir=args.out,
    )
    report = run_experiment(spec)
    os.makedirs(args.out, exist_ok=True)
    report.to_csv(os.path.join(args.out, "train_report.csv"))
    report.to_jsonl(os.path.join(args.out, "train_report.jsonl"))
    _write_snapshot(args.out, {"radar": _radar_from_manifest(ds)},
                    {"subcommand": "train", "variant": args.variant,
                     "seeds": ",".join(map(str, spec.seeds)), "dataset": str(args.dataset),
                     "epochs": str(args.epochs), "lr": repr(args.lr),
                     "batch_size": str(args.batch_size), "percent": repr(args.percent)})
    for k in spec.k_list:
        print(f"top-{k} (mean over seeds): {report.accuracy(args.variant, k, args.percent):.4f}")
    print(f"checkpoints and reports in {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    ds = dsio.read_dataset(args.dataset)
    model = load_model(args.checkpoint)
    token = model.variant
    maps = ds.field(token) if ds.has_field(token) else None
    if maps is None:
        raise DataError(f"dataset lacks {token!r} maps required by this checkpoint")
    idx = ds.splits()[args.split]
    k_list = tuple(int(k) for k in args.topk.split(","))
    logits = predict_logits(model, feature_tensor(np.asarray(maps[idx]), token))
    preds = topk_indices(logits, max(k_list))
    acc = topk_accuracy(list(preds), ds.labels[idx], k_list)
    rows = []
    for k, a in zip(k_list, acc):
        print(f"top-{k} accuracy on {args.split} ({len(idx)} samples): {a:.4f}")
        rows.append({"predictor": token, "split": args.split, "seed": "eval",
                     "percent": 100.0, f"top{k}": float(a), "n_test": len(idx)})
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_csv(rows, os.path.join(args.out, "eval_report.csv"))
        write_jsonl(rows, os.path.join(args.out, "eval_report.jsonl"))
        _write_snapshot(args.out, {}, {"subcommand": "eval", "checkpoint": str(args.checkpoint),
                                       "dataset": str(args.dataset), "split": args.split,
                                       "topk": args.topk})
    return EXIT_OK


def cmd_baseline(args) -> int:
    ds = dsio.read_dataset(args.dataset)
    token = f"ra{args.angle_bins}"
    maps = ds.field(token) if ds.has_field(token) else None
    if maps is None:
        raise DataError(f"dataset lacks {token!r} maps; run preprocess --kinds {token}")
    splits = ds.splits()
    labels = ds.labels
    k_list = tuple(int(k) for k in args.topk.split(","))
    train_maps = [FeatureMap("ra", np.asarray(maps[i]), angle_fft_size=args.angle_bins)
                  for i in splits["train"]]
    table = fit_lut(list(zip(train_maps, labels[splits["train"]])), n_beams=ds.n_beams)
    test_idx = splits["test"]
    preds = [predict_lut_topk(table, FeatureMap("ra", np.asarray(maps[i]),
                                                angle_fft_size=args.angle_bins), max(k_list))
             for i in test_idx]
    acc = topk_accuracy(preds, labels[test_idx], k_list)
    os.makedirs(args.out, exist_ok=True)
    save_lut(table, os.path.join(args.out, f"lut{args.angle_bins}.bin"))
    rows = []
    for k, a in zip(k_list, acc):
        print(f"LUT-{args.angle_bins} top-{k} accuracy: {a:.4f}")
        rows.append({"predictor": f"lut{args.angle_bins}", "seed": "fit", "percent": 100.0,
                     f"top{k}": float(a), "n_test": len(test_idx),
                     "param_count": table.param_count()})
    write_csv(rows, os.path.join(args.out, "baseline_report.csv"))
    write_jsonl(rows, os.path.join(args.out, "baseline_report.jsonl"))
    _write_snapshot(args.out, {}, {"subcommand": "baseline", "dataset": str(args.dataset),
                                   "angle_bins": str(args.angle_bins), "topk": args.topk})
    return EXIT_OK


def cmd_bench(args) -> int:
    cfgs = _load_configs(args)
    spec = BenchSpec(radar=cfgs["radar"], repeats=args.repeats, warmup=args.warmup,
                     seed=args.seed)
    rows = benchmark(spec)
    os.makedirs(args.out, exist_ok=True)
    write_csv(rows, os.path.join(args.out, "bench_report.csv"))
    write_jsonl(rows, os.path.join(args.out, "bench_report.jsonl"))
    _write_snapshot(args.out, cfgs, {"subcommand": "bench", "repeats": str(args.repeats),
                                     "warmup": str(args.warmup), "seed": str(args.seed)})
    for row in rows:
        med = row.get("median_us")
        med_txt = f"{med:10.1f} us" if med is not None else "          -"
        print(f"{row['role']:<10} {row['name']:<6} median {med_txt}  "
              f"params {row.get('param_count', '-')}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    schema = dsio.IngestSchema(rx_antennas=args.rx, samples_per_chirp=args.samples_per_chirp,
                               chirps_per_frame=args.chirps, n_beams=args.beams)
    fields = dsio.ingest_external(args.raw_dir, schema)
    ds = dsio.write_dataset(args.out, fields, n_beams=args.beams,
                            config_kv={"ingest.source": str(args.raw_dir)},
                            split_seed=args.seed)
    _write_snapshot(args.out, {}, {"subcommand": "ingest", "source": str(args.raw_dir),
                                   "samples": str(ds.n_samples), "seed": str(args.seed)})
    print(f"ingested {ds.n_samples} samples into {args.out}")
    return EXIT_OK


def cmd_export_codebook(args) -> int:
    cfgs = _load_configs(args)
    comm = cfgs["comm"]
    save_codebook(build_codebook(comm.n_beams, comm.n_antennas, comm.fov_deg), args.out)
    print(f"wrote {comm.n_beams}x{comm.n_antennas} codebook to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radarbeam",
                                     description="Radar-aided beam prediction workflows")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_config=True):
        if with_config:
            p.add_argument("--config", help="key = value config file (radar./scenario./comm.)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1, help="worker cap for synthesis")

    p = sub.add_parser("simulate", help="generate a labeled synthetic dataset")
    common(p)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kinds", default="", help="feature maps to compute now (e.g. ra64,rv)")
    p.add_argument("--clutter", type=int, default=None, help="override scenario.clutter_count")
    p.add_argument("--distractors", type=int, default=None,
                   help="override scenario.distractor_count")
    p.add_argument("--noise", type=float, default=None, help="override radar.noise_power")
    p.add_argument("--clutter-removal", action="store_true",
                   help="apply clutter removal to range-angle maps")
    p.add_argument("--no-raw", action="store_true", help="do not store raw cubes")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("preprocess", help="add feature maps to an existing dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kinds", required=True, help=f"comma list from {TOKENS}")
    p.add_argument("--clutter-removal", action="store_true")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train CNN predictor(s) and report accuracy")
    p.add_argument("--dataset", required=True)
    p.add_argument("--variant", required=True, choices=("rc", "rv", "ra64", "ra4"))
    p.add_argument("--seeds", default="", help="comma list of seeds (overrides --num-seeds)")
    p.add_argument("--num-seeds", type=int, default=5)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--percent", type=float, default=100.0,
                   help="training-subset percentage")
    p.add_argument("--topk", default="1,3,5")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--topk", default="1,3,5")
    p.add_argument("--out", default="")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="fit and evaluate the lookup-table baseline")
    p.add_argument("--dataset", required=True)
    p.add_argument("--angle-bins", type=int, default=64, choices=(4, 64))
    p.add_argument("--topk", default="1,3,5")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("bench", help="time preprocessing and inference; report sizes")
    common(p)
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ingest", help="import an external raw-cube export")
    p.add_argument("--raw-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rx", type=int, default=4)
    p.add_argument("--samples-per-chirp", type=int, default=256)
    p.add_argument("--chirps", type=int, default=128)
    p.add_argument("--beams", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("export-codebook", help="write the steering codebook to a binary file")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_codebook)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RadarBeamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
