"""On-disk dataset format, deterministic splits, and external ingestion.

A dataset is a directory holding:

  manifest.txt   key = value lines (format below)
  data.bin       8-byte magic "RBDS0001", then each field's full array
                 back to back, C-order, little-endian, at the byte offsets
                 recorded in the manifest

Manifest schema (all values strings; '#' comments allowed):

  format_version = 1
  n_samples      = <int>
  n_beams        = <int>
  fields         = <comma-separated field names, blob order>
  field.<name>.dtype  = complex64|float32|float64|int32|uint64
  field.<name>.shape  = <per-sample dims, comma-separated; empty = scalar>
  field.<name>.offset = <byte offset into data.bin>
  field.<name>.nbytes = <total bytes for the field>
  field.<name>.sha256 = <hex digest of the field's bytes>
  split.seed          = <int>
  split.fractions     = <comma floats summing to 1, e.g. 0.7,0.3>
  split.val_fraction  = <float carved from the train split>
  config.<anything>   = <opaque provenance strings>

Complex data is stored interleaved (re, im) float32. Writers never mutate an
existing file: new blobs are written to a temp name and atomically renamed.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from .config import parse_kv_text
from .errors import ConfigError, DataError, FormatError

_BLOB_MAGIC = b"RBDS0001"
FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.txt"
BLOB_NAME = "data.bin"

_DTYPES = {
    "complex64": "<c8",
    "float32": "<f4",
    "float64": "<f8",
    "int32": "<i4",
    "uint64": "<u8",
}
_DTYPE_NAMES = {np.dtype(v): k for k, v in _DTYPES.items()}


@dataclass
class FieldInfo:
    name: str
    dtype: str
    shape: tuple[int, ...]
    offset: int
    nbytes: int
    sha256: str


@dataclass
class Dataset:
    path: str
    n_samples: int
    n_beams: int
    field_infos: dict[str, FieldInfo]
    split_seed: int
    split_fractions: tuple[float, ...]
    val_fraction: float
    config_kv: dict[str, str] = dc_field(default_factory=dict)

    @property
    def fields(self) -> list[str]:
        return list(self.field_infos)

    def has_field(self, name: str) -> bool:
        return name in self.field_infos

    def field(self, name: str) -> np.ndarray:
        """Memory-mapped read-only view (n_samples, *per_sample_shape)."""
        info = self.field_infos.get(name)
        if info is None:
            raise DataError(f"dataset has no field {name!r}; available: {self.fields}")
        shape = (self.n_samples, *info.shape)
        return np.memmap(os.path.join(self.path, BLOB_NAME), mode="r",
                         dtype=_DTYPES[info.dtype], offset=info.offset, shape=shape)

    @property
    def labels(self) -> np.ndarray:
        return np.asarray(self.field("label"))

    def splits(self) -> dict[str, np.ndarray]:
        parts = split_dataset(self.n_samples, self.split_fractions, self.split_seed)
        train = parts[0]
        test = parts[1] if len(parts) > 1 else np.array([], dtype=np.int64)
        n_val = int(math.floor(self.val_fraction * len(train)))
        carve = np.random.default_rng(
            np.random.SeedSequence(entropy=self.split_seed, spawn_key=(1,))
        ).permutation(len(train))
        return {
            "train": np.sort(train[carve[n_val:]]),
            "val": np.sort(train[carve[:n_val]]),
            "test": test,
        }

    def verify_hashes(self) -> None:
        blob_path = os.path.join(self.path, BLOB_NAME)
        with open(blob_path, "rb") as fh:
            for info in self.field_infos.values():
                fh.seek(info.offset)
                digest = hashlib.sha256()
                remaining = info.nbytes
                while remaining:
                    chunk = fh.read(min(remaining, 1 << 24))
                    if not chunk:
                        raise FormatError(f"{blob_path}: unexpected EOF in field {info.name!r}")
                    digest.update(chunk)
                    remaining -= len(chunk)
                if digest.hexdigest() != info.sha256:
                    raise FormatError(f"field {info.name!r} content hash mismatch")


def _field_bytes_per_sample(dtype: str, shape: tuple[int, ...]) -> int:
    return int(np.dtype(_DTYPES[dtype]).itemsize * int(np.prod(shape, dtype=np.int64)))


def _validate_labels(labels: np.ndarray, n_beams: int) -> None:
    if labels.size and (labels.min() < 0 or labels.max() >= n_beams):
        bad = int(np.flatnonzero((labels < 0) | (labels >= n_beams))[0])
        raise DataError(f"sample {bad}: label {int(labels[bad])} outside [0, {n_beams})")


def write_dataset(path, fields: dict[str, np.ndarray], *, n_beams: int = 64,
                  config_kv: dict[str, str] | None = None, split_seed: int = 0,
                  split_fractions: tuple[float, ...] = (0.7, 0.3),
                  val_fraction: float = 0.1) -> Dataset:
    """Persist arrays (each with leading dim n_samples) and return the
    readable Dataset. Writes are atomic: temp files then rename."""
    if not fields:
        raise DataError("no fields to write")
    lengths = {name: len(a) for name, a in fields.items()}
    n_samples = next(iter(lengths.values()))
    if any(n != n_samples for n in lengths.values()):
        raise DataError(f"field lengths differ: {lengths}")
    if "label" in fields:
        _validate_labels(np.asarray(fields["label"]), n_beams)

    os.makedirs(path, exist_ok=True)
    infos: dict[str, FieldInfo] = {}
    blob_tmp = os.path.join(path, BLOB_NAME + ".tmp")
    offset = len(_BLOB_MAGIC)
    with open(blob_tmp, "wb") as fh:
        fh.write(_BLOB_MAGIC)
        for name, array in fields.items():
            array = np.asarray(array)
            dtype_name = _DTYPE_NAMES.get(array.dtype)
            if dtype_name is None:
                raise DataError(f"field {name!r}: unsupported dtype {array.dtype}")
            data = np.ascontiguousarray(array).astype(_DTYPES[dtype_name], copy=False)
            raw = data.tobytes(order="C")
            fh.write(raw)
            infos[name] = FieldInfo(
                name=name, dtype=dtype_name, shape=tuple(array.shape[1:]),
                offset=offset, nbytes=len(raw), sha256=hashlib.sha256(raw).hexdigest(),
            )
            offset += len(raw)

    manifest_lines = [
        f"format_version = {FORMAT_VERSION}",
        f"n_samples = {n_samples}",
        f"n_beams = {n_beams}",
        f"fields = {','.join(infos)}",
        f"split.seed = {split_seed}",
        f"split.fractions = {','.join(repr(f) for f in split_fractions)}",
        f"split.val_fraction = {val_fraction!r}",
    ]
    for info in infos.values():
        manifest_lines += [
            f"field.{info.name}.dtype = {info.dtype}",
            f"field.{info.name}.shape = {','.join(map(str, info.shape))}",
            f"field.{info.name}.offset = {info.offset}",
            f"field.{info.name}.nbytes = {info.nbytes}",
            f"field.{info.name}.sha256 = {info.sha256}",
        ]
    for key, value in (config_kv or {}).items():
        manifest_lines.append(f"config.{key} = {value}")
    manifest_tmp = os.path.join(path, MANIFEST_NAME + ".tmp")
    with open(manifest_tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(manifest_lines) + "\n")

    os.replace(blob_tmp, os.path.join(path, BLOB_NAME))
    os.replace(manifest_tmp, os.path.join(path, MANIFEST_NAME))
    return read_dataset(path)


def read_dataset(path) -> Dataset:
    manifest_path = os.path.join(path, MANIFEST_NAME)
    blob_path = os.path.join(path, BLOB_NAME)
    if not os.path.exists(manifest_path):
        raise FormatError(f"{path}: missing {MANIFEST_NAME}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        try:
            kv = parse_kv_text(fh.read())
        except ConfigError as exc:
            raise FormatError(f"{manifest_path}: {exc}") from None

    def require(key: str) -> str:
        if key not in kv:
            raise FormatError(f"{manifest_path}: missing key {key!r}")
        return kv[key]

    version = int(require("format_version"))
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: dataset format version {version} unsupported "
                          f"(expected {FORMAT_VERSION})")
    n_samples = int(require("n_samples"))
    n_beams = int(require("n_beams"))
    names = [n for n in require("fields").split(",") if n]
    infos: dict[str, FieldInfo] = {}
    for name in names:
        dtype = require(f"field.{name}.dtype")
        if dtype not in _DTYPES:
            raise FormatError(f"{path}: field {name!r} has unsupported dtype {dtype!r}")
        shape_raw = require(f"field.{name}.shape")
        shape = tuple(int(v) for v in shape_raw.split(",") if v)
        info = FieldInfo(
            name=name, dtype=dtype, shape=shape,
            offset=int(require(f"field.{name}.offset")),
            nbytes=int(require(f"field.{name}.nbytes")),
            sha256=require(f"field.{name}.sha256"),
        )
        if info.nbytes != n_samples * _field_bytes_per_sample(dtype, shape):
            raise FormatError(
                f"{path}: field {name!r} has {info.nbytes} bytes, inconsistent with "
                f"{n_samples} samples of shape {shape}"
            )
        infos[name] = info

    if not os.path.exists(blob_path):
        raise FormatError(f"{path}: missing {BLOB_NAME}")
    blob_size = os.path.getsize(blob_path)
    with open(blob_path, "rb") as fh:
        magic = fh.read(len(_BLOB_MAGIC))
    if magic != _BLOB_MAGIC:
        raise FormatError(f"{blob_path}: bad magic (not a radarbeam dataset blob)")
    expected = len(_BLOB_MAGIC) + sum(i.nbytes for i in infos.values())
    if blob_size != expected:
        raise FormatError(f"{blob_path}: size {blob_size} != expected {expected} "
                          "(truncated or extra records)")
    end = len(_BLOB_MAGIC)
    for info in infos.values():
        if info.offset != end:
            raise FormatError(f"{blob_path}: field {info.name!r} offset {info.offset} != {end}")
        end += info.nbytes

    fractions = tuple(float(v) for v in require("split.fractions").split(",") if v)
    ds = Dataset(
        path=str(path), n_samples=n_samples, n_beams=n_beams, field_infos=infos,
        split_seed=int(require("split.seed")), split_fractions=fractions,
        val_fraction=float(require("split.val_fraction")),
        config_kv={k[len("config."):]: v for k, v in kv.items() if k.startswith("config.")},
    )
    if "label" in infos:
        _validate_labels(np.asarray(ds.field("label")), n_beams)
    return ds


def add_fields(ds: Dataset, new_fields: dict[str, np.ndarray]) -> Dataset:
    """Rewrite the dataset with extra fields appended (atomic replace)."""
    for name in new_fields:
        if ds.has_field(name):
            raise DataError(f"field {name!r} already present")
    merged: dict[str, np.ndarray] = {name: np.asarray(ds.field(name)) for name in ds.fields}
    merged.update(new_fields)
    return write_dataset(
        ds.path, merged, n_beams=ds.n_beams, config_kv=ds.config_kv,
        split_seed=ds.split_seed, split_fractions=ds.split_fractions,
        val_fraction=ds.val_fraction,
    )


def split_dataset(n_samples: int, fractions: tuple[float, ...], seed: int) -> list[np.ndarray]:
    """Shuffled partition of range(n_samples): floor-sized parts, remainder
    to the last part. Deterministic for a given seed."""
    fractions = tuple(float(f) for f in fractions)
    if not fractions or any(f <= 0 for f in fractions):
        raise ConfigError(f"split fractions must be positive, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {sum(fractions)}")
    perm = np.random.default_rng(seed).permutation(n_samples)
    parts: list[np.ndarray] = []
    start = 0
    for f in fractions[:-1]:
        count = int(math.floor(f * n_samples))
        parts.append(np.sort(perm[start:start + count]))
        start += count
    parts.append(np.sort(perm[start:]))
    return parts


def subset_training(train_indices: np.ndarray, percent: float, seed: int) -> np.ndarray:
    """Deterministic nested subsets: subset(p1) is a subset of subset(p2)
    whenever p1 <= p2 for the same seed."""
    if not 0 < percent <= 100:
        raise ConfigError(f"percent must be in (0, 100], got {percent}")
    train_indices = np.asarray(train_indices)
    perm = np.random.default_rng(seed).permutation(len(train_indices))
    count = int(math.floor(percent / 100.0 * len(train_indices)))
    return np.sort(train_indices[perm[:count]])


@dataclass
class IngestSchema:
    """Layout of an external export: one raw-cube binary per sample
    (complex float32 little-endian, rx x samples x chirps, C-order) plus a
    label index file with one '<filename> <label>' pair per line."""

    rx_antennas: int = 4
    samples_per_chirp: int = 256
    chirps_per_frame: int = 128
    n_beams: int = 64
    labels_file: str = "labels.txt"


def ingest_external(path, schema: IngestSchema) -> dict[str, np.ndarray]:
    """Load and validate an external export; returns fields ready for
    write_dataset ('raw' cubes + 'label')."""
    labels_path = os.path.join(path, schema.labels_file)
    if not os.path.exists(labels_path):
        raise FormatError(f"{path}: missing label index file {schema.labels_file!r}")
    entries: list[tuple[str, int]] = []
    with open(labels_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise FormatError(f"{labels_path}:{lineno}: expected '<file> <label>'")
            try:
                entries.append((parts[0], int(parts[1])))
            except ValueError:
                raise FormatError(f"{labels_path}:{lineno}: label {parts[1]!r} is not an integer") from None
    if not entries:
        raise DataError(f"{labels_path}: no samples listed")

    shape = (schema.rx_antennas, schema.samples_per_chirp, schema.chirps_per_frame)
    per_sample = int(np.prod(shape, dtype=np.int64))
    cubes = np.zeros((len(entries), *shape), dtype=np.complex64)
    labels = np.zeros(len(entries), dtype=np.int32)
    for i, (fname, label) in enumerate(entries):
        if not 0 <= label < schema.n_beams:
            raise DataError(f"sample {fname!r}: label {label} outside [0, {schema.n_beams})")
        sample_path = os.path.join(path, fname)
        if not os.path.exists(sample_path):
            raise FormatError(f"sample {fname!r}: file missing")
        expected_bytes = per_sample * 8
        actual = os.path.getsize(sample_path)
        if actual != expected_bytes:
            raise DataError(f"sample {fname!r}: {actual} bytes, expected {expected_bytes} "
                            f"for shape {shape}")
        cube = np.fromfile(sample_path, dtype="<c8").reshape(shape)
        if not np.all(np.isfinite(cube.view(np.float32))):
            raise DataError(f"sample {fname!r}: non-finite values")
        cubes[i] = cube
        labels[i] = label
    return {"raw": cubes, "label": labels}


def export_external(ds: Dataset, out_dir, schema: IngestSchema | None = None) -> None:
    """Write a dataset's raw cubes + labels in the external per-file layout."""
    schema = schema or IngestSchema()
    raw = ds.field("raw")
    labels = ds.labels
    os.makedirs(out_dir, exist_ok=True)
    lines = []
    for i in range(ds.n_samples):
        fname = f"sample_{i:05d}.bin"
        np.asarray(raw[i], dtype="<c8").tofile(os.path.join(out_dir, fname))
        lines.append(f"{fname} {int(labels[i])}")
    with open(os.path.join(out_dir, schema.labels_file), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
