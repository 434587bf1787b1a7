"""Lookup-table baseline: the argmax pixel of a range-angle map indexes a
per-pixel histogram of training labels.

Prediction walks the map's pixels in descending magnitude and emits each
seen pixel's top-ranked beam, skipping duplicates, until k distinct beams
are collected; the global label-frequency ranking fills any remainder. The
walk is independent of k, so top-(k+1) always extends top-k. Maps are
consumed pre-standardization (the argmax is standardization-invariant).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .dsp import KIND_RA, FeatureMap
from .errors import DataError, FormatError

_LUT_MAGIC = b"RBLUT001"


@dataclass
class LookupTable:
    shape: tuple[int, int]  # (S, M_F)
    n_beams: int
    ranked: dict[int, np.ndarray]  # flat pixel -> beams by descending count
    counts: dict[int, np.ndarray]  # flat pixel -> counts aligned with ranked
    fallback_rank: np.ndarray  # all beams by descending global frequency

    @property
    def angle_fft_size(self) -> int:
        return self.shape[1]

    def param_count(self) -> int:
        """Table size when collapsed to one beam per pixel (the comparison
        number quoted against the CNNs)."""
        return self.shape[0] * self.shape[1]


def _check_map(fmap: FeatureMap, shape: tuple[int, int] | None = None):
    if fmap.kind != KIND_RA:
        raise DataError(f"lookup table consumes range-angle maps, got {fmap.kind!r}")
    if fmap.standardized:
        raise DataError("lookup table consumes pre-standardization maps")
    if shape is not None and fmap.data.shape != shape:
        raise DataError(f"map shape {fmap.data.shape} != table shape {shape}")


def fit_lut(samples: list[tuple[FeatureMap, int]], n_beams: int = 64) -> LookupTable:
    """Accumulate label counts at each training map's argmax pixel."""
    if not samples:
        raise DataError("empty training set")
    shape = samples[0][0].data.shape
    hist: dict[int, np.ndarray] = {}
    global_counts = np.zeros(n_beams, dtype=np.int64)
    for fmap, label in samples:
        _check_map(fmap, shape)
        label = int(label)
        if not 0 <= label < n_beams:
            raise DataError(f"label {label} outside [0, {n_beams})")
        pixel = int(np.argmax(fmap.data))
        if pixel not in hist:
            hist[pixel] = np.zeros(n_beams, dtype=np.int64)
        hist[pixel][label] += 1
        global_counts[label] += 1

    ranked = {}
    counts = {}
    for pixel, h in hist.items():
        nonzero = np.flatnonzero(h)
        order = nonzero[np.argsort(-h[nonzero], kind="stable")]
        ranked[pixel] = order.astype(np.uint16)
        counts[pixel] = h[order]
    fallback = np.argsort(-global_counts, kind="stable").astype(np.uint16)
    return LookupTable(shape=shape, n_beams=n_beams, ranked=ranked, counts=counts,
                       fallback_rank=fallback)


def predict_lut_topk(lut: LookupTable, fmap: FeatureMap, k: int) -> list[int]:
    if not 1 <= k <= lut.n_beams:
        raise DataError(f"k must be in [1, {lut.n_beams}], got {k}")
    _check_map(fmap, lut.shape)
    flat = fmap.data.ravel()
    order = np.argsort(-flat, kind="stable")
    picked: list[int] = []
    seen = set()
    for pixel in order:
        entry = lut.ranked.get(int(pixel))
        if entry is None or not len(entry):
            continue
        beam = int(entry[0])
        if beam not in seen:
            seen.add(beam)
            picked.append(beam)
            if len(picked) == k:
                return picked
    for beam in lut.fallback_rank:
        beam = int(beam)
        if beam not in seen:
            seen.add(beam)
            picked.append(beam)
            if len(picked) == k:
                break
    return picked


def save_lut(lut: LookupTable, path) -> None:
    """Header (magic, uint32 S, M_F, N, n_pixels), a uint16 fallback ranking,
    then per seen pixel: uint32 flat index, uint16 entry count, entries as
    (uint16 beam, uint32 count). Little-endian throughout."""
    parts = [_LUT_MAGIC, struct.pack("<IIII", lut.shape[0], lut.shape[1], lut.n_beams,
                                     len(lut.ranked))]
    parts.append(np.asarray(lut.fallback_rank, dtype="<u2").tobytes())
    for pixel in sorted(lut.ranked):
        beams = lut.ranked[pixel]
        cnts = lut.counts[pixel]
        parts.append(struct.pack("<IH", pixel, len(beams)))
        for beam, cnt in zip(beams, cnts):
            parts.append(struct.pack("<HI", int(beam), int(cnt)))
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_lut(path) -> LookupTable:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 24 or raw[:8] != _LUT_MAGIC:
        raise FormatError(f"{path}: not a lookup-table file (bad magic)")
    s, m_f, n_beams, n_pixels = struct.unpack("<IIII", raw[8:24])
    offset = 24
    if offset + 2 * n_beams > len(raw):
        raise FormatError(f"{path}: truncated fallback ranking")
    fallback = np.frombuffer(raw, dtype="<u2", count=n_beams, offset=offset).copy()
    offset += 2 * n_beams
    ranked: dict[int, np.ndarray] = {}
    counts: dict[int, np.ndarray] = {}
    try:
        for _ in range(n_pixels):
            pixel, n_entries = struct.unpack_from("<IH", raw, offset)
            offset += 6
            beams = np.zeros(n_entries, dtype=np.uint16)
            cnts = np.zeros(n_entries, dtype=np.int64)
            for i in range(n_entries):
                beams[i], cnts[i] = struct.unpack_from("<HI", raw, offset)
                offset += 6
            ranked[pixel] = beams
            counts[pixel] = cnts
    except struct.error:
        raise FormatError(f"{path}: truncated lookup-table entries") from None
    if offset != len(raw):
        raise FormatError(f"{path}: {len(raw) - offset} trailing bytes")
    return LookupTable(shape=(s, m_f), n_beams=n_beams, ranked=ranked, counts=counts,
                       fallback_rank=fallback)
