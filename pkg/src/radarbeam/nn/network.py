"""The four beam-prediction CNN variants, checkpoint I/O, and inference.

All variants share the layer plan: five 3x3 conv layers (channels
8, 16, 8, 4, 2, ReLU) with interleaved average pooling, then dense layers
to 256, 128, and 64 beam logits. The pooling kernels differ per input type
so the flatten size stays manageable; the first dense layer's width is
inferred from the actual flatten size (512 for rc/rv/ra64, 256 for ra4).
"""

from __future__ import annotations

import struct

import numpy as np

from ..dsp import FeatureMap, standardize
from ..errors import ConfigError, DataError, FormatError
from .layers import AvgPool2D, Conv2D, Dense, Flatten, ReLU

N_BEAMS = 64
_CONV_CHANNELS = (8, 16, 8, 4, 2)
_DENSE_WIDTHS = (256, 128, N_BEAMS)
_CKPT_MAGIC = b"RBNET001"

# per-variant input shape (C, H, W) and the four pooling kernels
# (None = no pool at that slot)
VARIANTS = {
    "rc": {"input_shape": (4, 256, 128), "pools": ((2, 1), (2, 2), (2, 2), (2, 2))},
    "rv": {"input_shape": (1, 256, 128), "pools": ((2, 1), (2, 2), (2, 2), (2, 2))},
    "ra64": {"input_shape": (1, 256, 64), "pools": (None, (2, 2), (2, 2), (2, 2))},
    "ra4": {"input_shape": (1, 256, 4), "pools": (None, (2, 1), (2, 1), (2, 1))},
}


class CnnModel:
    def __init__(self, variant: str, layers: list, input_shape: tuple[int, int, int], dtype):
        self.variant = variant
        self.layers = layers
        self.input_shape = input_shape
        self.dtype = dtype

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim != 4 or x.shape[1:] != self.input_shape:
            raise DataError(
                f"variant {self.variant!r} expects input (B, {', '.join(map(str, self.input_shape))}), "
                f"got {x.shape}"
            )
        x = x.astype(self.dtype, copy=False)
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dlogits: np.ndarray) -> np.ndarray:
        g = dlogits.astype(self.dtype, copy=False)
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def params(self):
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def zero_grad(self):
        for p in self.params():
            p.zero_grad()

    def param_count(self) -> int:
        return sum(p.value.size for p in self.params())

    def state(self) -> list[np.ndarray]:
        return [p.value for p in self.params()]

    def set_state(self, arrays: list[np.ndarray]):
        params = self.params()
        if len(arrays) != len(params):
            raise DataError(f"expected {len(params)} parameter arrays, got {len(arrays)}")
        for p, a in zip(params, arrays):
            if p.value.shape != a.shape:
                raise DataError(f"parameter shape mismatch: {p.value.shape} vs {a.shape}")
            p.value[...] = a.astype(self.dtype, copy=False)


def build_model(variant: str, seed: int = 0, dtype=np.float32) -> CnnModel:
    """Construct a variant with freshly initialized weights (seeded)."""
    spec = VARIANTS.get(variant)
    if spec is None:
        raise ConfigError(f"unknown model variant {variant!r}; choose from {sorted(VARIANTS)}")
    rng = np.random.default_rng(seed)
    c, h, w = spec["input_shape"]
    layers: list = []
    in_ch = c
    for conv_idx, out_ch in enumerate(_CONV_CHANNELS):
        layers.append(Conv2D(in_ch, out_ch, rng, dtype=dtype))
        layers.append(ReLU())
        in_ch = out_ch
        # pools sit after conv-2 through conv-5
        if conv_idx >= 1:
            pool = spec["pools"][conv_idx - 1]
            if pool is not None:
                layers.append(AvgPool2D(pool))
                h //= pool[0]
                w //= pool[1]
    layers.append(Flatten())
    in_features = in_ch * h * w
    for i, width in enumerate(_DENSE_WIDTHS):
        layers.append(Dense(in_features, width, rng, dtype=dtype))
        if i < len(_DENSE_WIDTHS) - 1:
            layers.append(ReLU())
        in_features = width
    return CnnModel(variant, layers, spec["input_shape"], dtype)


def topk_indices(logits: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest scores per row, descending, ties to the
    lower index."""
    n = logits.shape[-1]
    if not 1 <= k <= n:
        raise DataError(f"k must be in [1, {n}], got {k}")
    order = np.argsort(-logits, axis=-1, kind="stable")
    return order[..., :k]


def predict_logits(model: CnnModel, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Batched forward pass over (N, C, H, W) inputs."""
    outs = [model.forward(x[i:i + batch_size]) for i in range(0, len(x), batch_size)]
    return np.concatenate(outs, axis=0)


def _as_input(model: CnnModel, fmap: FeatureMap) -> np.ndarray:
    expected_token = model.variant
    if fmap.token != expected_token:
        raise DataError(f"model variant {model.variant!r} cannot consume a {fmap.token!r} map")
    if not fmap.standardized:
        fmap = standardize(fmap)
    data = fmap.data.astype(model.dtype, copy=False)
    if fmap.kind == "rc":
        return data[None, :, :, :]
    return data[None, None, :, :]


def predict_topk(model: CnnModel, fmap: FeatureMap, k: int) -> list[int]:
    """Top-k beam indices for one feature map (standardizes it if needed)."""
    logits = model.forward(_as_input(model, fmap))[0]
    return [int(i) for i in topk_indices(logits, k)]


def save_model(model: CnnModel, path) -> None:
    """Checkpoint: magic, variant tag (8 bytes), array count, per-array dims,
    then all parameters as little-endian float32 in declaration order."""
    tag = model.variant.encode("ascii")
    if len(tag) > 8:
        raise DataError(f"variant tag too long: {model.variant!r}")
    arrays = model.state()
    parts = [_CKPT_MAGIC, tag.ljust(8, b"\0"), struct.pack("<I", len(arrays))]
    for a in arrays:
        parts.append(struct.pack("<I", a.ndim))
        parts.append(struct.pack(f"<{a.ndim}I", *a.shape))
    for a in arrays:
        parts.append(np.ascontiguousarray(a, dtype="<f4").tobytes())
    blob = b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(blob)


def load_model(path, dtype=np.float32) -> CnnModel:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 20 or raw[:8] != _CKPT_MAGIC:
        raise FormatError(f"{path}: not a model checkpoint (bad magic)")
    variant = raw[8:16].rstrip(b"\0").decode("ascii", errors="replace")
    if variant not in VARIANTS:
        raise FormatError(f"{path}: unknown variant tag {variant!r}")
    (n_arrays,) = struct.unpack("<I", raw[16:20])
    offset = 20
    shapes = []
    try:
        for _ in range(n_arrays):
            (ndim,) = struct.unpack_from("<I", raw, offset)
            offset += 4
            shape = struct.unpack_from(f"<{ndim}I", raw, offset)
            offset += 4 * ndim
            shapes.append(shape)
    except struct.error:
        raise FormatError(f"{path}: truncated checkpoint header") from None
    arrays = []
    for shape in shapes:
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * 4
        if offset + nbytes > len(raw):
            raise FormatError(f"{path}: truncated checkpoint data")
        arrays.append(np.frombuffer(raw, dtype="<f4", count=count, offset=offset).reshape(shape))
        offset += nbytes
    if offset != len(raw):
        raise FormatError(f"{path}: {len(raw) - offset} trailing bytes in checkpoint")
    model = build_model(variant, seed=0, dtype=dtype)
    model.set_state(arrays)
    return model
