"""Neural network layers with explicit forward/backward passes (numpy only).

Convolutions are 3x3, stride 1, same-padding, implemented as im2col + GEMM;
the column matrix from the forward pass is cached and reused for the weight
gradient. Average pooling is non-overlapping with stride equal to its kernel.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..errors import DataError


class Param:
    """A trainable array and its gradient accumulator."""

    def __init__(self, value: np.ndarray, name: str = ""):
        self.value = value
        self.grad = np.zeros_like(value)
        self.name = name

    def zero_grad(self):
        self.grad.fill(0.0)


class Conv2D:
    """Same-padded 3x3 convolution (cross-correlation), stride 1.
    Weights ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero."""

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator,
                 dtype=np.float32, kernel: int = 3):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.pad = kernel // 2
        fan_in = in_channels * kernel * kernel
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(out_channels, in_channels, kernel, kernel))
        self.weight = Param(w.astype(dtype), "weight")
        self.bias = Param(np.zeros(out_channels, dtype=dtype), "bias")
        self._cols = None
        self._in_shape = None

    def params(self):
        return [self.weight, self.bias]

    def _im2col(self, xp: np.ndarray, h: int, w: int) -> np.ndarray:
        b, c = xp.shape[0], xp.shape[1]
        k = self.kernel
        sb, sc, sh, sw = xp.strides
        windows = as_strided(xp, shape=(b, c, k, k, h, w), strides=(sb, sc, sh, sw, sh, sw))
        # (B, H, W, C, k, k) -> rows of C*k*k patch values
        return np.ascontiguousarray(windows.transpose(0, 4, 5, 1, 2, 3)).reshape(b * h * w, c * k * k)

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        if c != self.in_channels:
            raise DataError(f"conv expected {self.in_channels} input channels, got {c}")
        p = self.pad
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        cols = self._im2col(xp, h, w)
        self._cols = cols
        self._in_shape = x.shape
        wmat = self.weight.value.reshape(self.out_channels, -1)
        out = cols @ wmat.T
        out += self.bias.value
        return out.reshape(b, h, w, self.out_channels).transpose(0, 3, 1, 2)

    def backward(self, gout: np.ndarray) -> np.ndarray:
        b, c, h, w = self._in_shape
        k, p = self.kernel, self.pad
        gmat = gout.transpose(0, 2, 3, 1).reshape(b * h * w, self.out_channels)
        self.weight.grad += (gmat.T @ self._cols).reshape(self.weight.value.shape)
        self.bias.grad += gmat.sum(axis=0)
        wmat = self.weight.value.reshape(self.out_channels, -1)
        dcols = (gmat @ wmat).reshape(b, h, w, c, k, k)
        dxp = np.zeros((b, c, h + 2 * p, w + 2 * p), dtype=gout.dtype)
        for ki in range(k):
            for kj in range(k):
                dxp[:, :, ki:ki + h, kj:kj + w] += dcols[:, :, :, :, ki, kj].transpose(0, 3, 1, 2)
        self._cols = None
        return dxp[:, :, p:p + h, p:p + w]


class ReLU:
    def __init__(self):
        self._mask = None

    def params(self):
        return []

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, x.dtype.type(0))

    def backward(self, gout: np.ndarray) -> np.ndarray:
        return np.where(self._mask, gout, gout.dtype.type(0))


class AvgPool2D:
    """Non-overlapping average pooling; input dims must divide the kernel."""

    def __init__(self, kernel: tuple[int, int]):
        self.kh, self.kw = kernel
        self._in_shape = None

    def params(self):
        return []

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        if h % self.kh or w % self.kw:
            raise DataError(f"pool kernel {(self.kh, self.kw)} does not divide input {(h, w)}")
        self._in_shape = x.shape
        return x.reshape(b, c, h // self.kh, self.kh, w // self.kw, self.kw).mean(axis=(3, 5))

    def backward(self, gout: np.ndarray) -> np.ndarray:
        b, c, h, w = self._in_shape
        scale = gout.dtype.type(1.0 / (self.kh * self.kw))
        g = (gout * scale)[:, :, :, None, :, None]
        return np.broadcast_to(g, (b, c, h // self.kh, self.kh, w // self.kw, self.kw)).reshape(b, c, h, w)


class Flatten:
    def __init__(self):
        self._in_shape = None

    def params(self):
        return []

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, gout: np.ndarray) -> np.ndarray:
        return gout.reshape(self._in_shape)


class Dense:
    """Affine layer y = xW + b with W ~ U(+/-1/sqrt(in_features))."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator,
                 dtype=np.float32):
        self.in_features = in_features
        self.out_features = out_features
        bound = 1.0 / np.sqrt(in_features)
        w = rng.uniform(-bound, bound, size=(in_features, out_features))
        self.weight = Param(w.astype(dtype), "weight")
        self.bias = Param(np.zeros(out_features, dtype=dtype), "bias")
        self._x = None

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[1] != self.in_features:
            raise DataError(f"dense expected {self.in_features} features, got {x.shape[1]}")
        self._x = x
        return x @ self.weight.value + self.bias.value

    def backward(self, gout: np.ndarray) -> np.ndarray:
        self.weight.grad += self._x.T @ gout
        self.bias.grad += gout.sum(axis=0)
        self._x = None
        return gout @ self.weight.value.T
