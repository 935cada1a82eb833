"""Dense NCHW float32 kernels.

A tensor is a plain ``numpy.ndarray`` of dtype float32 and rank 4
``(n, c, h, w)``.  Every function here is pure: inputs are never written to.

``conv2d`` lowers to an im2col matrix whose reduction axis is laid out as
(kernel-row, kernel-col, in-channel) followed by a single float32 GEMM per
group, so the reduction order for every output element is fixed by the data
layout and does not depend on how many BLAS threads split the output.
Depthwise convolutions take a direct tap loop instead (GEMM with one row per
group is slow), accumulating taps in (kernel-row, kernel-col) order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .errors import ConfigError, DimensionError

DTYPE = np.float32
STD_EPS = 1e-5

_ONE_BELOW = np.nextafter(DTYPE(1.0), DTYPE(0.0))
_TINY = np.finfo(DTYPE).tiny
_DW_CHUNK_BYTES = 1 << 17


def as_tensor(x) -> np.ndarray:
    """Return ``x`` as a C-contiguous float32 rank-4 array, validating dims."""
    arr = np.ascontiguousarray(x, dtype=DTYPE)
    if arr.ndim != 4:
        raise DimensionError(f"expected rank-4 (n, c, h, w) tensor, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise DimensionError(f"all dimensions must be >= 1, got {arr.shape}")
    return arr


def _check_rank4(x: np.ndarray, what: str = "input") -> None:
    if x.ndim != 4:
        raise DimensionError(f"{what} must be rank 4 (n, c, h, w), got shape {x.shape}")


@dataclass(frozen=True)
class ConvSpec:
    in_channels: int
    out_channels: int
    kernel_h: int = 1
    kernel_w: int = 1
    stride: int = 1
    padding: int = 0
    dilation: int = 1
    groups: int = 1
    has_bias: bool = True

    def __post_init__(self):
        for name in ("in_channels", "out_channels", "kernel_h", "kernel_w"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.groups < 1:
            raise ConfigError("groups must be >= 1")
        if self.in_channels % self.groups or self.out_channels % self.groups:
            raise ConfigError(
                f"groups={self.groups} must divide in_channels={self.in_channels} "
                f"and out_channels={self.out_channels}"
            )
        if self.stride < 1 or self.dilation < 1 or self.padding < 0:
            raise ConfigError("stride and dilation must be >= 1, padding >= 0")

    @classmethod
    def square(cls, c_in, c_out, k=1, *, groups=1, dilation=1, stride=1, bias=True):
        """'Same'-padded square kernel (stride 1 keeps the spatial size)."""
        pad = dilation * (k - 1) // 2
        return cls(c_in, c_out, k, k, stride, pad, dilation, groups, bias)

    @property
    def weight_shape(self) -> tuple:
        return (self.out_channels, self.in_channels // self.groups, self.kernel_h, self.kernel_w)

    @property
    def fan_in(self) -> int:
        return self.kernel_h * self.kernel_w * (self.in_channels // self.groups)

    @property
    def param_count(self) -> int:
        n = int(np.prod(self.weight_shape))
        return n + (self.out_channels if self.has_bias else 0)

    def output_hw(self, h: int, w: int) -> tuple:
        ho = (h + 2 * self.padding - self.dilation * (self.kernel_h - 1) - 1) // self.stride + 1
        wo = (w + 2 * self.padding - self.dilation * (self.kernel_w - 1) - 1) // self.stride + 1
        return ho, wo

    def macs(self, h_out: int, w_out: int) -> int:
        return self.fan_in * self.out_channels * h_out * w_out


def conv2d(x: np.ndarray, weight: np.ndarray, bias=None, spec: ConvSpec | None = None) -> np.ndarray:
    """2-D cross-correlation with zero padding.

    When ``spec`` is omitted a stride-1, unpadded, ungrouped convolution is
    assumed with channel counts taken from ``weight``.
    """
    _check_rank4(x)
    if weight.ndim != 4:
        raise DimensionError(f"weight must be rank 4, got shape {weight.shape}")
    if spec is None:
        oc, icg, kh, kw = weight.shape
        spec = ConvSpec(icg, oc, kh, kw, has_bias=bias is not None)
    if tuple(weight.shape) != spec.weight_shape:
        raise DimensionError(f"weight shape {tuple(weight.shape)} != expected {spec.weight_shape}")
    n, c, h, w = x.shape
    if c != spec.in_channels:
        raise DimensionError(f"input has {c} channels, conv expects {spec.in_channels}")
    if bias is not None and np.shape(bias) != (spec.out_channels,):
        raise DimensionError(f"bias shape {np.shape(bias)} != ({spec.out_channels},)")
    ho, wo = spec.output_hw(h, w)
    if ho < 1 or wo < 1:
        raise DimensionError(f"input {h}x{w} too small for kernel {spec.kernel_h}x{spec.kernel_w}")

    x = np.ascontiguousarray(x, dtype=DTYPE)
    weight = np.asarray(weight, dtype=DTYPE)
    p = spec.padding
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x

    g = spec.groups
    icg = spec.in_channels // g
    ocg = spec.out_channels // g
    if icg == 1 and ocg == 1:
        out = _depthwise(xp, weight, spec, ho, wo)
    else:
        out = _grouped_gemm(xp, weight, spec, ho, wo)
    if bias is not None:
        out += np.asarray(bias, dtype=DTYPE)[None, :, None, None]
    return out


def _tap(xp, kh, kw, spec, ho, wo):
    hs, ws, s = kh * spec.dilation, kw * spec.dilation, spec.stride
    return xp[:, :, hs:hs + s * (ho - 1) + 1:s, ws:ws + s * (wo - 1) + 1:s]


def _depthwise(xp, weight, spec, ho, wo):
    n, c = xp.shape[:2]
    out = np.zeros((n, c, ho, wo), dtype=DTYPE)
    # channel chunks sized to stay cache-resident across the tap loop
    per = max(1, _DW_CHUNK_BYTES // (n * ho * wo * 4))
    tmp = np.empty((n, min(per, c), ho, wo), dtype=DTYPE)
    for c0 in range(0, c, per):
        c1 = min(c, c0 + per)
        acc, t, xs = out[:, c0:c1], tmp[:, :c1 - c0], xp[:, c0:c1]
        for kh in range(spec.kernel_h):
            for kw in range(spec.kernel_w):
                np.multiply(_tap(xs, kh, kw, spec, ho, wo), weight[None, c0:c1, 0, kh, kw, None, None], out=t)
                acc += t
    return out


def _grouped_gemm(xp, weight, spec, ho, wo):
    n = xp.shape[0]
    g = spec.groups
    icg = spec.in_channels // g
    ocg = spec.out_channels // g
    kh, kw = spec.kernel_h, spec.kernel_w
    k = kh * kw * icg
    if kh == kw == 1 and spec.stride == 1:
        cols = xp.reshape(n, g, icg, ho * wo)
    else:
        sn, sc, sh, sw = xp.strides
        d, s = spec.dilation, spec.stride
        view = as_strided(
            xp,
            shape=(n, g, kh, kw, icg, ho, wo),
            strides=(sn, sc * icg, sh * d, sw * d, sc, sh * s, sw * s),
            writeable=False,
        )
        cols = np.ascontiguousarray(view).reshape(n, g, k, ho * wo)
    wm = weight.reshape(g, ocg, icg, kh, kw).transpose(0, 1, 3, 4, 2)
    wm = np.ascontiguousarray(wm).reshape(1, g, ocg, k)
    out = np.matmul(wm, cols)
    return out.reshape(n, spec.out_channels, ho, wo)


def pixel_shuffle(x: np.ndarray, factor: int) -> np.ndarray:
    """(n, c*f*f, h, w) -> (n, c, h*f, w*f) in sub-pixel convolution layout."""
    _check_rank4(x)
    n, c, h, w = x.shape
    f = int(factor)
    if f < 1 or c % (f * f):
        raise ConfigError(f"channels {c} not divisible by factor^2 = {f * f}")
    out = x.reshape(n, c // (f * f), f, f, h, w).transpose(0, 1, 4, 2, 5, 3)
    return np.ascontiguousarray(out).reshape(n, c // (f * f), h * f, w * f)


def pixel_unshuffle(x: np.ndarray, factor: int) -> np.ndarray:
    _check_rank4(x)
    n, c, h, w = x.shape
    f = int(factor)
    if f < 1 or h % f or w % f:
        raise DimensionError(f"spatial dims {h}x{w} not divisible by factor {f}")
    out = x.reshape(n, c, h // f, f, w // f, f).transpose(0, 1, 3, 5, 2, 4)
    return np.ascontiguousarray(out).reshape(n, c * f * f, h // f, w // f)


def _same_shape(a, b, op):
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _same_shape(a, b, "add")
    return np.add(a, b, dtype=DTYPE)


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _same_shape(a, b, "hadamard")
    return np.multiply(a, b, dtype=DTYPE)


def _logistic(x):
    # exp(-|x|) never overflows
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(DTYPE, copy=False)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Logistic function, clamped so every output lies strictly inside (0, 1)."""
    return np.clip(_logistic(np.asarray(x, dtype=DTYPE)), _TINY, _ONE_BELOW)


def silu(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=DTYPE)
    return x * _logistic(x)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, DTYPE(0.0))


def concat_channels(tensors) -> np.ndarray:
    tensors = list(tensors)
    if not tensors:
        raise DimensionError("concat_channels needs at least one tensor")
    ref = tensors[0].shape
    for t in tensors:
        _check_rank4(t)
        if t.shape[0] != ref[0] or t.shape[2:] != ref[2:]:
            raise DimensionError(f"concat_channels: incompatible shapes {ref} vs {t.shape}")
    return np.concatenate(tensors, axis=1).astype(DTYPE, copy=False)


def split_channels(x: np.ndarray, parts) -> list:
    """Split along channels; ``parts`` is a count (equal split) or a list of widths."""
    _check_rank4(x)
    c = x.shape[1]
    if isinstance(parts, int):
        if parts < 1 or c % parts:
            raise DimensionError(f"cannot split {c} channels into {parts} equal parts")
        widths = [c // parts] * parts
    else:
        widths = list(parts)
        if sum(widths) != c or min(widths) < 1:
            raise DimensionError(f"split widths {widths} do not sum to {c}")
    out, start = [], 0
    for wdt in widths:
        out.append(x[:, start:start + wdt])
        start += wdt
    return out


def channel_shuffle(x: np.ndarray, groups: int) -> np.ndarray:
    """ShuffleNet channel shuffle: view as (groups, c/groups), transpose, flatten."""
    _check_rank4(x)
    n, c, h, w = x.shape
    if groups < 1 or c % groups:
        raise ConfigError(f"channels {c} not divisible by groups {groups}")
    out = x.reshape(n, groups, c // groups, h, w).transpose(0, 2, 1, 3, 4)
    return np.ascontiguousarray(out).reshape(n, c, h, w)


def reflect_pad(x: np.ndarray, edges) -> np.ndarray:
    """Mirror padding excluding the edge sample; ``edges`` = (top, bottom, left, right)."""
    _check_rank4(x)
    top, bottom, left, right = (int(e) for e in edges)
    if min(top, bottom, left, right) < 0:
        raise DimensionError("padding edges must be non-negative")
    if not (top or bottom or left or right):
        return x.copy()
    return np.pad(x, ((0, 0), (0, 0), (top, bottom), (left, right)), mode="reflect")


def crop(x: np.ndarray, edges) -> np.ndarray:
    """Remove ``edges`` = (top, bottom, left, right) pixels."""
    _check_rank4(x)
    top, bottom, left, right = (int(e) for e in edges)
    h, w = x.shape[2:]
    if min(top, bottom, left, right) < 0 or top + bottom >= h or left + right >= w:
        raise DimensionError(f"cannot crop {edges} from {h}x{w}")
    return np.ascontiguousarray(x[:, :, top:h - bottom, left:w - right])


def per_channel_stats(x: np.ndarray):
    """Per-(sample, channel) mean and population std with ``STD_EPS`` inside the root.

    Returns two arrays of shape (n, c).
    """
    _check_rank4(x)
    mean = x.mean(axis=(2, 3), dtype=DTYPE)
    var = np.square(x - mean[:, :, None, None]).mean(axis=(2, 3), dtype=DTYPE)
    return mean, np.sqrt(var + DTYPE(STD_EPS))
