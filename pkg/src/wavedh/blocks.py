"""Network building blocks: WaveDown, WaveUp, WaveBlock and their parts.

Every block comes in two halves that share one layer plan:

* ``<block>_layers(...)`` lists the block's convolutions (and the fixed
  wavelet / pixel-shuffle stages) with their ``ConvSpec`` and the spatial
  scale at which each runs relative to the block input.  The weight manifest,
  random initialisation and the complexity profiler are all derived from it.
* ``<block>(x, params, ...)`` is the forward function.  ``params`` is a
  :class:`Params` view rooted at the block's path prefix.

No normalisation layers are used anywhere; every learned conv has a bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import tensor as T
from .errors import ConfigError, DimensionError, ManifestError
from .tensor import ConvSpec
from .wavelet import Subbands, dwt2, idwt2

GROUP_CONV_GROUPS = 4
CCA_REDUCTION = 4
CCA_MIN_HIDDEN = 4
FMB_KERNEL = 7
MIXERS_PER_FMB = 2
ESDB_STAGES = 3


class ConvKind(str, Enum):
    STANDARD = "standard"
    GROUP = "group"
    DEPTHWISE = "depthwise"


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


# --------------------------------------------------------------------------- #
# layer plans

@dataclass(frozen=True)
class Layer:
    """One compute stage of a block.

    ``kind`` is ``"conv"`` for learned convolutions, or one of ``"dwt"``,
    ``"idwt"``, ``"pixel_shuffle"`` for fixed stages.  ``channels`` is only
    used by fixed stages: the input width for ``dwt`` and the output width for
    ``idwt`` and ``pixel_shuffle``.  ``pooled`` marks convs applied to a 1x1
    channel descriptor rather than a feature map.
    """

    name: str
    kind: str
    spec: ConvSpec | None = None
    channels: int = 0
    scale: Fraction = Fraction(1)
    pooled: bool = False

    @property
    def param_count(self) -> int:
        return self.spec.param_count if self.spec is not None else 0

    def output_hw(self, h: int, w: int) -> tuple:
        if self.pooled:
            return 1, 1
        ho, wo = h * self.scale, w * self.scale
        if ho.denominator != 1 or wo.denominator != 1:
            raise DimensionError(f"{self.name}: {h}x{w} not divisible at scale {self.scale}")
        return int(ho), int(wo)

    def macs(self, h: int, w: int) -> int:
        """Multiply-accumulates for a block input of ``h`` x ``w``.

        Fixed stages count their conv-equivalent: each Haar output sample
        combines four inputs, each pixel-shuffle output copies one.  Pooled
        convs act on a per-channel descriptor vector, which is bookkept like
        the pooling itself (as element-wise work, i.e. zero), so totals scale
        exactly with input area.
        """
        ho, wo = self.output_hw(h, w)
        if self.pooled:
            return 0
        if self.kind == "conv":
            return self.spec.macs(ho, wo)
        if self.kind == "dwt":
            return 4 * (4 * self.channels) * ho * wo
        if self.kind == "idwt":
            return 4 * self.channels * ho * wo
        if self.kind == "pixel_shuffle":
            return self.channels * ho * wo
        raise ValueError(f"unknown layer kind {self.kind!r}")


def _conv(name, c_in, c_out, k=1, *, groups=1, dilation=1, scale=1, pooled=False) -> Layer:
    spec = ConvSpec.square(c_in, c_out, k, groups=groups, dilation=dilation)
    return Layer(name, "conv", spec, scale=Fraction(scale), pooled=pooled)


def _fixed(name, kind, channels, scale) -> Layer:
    return Layer(name, kind, None, channels, Fraction(scale))


def nest(prefix: str, layers, scale=1) -> list:
    scale = Fraction(scale)
    return [replace(l, name=f"{prefix}.{l.name}", scale=l.scale * scale) for l in layers]


def conv_specs(layers) -> dict:
    return {l.name: l.spec for l in layers if l.kind == "conv"}


def weight_manifest(layers) -> dict:
    """Parameter path -> shape for every learned conv in ``layers``."""
    out = {}
    for l in layers:
        if l.kind != "conv":
            continue
        out[f"{l.name}.weight"] = l.spec.weight_shape
        if l.spec.has_bias:
            out[f"{l.name}.bias"] = (l.spec.out_channels,)
    return out


# --------------------------------------------------------------------------- #
# parameter access

class Params:
    """Read-only view of a flat ``path -> array`` map under a path prefix."""

    def __init__(self, store: Mapping[str, np.ndarray], prefix: str = ""):
        self._store = store
        self.prefix = prefix

    def sub(self, name: str) -> "Params":
        return Params(self._store, f"{self.prefix}{name}.")

    def get(self, name: str) -> np.ndarray:
        path = self.prefix + name
        try:
            return self._store[path]
        except KeyError:
            raise ManifestError(missing=[path]) from None

    def conv(self, name: str, x: np.ndarray, spec: ConvSpec) -> np.ndarray:
        bias = self.get(f"{name}.bias") if spec.has_bias else None
        return T.conv2d(x, self.get(f"{name}.weight"), bias, spec)


def zero_params(layers) -> dict:
    return {k: np.zeros(s, dtype=T.DTYPE) for k, s in weight_manifest(layers).items()}


def _check_kind(kind) -> ConvKind:
    try:
        return ConvKind(kind)
    except ValueError:
        raise ConfigError(f"unknown conv kind {kind!r}") from None


def _require_even(d: int, what: str) -> None:
    if d < 2 or d % 2:
        raise ConfigError(f"{what} needs an even channel count, got {d}")


# --------------------------------------------------------------------------- #
# FMBConv

def expansion_width(d: int, r_conv: float) -> int:
    return round_half_up(d * r_conv)


def fmbconv_layers(d: int, kind=ConvKind.GROUP, r_conv: float = 1.5) -> list:
    kind = _check_kind(kind)
    e = expansion_width(d, r_conv)
    if e < 1:
        raise ConfigError(f"r_conv={r_conv} gives empty expansion for {d} channels")
    if kind is ConvKind.DEPTHWISE:
        return [_conv("dw", d, d, 3, groups=d), _conv("expand", d, e), _conv("project", e, d)]
    groups = GROUP_CONV_GROUPS if kind is ConvKind.GROUP else 1
    if d % groups or e % groups:
        raise ConfigError(f"group conv: {groups} groups must divide {d} and expansion {e}")
    return [_conv("expand", d, e, 3, groups=groups), _conv("project", e, d)]


def fmbconv(x, p: Params, kind=ConvKind.GROUP, r_conv: float = 1.5):
    """Fused-MBConv without SE: ``x + project(silu(expand3x3(x)))``.

    For the depthwise kind the 3x3 stage is a depthwise conv followed by a 1x1
    expansion.
    """
    kind = _check_kind(kind)
    s = conv_specs(fmbconv_layers(x.shape[1], kind, r_conv))
    if kind is ConvKind.DEPTHWISE:
        h = p.conv("expand", p.conv("dw", x, s["dw"]), s["expand"])
    else:
        h = p.conv("expand", x, s["expand"])
    return T.add(x, p.conv("project", T.silu(h), s["project"]))


# --------------------------------------------------------------------------- #
# contrast-aware channel attention and the WaveUp fusion module

def cca_hidden(c: int) -> int:
    return max(c // CCA_REDUCTION, CCA_MIN_HIDDEN)


def cca_layers(c: int) -> list:
    hid = cca_hidden(c)
    return [_conv("reduce", c, hid, pooled=True), _conv("restore", hid, c, pooled=True)]


def cca_weights(x, p: Params):
    """Per-channel attention in (0, 1), shape (n, c, 1, 1)."""
    s = conv_specs(cca_layers(x.shape[1]))
    mean, std = T.per_channel_stats(x)
    d = (mean + std)[:, :, None, None]
    h = T.relu(p.conv("reduce", d, s["reduce"]))
    return T.sigmoid(p.conv("restore", h, s["restore"]))


def cca(x, p: Params):
    return x * cca_weights(x, p)


def fusion_layers(c: int, kind=ConvKind.GROUP, r_conv: float = 1.5) -> list:
    """``c`` is the width of each fused input (and of the output)."""
    return nest("cca", cca_layers(2 * c)) + nest("fmbconv", fmbconv_layers(c, kind, r_conv))


def fusion(f1, f2, p: Params, kind=ConvKind.GROUP, r_conv: float = 1.5):
    if f1.shape != f2.shape:
        raise DimensionError(f"fusion inputs differ: {f1.shape} vs {f2.shape}")
    att = cca(T.concat_channels([f1, f2]), p.sub("cca"))
    a1, a2 = T.split_channels(att, 2)
    return fmbconv(T.add(a1, a2), p.sub("fmbconv"), kind, r_conv)


# --------------------------------------------------------------------------- #
# WaveDown

def wave_attention_layers(d: int) -> list:
    return [
        _conv("dw_lh", d, d, 3, groups=d),
        _conv("dw_hl", d, d, 3, groups=d),
        _conv("expand", d, 2 * d),
    ]


def wave_attention(sb: Subbands, p: Params):
    """Sigmoid map over 2D channels built from the LL, LH and HL bands (HH unused)."""
    d = sb.ll.shape[1]
    s = conv_specs(wave_attention_layers(d))
    a = p.conv("dw_lh", T.add(sb.ll, sb.lh), s["dw_lh"])
    b = p.conv("dw_hl", T.add(sb.ll, sb.hl), s["dw_hl"])
    return T.sigmoid(p.conv("expand", T.add(a, b), s["expand"]))


def wave_down_layers(d: int) -> list:
    half = Fraction(1, 2)
    return (
        [_fixed("dwt", "dwt", d, half), _conv("squeeze", 4 * d, 2 * d, scale=half)]
        + nest("att", wave_attention_layers(d), half)
    )


def wave_down(x, p: Params):
    """Returns ``(y, highs)``: y has 2D channels at half resolution, ``highs``
    is ``[lh, hl, hh]`` (3D channels) for the matching WaveUp."""
    d = x.shape[1]
    sb = dwt2(x)
    s = conv_specs(wave_down_layers(d))
    squeezed = p.conv("squeeze", T.concat_channels(sb), s["squeeze"])
    m = wave_attention(sb, p.sub("att"))
    y = T.add(T.hadamard(squeezed, m), squeezed)
    return y, sb.highs()


# --------------------------------------------------------------------------- #
# WaveUp

def wave_up_layers(d: int, kind=ConvKind.GROUP, r_conv: float = 1.5) -> list:
    _require_even(d, "wave_up")
    half = d // 2
    return (
        [
            _conv("expand", half, 2 * d),
            _fixed("pixel_shuffle", "pixel_shuffle", half, 2),
            _fixed("idwt", "idwt", half, 2),
        ]
        + nest("fusion", fusion_layers(half, kind, r_conv), 2)
    )


def wave_up(x, highs, p: Params, kind=ConvKind.GROUP, r_conv: float = 1.5):
    """D channels at HxW plus 3(D/2) stored detail channels -> D/2 at 2Hx2W."""
    d = x.shape[1]
    _require_even(d, "wave_up")
    half = d // 2
    if highs.ndim != 4 or highs.shape[1] != 3 * half or highs.shape[2:] != x.shape[2:] \
            or highs.shape[0] != x.shape[0]:
        raise DimensionError(
            f"wave_up: highs must be {(x.shape[0], 3 * half) + x.shape[2:]}, got {highs.shape}"
        )
    s = conv_specs(wave_up_layers(d, kind, r_conv))
    f1, f2 = T.split_channels(x, 2)
    up_ps = T.pixel_shuffle(p.conv("expand", f1, s["expand"]), 2)
    lh, hl, hh = T.split_channels(highs, 3)
    up_wt = idwt2((f2, lh, hl, hh))
    return fusion(up_ps, up_wt, p.sub("fusion"), kind, r_conv)


# --------------------------------------------------------------------------- #
# FMB (shuffle-mixer layers + FMBConv)

def projection_hidden(d: int, r_mlp: float) -> int:
    return round_half_up(d // 2 * r_mlp)


def channel_projection_layers(d: int, r_mlp: float = 1.25) -> list:
    _require_even(d, "channel projection")
    half, hid = d // 2, projection_hidden(d, r_mlp)
    return [_conv("fc1", half, hid), _conv("fc2", hid, half)]


def channel_projection(u, p: Params, r_mlp: float = 1.25):
    """Point-wise MLP on the first channel half, interleaved back by a 2-group
    channel shuffle and added to the input."""
    s = conv_specs(channel_projection_layers(u.shape[1], r_mlp))
    u1, u2 = T.split_channels(u, 2)
    v = p.conv("fc2", T.silu(p.conv("fc1", u1, s["fc1"])), s["fc2"])
    mixed = T.channel_shuffle(T.concat_channels([v, np.zeros_like(u2)]), 2)
    return T.add(u, mixed)


def shuffle_mixer_layers(d: int, r_mlp: float = 1.25) -> list:
    return (
        nest("proj_in", channel_projection_layers(d, r_mlp))
        + [_conv("spatial", d, d, FMB_KERNEL, groups=d)]
        + nest("proj_out", channel_projection_layers(d, r_mlp))
    )


def shuffle_mixer(x, p: Params, r_mlp: float = 1.25):
    s = conv_specs(shuffle_mixer_layers(x.shape[1], r_mlp))
    x = channel_projection(x, p.sub("proj_in"), r_mlp)
    x = T.add(x, p.conv("spatial", x, s["spatial"]))
    return channel_projection(x, p.sub("proj_out"), r_mlp)


def fmb_layers(d: int, kind=ConvKind.GROUP, r_mlp: float = 1.25, r_conv: float = 1.5) -> list:
    _require_even(d, "fmb")
    layers = []
    for i in range(MIXERS_PER_FMB):
        layers += nest(f"mixer{i}", shuffle_mixer_layers(d, r_mlp))
    return layers + nest("fmbconv", fmbconv_layers(d, kind, r_conv))


def fmb(x, p: Params, kind=ConvKind.GROUP, r_mlp: float = 1.25, r_conv: float = 1.5):
    _require_even(x.shape[1], "fmb")
    for i in range(MIXERS_PER_FMB):
        x = shuffle_mixer(x, p.sub(f"mixer{i}"), r_mlp)
    return fmbconv(x, p.sub("fmbconv"), kind, r_conv)


# --------------------------------------------------------------------------- #
# LKA and ESDB

def lka_layers(d: int) -> list:
    return [
        _conv("dw", d, d, 5, groups=d),
        _conv("dwd", d, d, 7, groups=d, dilation=3),
        _conv("pw", d, d),
    ]


def lka(x, p: Params):
    s = conv_specs(lka_layers(x.shape[1]))
    a = p.conv("pw", p.conv("dwd", p.conv("dw", x, s["dw"]), s["dwd"]), s["pw"])
    return T.hadamard(x, a)


def lka_attention_layers(d: int) -> list:
    return [_conv("proj_in", d, d)] + nest("lka", lka_layers(d)) + [_conv("proj_out", d, d)]


def lka_attention(x, p: Params):
    """``x + proj_out(lka(silu(proj_in(x))))``."""
    s = conv_specs(lka_attention_layers(x.shape[1]))
    h = T.silu(p.conv("proj_in", x, s["proj_in"]))
    h = lka(h, p.sub("lka"))
    return T.add(x, p.conv("proj_out", h, s["proj_out"]))


def bsrb_layers(d: int) -> list:
    return [_conv("pw", d, d), _conv("dw", d, d, 3, groups=d)]


def bsrb(t, p: Params):
    s = conv_specs(bsrb_layers(t.shape[1]))
    return T.add(t, p.conv("dw", p.conv("pw", t, s["pw"]), s["dw"]))


def esdb_layers(d: int) -> list:
    _require_even(d, "esdb")
    half = d // 2
    layers = []
    for i in range(ESDB_STAGES):
        layers.append(_conv(f"distill{i}", d, half))
        layers += nest(f"bsrb{i}", bsrb_layers(d))
    layers.append(_conv(f"distill{ESDB_STAGES}", d, half))
    layers.append(_conv("fuse", (ESDB_STAGES + 1) * half, d))
    return layers + nest("attn", lka_attention_layers(d))


def esdb(x, p: Params):
    """Distillation block without an outer residual."""
    d = x.shape[1]
    s = conv_specs(esdb_layers(d))
    taps, cur = [], x
    for i in range(ESDB_STAGES):
        taps.append(p.conv(f"distill{i}", cur, s[f"distill{i}"]))
        cur = bsrb(cur, p.sub(f"bsrb{i}"))
    last = f"distill{ESDB_STAGES}"
    taps.append(p.conv(last, cur, s[last]))
    fused = p.conv("fuse", T.concat_channels(taps), s["fuse"])
    return lka_attention(fused, p.sub("attn"))


# --------------------------------------------------------------------------- #
# WaveBlock

def wave_block_layers(d: int, n_fmb: int = 1, kind=ConvKind.GROUP,
                      r_mlp: float = 1.25, r_conv: float = 1.5) -> list:
    half = Fraction(1, 2)
    layers = [_fixed("dwt", "dwt", d, half)]
    for i in range(n_fmb):
        layers += nest(f"fmb{i}", fmb_layers(d, kind, r_mlp, r_conv), half)
    layers.append(_fixed("idwt", "idwt", d, 1))
    return layers + nest("esdb", esdb_layers(d))


def wave_block(x, p: Params, n_fmb: int = 1, kind=ConvKind.GROUP,
               r_mlp: float = 1.25, r_conv: float = 1.5):
    """Coarse-to-fine refinement: FMBs on the LL band, IDWT with the untouched
    detail bands, then ESDB, plus the outer residual."""
    sb = dwt2(x)
    ll = sb.ll
    for i in range(n_fmb):
        ll = fmb(ll, p.sub(f"fmb{i}"), kind, r_mlp, r_conv)
    rebuilt = idwt2((ll, sb.lh, sb.hl, sb.hh))
    return T.add(x, esdb(rebuilt, p.sub("esdb")))
