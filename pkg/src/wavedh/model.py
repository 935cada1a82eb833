"""Full encoder-decoder graph, configuration presets and complexity profiling."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import blocks as B
from . import tensor as T
from .blocks import ConvKind, Layer, Params
from .errors import ConfigError, DimensionError, DomainError, ManifestError

SIZE_MULTIPLE = 8


@dataclass(frozen=True)
class ModelConfig:
    blocks: tuple = (1, 2, 3)
    dims: tuple = (32, 64, 128, 64, 32)
    conv_kind: ConvKind = ConvKind.GROUP
    r_conv: float = 1.5
    r_mlp: float = 1.25
    in_channels: int = 3
    fmb_per_block: int = 1

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        try:
            object.__setattr__(self, "conv_kind", ConvKind(self.conv_kind))
        except ValueError:
            raise ConfigError(f"unknown conv kind {self.conv_kind!r}") from None
        if len(self.blocks) != 3 or min(self.blocks) < 0:
            raise ConfigError(f"blocks must be three non-negative counts, got {self.blocks}")
        if len(self.dims) != 5 or min(self.dims) < 1:
            raise ConfigError(f"dims must be five positive widths, got {self.dims}")
        d1, d2, d3, d4, d5 = self.dims
        if not (d2 == 2 * d1 and d3 == 2 * d2 and d4 == d2 and d5 == d1):
            raise ConfigError(f"dims {self.dims} are not a symmetric U (d, 2d, 4d, 2d, d)")
        if d1 % 2:
            raise ConfigError("base width must be even")
        if self.r_conv <= 0 or self.r_mlp <= 0:
            raise ConfigError("expansion ratios must be positive")
        if self.in_channels < 1 or self.fmb_per_block < 0:
            raise ConfigError("in_channels must be >= 1 and fmb_per_block >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["blocks"], d["dims"] = list(self.blocks), list(self.dims)
        d["conv_kind"] = self.conv_kind.value
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return "wavedh-" + hashlib.sha256(blob).hexdigest()[:16]


PRESETS = {
    "wavedh": ModelConfig((1, 2, 3), (32, 64, 128, 64, 32), ConvKind.GROUP),
    "tiny": ModelConfig((1, 2, 2), (24, 48, 96, 48, 24), ConvKind.DEPTHWISE),
}


def preset(name: str) -> ModelConfig:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown config {name!r}; choose from {sorted(PRESETS)}") from None


def _block_opts(cfg: ModelConfig) -> dict:
    return dict(kind=cfg.conv_kind, r_mlp=cfg.r_mlp, r_conv=cfg.r_conv)


def model_layers(cfg: ModelConfig) -> list:
    """Every stage of the network in execution order, scaled to the input size."""
    d1, d2, d3, d4, d5 = cfg.dims
    opts = _block_opts(cfg)
    up = dict(kind=cfg.conv_kind, r_conv=cfg.r_conv)
    layers = [B._conv("head", cfg.in_channels, d1, 3)]
    for stage, (n, d, scale) in enumerate([(cfg.blocks[0], d1, 1), (cfg.blocks[1], d2, Fraction(1, 2))]):
        for i in range(n):
            layers += B.nest(f"enc{stage}.block{i}", B.wave_block_layers(d, cfg.fmb_per_block, **opts), scale)
        layers += B.nest(f"enc{stage}.down", B.wave_down_layers(d), scale)
    for i in range(cfg.blocks[2]):
        layers += B.nest(f"mid.block{i}", B.wave_block_layers(d3, cfg.fmb_per_block, **opts), Fraction(1, 4))
    layers += B.nest("dec0.up", B.wave_up_layers(d3, **up), Fraction(1, 4))
    layers += B.nest("dec1.up", B.wave_up_layers(d4, **up), Fraction(1, 2))
    layers.append(B._conv("tail", d5, cfg.in_channels, 3))
    return layers


def manifest(cfg: ModelConfig) -> dict:
    """Parameter path -> shape demanded by ``cfg``."""
    return B.weight_manifest(model_layers(cfg))


@dataclass(frozen=True)
class Model:
    config: ModelConfig
    weights: Mapping = field(repr=False)

    @property
    def params(self) -> Params:
        return Params(self.weights)


def build(config: ModelConfig, weights: Mapping) -> Model:
    want = manifest(config)
    have = set(weights.keys())
    missing = set(want) - have
    extra = have - set(want)
    mismatched = [k for k in set(want) & have if tuple(np.shape(weights[k])) != tuple(want[k])]
    if missing or extra or mismatched:
        raise ManifestError(missing, extra, mismatched)
    d1, d2, d3, d4, _ = config.dims
    # decoder outputs must line up with the encoder skips they are added to
    for up_in, skip in ((d3, d2), (d4, d1)):
        if up_in // 2 != skip:
            raise ConfigError(f"WaveUp output width {up_in // 2} != skip width {skip}")
    frozen = {}
    for k in sorted(want):
        arr = np.array(weights[k], dtype=T.DTYPE, copy=True, order="C")
        arr.flags.writeable = False
        frozen[k] = arr
    return Model(config, frozen)


def padding_for(h: int, w: int, multiple: int = SIZE_MULTIPLE) -> tuple:
    """(top, bottom, left, right) reflect padding to the next multiple."""
    return 0, (-h) % multiple, 0, (-w) % multiple


def _features(model: Model, x: np.ndarray) -> np.ndarray:
    cfg = model.config
    p = model.params
    opts = _block_opts(cfg)
    up = dict(kind=cfg.conv_kind, r_conv=cfg.r_conv)
    specs = B.conv_specs([l for l in model_layers(cfg) if l.name in ("head", "tail")])
    f = p.conv("head", x, specs["head"])
    skips, highs = [], []
    for stage in range(2):
        for i in range(cfg.blocks[stage]):
            f = B.wave_block(f, p.sub(f"enc{stage}.block{i}"), cfg.fmb_per_block, **opts)
        skips.append(f)
        f, hi = B.wave_down(f, p.sub(f"enc{stage}.down"))
        highs.append(hi)
    for i in range(cfg.blocks[2]):
        f = B.wave_block(f, p.sub(f"mid.block{i}"), cfg.fmb_per_block, **opts)
    for j, level in enumerate((1, 0)):
        f = B.wave_up(f, highs[level], p.sub(f"dec{j}.up"), **up)
        if f.shape != skips[level].shape:
            raise DimensionError(f"skip {level}: {skips[level].shape} vs decoder {f.shape}")
        f = T.add(f, skips[level])
    return p.conv("tail", f, specs["tail"])


def forward(model: Model, image: np.ndarray) -> np.ndarray:
    """Dehaze ``image`` (n, 3, H, W) in [0, 1]; returns ``image + residual``.

    Sizes that are not multiples of 8 are reflect-padded on the bottom/right
    and the residual is cropped back.  No clamping is applied here.
    """
    x = np.asarray(image, dtype=T.DTYPE)
    if x.ndim == 3:
        x = x[None]
    if x.ndim != 4 or x.shape[1] != model.config.in_channels:
        raise DimensionError(
            f"expected (n, {model.config.in_channels}, H, W) image, got {np.shape(image)}"
        )
    if not np.all(np.isfinite(x)):
        raise DomainError("input contains NaN or Inf")
    if x.min() < 0.0 or x.max() > 1.0:
        raise DomainError("input values must lie in [0, 1]")
    x = T.as_tensor(x)
    h, w = x.shape[2:]
    edges = padding_for(h, w)
    residual = _features(model, T.reflect_pad(x, edges) if any(edges) else x)
    if any(edges):
        residual = T.crop(residual, edges)
    out = T.add(x, residual)
    return out if np.ndim(image) == 4 else out[0]


# --------------------------------------------------------------------------- #
# profiling

@dataclass(frozen=True)
class LayerProfile:
    name: str
    kind: str
    params: int
    macs: int
    out_hw: tuple


@dataclass(frozen=True)
class Profile:
    param_count: int
    mac_count: int
    layers: tuple
    height: int
    width: int

    def format_table(self) -> str:
        rows = [f"{'layer':<44} {'kind':<14} {'out':>9} {'params':>10} {'MACs':>14}"]
        for l in self.layers:
            hw = f"{l.out_hw[0]}x{l.out_hw[1]}"
            rows.append(f"{l.name:<44} {l.kind:<14} {hw:>9} {l.params:>10,} {l.macs:>14,}")
        return "\n".join(rows)

    def summary(self) -> str:
        return (
            f"input {self.height}x{self.width}: params {self.param_count:,} "
            f"({self.param_count / 1e6:.3f} M), MACs {self.mac_count:,} ({self.mac_count / 1e9:.3f} G)"
        )


def profile(config: ModelConfig, h: int = 256, w: int = 256) -> Profile:
    if h < 1 or w < 1 or h % SIZE_MULTIPLE or w % SIZE_MULTIPLE:
        raise DimensionError(f"profile size {h}x{w} must be positive multiples of {SIZE_MULTIPLE}")
    rows = []
    for layer in model_layers(config):
        kind = layer.kind
        if kind == "conv":
            s = layer.spec
            if s.groups == s.in_channels == s.out_channels and s.groups > 1:
                kind = "dwconv"
            elif s.groups > 1:
                kind = "gconv"
            kind = f"{kind}{s.kernel_h}x{s.kernel_w}"
        rows.append(LayerProfile(layer.name, kind, layer.param_count, layer.macs(h, w), layer.output_hw(h, w)))
    return Profile(
        param_count=sum(r.params for r in rows),
        mac_count=sum(r.macs for r in rows),
        layers=tuple(rows),
        height=h,
        width=w,
    )
