"""Atmospheric scattering model: synthesize hazy images from clear ones and depth.

``t = exp(-beta * d)`` and ``I = J * t + A * (1 - t)`` per pixel and channel.
Arithmetic runs in float64; the result takes the input's float dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError


@dataclass(frozen=True)
class HazeParams:
    airlight: tuple
    beta: float
    depth: np.ndarray

    def __post_init__(self):
        a = tuple(float(v) for v in np.ravel(self.airlight))
        if len(a) != 3:
            raise DimensionError(f"airlight needs 3 channel values, got {len(a)}")
        if not all(0.0 <= v <= 1.0 for v in a):
            raise DomainError(f"airlight values must lie in [0, 1], got {a}")
        beta = float(self.beta)
        if not np.isfinite(beta) or beta < 0:
            raise DomainError(f"beta must be finite and >= 0, got {self.beta}")
        d = np.array(self.depth, dtype=np.float64)
        if d.ndim != 2:
            raise DimensionError(f"depth must be a single-channel (h, w) map, got {d.shape}")
        if not np.all(np.isfinite(d)) or d.min(initial=0.0) < 0:
            raise DomainError("depth values must be finite and >= 0")
        d.flags.writeable = False
        object.__setattr__(self, "airlight", a)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "depth", d)

    def transmission(self) -> np.ndarray:
        """(h, w) float64 map in (0, 1]."""
        return np.exp(-self.beta * self.depth)


def _airlight(params, ndim):
    a = np.asarray(params.airlight, dtype=np.float64)
    return a.reshape((3,) + (1,) * 2) if ndim == 3 else a.reshape((1, 3, 1, 1))


def _check_image(x, params, what):
    arr = np.asarray(x)
    if arr.ndim not in (3, 4) or arr.shape[-3] != 3:
        raise DimensionError(f"{what} must be (3, h, w) or (n, 3, h, w), got {arr.shape}")
    if arr.shape[-2:] != params.depth.shape:
        raise DimensionError(f"depth {params.depth.shape} does not match image {arr.shape[-2:]}")
    return arr


def synthesize_haze(clear: np.ndarray, params: HazeParams) -> np.ndarray:
    j = _check_image(clear, params, "clear image")
    if not np.all(np.isfinite(j)) or j.min() < 0 or j.max() > 1:
        raise DomainError("clear image values must lie in [0, 1]")
    out_dtype = j.dtype if np.issubdtype(j.dtype, np.floating) else np.float64
    t = params.transmission()
    a = _airlight(params, j.ndim)
    hazy = j.astype(np.float64) * t + a * (1.0 - t)
    return hazy.astype(out_dtype, copy=False)


def invert_haze(hazy: np.ndarray, params: HazeParams, t_min: float = 0.0) -> np.ndarray:
    """Recover J = (I - A(1 - t)) / t, flooring t at ``t_min`` to avoid blow-up."""
    i = _check_image(hazy, params, "hazy image")
    t = np.maximum(params.transmission(), t_min)
    if np.any(t <= 0):
        raise DomainError("transmission underflows to 0; pass t_min > 0")
    a = _airlight(params, i.ndim)
    return (i.astype(np.float64) - a * (1.0 - t)) / t
