"""Full-reference quality metrics on [0, 1] images: PSNR and Gaussian-window SSIM.

Both are computed in float64 on RGB directly.  SSIM uses an 11x11 Gaussian
window (sigma 1.5), K1 = 0.01, K2 = 0.03, dynamic range 1, and averages the
SSIM map over valid window positions, channels and batch.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionError

WINDOW = 11
SIGMA = 1.5
K1, K2 = 0.01, 0.03
DATA_RANGE = 1.0


def _pair(a, b):
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.size == 0:
        raise DimensionError("empty images")
    return x, y


def mse(a, b) -> float:
    x, y = _pair(a, b)
    return float(np.mean((x - y) ** 2))


def psnr(a, b) -> float:
    """10 log10(1 / MSE) in dB; ``math.inf`` for identical inputs."""
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(DATA_RANGE**2 / err)


def gaussian_window(size: int = WINDOW, sigma: float = SIGMA) -> np.ndarray:
    """Normalised 1-D Gaussian taps; the 2-D window is its outer product."""
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2
    g = np.exp(-(r**2) / (2 * sigma**2))
    return g / g.sum()


def _blur(x, g):
    # separable valid-mode correlation over the last two axes
    k = g.size
    x = np.einsum("...k,k->...", sliding_window_view(x, k, axis=-1), g)
    return np.einsum("...k,k->...", sliding_window_view(x, k, axis=-2), g)


def ssim_map(a, b) -> np.ndarray:
    x, y = _pair(a, b)
    if x.ndim < 2:
        raise DimensionError(f"ssim needs at least (h, w) input, got {x.shape}")
    if min(x.shape[-2:]) < WINDOW:
        raise DimensionError(f"image {x.shape[-2:]} smaller than the {WINDOW}x{WINDOW} window")
    g = gaussian_window()
    mx, my = _blur(x, g), _blur(y, g)
    sxx = _blur(x * x, g) - mx * mx
    syy = _blur(y * y, g) - my * my
    sxy = _blur(x * y, g) - mx * my
    c1, c2 = (K1 * DATA_RANGE) ** 2, (K2 * DATA_RANGE) ** 2
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return num / den


def ssim(a, b) -> float:
    return float(np.mean(ssim_map(a, b)))


def format_psnr(db: float) -> str:
    return "inf" if math.isinf(db) else f"{db:.2f}"


def format_ssim(score: float) -> str:
    return f"{score:.4f}"
