"""Single-level orthonormal 2-D Haar filter bank.

Sub-band naming: the first letter is the filter applied along the vertical
axis, the second along the horizontal axis, so ``lh`` responds to horizontal
edges.  With L = [1, 1]/sqrt(2) and H = [-1, 1]/sqrt(2) the four 2x2 analysis
kernels are::

    ll = 1/2 [[ 1,  1],     lh = 1/2 [[-1, -1],
              [ 1,  1]]               [ 1,  1]]

    hl = 1/2 [[-1,  1],     hh = 1/2 [[ 1, -1],
              [-1,  1]]               [-1,  1]]

applied with stride 2 and no padding, independently per channel.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimensionError
from .tensor import DTYPE

HALF = DTYPE(0.5)

HAAR_KERNELS = {
    "ll": np.array([[1, 1], [1, 1]], dtype=DTYPE) * HALF,
    "lh": np.array([[-1, -1], [1, 1]], dtype=DTYPE) * HALF,
    "hl": np.array([[-1, 1], [-1, 1]], dtype=DTYPE) * HALF,
    "hh": np.array([[1, -1], [-1, 1]], dtype=DTYPE) * HALF,
}


class Subbands(NamedTuple):
    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray

    @property
    def shape(self):
        return self.ll.shape

    def highs(self) -> np.ndarray:
        """Concatenated detail bands ``[lh, hl, hh]`` along channels."""
        return np.concatenate([self.lh, self.hl, self.hh], axis=1)


def dwt2(x: np.ndarray) -> Subbands:
    if x.ndim != 4:
        raise DimensionError(f"dwt2 expects rank-4 input, got {x.shape}")
    h, w = x.shape[2:]
    if h % 2 or w % 2:
        raise DimensionError(f"dwt2 needs even spatial dims, got {h}x{w}")
    x = np.asarray(x, dtype=DTYPE)
    a = x[:, :, 0::2, 0::2]
    b = x[:, :, 0::2, 1::2]
    c = x[:, :, 1::2, 0::2]
    d = x[:, :, 1::2, 1::2]
    top, bottom = a + b, c + d
    ll = (top + bottom) * HALF
    lh = (bottom - top) * HALF
    hl = ((b - a) + (d - c)) * HALF
    hh = ((a - b) + (d - c)) * HALF
    return Subbands(ll, lh, hl, hh)


def idwt2(s) -> np.ndarray:
    """Synthesis bank: the transpose of ``dwt2``, hence its exact inverse."""
    ll, lh, hl, hh = (np.asarray(t, dtype=DTYPE) for t in s)
    if not (ll.shape == lh.shape == hl.shape == hh.shape):
        raise DimensionError(
            f"sub-band shapes differ: {ll.shape}, {lh.shape}, {hl.shape}, {hh.shape}"
        )
    if ll.ndim != 4:
        raise DimensionError(f"idwt2 expects rank-4 sub-bands, got {ll.shape}")
    n, c, h, w = ll.shape
    top_ll, bot_ll = ll - lh, ll + lh
    top_d, bot_d = hl - hh, hl + hh
    out = np.empty((n, c, 2 * h, 2 * w), dtype=DTYPE)
    out[:, :, 0::2, 0::2] = (top_ll - top_d) * HALF
    out[:, :, 0::2, 1::2] = (top_ll + top_d) * HALF
    out[:, :, 1::2, 0::2] = (bot_ll - bot_d) * HALF
    out[:, :, 1::2, 1::2] = (bot_ll + bot_d) * HALF
    return out
