"""NumPy inference engine for a wavelet-domain single-image dehazing network."""

from .errors import (
    ConfigError,
    CorruptionError,
    DimensionError,
    DomainError,
    FormatError,
    ManifestError,
    UnsupportedError,
    WaveDHError,
)
from .haze import HazeParams, invert_haze, synthesize_haze
from .imaging import ImageBuffer, from_tensor, read_pgm, read_ppm, to_tensor, write_ppm
from .metrics import psnr, ssim
from .model import PRESETS, Model, ModelConfig, build, forward, preset, profile
from .wavelet import Subbands, dwt2, idwt2
from .weights import WeightStore, init_random, load, save

__version__ = "0.1.0"
