import numpy as np

from wavedh import blocks as B
from wavedh.blocks import Params


def random_params(layers, seed, scale=1.0, bias=0.1):
    """Uniform weights scaled by 1/sqrt(fan_in) and small random biases."""
    rng = np.random.default_rng(seed)
    fan = {f"{l.name}.weight": l.spec.fan_in for l in layers if l.kind == "conv"}
    out = {}
    for path, shape in B.weight_manifest(layers).items():
        if path.endswith(".bias"):
            out[path] = rng.uniform(-bias, bias, shape).astype(np.float32)
        else:
            out[path] = (rng.uniform(-1, 1, shape) * scale / np.sqrt(fan[path])).astype(np.float32)
    return out


def params(store):
    return Params(store)
