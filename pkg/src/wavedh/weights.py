"""WDH1 weight files and deterministic random initialisation.

File layout (all integers little-endian)::

    b"WDH1"
    u32        manifest length in bytes
    manifest   UTF-8 JSON list of {"name", "shape", "dtype": "f32", "offset"},
               sorted by name; offsets are byte offsets into the payload
    payload    concatenated little-endian float32 data
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import struct
from collections.abc import Mapping

import numpy as np

from .errors import CorruptionError, FormatError, UnsupportedError
from .model import manifest, model_layers

MAGIC = b"WDH1"
FORMAT_VERSION = 1
_LE_F32 = np.dtype("<f4")


class WeightStore(Mapping):
    """Immutable, name-sorted map of parameter path -> float32 array."""

    version = FORMAT_VERSION

    def __init__(self, tensors: Mapping | None = None):
        items = {}
        for name, arr in (tensors or {}).items():
            a = np.array(arr, dtype=np.float32, copy=True, order="C")
            a.flags.writeable = False
            items[str(name)] = a
        self._tensors = dict(sorted(items.items()))

    def __getitem__(self, name):
        return self._tensors[name]

    def __iter__(self):
        return iter(self._tensors)

    def __len__(self):
        return len(self._tensors)

    def __repr__(self):
        return f"WeightStore({len(self)} tensors, {self.element_count:,} elements)"

    @property
    def element_count(self) -> int:
        return sum(a.size for a in self._tensors.values())

    @property
    def fingerprint(self) -> str:
        """Hash of the (name, shape) manifest; identifies the architecture."""
        h = hashlib.sha256()
        for name, a in self._tensors.items():
            h.update(f"{name}:{','.join(map(str, a.shape))};".encode())
        return h.hexdigest()[:16]

    def equals(self, other: Mapping) -> bool:
        """Bit-exact equality of names, shapes and payload bytes."""
        if list(self) != sorted(other):
            return False
        return all(
            self[k].shape == np.shape(other[k])
            and self[k].tobytes() == np.asarray(other[k], dtype=np.float32).tobytes()
            for k in self
        )


def to_bytes(store: Mapping) -> bytes:
    if not isinstance(store, WeightStore):
        store = WeightStore(store)
    entries, chunks, offset = [], [], 0
    for name, arr in store.items():
        data = arr.astype(_LE_F32, copy=False).tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "dtype": "f32", "offset": offset})
        chunks.append(data)
        offset += len(data)
    manifest = json.dumps(entries, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<I", len(manifest)) + manifest + b"".join(chunks)


def from_bytes(blob: bytes) -> WeightStore:
    if len(blob) < 8 or blob[:4] != MAGIC:
        raise FormatError("not a WDH1 file (bad magic)")
    (mlen,) = struct.unpack_from("<I", blob, 4)
    if 8 + mlen > len(blob):
        raise CorruptionError(f"manifest length {mlen} exceeds file size {len(blob)}")
    try:
        entries = json.loads(blob[8:8 + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"manifest is not valid UTF-8 JSON: {exc}") from None
    if not isinstance(entries, list):
        raise FormatError("manifest must be a JSON list")
    payload = memoryview(blob)[8 + mlen:]
    tensors, total, seen = {}, 0, set()
    for e in entries:
        try:
            name, shape, dtype, off = e["name"], e["shape"], e["dtype"], e["offset"]
        except (KeyError, TypeError):
            raise FormatError(f"malformed manifest entry {e!r}") from None
        if dtype != "f32":
            raise UnsupportedError(f"tensor {name!r} has unsupported dtype {dtype!r}")
        if not isinstance(name, str) or name in seen:
            raise FormatError(f"bad or duplicate tensor name {name!r}")
        if (not isinstance(shape, list) or not all(isinstance(s, int) and s >= 0 for s in shape)
                or not isinstance(off, int) or off < 0):
            raise FormatError(f"bad shape/offset for {name!r}")
        seen.add(name)
        nbytes = 4 * int(np.prod(shape, dtype=np.int64))
        if off + nbytes > len(payload):
            raise CorruptionError(
                f"payload truncated: tensor {name!r} needs bytes [{off}, {off + nbytes}) "
                f"but payload has {len(payload)}"
            )
        tensors[name] = np.frombuffer(payload[off:off + nbytes], dtype=_LE_F32).reshape(shape)
        total += nbytes
    if len(payload) != total:
        raise CorruptionError(f"payload is {len(payload)} bytes, manifest accounts for {total}")
    return WeightStore(tensors)


def save(store: Mapping, destination) -> None:
    """Write ``store`` to a path or binary file object."""
    blob = to_bytes(store)
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "wb") as fh:
            fh.write(blob)
    else:
        destination.write(blob)


def load(source) -> WeightStore:
    if isinstance(source, (bytes, bytearray)):
        return from_bytes(bytes(source))
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return from_bytes(fh.read())
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        return from_bytes(source.read())
    raise TypeError(f"cannot load weights from {type(source).__name__}")


# --------------------------------------------------------------------------- #
# seeded initialisation

_MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """SplitMix64 stream; ``uniform(n)`` draws the next n values in [0, 1)."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def _draw(self, n: int) -> np.ndarray:
        steps = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self.state) + steps * np.uint64(GOLDEN_GAMMA)
        self.state = (self.state + n * GOLDEN_GAMMA) & _MASK64
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    def next_u64(self, n: int = 1) -> np.ndarray:
        return self._draw(n)

    def uniform(self, n: int) -> np.ndarray:
        return (self._draw(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def _float32_at_most(x: float) -> np.float32:
    f = np.float32(x)
    return f if float(f) <= x else np.nextafter(f, np.float32(0))


def init_bound(fan_in: int) -> float:
    """Kaiming-uniform bound with leaky-ReLU slope sqrt(5): ``1 / sqrt(fan_in)``.

    This is the common default for conv layers.  The ReLU-gain bound
    ``sqrt(6 / fan_in)`` makes the multiplicative LKA gates overflow float32
    a few WaveBlocks in, so the smaller bound is used.
    """
    return float(np.sqrt(1.0 / fan_in))


def init_random(config, seed: int) -> WeightStore:
    """Kaiming-uniform weights (see :func:`init_bound`) and zero biases.

    A single SplitMix64 stream is consumed tensor by tensor in sorted path
    order, so the result depends only on ``(config, seed)``.
    """
    fan_in = {f"{l.name}.weight": l.spec.fan_in for l in model_layers(config) if l.kind == "conv"}
    shapes = manifest(config)
    rng = SplitMix64(seed)
    tensors = {}
    for path in sorted(shapes):
        shape = shapes[path]
        if path.endswith(".bias"):
            tensors[path] = np.zeros(shape, dtype=np.float32)
            continue
        bound = init_bound(fan_in[path])
        n = int(np.prod(shape))
        w = ((2.0 * rng.uniform(n) - 1.0) * bound).astype(np.float32)
        b32 = _float32_at_most(bound)
        tensors[path] = np.clip(w, -b32, b32).reshape(shape)
    return WeightStore(tensors)
