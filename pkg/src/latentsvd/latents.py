"""Latent tensor value objects and the LSVD on-disk format.

A latent is a C x H x W float32 array plus optional provenance (denoising
time step, seed, free-form tag).  Files are little-endian:

    bytes 0-3    magic "LSVD"
    bytes 4-7    format version, u32 (currently 1)
    bytes 8-19   C, H, W as u32
    bytes 20-23  dtype code, u32 (1 = float32 little-endian)
    bytes 24-    payload, C*H*W float32 values, row-major, channel outermost

Provenance lives in an optional JSON sidecar next to the tensor: for a latent
saved at ``path`` the sidecar is ``path + ".meta.json"`` with flat keys
``time_step``, ``total_steps``, ``seed``, ``tag``.  Tensors are immutable
(the array is marked read-only) so save/load round-trips are bit-exact and
concurrent readers need no locking.
"""

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .rng import standard_normals

MAGIC = b"LSVD"
FORMAT_VERSION = 1
DTYPE_FLOAT32 = 1
_HEADER = struct.Struct("<4sIIIII")
_MAX_ELEMENTS = 2 ** 31  # refuse absurd declared dimensions


@dataclass(frozen=True)
class LatentMeta:
    time_step: int | None = None
    total_steps: int = 1000
    seed: int | None = None
    tag: str | None = None

    def is_default(self):
        return (self.time_step is None and self.total_steps == 1000
                and self.seed is None and self.tag is None)


@dataclass(frozen=True)
class LatentTensor:
    """Immutable C x H x W float32 tensor with provenance metadata."""

    data: np.ndarray
    meta: LatentMeta = field(default_factory=LatentMeta)

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise ValueError(f"latent data must be 3-D (C, H, W), got {arr.shape}")
        if min(arr.shape) < 1:
            raise ValueError("latent dimensions must be positive")
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite data in latent tensor")
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def channels(self):
        return self.data.shape[0]

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def width(self):
        return self.data.shape[2]

    def channel(self, c):
        """Channel c as a float64 matrix (compute precision)."""
        return self.data[c].astype(np.float64)

    def with_meta(self, **kw):
        return LatentTensor(self.data, replace(self.meta, **kw))


@dataclass(frozen=True)
class GenSpec:
    """Recipe for a synthetic pseudo-Gaussian latent."""

    shape: tuple  # (C, H, W)
    seed: int
    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        if len(self.shape) != 3 or min(self.shape) < 1:
            raise ValueError(f"shape must be a positive (C, H, W), got {self.shape}")
        if not self.std > 0:
            raise ValueError("std must be positive")


def sidecar_path(path):
    return str(path) + ".meta.json"


def save_latent(tensor, path):
    """Write tensor to the LSVD format; writes the sidecar when meta is set."""
    if not isinstance(tensor, LatentTensor):
        raise ValueError("save_latent expects a LatentTensor")
    c, h, w = tensor.data.shape
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, c, h, w, DTYPE_FLOAT32)
    payload = np.ascontiguousarray(tensor.data, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    if not tensor.meta.is_default():
        meta = {"time_step": tensor.meta.time_step,
                "total_steps": tensor.meta.total_steps,
                "seed": tensor.meta.seed,
                "tag": tensor.meta.tag}
        with open(sidecar_path(path), "w") as fh:
            json.dump(meta, fh, indent=1)
            fh.write("\n")


def load_latent(path):
    """Read an LSVD file (and sidecar if present) back into a LatentTensor."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise ValueError("truncated header: not an LSVD file")
    magic, version, c, h, w, dtype = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ValueError("not an LSVD file (bad magic)")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported LSVD version {version}")
    if dtype != DTYPE_FLOAT32:
        raise ValueError(f"unsupported dtype code {dtype}")
    if min(c, h, w) < 1:
        raise ValueError("invalid dimensions in header")
    count = c * h * w
    if count > _MAX_ELEMENTS:
        raise ValueError("dimension overflow in header")
    expected = _HEADER.size + 4 * count
    if len(blob) < expected:
        raise ValueError("truncated payload")
    if len(blob) > expected:
        raise ValueError("trailing data after payload")
    data = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(c, h, w)
    meta = LatentMeta()
    sc = sidecar_path(path)
    try:
        with open(sc) as fh:
            raw = json.load(fh)
        meta = LatentMeta(time_step=raw.get("time_step"),
                          total_steps=raw.get("total_steps", 1000),
                          seed=raw.get("seed"),
                          tag=raw.get("tag"))
    except FileNotFoundError:
        pass
    return LatentTensor(data.copy(), meta)


def synth_latent(spec):
    """Deterministic pseudo-Gaussian latent; pure function of the GenSpec.

    Values are ``mean + std * n_i`` with normals from the pinned SplitMix64 /
    Box-Muller stream keyed by ``spec.seed`` (see rng module), cast to float32.
    """
    c, h, w = spec.shape
    values = spec.mean + spec.std * standard_normals(spec.seed, c * h * w)
    return LatentTensor(values.reshape(c, h, w), LatentMeta(seed=spec.seed))


def perturb(tensor, sigma, seed):
    """Additive Gaussian perturbation with scale sigma; sigma=0 returns the
    input unchanged (bitwise)."""
    if not isinstance(tensor, LatentTensor):
        raise ValueError("perturb expects a LatentTensor")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return tensor
    noise = standard_normals(seed, tensor.data.size).reshape(tensor.data.shape)
    return LatentTensor(tensor.data.astype(np.float64) + sigma * noise, tensor.meta)
