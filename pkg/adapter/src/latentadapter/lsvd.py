"""Reader/writer for the LSVD latent file format and its meta sidecar.

Implemented from the documented byte layout (not by importing the editing
toolkit): little-endian header ``"LSVD" | u32 version=1 | u32 C | u32 H |
u32 W | u32 dtype`` (dtype code 1 = float32) followed by exactly C*H*W
float32 values, row-major with the channel axis outermost.  Optional
metadata lives in a JSON sidecar at ``<path>.meta.json`` with keys
``time_step``, ``total_steps``, ``seed``, ``tag``.
"""

import json
import struct

import numpy as np

MAGIC = b"LSVD"
FORMAT_VERSION = 1
DTYPE_FLOAT32 = 1
_HEADER = struct.Struct("<4sIIIII")
_MAX_ELEMENTS = 2**31


def sidecar_path(path):
    return str(path) + ".meta.json"


def write_lsvd(data, path, meta=None):
    """Write a (C, H, W) array as float32 LSVD; meta (if given) goes to the
    sidecar.  Values must be finite."""
    arr = np.asarray(data)
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise ValueError(f"latent must be (C, H, W), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite data")
    c, h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, c, h, w, DTYPE_FLOAT32))
        fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    if meta:
        payload = {"time_step": meta.get("time_step"),
                   "total_steps": meta.get("total_steps", 1000),
                   "seed": meta.get("seed"),
                   "tag": meta.get("tag")}
        with open(sidecar_path(path), "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")


def read_lsvd(path):
    """Read an LSVD file; returns (float32 array (C, H, W), meta dict).

    The meta dict is empty when no sidecar exists."""
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
    data = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    meta = {}
    try:
        with open(sidecar_path(path)) as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        pass
    return data.reshape(c, h, w).copy(), meta
