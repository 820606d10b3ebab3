"""Spectrum-prediction MLP with hand-rolled backprop and Adam.

Architecture: three shared affine+ReLU layers of width ``hidden`` followed by
two linear branch heads mapping to ``out`` values each -- the predicted
spectrum S and its adjustment delta_s.  Heads are raw affine maps: no
activation and no sorting of the outputs.  For a C x N x N latent the dims
are (in, hidden, out) = (N*N, N*N, N); one shared model serves all channels.

Parameters are float32 (matching the PHI1 file payload, so serialisation
round-trips bit-exactly) while all forward/backward arithmetic runs in
float64.  Weight layout is (fan_in, fan_out): a layer computes
``x @ W + b``.  Initialisation draws He-normal weights (std sqrt(2/fan_in))
from one sequential pinned stream in the order w1, w2, w3, w_s, w_d; biases
start at zero.

PHI1 file format (little-endian): magic "PHI1", version u32 (=1), then
in/hidden/out as u32, then all parameters as float32 in the fixed order
w1, b1, w2, b2, w3, b3, w_s, b_s, w_d, b_d, each row-major.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .rng import NormalStream

MODEL_MAGIC = b"PHI1"
MODEL_VERSION = 1
_MODEL_HEADER = struct.Struct("<4sIIII")

PARAM_FIELDS = ("w1", "b1", "w2", "b2", "w3", "b3", "w_s", "b_s", "w_d", "b_d")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class PhiModel:
    dims: tuple  # (in, hidden, out)
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    w_s: np.ndarray
    b_s: np.ndarray
    w_d: np.ndarray
    b_d: np.ndarray

    def params(self):
        """(name, array) pairs in the pinned serialisation order."""
        return [(name, getattr(self, name)) for name in PARAM_FIELDS]


def param_shapes(dims):
    d_in, d_hid, d_out = dims
    return {"w1": (d_in, d_hid), "b1": (d_hid,),
            "w2": (d_hid, d_hid), "b2": (d_hid,),
            "w3": (d_hid, d_hid), "b3": (d_hid,),
            "w_s": (d_hid, d_out), "b_s": (d_out,),
            "w_d": (d_hid, d_out), "b_d": (d_out,)}


def _check_dims(dims):
    if len(dims) != 3 or any(int(d) < 1 for d in dims):
        raise ValueError(f"dims must be three positive ints, got {dims}")
    return tuple(int(d) for d in dims)


def init_model(dims, seed):
    """He-normal weights, zero biases, drawn from one pinned stream."""
    dims = _check_dims(dims)
    shapes = param_shapes(dims)
    stream = NormalStream(seed)
    arrays = {}
    for name in PARAM_FIELDS:
        shape = shapes[name]
        if name.startswith("b"):
            arrays[name] = np.zeros(shape, dtype=np.float32)
        else:
            fan_in = shape[0]
            std = np.sqrt(2.0 / fan_in)
            arrays[name] = (std * stream.draw(int(np.prod(shape)))).reshape(shape).astype(np.float32)
    return PhiModel(dims=dims, **arrays)


@dataclass
class PhiCache:
    """Forward activations needed by the backward pass (batch-major)."""

    x: np.ndarray
    a1: np.ndarray
    h1: np.ndarray
    a2: np.ndarray
    h2: np.ndarray
    a3: np.ndarray
    h3: np.ndarray


def forward_batch(model, X):
    """Batched forward: X is (B, in); returns (S, delta_s, cache), (B, out)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dims[0]:
        raise ValueError(f"input must be (B, {model.dims[0]}), got {X.shape}")
    a1 = X @ model.w1 + model.b1
    h1 = np.maximum(a1, 0.0)
    a2 = h1 @ model.w2 + model.b2
    h2 = np.maximum(a2, 0.0)
    a3 = h2 @ model.w3 + model.b3
    h3 = np.maximum(a3, 0.0)
    S = h3 @ model.w_s + model.b_s
    delta_s = h3 @ model.w_d + model.b_d
    return S, delta_s, PhiCache(X, a1, h1, a2, h2, a3, h3)


def phi_forward(model, x_flat):
    """Single-vector forward pass; returns (S, delta_s, cache)."""
    x_flat = np.asarray(x_flat, dtype=np.float64)
    if x_flat.ndim != 1:
        raise ValueError("x_flat must be a vector")
    if not np.all(np.isfinite(x_flat)):
        raise ValueError("non-finite input to phi_forward")
    S, ds, cache = forward_batch(model, x_flat[None, :])
    return S[0], ds[0], cache


def backward_batch(model, cache, grad_S, grad_ds):
    """Gradients of all parameters from upstream head gradients (B, out).

    The two heads are independent branches off the shared trunk: w_s/b_s see
    only grad_S and w_d/b_d only grad_ds; the trunk sums both contributions.
    """
    grad_S = np.asarray(grad_S, dtype=np.float64)
    grad_ds = np.asarray(grad_ds, dtype=np.float64)
    if grad_S.shape != grad_ds.shape or grad_S.shape[0] != cache.x.shape[0]:
        raise ValueError("head gradient shapes must match the cached batch")
    g = {}
    g["w_s"] = cache.h3.T @ grad_S
    g["b_s"] = grad_S.sum(axis=0)
    g["w_d"] = cache.h3.T @ grad_ds
    g["b_d"] = grad_ds.sum(axis=0)
    dh3 = grad_S @ np.asarray(model.w_s, dtype=np.float64).T \
        + grad_ds @ np.asarray(model.w_d, dtype=np.float64).T
    da3 = dh3 * (cache.a3 > 0.0)
    g["w3"] = cache.h2.T @ da3
    g["b3"] = da3.sum(axis=0)
    dh2 = da3 @ np.asarray(model.w3, dtype=np.float64).T
    da2 = dh2 * (cache.a2 > 0.0)
    g["w2"] = cache.h1.T @ da2
    g["b2"] = da2.sum(axis=0)
    dh1 = da2 @ np.asarray(model.w2, dtype=np.float64).T
    da1 = dh1 * (cache.a1 > 0.0)
    g["w1"] = cache.x.T @ da1
    g["b1"] = da1.sum(axis=0)
    return g


def phi_backward(model, cache, grad_S, grad_ds):
    """Single-sample backward; upstream gradients are length-out vectors."""
    grad_S = np.asarray(grad_S, dtype=np.float64)
    grad_ds = np.asarray(grad_ds, dtype=np.float64)
    if grad_S.ndim != 1 or grad_ds.ndim != 1:
        raise ValueError("head gradients must be vectors")
    return backward_batch(model, cache, grad_S[None, :], grad_ds[None, :])


@dataclass
class AdamState:
    """First/second moment accumulators plus the shared step counter."""

    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(model, state, grads, lr):
    """One Adam update with bias correction; mutates and returns model/state."""
    if lr < 0:
        raise ValueError("lr must be nonnegative")
    state.step += 1
    t = state.step
    for name, p in model.params():
        gr = np.asarray(grads[name], dtype=np.float64)
        if gr.shape != p.shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros(p.shape)
            v = np.zeros(p.shape)
        m = state.beta1 * m + (1.0 - state.beta1) * gr
        v = state.beta2 * v + (1.0 - state.beta2) * gr * gr
        state.m[name] = m
        state.v[name] = v
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        update = p.astype(np.float64) - lr * m_hat / (np.sqrt(v_hat) + state.eps)
        setattr(model, name, update.astype(np.float32))
    return model, state


def save_model(model, path):
    """Write the PHI1 file: header then parameters in the pinned order."""
    d_in, d_hid, d_out = model.dims
    with open(path, "wb") as fh:
        fh.write(_MODEL_HEADER.pack(MODEL_MAGIC, MODEL_VERSION, d_in, d_hid, d_out))
        for _, p in model.params():
            fh.write(np.ascontiguousarray(p, dtype="<f4").tobytes())


def load_model(path):
    """Read a PHI1 file; inverse of save_model (bit-exact round trip)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _MODEL_HEADER.size:
        raise ValueError("truncated header: not a PHI1 file")
    magic, version, d_in, d_hid, d_out = _MODEL_HEADER.unpack_from(blob)
    if magic != MODEL_MAGIC:
        raise ValueError("not a PHI1 file (bad magic)")
    if version != MODEL_VERSION:
        raise ValueError(f"unsupported PHI1 version {version}")
    dims = _check_dims((d_in, d_hid, d_out))
    shapes = param_shapes(dims)
    expected = _MODEL_HEADER.size + 4 * sum(int(np.prod(s)) for s in shapes.values())
    if len(blob) < expected:
        raise ValueError("truncated payload")
    if len(blob) > expected:
        raise ValueError("trailing data after payload")
    offset = _MODEL_HEADER.size
    arrays = {}
    for name in PARAM_FIELDS:
        shape = shapes[name]
        count = int(np.prod(shape))
        arrays[name] = np.frombuffer(blob, dtype="<f4", offset=offset,
                                     count=count).reshape(shape).copy()
        offset += 4 * count
    return PhiModel(dims=dims, **arrays)
