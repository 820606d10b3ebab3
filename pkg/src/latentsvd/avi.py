"""Attribute vector integration: blended singular-vector bases and editing.

Given a source channel x and a target channel z (square N x N), the blended
bases keep the leading k singular vectors of x and mix the trailing block of
U_x with the *reversed-order leading* block of U_z::

    U' = reverse_columns(U_z)
    U_hat = [ U_x[:, :k] | (1-rho) * U_x[:, k:] (+ rho * U'[:, :k] on its
              first k columns) ]

and the row-wise analogue for V.  With rho in (0, 1.5] the trailing block
must be at least k wide (k <= N/2); rho=0 leaves the source basis untouched
for any k.  When k < N/2 the mixed target block only spans columns k..2k-1;
the remainder of the tail keeps the (1-rho) scaling.

Two composition stages share the bases:

* training: y_hat = U_hat diag(S) V_hat and, with reversed bases
  U_tilde = reverse_columns(U_hat), V_tilde = reverse_rows(V_hat),
  y_tilde = U_tilde diag(S + delta_s) V_tilde;
* inference: y_pred = U_hat diag(S) V_hat (no reversed composition).

S and delta_s come from the prediction MLP; the four training losses compare
the two compositions and spectra against the pair.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import linalg
from .latents import LatentTensor
from .linalg import SvdTriple

RHO_MAX = 1.5

STAGE_TRAINING = "training"
STAGE_INFERENCE = "inference"


@dataclass(frozen=True)
class AviConfig:
    k: int = 32
    rho: float = 1.0
    lambdas: tuple = (3.0, 10.0, 10.0, 10.0)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.rho <= RHO_MAX:
            raise ValueError(f"rho out of range [0, {RHO_MAX}]")
        if len(self.lambdas) != 4 or any(l < 0 for l in self.lambdas):
            raise ValueError("lambdas must be four nonnegative weights")
        if self.rho > 1.0:
            warnings.warn(f"rho={self.rho} > 1 extrapolates beyond the target basis",
                          stacklevel=2)


@dataclass(frozen=True)
class AviOutput:
    """Stage-dependent outputs; fields a stage does not produce are None."""

    stage: str
    S: np.ndarray
    delta_s: np.ndarray
    S_x: np.ndarray
    y_hat: np.ndarray | None = None     # training composition toward z
    y_tilde: np.ndarray | None = None   # training reversed composition toward x
    U_hat: np.ndarray | None = None
    V_hat: np.ndarray | None = None
    y_pred: np.ndarray | None = None    # inference composition


def channel_svds(tensor):
    """Per-channel SVD triples of a latent tensor (float64 compute)."""
    if not isinstance(tensor, LatentTensor):
        raise ValueError("channel_svds expects a LatentTensor")
    return [linalg.svd(tensor.channel(c)) for c in range(tensor.channels)]


def build_attribute_bases(svd_x, svd_z, k, rho):
    """Blend source and reversed-target singular vector bases; see module doc.

    Returns (U_hat, V_hat).  rho=0 reproduces (U_x, V_x) exactly.
    """
    if not 0.0 <= rho <= RHO_MAX:
        raise ValueError(f"rho out of range [0, {RHO_MAX}]")
    U_x, V_x = svd_x.U, svd_x.V
    U_z, V_z = svd_z.U, svd_z.V
    if U_x.shape != U_z.shape or V_x.shape != V_z.shape:
        raise ValueError("source and target SVD shapes differ")
    m, n = U_x.shape[0], V_x.shape[0]
    if k < 1 or k > min(m, n):
        raise ValueError(f"k must be in [1, {min(m, n)}], got {k}")
    if rho != 0.0 and (m - k < k or n - k < k):
        raise ValueError(f"k={k} must be at most half the matrix side for rho != 0")

    U_hat = U_x.copy()
    U_hat[:, k:] *= (1.0 - rho)
    if rho != 0.0:
        U_hat[:, k:2 * k] += rho * linalg.reverse_columns(U_z)[:, :k]

    V_hat = V_x.copy()
    V_hat[k:, :] *= (1.0 - rho)
    if rho != 0.0:
        V_hat[k:2 * k, :] += rho * linalg.reverse_rows(V_z)[:k, :]
    return U_hat, V_hat


def _check_square_pair(x_channel, z_channel):
    x = linalg._as_matrix(x_channel, "x_channel")
    z = linalg._as_matrix(z_channel, "z_channel")
    if x.shape != z.shape:
        raise ValueError(f"channel shape mismatch {x.shape} vs {z.shape}")
    if x.shape[0] != x.shape[1]:
        raise ValueError("attribute integration requires square channels")
    return x, z


def avi_forward(x_channel, z_channel, S, delta_s, cfg, stage):
    """One channel through the blended-basis pipeline at the given stage."""
    x, z = _check_square_pair(x_channel, z_channel)
    svd_x = linalg.svd(x)
    svd_z = linalg.svd(z)
    return avi_forward_from_svd(svd_x, svd_z, S, delta_s, cfg, stage)


def avi_forward_from_svd(svd_x, svd_z, S, delta_s, cfg, stage):
    """avi_forward given precomputed channel SVDs (trainer cache path)."""
    if stage not in (STAGE_TRAINING, STAGE_INFERENCE):
        raise ValueError(f"unknown stage {stage!r}")
    S = np.asarray(S, dtype=np.float64)
    delta_s = np.asarray(delta_s, dtype=np.float64)
    n = svd_x.S.shape[0]
    if S.shape != (n,) or delta_s.shape != (n,):
        raise ValueError(f"S and delta_s must have length {n}")
    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(delta_s))):
        raise ValueError("non-finite spectrum prediction")
    U_hat, V_hat = build_attribute_bases(svd_x, svd_z, cfg.k, cfg.rho)
    composed = (U_hat * S) @ V_hat
    if stage == STAGE_TRAINING:
        U_t = linalg.reverse_columns(U_hat)
        V_t = linalg.reverse_rows(V_hat)
        y_tilde = (U_t * (S + delta_s)) @ V_t
        return AviOutput(stage=stage, S=S, delta_s=delta_s, S_x=svd_x.S.copy(),
                         y_hat=composed, y_tilde=y_tilde)
    return AviOutput(stage=stage, S=S, delta_s=delta_s, S_x=svd_x.S.copy(),
                     U_hat=U_hat, V_hat=V_hat, y_pred=composed)


def loss_l1(y_hat, z_channel):
    """Squared Frobenius distance between the forward composition and target."""
    return _sq_frob(y_hat, z_channel)


def loss_l2(y_tilde, x_channel):
    """Squared Frobenius distance between the reversed composition and source."""
    return _sq_frob(y_tilde, x_channel)


def loss_l3(S, S_z):
    """Squared distance of the predicted spectrum from the target spectrum."""
    return _sq_vec(S, S_z)


def loss_l4(S, delta_s, S_x):
    """Squared distance of the adjusted spectrum from the source spectrum."""
    S = np.asarray(S, dtype=np.float64)
    delta_s = np.asarray(delta_s, dtype=np.float64)
    return _sq_vec(S + delta_s, S_x)


def loss_total(parts, lambdas):
    """Weighted sum of the four losses."""
    parts = np.asarray(parts, dtype=np.float64)
    lam = np.asarray(lambdas, dtype=np.float64)
    if parts.shape != (4,) or lam.shape != (4,):
        raise ValueError("expected four parts and four weights")
    if np.any(lam < 0):
        raise ValueError("lambdas must be nonnegative")
    return float(parts @ lam)


def _sq_frob(A, B):
    A = linalg._as_matrix(A, "A")
    B = linalg._as_matrix(B, "B")
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    return float(np.sum((A - B) ** 2))


def _sq_vec(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("spectra must be vectors of equal length")
    return float(np.sum((a - b) ** 2))


def edit_latent(x, z, model, cfg, identity_s=False):
    """Edit latent x toward z channel-by-channel at blend strength cfg.rho.

    The prediction MLP supplies (S, delta_s) from the flattened source
    channel; ``identity_s`` is a debug switch substituting S = S_x and
    delta_s = 0, which at rho=0 reproduces x.  Output inherits x's metadata
    with tag "avi-edit".
    """
    from .mlp import phi_forward  # local import: avoid cycle at module load

    if not isinstance(x, LatentTensor) or not isinstance(z, LatentTensor):
        raise ValueError("edit_latent expects LatentTensor inputs")
    if x.data.shape != z.data.shape:
        raise ValueError(f"latent shape mismatch {x.data.shape} vs {z.data.shape}")
    if x.height != x.width:
        raise ValueError("attribute integration requires square channels")
    n = x.height
    if model.dims != (x.height * x.width, model.dims[1], n):
        raise ValueError(f"model dims {model.dims} do not match latent "
                         f"{x.data.shape} (need in={x.height * x.width}, out={n})")
    out = np.empty_like(x.data, dtype=np.float64)
    for c in range(x.channels):
        xc = x.channel(c)
        zc = z.channel(c)
        svd_x = linalg.svd(xc)
        svd_z = linalg.svd(zc)
        if identity_s:
            S = svd_x.S.copy()
            ds = np.zeros_like(S)
        else:
            S, ds, _ = phi_forward(model, xc.reshape(-1))
        res = avi_forward_from_svd(svd_x, svd_z, S, ds, cfg, STAGE_INFERENCE)
        out[c] = res.y_pred
    return LatentTensor(out, x.meta).with_meta(tag="avi-edit")
