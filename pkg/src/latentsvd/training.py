"""Training loop for the spectrum-prediction MLP over latent pairs.

The unit of batching is a *channel pair*: a dataset of ``n_samples`` per
(x, z) latent pair expands to ``n_samples * C`` items, each an N x N source
and target channel.  With sigma > 0 every sample is an independent Gaussian
perturbation of both pair members; sigma = 0 repeats the pair verbatim, in
which case the channel SVDs are computed once and shared by every copy.

Per batch the loop runs the MLP on the flattened source channels, composes
the blended bases from cached SVDs (bases are constants: gradients flow only
through S and delta_s), forms the four losses

    L1 = |y_hat - z|_F^2      L2 = |y_tilde - x|_F^2
    L3 = |S - S_z|^2          L4 = |S + delta_s - S_x|^2

averaged over the batch, and applies one Adam step on
``L = l1*L1 + l2*L2 + l3*L3 + l4*L4``.  Everything is deterministic under
the config seed: weight init, perturbations and the per-epoch shuffle all
derive from it.
"""

import json
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import avi, linalg, mlp
from .latents import load_latent, perturb
from .rng import derive_seed, permutation

_SEED_INIT = 0          # substream tags under TrainConfig.seed
_SEED_EPOCH_BASE = 1


@dataclass(frozen=True)
class TrainConfig:
    pairs: tuple                      # ((x_path, z_path), ...)
    n_samples: int | None = None      # default: 5000 for one pair, else 500
    sigma: float = 0.05
    k: int = 32
    rho_train: float = 1.0
    lambdas: tuple = (3.0, 10.0, 10.0, 10.0)
    batch_size: int = 256
    lr: float = 1e-3
    epochs: int = 5
    seed: int = 0

    def __post_init__(self):
        if len(self.pairs) < 1:
            raise ValueError("at least one latent pair is required")
        if self.n_samples is not None and self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")
        if self.lr < 0:
            raise ValueError("lr must be nonnegative")
        if not 0.0 <= self.rho_train <= avi.RHO_MAX:
            raise ValueError(f"rho_train out of range [0, {avi.RHO_MAX}]")
        if len(self.lambdas) != 4 or any(l < 0 for l in self.lambdas):
            raise ValueError("lambdas must be four nonnegative weights")

    def resolved_n(self):
        if self.n_samples is not None:
            return self.n_samples
        return 5000 if len(self.pairs) == 1 else 500

    def echo(self):
        """Effective configuration as a JSON-ready dict."""
        d = asdict(self)
        d["pairs"] = [list(p) for p in self.pairs]
        d["lambdas"] = list(self.lambdas)
        d["n_samples"] = self.resolved_n()
        return d


class ChannelSample:
    """One (x, z) channel pair with lazily computed, optionally cached SVDs."""

    __slots__ = ("x_mat", "z_mat", "cache_svd", "_svd_x", "_svd_z")

    def __init__(self, x_mat, z_mat, cache_svd):
        self.x_mat = x_mat
        self.z_mat = z_mat
        self.cache_svd = cache_svd
        self._svd_x = None
        self._svd_z = None

    def svds(self):
        if self._svd_x is not None:
            return self._svd_x, self._svd_z
        svd_x = linalg.svd(self.x_mat)
        svd_z = linalg.svd(self.z_mat)
        if self.cache_svd:
            self._svd_x, self._svd_z = svd_x, svd_z
        return svd_x, svd_z


def _load_pair(entry):
    x_path, z_path = entry
    x = load_latent(x_path)
    z = load_latent(z_path)
    if x.data.shape != z.data.shape:
        raise ValueError(f"pair shape mismatch {x.data.shape} vs {z.data.shape}")
    if x.height != x.width:
        raise ValueError("training requires square channels")
    return x, z


def make_dataset(cfg, loaded_pairs=None):
    """Expand the configured pairs into a flat list of channel samples.

    ``loaded_pairs`` lets callers bypass the filesystem with in-memory
    (LatentTensor, LatentTensor) tuples matching cfg.pairs order.
    """
    if loaded_pairs is None:
        loaded_pairs = [_load_pair(e) for e in cfg.pairs]
    n = cfg.resolved_n()
    items = []
    for p_idx, (x, z) in enumerate(loaded_pairs):
        if cfg.sigma == 0.0:
            base = [ChannelSample(x.channel(c), z.channel(c), cache_svd=True)
                    for c in range(x.channels)]
            for _ in range(n):
                items.extend(base)
        else:
            for s_idx in range(n):
                xs = perturb(x, cfg.sigma, derive_seed(cfg.seed, p_idx, s_idx, 0))
                zs = perturb(z, cfg.sigma, derive_seed(cfg.seed, p_idx, s_idx, 1))
                items.extend(ChannelSample(xs.channel(c), zs.channel(c), cache_svd=False)
                             for c in range(x.channels))
    return items


@dataclass
class StepRecord:
    step: int
    epoch: int
    l1: float
    l2: float
    l3: float
    l4: float
    l_total: float
    wall_ms: float


@dataclass
class TrainHistory:
    config: dict
    steps: list = field(default_factory=list)

    def epoch_means(self):
        """Mean of each loss column per epoch, keyed by epoch number."""
        out = {}
        for epoch in sorted({r.epoch for r in self.steps}):
            rows = [r for r in self.steps if r.epoch == epoch]
            out[epoch] = {key: float(np.mean([getattr(r, key) for r in rows]))
                          for key in ("l1", "l2", "l3", "l4", "l_total")}
        return out

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("step,epoch,L1,L2,L3,L4,L_total,wall_ms\n")
            for r in self.steps:
                fh.write(f"{r.step},{r.epoch},{r.l1!r},{r.l2!r},{r.l3!r},"
                         f"{r.l4!r},{r.l_total!r},{r.wall_ms:.3f}\n")


def _batch_losses_and_grads(model, items, k, rho, lambdas):
    """Forward + loss + head gradients for one batch of channel samples."""
    B = len(items)
    X = np.stack([it.x_mat.reshape(-1) for it in items])
    S_b, ds_b, cache = mlp.forward_batch(model, X)

    U_hat = np.empty((B,) + items[0].x_mat.shape)
    V_hat = np.empty_like(U_hat)
    S_x = np.empty_like(S_b)
    S_z = np.empty_like(S_b)
    for i, it in enumerate(items):
        svd_x, svd_z = it.svds()
        U_hat[i], V_hat[i] = avi.build_attribute_bases(svd_x, svd_z, k, rho)
        S_x[i] = svd_x.S
        S_z[i] = svd_z.S
    Z = np.stack([it.z_mat for it in items])
    Xm = np.stack([it.x_mat for it in items])

    # The finiteness guard below is the real error path; silence the
    # redundant numpy warnings a diverging model emits on the way there.
    with np.errstate(over="ignore", invalid="ignore"):
        T = S_b + ds_b
        y_hat = (U_hat * S_b[:, None, :]) @ V_hat
        U_t = U_hat[:, :, ::-1]
        V_t = V_hat[:, ::-1, :]
        y_tilde = (U_t * T[:, None, :]) @ V_t

        R1 = y_hat - Z
        R2 = y_tilde - Xm
        parts = np.array([
            float(np.mean(np.sum(R1 * R1, axis=(1, 2)))),
            float(np.mean(np.sum(R2 * R2, axis=(1, 2)))),
            float(np.mean(np.sum((S_b - S_z) ** 2, axis=1))),
            float(np.mean(np.sum((T - S_x) ** 2, axis=1))),
        ])
    total = avi.loss_total(parts, lambdas)
    if not np.isfinite(total):
        raise RuntimeError(f"training diverged: non-finite loss {parts}")

    l1w, l2w, l3w, l4w = lambdas
    # d/dS_i of |U diag(S) V - M|^2 is 2 * u_i^T (U diag(S) V - M) v_i^T.
    t1 = np.einsum("bic,bic->bi", np.matmul(U_hat.transpose(0, 2, 1), R1), V_hat)
    t2 = np.einsum("bic,bic->bi", np.matmul(U_t.transpose(0, 2, 1), R2), V_t)
    g_T = (2.0 * l2w / B) * t2 + (2.0 * l4w / B) * (T - S_x)
    g_S = (2.0 * l1w / B) * t1 + (2.0 * l3w / B) * (S_b - S_z) + g_T
    return parts, total, cache, g_S, g_T


def train(cfg, loaded_pairs=None):
    """Run the configured training; returns (model, history)."""
    if loaded_pairs is None:
        loaded_pairs = [_load_pair(e) for e in cfg.pairs]
    x0 = loaded_pairs[0][0]
    for x, z in loaded_pairs:
        if x.data.shape != x0.data.shape:
            raise ValueError("all pairs must share one latent shape")
    n_side = x0.height
    dims = (x0.height * x0.width, x0.height * x0.width, n_side)
    if cfg.k > n_side // 2 and cfg.rho_train != 0.0:
        raise ValueError(f"k={cfg.k} must be at most half the channel side {n_side}")

    dataset = make_dataset(cfg, loaded_pairs)
    model = mlp.init_model(dims, derive_seed(cfg.seed, _SEED_INIT))
    state = mlp.AdamState()
    history = TrainHistory(config=cfg.echo())

    step = 0
    for epoch in range(1, cfg.epochs + 1):
        order = permutation(derive_seed(cfg.seed, _SEED_EPOCH_BASE + epoch), len(dataset))
        for lo in range(0, len(dataset), cfg.batch_size):
            t0 = time.perf_counter()
            batch = [dataset[i] for i in order[lo:lo + cfg.batch_size]]
            parts, total, cache, g_S, g_T = _batch_losses_and_grads(
                model, batch, cfg.k, cfg.rho_train, cfg.lambdas)
            grads = mlp.backward_batch(model, cache, g_S, g_T)
            mlp.adam_step(model, state, grads, cfg.lr)
            step += 1
            history.steps.append(StepRecord(
                step=step, epoch=epoch, l1=parts[0], l2=parts[1], l3=parts[2],
                l4=parts[3], l_total=total,
                wall_ms=1000.0 * (time.perf_counter() - t0)))
    return model, history


@dataclass
class EvalRow:
    channel: int
    dist_pred_x: float   # |y_pred - x|_F
    dist_pred_z: float   # |y_pred - z|_F
    dist_hat_z: float    # |y_hat - z|_F
    dist_tilde_x: float  # |y_tilde - x|_F
    ratio: float         # identity fidelity: dist_pred_x / dist_pred_z


@dataclass
class EvalReport:
    rows: list
    rho: float
    k: int

    def mean(self, attr):
        return float(np.mean([getattr(r, attr) for r in self.rows]))

    def to_dict(self):
        return {"rho": self.rho, "k": self.k,
                "channels": [vars(r) for r in self.rows],
                "mean_ratio": self.mean("ratio")}


def evaluate(model, x, z, cfg, identity_s=False):
    """Per-channel reconstruction/edit distances for a pair under cfg.

    cfg is an AviConfig; both the inference composition y_pred and the
    training compositions y_hat / y_tilde are reported.
    """
    if x.data.shape != z.data.shape:
        raise ValueError("pair shape mismatch")
    rows = []
    for c in range(x.channels):
        xc = x.channel(c)
        zc = z.channel(c)
        svd_x = linalg.svd(xc)
        svd_z = linalg.svd(zc)
        if identity_s:
            S = svd_x.S.copy()
            ds = np.zeros_like(S)
        else:
            S, ds, _ = mlp.phi_forward(model, xc.reshape(-1))
        inf = avi.avi_forward_from_svd(svd_x, svd_z, S, ds, cfg, avi.STAGE_INFERENCE)
        tr = avi.avi_forward_from_svd(svd_x, svd_z, S, ds, cfg, avi.STAGE_TRAINING)
        d_x = linalg.frobenius_distance(inf.y_pred, xc)
        d_z = linalg.frobenius_distance(inf.y_pred, zc)
        if d_z > 0.0:
            ratio = d_x / d_z
        else:
            ratio = 0.0 if d_x == 0.0 else float("inf")
        rows.append(EvalRow(
            channel=c,
            dist_pred_x=d_x,
            dist_pred_z=d_z,
            dist_hat_z=linalg.frobenius_distance(tr.y_hat, zc),
            dist_tilde_x=linalg.frobenius_distance(tr.y_tilde, xc),
            ratio=ratio))
    return EvalReport(rows=rows, rho=cfg.rho, k=cfg.k)
