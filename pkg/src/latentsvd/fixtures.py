"""Deterministic synthetic fixtures for training and geometry experiments.

The training fixture is a correlated 4 x 64 x 64 pair built from seed 42:
the source starts as a pseudo-Gaussian draw, each channel is recomposed with
a near-flat spectrum (linspace 8.5 -> 7.5, preserving the Gaussian energy
scale |x|_F^2 ~ 4096 per channel), and the target is a sigma = 0.05
perturbation of the source.

The spectral balancing matters: with the default loss weights and rho = 1
the objective has a nonzero analytic floor proportional to the spread of the
channel spectra, because the reversed composition pins S + delta_s near S_x
while its permuted rank-1 modes want the reversed spectrum.  Unmodified
Gaussian pairs (quarter-circle spectra) floor out at 16-39% of the initial
loss no matter how long one trains; the balanced pair floors near 7%, so a
five-epoch run demonstrably converges (final / initial ~ 0.073, the pinned
regression baseline).

The flat spectrum has one measured consequence: with a near-duplicate pair
the trained model's rho sweep is not strictly widening — the distance from
the rho = 0 edit peaks near rho = 0.5 and dips a few percent by rho = 1,
because equal-weight rank-one sums are nearly invariant under the joint
tail rotation the blend applies.  Steeper tails would straighten the sweep
but re-open the loss floor (the trained tail spectrum converges to the
blend (lambda3*S_z + lambda1*rev(S_z)) / (lambda1 + lambda3), which erodes
any affordable spread); the acceptance suite measures this trade-off.
"""

import numpy as np

from . import linalg
from .latents import GenSpec, LatentTensor, perturb, synth_latent

TRAIN_FIXTURE_SEED = 42
_PERTURB_SEED = 43
_PERTURB_SIGMA = 0.05


def balance_spectrum(tensor, hi=8.5, lo=7.5):
    """Recompose every channel with a gently decreasing near-flat spectrum."""
    out = np.empty(tensor.data.shape)
    for c in range(tensor.channels):
        tr = linalg.svd(tensor.channel(c))
        flat = np.linspace(hi, lo, tr.S.shape[0])
        out[c] = linalg.reconstruct(tr.U, flat, tr.V)
    return LatentTensor(out, tensor.meta)


def training_fixture_pair(seed=TRAIN_FIXTURE_SEED, shape=(4, 64, 64)):
    """The deterministic (x, z) pair used by the training regression tests."""
    x = balance_spectrum(synth_latent(GenSpec(shape, seed=seed)))
    z = perturb(x, _PERTURB_SIGMA, _PERTURB_SEED)
    return x, z


def latent_walk(shape=(4, 64, 64), steps=5, sigma=0.2, seed=7,
                total_steps=1000):
    """A short random-walk latent sequence with descending time-step labels.

    Each element perturbs the previous one, mimicking a denoising trajectory
    for the geometry analyses; labels run from total_steps down in even hops.
    """
    if steps < 2:
        raise ValueError("need at least two steps")
    labels = np.linspace(total_steps, total_steps // steps, steps).astype(int)
    seq = [synth_latent(GenSpec(shape, seed=seed)).with_meta(
        time_step=int(labels[0]), total_steps=total_steps)]
    for i in range(1, steps):
        nxt = perturb(seq[-1], sigma, seed + 100 + i)
        seq.append(nxt.with_meta(time_step=int(labels[i]), total_steps=total_steps))
    return seq
