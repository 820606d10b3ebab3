"""Denoising backends for capture/resume.

A backend exposes the minimal surface the adapter needs: the latent shape,
a deterministic denoising run that can hand out scheduler-state latents at
requested steps, a resume entry point that continues from such a state, and
a decoder from the final latent to an RGB image.

The built-in ``synthetic`` backend is a desk-scale stand-in for a real
text-to-image pipeline: a seeded Gaussian initial latent (shared by both
prompts of a pair, as with a real sampler) is pulled by a deterministic
DDIM-style update toward a prompt-derived attractor field.  It needs no
model weights, runs in milliseconds, and is bit-reproducible for a given
(seed, prompt, schedule), which is what the capture contract requires.
The captured latent is the scheduler state *before* the update at that
step — for guided pipelines this is the pre-guidance state; the synthetic
trajectory has no guidance branch, so the hook placement is the
documentation point.

Real pipelines plug in by registering another backend with the same four
methods; none is bundled because this environment installs no diffusion
weights.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np


class BackendError(RuntimeError):
    """Capture/resume failed (shape, schedule, or state problems)."""


class BackendUnavailable(BackendError):
    """No backend registered under the requested model id."""


def _prompt_seed(prompt):
    digest = hashlib.sha256(prompt.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _blur3(x):
    """Separable 3-tap [1, 2, 1]/4 blur with edge padding on H and W."""
    p = np.pad(x, ((0, 0), (1, 1), (0, 0)), mode="edge")
    x = 0.25 * (p[:, :-2, :] + 2.0 * p[:, 1:-1, :] + p[:, 2:, :])
    p = np.pad(x, ((0, 0), (0, 0), (1, 1)), mode="edge")
    return 0.25 * (p[:, :, :-2] + 2.0 * p[:, :, 1:-1] + p[:, :, 2:])


# Fixed latent->RGB mixing used by the decoder.
_RGB_MIX = np.array([[0.60, -0.30, 0.20, 0.10],
                     [-0.20, 0.50, 0.30, -0.10],
                     [0.10, 0.20, -0.40, 0.60]])


@dataclass
class SyntheticBackend:
    """Deterministic toy denoiser over (4, 64, 64) latents."""

    latent_shape: tuple = (4, 64, 64)
    upscale: int = 4
    field_weight: float = 0.8
    highpass_weight: float = 0.2
    _field_cache: dict = field(default_factory=dict, repr=False)

    def _alpha_bar(self, t, total_steps):
        # exp(-4 t/T): 1 at t=0, ~0.018 at t=T; keeps every DDIM division
        # well-conditioned while spanning a realistic noise range.
        return float(np.exp(-4.0 * t / total_steps))

    def _field(self, prompt):
        if prompt not in self._field_cache:
            rng = np.random.default_rng(_prompt_seed(prompt))
            self._field_cache[prompt] = rng.standard_normal(self.latent_shape)
        return self._field_cache[prompt]

    def initial_latent(self, seed):
        rng = np.random.default_rng(seed)
        return rng.standard_normal(self.latent_shape)

    def _epsilon(self, x, prompt):
        return (self.field_weight * self._field(prompt)
                + self.highpass_weight * (x - _blur3(x)))

    def _step(self, x, t, prompt, total_steps):
        """One deterministic update from scheduler state at step t to t-1."""
        a_t = self._alpha_bar(t, total_steps)
        a_prev = self._alpha_bar(t - 1, total_steps)
        eps = self._epsilon(x, prompt)
        x0_pred = (x - np.sqrt(1.0 - a_t) * eps) / np.sqrt(a_t)
        return np.sqrt(a_prev) * x0_pred + np.sqrt(1.0 - a_prev) * eps

    def run(self, prompt, seed, total_steps, capture_steps=()):
        """Full denoising run; returns (x0, {step: scheduler-state latent}).

        The recorded latent for step t is the state *entering* the update
        at t (float64; the caller casts to float32 when writing LSVD)."""
        wanted = set(int(t) for t in capture_steps)
        bad = [t for t in wanted if not 1 <= t <= total_steps]
        if bad:
            raise BackendError(f"step outside schedule: {sorted(bad)} "
                               f"(schedule 1..{total_steps})")
        x = self.initial_latent(seed)
        captured = {}
        for t in range(total_steps, 0, -1):
            if t in wanted:
                captured[t] = x.copy()
            x = self._step(x, t, prompt, total_steps)
        return x, captured

    def resume(self, latent, step, prompt, total_steps):
        """Continue denoising from a scheduler-state latent at ``step``."""
        x = np.asarray(latent, dtype=np.float64)
        if x.shape != self.latent_shape:
            raise BackendError(f"latent shape mismatch: got {x.shape}, "
                               f"backend expects {self.latent_shape}")
        if not 1 <= step <= total_steps:
            raise BackendError(f"step outside schedule: {step} "
                               f"(schedule 1..{total_steps})")
        for t in range(step, 0, -1):
            x = self._step(x, t, prompt, total_steps)
        return x

    def decode(self, x0):
        """Final latent -> uint8 RGB array (H*upscale, W*upscale, 3).

        The 1/8 gain keeps the sigmoid in its responsive range for the
        final-latent magnitudes this trajectory produces (|x0| up to ~30)."""
        rgb = 1.0 / (1.0 + np.exp(-np.tensordot(_RGB_MIX, x0, axes=1) / 8.0))
        img = np.clip(np.rint(255.0 * rgb), 0, 255).astype(np.uint8)
        img = img.repeat(self.upscale, axis=1).repeat(self.upscale, axis=2)
        return np.moveaxis(img, 0, -1)


_BACKENDS = {"synthetic": SyntheticBackend}


def available_backends():
    return sorted(_BACKENDS)


def get_backend(model_id):
    try:
        factory = _BACKENDS[model_id]
    except KeyError:
        raise BackendUnavailable(
            f"no backend for model id {model_id!r}; available: "
            f"{', '.join(available_backends())}") from None
    return factory()
