"""Capture and resume operations over a denoising backend.

``capture`` runs the backend once per prompt and writes one LSVD file (plus
meta sidecar) per (prompt, step): tags are ``original`` / ``target``, the
recorded ``time_step`` is ``round(fraction * total_steps)``, and the
payload is the float32 cast of the backend's in-memory scheduler state —
never transformed.  A ``capture.json`` with the full spec lands next to
the latents for later ``resume`` calls.

``resume`` reads a latent file (captured, or edited by the toolkit — edits
inherit the capture step in the sidecar), validates shape and schedule
against the spec, finishes denoising under the *original* prompt, and
writes a PNG plus a bookkeeping sidecar (resume step, source file, and —
when supplied — the blend strength and the SHA-256 of the spectrum-model
file that produced the edit).
"""

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .backend import BackendError, get_backend
from .lsvd import read_lsvd, write_lsvd

SPEC_FILENAME = "capture.json"


@dataclass(frozen=True)
class CaptureSpec:
    original_prompt: str
    target_prompt: str
    capture_steps: tuple = (0.8, 0.5)   # fractions of total_steps
    seed: int = 0
    scheduler: str = "ddim"
    total_steps: int = 1000
    model_id: str = "synthetic"

    def __post_init__(self):
        if not self.original_prompt or not self.target_prompt:
            raise ValueError("prompts must be non-empty")
        if not self.capture_steps:
            raise ValueError("need at least one capture step")
        for f in self.capture_steps:
            if not 0.0 < f <= 1.0:
                raise ValueError(f"capture fraction {f} outside (0, 1]")
        if self.total_steps < 1:
            raise ValueError("total_steps must be positive")
        object.__setattr__(self, "capture_steps",
                           tuple(float(f) for f in self.capture_steps))

    def step_for(self, fraction):
        step = round(fraction * self.total_steps)
        if not 1 <= step <= self.total_steps:
            raise ValueError(f"step outside schedule: fraction {fraction} "
                             f"maps to step {step} of {self.total_steps}")
        return step

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            raw = json.load(fh)
        raw["capture_steps"] = tuple(raw.get("capture_steps", (0.8, 0.5)))
        return cls(**raw)


def capture(spec, out_dir):
    """Run both prompts, write one latent per (prompt, step); returns the
    written latent paths (2 prompts x len(capture_steps) files)."""
    backend = get_backend(spec.model_id)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    steps = sorted({spec.step_for(f) for f in spec.capture_steps},
                   reverse=True)
    written = []
    for tag, prompt in (("original", spec.original_prompt),
                        ("target", spec.target_prompt)):
        _, states = backend.run(prompt=prompt, seed=spec.seed,
                                total_steps=spec.total_steps,
                                capture_steps=steps)
        for t in steps:
            path = out / f"{tag}_t{t:04d}.lat"
            write_lsvd(states[t], path,
                       meta={"time_step": t, "total_steps": spec.total_steps,
                             "seed": spec.seed, "tag": tag})
            written.append(path)
    spec.to_json(out / SPEC_FILENAME)
    return written


def _sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def resume(latent_path, spec, out_image, rho=None, model_path=None):
    """Finish denoising from a latent file under the original prompt.

    Writes ``out_image`` (PNG) and ``<out_image>.json`` recording the
    resume step, source latent, and the edit bookkeeping (rho, model
    SHA-256) when provided.  Returns the decoded uint8 image array."""
    from PIL import Image

    data, meta = read_lsvd(latent_path)
    backend = get_backend(spec.model_id)
    if tuple(data.shape) != tuple(backend.latent_shape):
        raise BackendError(f"latent shape mismatch: file has {data.shape}, "
                           f"backend expects {backend.latent_shape}")
    if meta.get("time_step") is None:
        raise BackendError(f"{latent_path}: sidecar records no capture step")
    if meta.get("total_steps") != spec.total_steps:
        raise BackendError(
            f"schedule mismatch: latent was captured on a "
            f"{meta.get('total_steps')}-step schedule, spec says "
            f"{spec.total_steps}")
    step = int(meta["time_step"])
    x0 = backend.resume(data.astype("float64"), step, spec.original_prompt,
                        spec.total_steps)
    img = backend.decode(x0)
    Image.fromarray(img).save(out_image)
    record = {"model_id": spec.model_id,
              "scheduler": spec.scheduler,
              "original_prompt": spec.original_prompt,
              "seed": spec.seed,
              "total_steps": spec.total_steps,
              "resume_step": step,
              "source_latent": str(latent_path),
              "rho": rho,
              "phi_model_sha256":
                  _sha256_file(model_path) if model_path else None}
    with open(str(out_image) + ".json", "w") as fh:
        json.dump(record, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return img
