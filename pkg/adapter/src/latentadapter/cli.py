"""Command line for the capture/resume bridge.

``capture`` saves scheduler-state latents for an (original, target) prompt
pair at fractions of the schedule; ``resume`` finishes denoising from a
latent file under the original prompt.  Exit codes: 0 success, 2 argument
or validation errors, 1 runtime errors.
"""

import argparse
import sys

from .backend import BackendError, BackendUnavailable, available_backends
from .capture import CaptureSpec, capture, resume


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="latentadapter",
        description="capture/resume bridge between denoising pipelines "
                    "and LSVD latent files")
    sub = ap.add_subparsers(dest="command", required=True)

    cap = sub.add_parser("capture",
                         help="save latents for a prompt pair at schedule "
                              "fractions")
    cap.add_argument("--model-id", default="synthetic",
                     help=f"backend id (available: "
                          f"{', '.join(available_backends())})")
    cap.add_argument("--original", required=True, help="original prompt")
    cap.add_argument("--target", required=True, help="target prompt")
    cap.add_argument("--steps", type=float, nargs="+", default=[0.8, 0.5],
                     metavar="FRAC", help="fractions of the schedule")
    cap.add_argument("--seed", type=int, default=0)
    cap.add_argument("--scheduler", default="ddim")
    cap.add_argument("--total-steps", type=int, default=1000)
    cap.add_argument("--out", required=True, help="output directory")

    res = sub.add_parser("resume",
                         help="finish denoising from a latent file")
    res.add_argument("--latent", required=True, help="LSVD latent file")
    res.add_argument("--spec", required=True,
                     help="capture.json written by capture")
    res.add_argument("--out", required=True, help="output image (PNG)")
    res.add_argument("--rho", type=float, default=None,
                     help="blend strength used for the edit (recorded in "
                          "the image sidecar)")
    res.add_argument("--model", default=None,
                     help="spectrum-model file used for the edit (its "
                          "SHA-256 is recorded in the image sidecar)")
    return ap


def cmd_capture(args):
    spec = CaptureSpec(original_prompt=args.original,
                       target_prompt=args.target,
                       capture_steps=tuple(args.steps),
                       seed=args.seed,
                       scheduler=args.scheduler,
                       total_steps=args.total_steps,
                       model_id=args.model_id)
    for path in capture(spec, args.out):
        print(f"wrote {path}")
    return 0


def cmd_resume(args):
    spec = CaptureSpec.from_json(args.spec)
    resume(args.latent, spec, args.out, rho=args.rho, model_path=args.model)
    print(f"wrote {args.out}")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handler = {"capture": cmd_capture, "resume": cmd_resume}[args.command]
    try:
        return handler(args)
    except (ValueError, BackendUnavailable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, BackendError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
