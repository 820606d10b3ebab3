"""Capture/resume bridge between denoising pipelines and LSVD latent files.

The adapter hooks a text-to-image denoising loop, saves the scheduler-state
latent (pre-guidance) at requested fractions of the schedule for an
(original, target) prompt pair, and can inject an (edited) latent file back
into the loop to finish denoising under the original prompt.

It is deliberately isolated from the editing toolkit: the two packages
share only the documented LSVD/PHI1 file formats and the ``latentsvd``
command line.  Nothing here imports ``latentsvd`` and nothing there imports
this package.
"""

__version__ = "0.1.0"

from .lsvd import read_lsvd, write_lsvd, sidecar_path
from .backend import (BackendError, BackendUnavailable, SyntheticBackend,
                      available_backends, get_backend)
from .capture import CaptureSpec, capture, resume

__all__ = [name for name in dir() if not name.startswith("_")]
