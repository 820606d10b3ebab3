"""Channel-wise SVD toolkit for latent-tensor attribute editing."""

import os as _os

# LSVD_THREADS caps the numeric thread pools; it must land in the
# environment before numpy first loads its BLAS, hence this runs at the very
# top of the package.  Unset, the pools keep their machine defaults.
if "LSVD_THREADS" in _os.environ:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _os.environ["LSVD_THREADS"])

__version__ = "0.1.0"

from .latents import (GenSpec, LatentMeta, LatentTensor, load_latent, perturb,
                      save_latent, sidecar_path, synth_latent)
from .linalg import (SvdConvergenceError, SvdTriple, frobenius_distance,
                     geodesic_distance, principal_angles, reconstruct,
                     reverse_columns, reverse_rows, spectral_norm, svd)
from .avi import (AviConfig, AviOutput, avi_forward, build_attribute_bases,
                  channel_svds, edit_latent, loss_l1, loss_l2, loss_l3,
                  loss_l4, loss_total)
from .mlp import (AdamState, PhiModel, adam_step, init_model, load_model,
                  phi_backward, phi_forward, save_model)
from .training import (EvalReport, TrainConfig, TrainHistory, evaluate,
                       make_dataset, train)
from .analysis import (GeodesicSeries, MobilityTrace, SingularValueTable,
                       TheoremReport, geodesic_trajectory, mobility_trace,
                       singular_value_trajectory, verify_theorem,
                       verify_theorem_corpus)

__all__ = [name for name in dir() if not name.startswith("_")]
