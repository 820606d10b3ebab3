"""Shared fixtures and helpers for the latentsvd test suite.

Oracle policy used throughout these tests:

* numpy.linalg (an independent LAPACK-backed implementation) serves as the
  cross-check oracle for the in-repo Jacobi SVD and for spectral norms.
* Hand-written dense triple products with explicit ``np.diag`` calls serve
  as oracles for the blended-basis compositions.
* ``math.fsum`` double loops serve as oracles for Frobenius distances.
* Central finite differences serve as the oracle for analytic gradients.

Frozen constants in the test modules were computed once from these oracles
and are asserted against the implementation thereafter.
"""

import numpy as np
import pytest

from latentsvd import GenSpec, synth_latent


def rand_matrix(seed, m, n=None, scale=1.0):
    """Seeded dense Gaussian matrix from numpy's own generator.

    Deliberately uses numpy's PCG64 rather than the package RNG so that
    test inputs are independent of the code under test.
    """
    if n is None:
        n = m
    rng = np.random.default_rng(seed)
    return scale * rng.standard_normal((m, n))


def orthonormality_residual(Q):
    """max |Q^T Q - I| — zero iff the columns are orthonormal."""
    k = Q.shape[1]
    return float(np.max(np.abs(Q.T @ Q - np.eye(k))))


@pytest.fixture
def small_latent():
    """A 2-channel 8x8 latent used by I/O and analysis tests."""
    return synth_latent(GenSpec(shape=(2, 8, 8), seed=11))


@pytest.fixture
def square_pair():
    """A correlated (x, z) latent pair with 16x16 channels."""
    from latentsvd import perturb

    x = synth_latent(GenSpec(shape=(2, 16, 16), seed=5))
    z = perturb(x, 0.3, seed=6)
    return x, z
