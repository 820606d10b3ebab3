"""Subspace-geometry diagnostics over latent pairs and sequences.

Four instruments:

* ``verify_theorem`` measures, per channel, whether the rho=1 blended basis
  U_hat stays at least as close to the source basis U_x as to the target
  basis U_z (|U_hat - U_x| <= |U_hat - U_z|), reporting Frobenius and
  spectral distances plus the spectral-dominance side condition
  sigma_max(x) <= sigma_max(z).  The inequality is treated as an empirical
  property to measure, not a guarantee.
* ``geodesic_trajectory`` tracks Grassmannian distances of the leading-p
  singular subspaces along an ordered latent sequence.
* ``singular_value_trajectory`` tabulates per-channel spectra and their
  step-to-step deltas.
* ``mobility_trace`` matches singular vectors between consecutive latents by
  greedy maximal |cosine| assignment and accumulates rank shifts.
"""

from dataclasses import dataclass, field

import numpy as np

from . import avi, linalg


def _labels(latents):
    """Time-step labels from metadata when present, else positional indices."""
    if all(t.meta.time_step is not None for t in latents):
        return [int(t.meta.time_step) for t in latents]
    return list(range(len(latents)))


def _check_sequence(latents, minimum=2):
    if len(latents) < minimum:
        raise ValueError(f"need at least {minimum} latents")
    shape = latents[0].data.shape
    for t in latents[1:]:
        if t.data.shape != shape:
            raise ValueError("latent sequence must share one shape")
    return shape


# ---------------------------------------------------------------------------
# closeness-to-source inequality


@dataclass
class TheoremRow:
    pair: int
    channel: int
    dist_x_fro: float
    dist_z_fro: float
    dist_x_spec: float
    dist_z_spec: float
    smax_x: float
    smax_z: float
    assumption: bool   # sigma_max(x) <= sigma_max(z)
    holds: bool        # dist to U_x <= dist to U_z under the requested norm


@dataclass
class TheoremReport:
    norm: str
    k: int
    rows: list = field(default_factory=list)

    @property
    def rate(self):
        """Fraction of channels where the inequality holds."""
        if not self.rows:
            return 0.0
        return float(np.mean([r.holds for r in self.rows]))


def verify_theorem(x, z, k=None, norm="frobenius", pair_index=0, report=None):
    """Closeness-to-source check for one latent pair; see module docstring.

    k defaults to N // 2 (the regime where the blended tail is purely the
    reversed target block at rho = 1).
    """
    if norm not in ("frobenius", "spectral"):
        raise ValueError(f"unknown norm {norm!r}")
    if x.data.shape != z.data.shape:
        raise ValueError("pair shape mismatch")
    if x.height != x.width:
        raise ValueError("square channels required")
    n = x.height
    if k is None:
        k = n // 2
    if report is None:
        report = TheoremReport(norm=norm, k=k)
    for c in range(x.channels):
        svd_x = linalg.svd(x.channel(c))
        svd_z = linalg.svd(z.channel(c))
        U_hat, _ = avi.build_attribute_bases(svd_x, svd_z, k, rho=1.0)
        dxf = linalg.frobenius_distance(U_hat, svd_x.U)
        dzf = linalg.frobenius_distance(U_hat, svd_z.U)
        dxs = linalg.spectral_norm(U_hat - svd_x.U)
        dzs = linalg.spectral_norm(U_hat - svd_z.U)
        dx, dz = (dxf, dzf) if norm == "frobenius" else (dxs, dzs)
        report.rows.append(TheoremRow(
            pair=pair_index, channel=c,
            dist_x_fro=dxf, dist_z_fro=dzf, dist_x_spec=dxs, dist_z_spec=dzs,
            smax_x=float(svd_x.S[0]), smax_z=float(svd_z.S[0]),
            assumption=bool(svd_x.S[0] <= svd_z.S[0]),
            holds=bool(dx <= dz)))
    return report


def verify_theorem_corpus(pairs, k=None, norm="frobenius"):
    """Aggregate the inequality over an iterable of (x, z) pairs."""
    report = None
    for i, (x, z) in enumerate(pairs):
        if report is None:
            report = TheoremReport(norm=norm, k=k if k is not None else x.height // 2)
        verify_theorem(x, z, k=k, norm=norm, pair_index=i, report=report)
    if report is None:
        raise ValueError("empty corpus")
    return report


# ---------------------------------------------------------------------------
# geodesic trajectory


@dataclass
class GeodesicSeries:
    labels: list            # per-latent labels (time steps or indices)
    mode: str               # "consecutive" or "against-first"
    p: int
    side: str               # "left" or "right"
    pairs: list             # [(i, j), ...] compared latent indices
    distances: np.ndarray   # (num_pairs, C)

    @property
    def mean(self):
        return self.distances.mean(axis=1)

    @property
    def variance(self):
        return self.distances.var(axis=1)


def _subspace_basis(triple, p, side):
    if side == "left":
        return triple.U[:, :p]
    return triple.V[:p, :].T


def geodesic_trajectory(latents, p=4, mode="consecutive", side="left"):
    """Grassmannian distances of leading-p singular subspaces along a sequence."""
    if mode not in ("consecutive", "against-first"):
        raise ValueError(f"unknown mode {mode!r}")
    if side not in ("left", "right"):
        raise ValueError(f"unknown side {side!r}")
    _check_sequence(latents)
    c_count = latents[0].channels
    svds = [avi.channel_svds(t) for t in latents]
    if mode == "consecutive":
        index_pairs = [(i, i + 1) for i in range(len(latents) - 1)]
    else:
        index_pairs = [(0, i) for i in range(1, len(latents))]
    dist = np.empty((len(index_pairs), c_count))
    for row, (i, j) in enumerate(index_pairs):
        for c in range(c_count):
            dist[row, c] = linalg.geodesic_distance(
                _subspace_basis(svds[i][c], p, side),
                _subspace_basis(svds[j][c], p, side), p)
    return GeodesicSeries(labels=_labels(latents), mode=mode, p=p, side=side,
                          pairs=index_pairs, distances=dist)


# ---------------------------------------------------------------------------
# singular value trajectory


@dataclass
class SingularValueTable:
    labels: list
    values: np.ndarray   # (T, C, N) spectra
    deltas: np.ndarray   # (T-1, C, N) consecutive differences


def singular_value_trajectory(latents):
    """Per-step, per-channel spectra with consecutive deltas."""
    _check_sequence(latents)
    values = np.stack([np.stack([t.S for t in avi.channel_svds(lat)])
                       for lat in latents])
    return SingularValueTable(labels=_labels(latents), values=values,
                              deltas=np.diff(values, axis=0))


# ---------------------------------------------------------------------------
# singular vector mobility


def _greedy_match(cos_abs):
    """Greedy maximal-|cosine| assignment; ties resolve to the lowest flat
    index (row-major).  Returns (perm, scores): perm[i] = matched column."""
    n = cos_abs.shape[0]
    work = cos_abs.copy()
    perm = np.full(n, -1, dtype=np.intp)
    scores = np.zeros(n)
    for _ in range(n):
        flat = int(np.argmax(work))  # first occurrence wins on ties
        i, j = divmod(flat, n)
        perm[i] = j
        scores[i] = cos_abs[i, j]
        work[i, :] = -1.0
        work[:, j] = -1.0
    return perm, scores


def _hungarian_match(cos_abs):
    from scipy.optimize import linear_sum_assignment

    rows, cols = linear_sum_assignment(-cos_abs)
    perm = np.empty_like(cols)
    perm[rows] = cols
    return perm, cos_abs[rows, perm[rows]]


@dataclass
class MobilityTrace:
    labels: list
    side: str
    method: str
    permutations: np.ndarray  # (T-1, C, N) perm[t, c, i] = match of rank i
    cosines: np.ndarray       # (T-1, C, N) |cosine| of each match
    rank_table: np.ndarray    # (T, C, N) rank at step t of vector starting at rank i

    @property
    def net_shift(self):
        """Final minus initial rank per starting index, (C, N)."""
        return self.rank_table[-1] - self.rank_table[0]


def mobility_trace(latents, side="left", method="greedy"):
    """Match singular vectors across consecutive latents and track ranks.

    For each transition the |cosine| matrix between step-t and step-t+1
    singular vectors is assigned greedily (or optimally with
    method="hungarian"); the rank table composes the per-step permutations so
    row t gives each starting vector's rank at step t.
    """
    if method not in ("greedy", "hungarian"):
        raise ValueError(f"unknown method {method!r}")
    if side not in ("left", "right"):
        raise ValueError(f"unknown side {side!r}")
    _check_sequence(latents)
    c_count = latents[0].channels
    n = min(latents[0].height, latents[0].width)
    svds = [avi.channel_svds(t) for t in latents]
    steps = len(latents) - 1
    perms = np.empty((steps, c_count, n), dtype=np.intp)
    cosines = np.empty((steps, c_count, n))
    rank_table = np.empty((len(latents), c_count, n), dtype=np.intp)
    rank_table[0] = np.arange(n)
    match = _greedy_match if method == "greedy" else _hungarian_match
    for t in range(steps):
        for c in range(c_count):
            if side == "left":
                a = svds[t][c].U[:, :n]
                b = svds[t + 1][c].U[:, :n]
            else:
                a = svds[t][c].V[:n, :].T
                b = svds[t + 1][c].V[:n, :].T
            perm, score = match(np.abs(a.T @ b))
            perms[t, c] = perm
            cosines[t, c] = score
            rank_table[t + 1, c] = perm[rank_table[t, c]]
    return MobilityTrace(labels=_labels(latents), side=side, method=method,
                         permutations=perms, cosines=cosines,
                         rank_table=rank_table)
