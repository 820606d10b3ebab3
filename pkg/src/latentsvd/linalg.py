"""Dense linear-algebra kernels: an in-repo SVD and subspace geometry helpers.

The decomposition convention throughout the package is ``M = U @ diag(S) @ V``
where ``V`` holds the right singular vectors as *rows* (the transpose of the
textbook ``V``).  ``svd`` is a one-sided (Hestenes) Jacobi iteration written
against plain numpy:

* columns of the working matrix are orthogonalised by plane rotations taken in
  a fixed round-robin order, so the result is deterministic for a given input;
* a sweep visits every column pair once; convergence is declared when the
  largest relative off-diagonal mass ``|a_p . a_q| / (|a_p| |a_q|)`` seen
  during a sweep drops to 1e-12, with a hard cap of 60 sweeps;
* singular values are sorted descending with ties keeping their
  iteration-derived order, and signs are normalised so the largest-magnitude
  entry of every U column is nonnegative (V rows flip to compensate).

Matrices with more columns than rows are handled by decomposing the transpose
and exchanging the roles of U and V.
"""

from dataclasses import dataclass

import numpy as np

SVD_TOL = 1e-12
SVD_MAX_SWEEPS = 60


class SvdConvergenceError(RuntimeError):
    """Raised when the Jacobi sweep cap is hit before the tolerance."""


@dataclass(frozen=True)
class SvdTriple:
    """Full decomposition M = U @ diag(S) @ V, V rows = right singular vectors."""

    U: np.ndarray  # (m, m) orthonormal columns
    S: np.ndarray  # (min(m, n),) nonincreasing, nonnegative
    V: np.ndarray  # (n, n) orthonormal rows


def _as_matrix(M, name="matrix"):
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must be 2-D and non-empty, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


_schedule_cache = {}


def _round_robin(n):
    """Fixed tournament schedule: n-1 rounds of disjoint column pairs."""
    if n in _schedule_cache:
        return _schedule_cache[n]
    players = list(range(n)) + ([None] if n % 2 else [])
    half = len(players) // 2
    rounds = []
    for _ in range(len(players) - 1):
        top, bot = players[:half], players[half:][::-1]
        pairs = [(min(a, b), max(a, b)) for a, b in zip(top, bot)
                 if a is not None and b is not None]
        rounds.append((np.array([p for p, _ in pairs], dtype=np.intp),
                       np.array([q for _, q in pairs], dtype=np.intp)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    _schedule_cache[n] = rounds
    return rounds


def _jacobi_orthogonalize(W, tol, max_sweeps):
    """Rotate columns of W until mutually orthogonal; returns (W, J) with
    original @ J == W.  J accumulates the plane rotations."""
    m, n = W.shape
    J = np.eye(n)
    if n == 1:
        return W, J
    rounds = _round_robin(n)
    worst = np.inf
    for _ in range(max_sweeps):
        worst = 0.0
        for P, Q in rounds:
            Wp, Wq = W[:, P], W[:, Q]
            app = np.einsum("ij,ij->j", Wp, Wp)
            aqq = np.einsum("ij,ij->j", Wq, Wq)
            apq = np.einsum("ij,ij->j", Wp, Wq)
            denom = np.sqrt(app * aqq)
            live = denom > 0.0
            rel = np.zeros_like(apq)
            rel[live] = np.abs(apq[live]) / denom[live]
            if rel.size:
                worst = max(worst, float(rel.max()))
            act = rel > tol
            if not np.any(act):
                continue
            pa, qa = P[act], Q[act]
            a, b, g = app[act], aqq[act], apq[act]
            # Rutishauser small-angle rotation annihilating a_p . a_q.
            tau = (a - b) / (2.0 * g)
            t = np.where(tau >= 0.0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            c = 1.0 / np.hypot(1.0, t)
            s = t * c
            for Mat in (W, J):
                cp, cq = Mat[:, pa], Mat[:, qa]
                Mat[:, pa] = c * cp + s * cq
                Mat[:, qa] = -s * cp + c * cq
        if worst <= tol:
            return W, J
    raise SvdConvergenceError(
        f"one-sided Jacobi did not reach {tol:g} in {max_sweeps} sweeps "
        f"(residual {worst:.3e})")


def _complete_basis(Q, m):
    """Deterministically extend orthonormal columns Q (m x r) to an m x m basis.

    Candidates are the standard basis vectors; at each step the one with the
    largest residual after projection is accepted (ties resolve to the lowest
    index), re-projected once for stability.
    """
    cols = [Q[:, i] for i in range(Q.shape[1])]
    while len(cols) < m:
        B = np.array(cols).T if cols else np.zeros((m, 0))
        R = np.eye(m) - B @ B.T if cols else np.eye(m)
        residual = np.einsum("ij,ij->j", R, R)  # |R e_j|^2 per candidate
        j = int(np.argmax(residual))
        v = R[:, j]
        if cols:
            v = v - B @ (B.T @ v)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            raise RuntimeError("basis completion failed")  # pragma: no cover
        cols.append(v / nv)
    return np.array(cols).T


def svd(M, tol=SVD_TOL, max_sweeps=SVD_MAX_SWEEPS):
    """Full SVD of a real matrix via one-sided Jacobi; see module docstring.

    Returns an SvdTriple (U m x m, S length min(m, n) descending, V n x n with
    rows as right singular vectors).  Deterministic for a given input up to
    the documented sign and tie conventions.
    """
    A = _as_matrix(M)
    m, n = A.shape
    flipped = m < n
    W = (A.T if flipped else A).copy()
    p, q = W.shape  # p >= q
    W, J = _jacobi_orthogonalize(W, tol, max_sweeps)
    norms = np.sqrt(np.einsum("ij,ij->j", W, W))
    order = np.argsort(-norms, kind="stable")
    S = norms[order]
    W = W[:, order]
    J = J[:, order]
    # Left factor of the tall orientation: normalised columns where the
    # singular value is nonzero (a descending-order prefix), then a
    # deterministic completion covering zero columns and p > q at once.
    zero_tol = max(p, q) * np.finfo(np.float64).eps * (S[0] if S[0] > 0 else 1.0)
    r = int(np.count_nonzero(S > zero_tol))
    base = W[:, :r] / S[:r]
    Ufull = base if r == p else _complete_basis(base, p)
    if flipped:
        U, V = J, Ufull.T  # M = (tall)^T: roles of the factors exchange
    else:
        U, V = Ufull, J.T
    return _apply_sign_convention(U, S, V)


def _apply_sign_convention(U, S, V):
    U = U.copy()
    V = V.copy()
    r = S.shape[0]
    for i in range(U.shape[1]):
        lead = int(np.argmax(np.abs(U[:, i])))
        if U[lead, i] < 0.0:
            U[:, i] = -U[:, i]
            if i < r and i < V.shape[0]:
                V[i, :] = -V[i, :]
    for i in range(r, V.shape[0]):  # rows with no paired U column
        lead = int(np.argmax(np.abs(V[i, :])))
        if V[i, lead] < 0.0:
            V[i, :] = -V[i, :]
    return SvdTriple(U=U, S=S, V=V)


def reconstruct(U, S, V):
    """U @ diag(S) @ V with S embedded as a rectangular diagonal if needed."""
    U = _as_matrix(U, "U")
    V = _as_matrix(V, "V")
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 1:
        raise ValueError("S must be a vector")
    if len(S) > min(U.shape[1], V.shape[0]):
        raise ValueError("S longer than inner matrix dimensions")
    if len(S) == U.shape[1] == V.shape[0]:
        return (U * S) @ V
    D = np.zeros((U.shape[1], V.shape[0]))
    D[:len(S), :len(S)] = np.diag(S)
    return U @ D @ V


def reverse_columns(M):
    """Columns in reverse order (used to move trailing singular vectors first)."""
    return _as_matrix(M)[:, ::-1].copy()


def reverse_rows(M):
    """Rows in reverse order; row-space analogue of reverse_columns."""
    return _as_matrix(M)[::-1, :].copy()


def frobenius_distance(A, B):
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    return float(np.sqrt(np.sum((A - B) ** 2)))


def spectral_norm(M):
    """Largest singular value, computed with the in-repo Jacobi SVD."""
    return float(svd(M).S[0])


def _orthonormalize(M, p, name):
    """Leading-p-column orthonormal basis by modified Gram-Schmidt, applied
    twice for stability; raises if the columns are rank deficient."""
    A = _as_matrix(M, name)
    if p < 1 or p > min(A.shape):
        raise ValueError(f"p must be in [1, {min(A.shape)}], got {p}")
    Q = A[:, :p].copy()
    scale = max(np.max(np.abs(Q)), 1.0)
    for _ in range(2):
        for j in range(p):
            for i in range(j):
                Q[:, j] -= (Q[:, i] @ Q[:, j]) * Q[:, i]
            nj = np.linalg.norm(Q[:, j])
            if nj <= 1e-12 * scale:
                raise ValueError(f"{name} is rank deficient below p={p}")
            Q[:, j] /= nj
    return Q


def principal_angles(A, B, p):
    """Ascending principal angles between the leading-p column subspaces.

    Both inputs are orthonormalised by the Gram-Schmidt QR above; the angles
    are ``arccos`` of the singular values of ``Q_A.T @ Q_B`` clamped to
    [-1, 1], returned ascending in [0, pi/2].
    """
    Qa = _orthonormalize(A, p, "A")
    Qb = _orthonormalize(B, p, "B")
    if Qa.shape[0] != Qb.shape[0]:
        raise ValueError("subspace ambient dimensions differ")
    cosines = svd(Qa.T @ Qb).S
    cosines = np.clip(cosines, -1.0, 1.0)
    return np.sort(np.arccos(cosines))


def geodesic_distance(A, B, p):
    """Grassmannian geodesic distance sqrt(sum theta_k^2) over the leading-p
    subspaces; bounded by sqrt(p) * pi / 2."""
    theta = principal_angles(A, B, p)
    return float(np.sqrt(np.sum(theta ** 2)))
