"""
Dense linear-algebra kernels.

The SVD is a one-sided (Hestenes) Jacobi iteration with a round-robin
ordering, so that every sweep rotates ``n/2`` disjoint column pairs in one
vectorized step. It is exact to working precision at the sizes used here
(``d, T <= 256``) and fully deterministic, which keeps virtual-clock traces
replayable bit for bit.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericalFailure
from .kinds import LossKind

LIPSCHITZ_FLOOR = 1e-12
_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``a = u @ diag(s) @ q.T`` with ``r = min(rows, cols)``."""

    u: np.ndarray
    s: np.ndarray
    q: np.ndarray

    @property
    def rank(self):
        return len(self.s)

    def reconstruct(self, s=None):
        s = self.s if s is None else s
        return (self.u * s) @ self.q.T


def as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalFailure(f"{name} of shape {a.shape} has non-finite entries")
    return a


def gemm(a, b):
    """Standard product ``a @ b``; ``b`` may be a vector (gemv)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim not in (1, 2) or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


gemv = gemm


def _round_robin(n):
    """Pairings of a round-robin tournament over ``n`` players.

    Returns ``n - 1`` rounds (``n`` rounded up to even) of disjoint index
    pairs; a bye is dropped when ``n`` is odd.
    """
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p = np.array(players[: m // 2])
        q = np.array(players[m // 2 :][::-1])
        keep = (p < n) & (q < n)
        rounds.append((p[keep], q[keep]))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi_tall(a, max_sweeps):
    m, n = a.shape
    work = a.copy()
    v = np.eye(n)
    tol = m * _EPS
    # columns below this squared norm are numerically zero; rotating them
    # only churns denormals
    floor = (_EPS * np.linalg.norm(a)) ** 2
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            ap, aq = work[:, p], work[:, q]
            alpha = np.einsum("ij,ij->j", ap, ap)
            beta = np.einsum("ij,ij->j", aq, aq)
            gamma = np.einsum("ij,ij->j", ap, aq)
            scale = np.sqrt(alpha * beta)
            active = (np.abs(gamma) > tol * scale) & (alpha > floor) & (beta > floor)
            if not active.any():
                continue
            rotated = True
            p, q = p[active], q[active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            for mat in (work, v):
                xp, xq = mat[:, p], mat[:, q]
                mat[:, p] = c * xp - s * xq
                mat[:, q] = s * xp + c * xq
        if not rotated:
            return work, v
    raise NumericalFailure(
        f"Jacobi SVD did not converge in {max_sweeps} sweeps for a {m}x{n} matrix"
    )


def _complete_basis(u, good):
    """Replace columns of ``u`` not flagged ``good`` by an orthonormal completion."""
    m = u.shape[0]
    basis = [u[:, j] for j in range(u.shape[1]) if good[j]]
    candidates = iter(range(m))
    for j in range(u.shape[1]):
        if good[j]:
            continue
        for i in candidates:
            e = np.zeros(m)
            e[i] = 1.0
            for _ in range(2):
                for b in basis:
                    e -= (b @ e) * b
            norm = np.linalg.norm(e)
            if norm > 0.5:
                u[:, j] = e / norm
                basis.append(u[:, j])
                break
    return u


def thin_svd(a, max_sweeps=60):
    """
    Thin singular value decomposition.

    Parameters
    ----------
    a : array_like, shape (m, n)
    max_sweeps : int, optional
        Iteration cap; exceeding it raises :class:`NumericalFailure`.

    Returns
    -------
    SvdFactors
        ``u`` (m x r) and ``q`` (n x r) with orthonormal columns, ``s``
        non-increasing, ``r = min(m, n)``. Each column of ``u`` has its
        largest-magnitude entry non-negative (first index wins ties).
    """
    a = as_matrix(a)
    m, n = a.shape
    if min(m, n) < 1:
        raise DimensionError(f"cannot decompose an empty matrix of shape {a.shape}")
    transposed = m < n
    work, v = _jacobi_tall(a.T if transposed else a, max_sweeps)

    sigma = np.linalg.norm(work, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, work, v = sigma[order], work[:, order], v[:, order]

    cutoff = sigma[0] * max(work.shape) * _EPS if sigma[0] > 0 else 0.0
    good = sigma > cutoff
    left = np.zeros_like(work)
    left[:, good] = work[:, good] / sigma[good]
    left = _complete_basis(left, good)

    u, q = (v, left) if transposed else (left, v)
    idx = np.argmax(np.abs(u), axis=0)
    flip = u[idx, np.arange(u.shape[1])] < 0
    u[:, flip] *= -1.0
    q[:, flip] *= -1.0
    return SvdFactors(u=u, s=sigma, q=q)


def nuclear_norm(a):
    return float(np.sum(thin_svd(a).s))


def spectral_norm_sq(x, tol=1e-9, max_iter=100_000):
    """Largest eigenvalue of ``x.T @ x`` by power iteration.

    Stops once the eigen-residual falls below ``tol`` relative to the
    current estimate, which leaves the eigenvalue itself accurate to well
    under 1e-6 relative. The start vector is fixed so results repeat.
    """
    x = as_matrix(x, "x")
    gram = x.T @ x if x.shape[1] <= x.shape[0] else x @ x.T
    if not np.any(gram):
        return 0.0
    vec = np.random.default_rng(0).standard_normal(gram.shape[0])
    vec /= np.linalg.norm(vec)
    lam = 0.0
    for _ in range(max_iter):
        y = gram @ vec
        lam = float(vec @ y)
        if np.linalg.norm(y - lam * vec) <= tol * abs(lam):
            break
        vec = y / np.linalg.norm(y)
    return lam


def lipschitz_bound(x, loss_kind):
    """Lipschitz constant of the gradient of one task's loss.

    ``2 * sigma_max(x)**2`` for the squared loss and ``sigma_max(x)**2 / 4``
    for the logistic loss. An all-zero design returns ``LIPSCHITZ_FLOOR``.
    """
    x = as_matrix(x, "x")
    if x.size == 0:
        raise DimensionError("x must be non-empty")
    smax2 = spectral_norm_sq(x)
    if smax2 == 0.0:
        return LIPSCHITZ_FLOOR
    if LossKind(loss_kind) is LossKind.SQUARED:
        return 2.0 * smax2
    return smax2 / 4.0
