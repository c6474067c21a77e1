"""
Proximal (backward) maps, the per-task forward step and the relaxed
coordinate update.

The fixed-point operator is backward-forward: ``V -> (I - eta grad f)(prox(V))``.
The prox couples all tasks, the forward step does not, so one task block
costs a full prox plus a gradient on that block only.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericalFailure
from .kinds import Regularizer
from .model import check_shape, smooth_gradient
from .numerics import SvdFactors, as_matrix, thin_svd


@dataclass(frozen=True)
class ProxResult:
    w_matrix: np.ndarray
    threshold: float
    factors_used: SvdFactors = None


@dataclass(frozen=True)
class BlockCandidate:
    task_id: int
    v_new: np.ndarray


def _check_threshold(threshold):
    if not threshold >= 0:
        raise ValueError(f"threshold must be non-negative, got {threshold}")
    return float(threshold)


def prox_nuclear(v_hat, threshold):
    """Singular value soft-thresholding: ``s_i -> max(0, s_i - threshold)``."""
    threshold = _check_threshold(threshold)
    factors = thin_svd(v_hat)
    shrunk = np.maximum(factors.s - threshold, 0.0)
    return ProxResult(
        w_matrix=factors.reconstruct(shrunk),
        threshold=threshold,
        factors_used=factors,
    )


def prox_l21(v_hat, threshold):
    """Row-wise group shrinkage; rows with norm <= threshold become zero."""
    threshold = _check_threshold(threshold)
    v_hat = as_matrix(v_hat, "v_hat")
    norms = np.linalg.norm(v_hat, axis=1)
    scale = np.zeros_like(norms)
    nz = norms > 0
    scale[nz] = np.maximum(0.0, 1.0 - threshold / norms[nz])
    return v_hat * scale[:, None]


def prox(problem, v_hat, eta):
    """``Prox_{eta * lam * g}`` for the problem's regularizer."""
    v_hat = check_shape(problem, v_hat, "V")
    threshold = eta * problem.lam
    if threshold == 0.0:
        return v_hat.copy()
    if problem.regularizer is Regularizer.NUCLEAR:
        return prox_nuclear(v_hat, threshold).w_matrix
    return prox_l21(v_hat, threshold)


def check_step(problem, eta):
    """Refuse any step outside ``(0, 2/L)``."""
    upper = 2.0 / problem.lipschitz()
    if not 0.0 < eta < upper:
        raise ConfigurationError(
            f"step size eta={eta!r} outside the admissible interval (0, {upper!r})"
        )
    return eta


def default_eta(problem, c_eta=1.0):
    return c_eta / problem.lipschitz()


def forward_step(problem, task_id, p_t, eta):
    return p_t - eta * smooth_gradient(problem, task_id, p_t)


def backward_forward_block(problem, v_snapshot, task_id, eta, check=True):
    """Candidate value for one task block from a (possibly stale) snapshot."""
    if check:
        check_step(problem, eta)
    p = prox(problem, v_snapshot, eta)
    return BlockCandidate(task_id, forward_step(problem, task_id, p[:, task_id], eta))


def backward_forward(problem, v, eta):
    """Apply the full backward-forward operator to every column at once."""
    check_step(problem, eta)
    p = prox(problem, v, eta)
    return np.column_stack(
        [forward_step(problem, t, p[:, t], eta) for t in range(problem.t_count)]
    )


def km_update(v_t, candidate, eta_k, multiplier=1.0):
    """Relaxed update ``v_t + multiplier * eta_k * (candidate - v_t)``."""
    if not eta_k > 0:
        raise ConfigurationError(f"eta_k must be positive, got {eta_k}")
    if not multiplier >= 1:
        raise ConfigurationError(f"multiplier must be >= 1, got {multiplier}")
    new = candidate.v_new
    if not np.all(np.isfinite(new)):
        raise NumericalFailure(f"non-finite candidate for task {candidate.task_id}")
    v_t = np.asarray(v_t, dtype=np.float64)
    step = multiplier * eta_k
    if step == 1.0:
        return new.copy()
    return v_t + step * (new - v_t)


def recover_w(problem, v_final, eta):
    """One last backward step maps the auxiliary variable back to the model."""
    return prox(problem, v_final, eta)


def optimality_residual(problem, w, eta):
    """Relative forward-backward fixed-point residual of ``w``.

    Zero exactly at minimizers of the objective.
    """
    w = check_shape(problem, w)
    grad = np.column_stack(
        [smooth_gradient(problem, t, w[:, t]) for t in range(problem.t_count)]
    )
    fb = prox(problem, w - eta * grad, eta)
    return float(np.linalg.norm(w - fb) / max(1.0, np.linalg.norm(w)))


def ista(problem, eta=None, iterations=10_000, w0=None):
    """Plain synchronous proximal gradient; used as a reference optimum."""
    eta = default_eta(problem) if eta is None else check_step(problem, eta)
    w = np.zeros(problem.shape) if w0 is None else check_shape(problem, w0).copy()
    for _ in range(iterations):
        grad = np.column_stack(
            [smooth_gradient(problem, t, w[:, t]) for t in range(problem.t_count)]
        )
        w = prox(problem, w - eta * grad, eta)
    return w
