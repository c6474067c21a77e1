"""
Task data, per-task losses and the joint multi-task objective

    sum_t loss_t(w_t) + lam * g(W) + l2_augment * ||W||_F^2

with ``g`` either the nuclear norm or the l2,1 norm (sum of row norms).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .kinds import LossKind, Regularizer
from .numerics import lipschitz_bound, nuclear_norm


@dataclass(frozen=True)
class TaskDataset:
    """One task's private data. Arrays are made read-only on construction."""

    x: np.ndarray
    y: np.ndarray
    loss_kind: LossKind = LossKind.SQUARED
    task_id: int = 0

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)
        y = np.array(self.y, dtype=np.float64).reshape(-1)
        if x.ndim != 2:
            raise DimensionError(f"task {self.task_id}: x must be 2-D, got {x.shape}")
        if x.shape[0] < 1:
            raise DimensionError(f"task {self.task_id}: needs at least one sample")
        if y.shape[0] != x.shape[0]:
            raise DimensionError(
                f"task {self.task_id}: x has {x.shape[0]} rows but y has {y.shape[0]}"
            )
        kind = LossKind(self.loss_kind)
        if kind is LossKind.LOGISTIC and not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError(f"task {self.task_id}: logistic labels must be -1 or +1")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "loss_kind", kind)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.x.shape[1]


@dataclass(frozen=True)
class MtlProblem:
    tasks: tuple
    lam: float = 1.0
    regularizer: Regularizer = Regularizer.NUCLEAR
    l2_augment: float = 0.0
    _lipschitz: list = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        tasks = tuple(self.tasks)
        if not tasks:
            raise ValueError("a problem needs at least one task")
        dims = {t.d for t in tasks}
        if len(dims) != 1:
            raise DimensionError(f"tasks disagree on dimension: {sorted(dims)}")
        if self.lam < 0 or self.l2_augment < 0:
            raise ValueError("lam and l2_augment must be non-negative")
        object.__setattr__(self, "tasks", tasks)
        object.__setattr__(self, "regularizer", Regularizer(self.regularizer))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "l2_augment", float(self.l2_augment))

    @property
    def t_count(self):
        return len(self.tasks)

    @property
    def d(self):
        return self.tasks[0].d

    @property
    def shape(self):
        return (self.d, self.t_count)

    def task_lipschitz(self):
        """Per-task Lipschitz constants of the smooth part, cached."""
        if self._lipschitz is None:
            consts = [
                lipschitz_bound(t.x, t.loss_kind) + 2.0 * self.l2_augment
                for t in self.tasks
            ]
            object.__setattr__(self, "_lipschitz", consts)
        return list(self._lipschitz)

    def lipschitz(self):
        """``L = max_t L_t``; admissible steps satisfy ``0 < eta < 2 / L``."""
        return max(self.task_lipschitz())


def _check_w(task, w):
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (task.d,):
        raise DimensionError(
            f"task {task.task_id}: w has shape {w.shape}, expected ({task.d},)"
        )
    return w


def _sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_value(task, w):
    w = _check_w(task, w)
    z = task.x @ w
    if task.loss_kind is LossKind.SQUARED:
        r = z - task.y
        return float(r @ r)
    # log(1 + exp(-m)) == logaddexp(0, -m)
    return float(np.sum(np.logaddexp(0.0, -task.y * z)))


def loss_gradient(task, w):
    """Gradient of :func:`loss_value`; the squared loss carries the factor 2."""
    w = _check_w(task, w)
    z = task.x @ w
    if task.loss_kind is LossKind.SQUARED:
        return 2.0 * (task.x.T @ (z - task.y))
    return -(task.x.T @ (task.y * _sigmoid(-task.y * z)))


def smooth_gradient(problem, task_id, w):
    """Gradient of the task's smooth part, ``l2_augment`` term included."""
    task = problem.tasks[task_id]
    g = loss_gradient(task, w)
    if problem.l2_augment:
        g = g + 2.0 * problem.l2_augment * np.asarray(w, dtype=np.float64)
    return g


def l21_norm(w_matrix):
    return float(np.sum(np.linalg.norm(w_matrix, axis=1)))


def regularizer_value(problem, w_matrix):
    if problem.regularizer is Regularizer.NUCLEAR:
        return nuclear_norm(w_matrix)
    return l21_norm(w_matrix)


def check_shape(problem, w_matrix, name="W"):
    w_matrix = np.asarray(w_matrix, dtype=np.float64)
    if w_matrix.shape != problem.shape:
        raise DimensionError(
            f"{name} has shape {w_matrix.shape}, expected {problem.shape}"
        )
    return w_matrix


def objective(problem, w_matrix):
    w_matrix = check_shape(problem, w_matrix)
    total = sum(loss_value(t, w_matrix[:, i]) for i, t in enumerate(problem.tasks))
    if problem.lam:
        total += problem.lam * regularizer_value(problem, w_matrix)
    if problem.l2_augment:
        total += problem.l2_augment * float(np.sum(w_matrix * w_matrix))
    return float(total)
