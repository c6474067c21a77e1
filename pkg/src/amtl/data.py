"""
Synthetic low-rank problems and on-disk task directories.

A task directory holds ``manifest.json`` and one headerless CSV per task.
Each CSV row is one sample: ``d`` feature columns followed by the label.
The manifest looks like::

    {
      "lambda": 1.0,
      "regularizer": "nuclear",
      "l2_augment": 0.0,
      "tasks": [{"file": "task_000.csv", "loss": "squared"}, ...]
    }

Floats are written with ``repr`` so a save/load cycle is bit exact.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .kinds import LossKind, Regularizer
from .model import MtlProblem, TaskDataset

MANIFEST = "manifest.json"


@dataclass(frozen=True)
class SyntheticSpec:
    t_count: int = 5
    n_per_task: int = 100
    dim: int = 50
    true_rank: int = None
    noise_sigma: float = 0.1
    seed: int = 0
    loss_kind: LossKind = LossKind.SQUARED
    lam: float = 1.0
    regularizer: Regularizer = Regularizer.NUCLEAR

    def __post_init__(self):
        if self.true_rank is None:
            object.__setattr__(self, "true_rank", math.ceil(min(self.dim, self.t_count) / 5))
        for name in ("t_count", "n_per_task", "dim", "true_rank"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.true_rank > min(self.dim, self.t_count):
            raise ValueError(
                f"true_rank={self.true_rank} exceeds min(dim, tasks)={min(self.dim, self.t_count)}"
            )
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be non-negative, got {self.noise_sigma}")
        object.__setattr__(self, "loss_kind", LossKind(self.loss_kind))
        object.__setattr__(self, "regularizer", Regularizer(self.regularizer))


def true_model(spec):
    """Ground-truth ``W* = A B / sqrt(r)``, drawn from the spec's seed."""
    rng = np.random.default_rng(spec.seed)
    a = rng.standard_normal((spec.dim, spec.true_rank))
    b = rng.standard_normal((spec.true_rank, spec.t_count))
    return (a @ b) / math.sqrt(spec.true_rank), rng


def gen_synthetic(spec):
    w_star, rng = true_model(spec)
    tasks = []
    for t in range(spec.t_count):
        x = rng.standard_normal((spec.n_per_task, spec.dim))
        y = x @ w_star[:, t] + spec.noise_sigma * rng.standard_normal(spec.n_per_task)
        if spec.loss_kind is LossKind.LOGISTIC:
            y = np.where(y >= 0, 1.0, -1.0)
        tasks.append(TaskDataset(x, y, spec.loss_kind, t))
    return MtlProblem(tasks, lam=spec.lam, regularizer=spec.regularizer)


def _fmt(value):
    return repr(float(value))


def save_csv_dir(problem, path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = []
    for t, task in enumerate(problem.tasks):
        name = f"task_{t:03d}.csv"
        lines = [
            ",".join(_fmt(v) for v in row) + "," + _fmt(label)
            for row, label in zip(task.x, task.y)
        ]
        (path / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
        entries.append({"file": name, "loss": task.loss_kind.value})
    manifest = {
        "lambda": problem.lam,
        "regularizer": problem.regularizer.value,
        "l2_augment": problem.l2_augment,
        "tasks": entries,
    }
    (path / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def _read_manifest(path):
    mpath = path / MANIFEST
    if not mpath.is_file():
        raise DataFormatError(mpath, None, "missing manifest")
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(mpath, exc.lineno, exc.msg) from None
    if not isinstance(manifest, dict) or not isinstance(manifest.get("tasks"), list):
        raise DataFormatError(mpath, None, "manifest must be an object with a 'tasks' list")
    if not manifest["tasks"]:
        raise DataFormatError(mpath, None, "manifest lists no tasks")
    return mpath, manifest


def _read_task(fpath, loss_kind, task_id, expected_d):
    try:
        text = fpath.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(fpath, None, f"cannot read task file ({exc.strerror})") from None
    rows = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            values = [float(v) for v in line.split(",")]
        except ValueError:
            raise DataFormatError(fpath, lineno, "non-numeric field") from None
        if len(values) < 2:
            raise DataFormatError(fpath, lineno, "need at least one feature and a label")
        d = len(values) - 1
        if expected_d is None:
            expected_d = d
        elif d != expected_d:
            raise DataFormatError(
                fpath, lineno, f"row has {d} features, expected {expected_d}"
            )
        if loss_kind is LossKind.LOGISTIC and values[-1] not in (-1.0, 1.0):
            raise DataFormatError(
                fpath, lineno, f"logistic label must be -1 or +1, got {values[-1]!r}"
            )
        rows.append(values)
    if not rows:
        raise DataFormatError(fpath, None, "task file has no samples")
    data = np.array(rows, dtype=np.float64)
    return TaskDataset(data[:, :-1], data[:, -1], loss_kind, task_id), expected_d


def load_csv_dir(path):
    path = Path(path)
    mpath, manifest = _read_manifest(path)
    try:
        lam = float(manifest.get("lambda", 1.0))
        regularizer = Regularizer(manifest.get("regularizer", "nuclear"))
        l2_augment = float(manifest.get("l2_augment", 0.0))
    except (TypeError, ValueError) as exc:
        raise DataFormatError(mpath, None, str(exc)) from None
    tasks = []
    expected_d = None
    for t, entry in enumerate(manifest["tasks"]):
        try:
            fpath = path / entry["file"]
            loss_kind = LossKind(entry.get("loss", "squared"))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(mpath, None, f"bad task entry {t}: {exc}") from None
        task, expected_d = _read_task(fpath, loss_kind, t, expected_d)
        tasks.append(task)
    return MtlProblem(tasks, lam=lam, regularizer=regularizer, l2_augment=l2_augment)
