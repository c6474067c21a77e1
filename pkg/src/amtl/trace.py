"""
Run records and their CSV form.

``export_csv`` writes two files into a directory:

``events.csv``
    ``task_id,k,request_time,write_time,staleness,objective_after``, one
    row per accepted update.
``summary.csv``
    ``mode,T,d,n,offset,makespan,final_objective,measured_tau,seed``, one row.

Times carry nine decimals (the virtual clock ticks in nanoseconds, so they
are exact); other floats use the shortest repr that round-trips.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EVENT_FIELDS = ("task_id", "k", "request_time", "write_time", "staleness", "objective_after")
SUMMARY_FIELDS = ("mode", "T", "d", "n", "offset", "makespan", "final_objective", "measured_tau", "seed")


@dataclass(frozen=True)
class UpdateEvent:
    task_id: int
    k: int
    request_time: float
    write_time: float
    staleness: int
    objective_after: float = None


@dataclass
class RunResult:
    final_v: np.ndarray
    final_w: np.ndarray
    events: list
    makespan: float
    per_task_update_counts: list
    final_objective: float
    measured_tau: int
    config_echo: object
    initial_objective: float = None
    shape: tuple = field(default=(0, 0, 0))  # (T, d, n)


@dataclass(frozen=True)
class Summary:
    mode: str
    T: int
    d: int
    n: int
    offset: float
    makespan: float
    final_objective: float
    measured_tau: int
    seed: int


@dataclass
class ComparisonSummary:
    makespan_ratio: float
    objective_difference: float
    curve_a: np.ndarray
    curve_b: np.ndarray


def _time(t):
    return f"{t:.9f}"


def _float(x):
    if x is None:
        return ""
    return repr(float(x))


def summarize(result):
    cfg = result.config_echo
    t_count, d, n = result.shape
    return Summary(
        mode=cfg.mode.value,
        T=t_count,
        d=d,
        n=n,
        offset=float(cfg.delay_model.offset),
        makespan=float(_time(result.makespan)),
        final_objective=float(result.final_objective),
        measured_tau=int(result.measured_tau),
        seed=int(cfg.seed),
    )


def summary_row(summary):
    return {
        "mode": summary.mode,
        "T": str(summary.T),
        "d": str(summary.d),
        "n": str(summary.n),
        "offset": _float(summary.offset),
        "makespan": _time(summary.makespan),
        "final_objective": _float(summary.final_objective),
        "measured_tau": str(summary.measured_tau),
        "seed": str(summary.seed),
    }


def _write(path, fields, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def export_csv(result, path):
    """Write ``events.csv`` and ``summary.csv`` under directory ``path``."""
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {path}: {exc.strerror or exc}") from exc
    rows = [
        {
            "task_id": str(e.task_id),
            "k": str(e.k),
            "request_time": _time(e.request_time),
            "write_time": _time(e.write_time),
            "staleness": str(e.staleness),
            "objective_after": _float(e.objective_after),
        }
        for e in result.events
    ]
    _write(path / "events.csv", EVENT_FIELDS, rows)
    _write(path / "summary.csv", SUMMARY_FIELDS, [summary_row(summarize(result))])
    return path


def read_summary(path):
    path = Path(path)
    if path.is_dir():
        path = path / "summary.csv"
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != 1:
        raise ValueError(f"{path}: expected exactly one summary row, found {len(rows)}")
    row = rows[0]
    return Summary(
        mode=row["mode"],
        T=int(row["T"]),
        d=int(row["d"]),
        n=int(row["n"]),
        offset=float(row["offset"]),
        makespan=float(row["makespan"]),
        final_objective=float(row["final_objective"]),
        measured_tau=int(row["measured_tau"]),
        seed=int(row["seed"]),
    )


def read_events(path):
    path = Path(path)
    if path.is_dir():
        path = path / "events.csv"
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            UpdateEvent(
                task_id=int(r["task_id"]),
                k=int(r["k"]),
                request_time=float(r["request_time"]),
                write_time=float(r["write_time"]),
                staleness=int(r["staleness"]),
                objective_after=float(r["objective_after"]) if r["objective_after"] else None,
            )
            for r in csv.DictReader(fh)
        ]


def objective_curve(result):
    """Objective after each accepted update, carrying the last sample forward."""
    last = result.initial_objective if result.initial_objective is not None else math.nan
    curve = np.empty(len(result.events))
    for i, e in enumerate(result.events):
        if e.objective_after is not None:
            last = e.objective_after
        curve[i] = last
    return curve


def compare_report(a, b):
    """Makespan ratio ``a / b``, objective difference ``a - b`` and aligned curves."""
    if a.shape != b.shape:
        raise ValueError(f"runs solve different problems: shapes {a.shape} and {b.shape}")
    if len(a.events) != len(b.events):
        raise ValueError(
            f"runs did different amounts of work: {len(a.events)} and {len(b.events)} updates"
        )
    if a.makespan == b.makespan:
        ratio = 1.0
    elif b.makespan == 0:
        ratio = math.inf
    else:
        ratio = a.makespan / b.makespan
    return ComparisonSummary(
        makespan_ratio=ratio,
        objective_difference=a.final_objective - b.final_objective,
        curve_a=objective_curve(a),
        curve_b=objective_curve(b),
    )


def write_curves(report, path, labels=("a", "b")):
    """Write aligned objective curves as ``update,<label a>,<label b>`` rows."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("update",) + tuple(labels))
        for i, (x, y) in enumerate(zip(report.curve_a, report.curve_b), start=1):
            writer.writerow((i, _float(x), _float(y)))
    return path
