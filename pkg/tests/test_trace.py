import csv
import dataclasses

import numpy as np
import pytest

from amtl.data import SyntheticSpec, gen_synthetic
from amtl.runtime import DelayModel, RunConfig, run_amtl, run_smtl
from amtl.scheduler import StepPolicy
from amtl.trace import (
    EVENT_FIELDS,
    SUMMARY_FIELDS,
    compare_report,
    export_csv,
    read_events,
    read_summary,
    summarize,
    write_curves,
)


@pytest.fixture(scope="module")
def problem():
    return gen_synthetic(SyntheticSpec(t_count=4, n_per_task=20, dim=6, seed=3))


def _run(problem, mode, offset=5.0, iterations=6):
    policy = StepPolicy(eta=1.0 / problem.lipschitz(), tau_max=8)
    cfg = RunConfig(mode, policy, iterations, DelayModel(offset, offset, seed=1), seed=3)
    return (run_amtl if mode == "amtl" else run_smtl)(problem, cfg)


def test_export_round_trip(problem, tmp_path):
    result = _run(problem, "amtl")
    export_csv(result, tmp_path)
    assert read_summary(tmp_path) == summarize(result)
    events = read_events(tmp_path)
    assert events == result.events


def test_summary_has_one_row_and_stable_columns(problem, tmp_path):
    export_csv(_run(problem, "smtl"), tmp_path)
    with open(tmp_path / "summary.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == SUMMARY_FIELDS
    assert len(rows) == 2
    with open(tmp_path / "events.csv", newline="") as fh:
        assert tuple(next(csv.reader(fh))) == EVENT_FIELDS


def test_empty_event_list(problem, tmp_path):
    result = dataclasses.replace(_run(problem, "amtl"), events=[])
    export_csv(result, tmp_path)
    assert (tmp_path / "events.csv").read_text() == ",".join(EVENT_FIELDS) + "\n"


def test_times_have_nine_decimals(problem, tmp_path):
    export_csv(_run(problem, "amtl"), tmp_path)
    with open(tmp_path / "events.csv", newline="") as fh:
        row = next(csv.DictReader(fh))
    assert len(row["write_time"].split(".")[1]) == 9


def test_export_to_unwritable_path(problem, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        export_csv(_run(problem, "amtl"), blocker / "sub")


def test_makespan_is_last_write(problem):
    result = _run(problem, "amtl")
    assert result.makespan == max(e.write_time for e in result.events)


def test_compare_identical(problem):
    a = _run(problem, "amtl")
    report = compare_report(a, a)
    assert report.makespan_ratio == 1.0 and report.objective_difference == 0.0


def test_compare_amtl_smtl(problem):
    a, s = _run(problem, "amtl"), _run(problem, "smtl")
    report = compare_report(a, s)
    assert report.makespan_ratio < 1.0
    assert len(report.curve_a) == len(report.curve_b) == 6 * 4
    assert np.all(np.isfinite(report.curve_a)) and np.all(np.isfinite(report.curve_b))


def test_compare_shape_mismatch(problem):
    other = gen_synthetic(SyntheticSpec(t_count=3, n_per_task=20, dim=6, seed=3))
    with pytest.raises(ValueError):
        compare_report(_run(problem, "amtl"), _run(other, "amtl"))


def test_write_curves(problem, tmp_path):
    report = compare_report(_run(problem, "amtl"), _run(problem, "smtl"))
    path = write_curves(report, tmp_path / "curves.csv", labels=("amtl", "smtl"))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["update", "amtl", "smtl"]
    assert len(rows) == 1 + 24
