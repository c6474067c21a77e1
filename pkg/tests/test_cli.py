import csv
import subprocess
import sys

import pytest

from amtl.cli import main


def parse_summary(line):
    return dict(item.split("=", 1) for item in line.split())


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_writes_tasks(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "gen", "--tasks", "5", "--samples", "100", "--dim", "50", "--rank", "2",
                         "--seed", "7", "--out", str(tmp_path / "d"))
    assert code == 0
    files = sorted(p.name for p in (tmp_path / "d").iterdir())
    assert files == ["manifest.json"] + [f"task_{i:03d}.csv" for i in range(5)]


def test_gen_is_byte_reproducible(tmp_path, capsys):
    for name in ("a", "b"):
        run_cli(capsys, "gen", "--tasks", "3", "--samples", "10", "--dim", "4", "--seed", "7",
                "--out", str(tmp_path / name))
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_gen_rank_zero_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--rank", "0", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--no-such-flag"])
    assert exc.value.code == 2


def test_run_amtl_faster_than_smtl(tmp_path, capsys):
    common = ["--offset", "5", "--tasks", "5", "--samples", "40", "--dim", "10", "--seed", "3"]
    _, out_a, _ = run_cli(capsys, "run", "--mode", "amtl", *common, "--out", str(tmp_path / "a"))
    _, out_s, _ = run_cli(capsys, "run", "--mode", "smtl", *common, "--out", str(tmp_path / "s"))
    a, s = parse_summary(out_a), parse_summary(out_s)
    assert float(a["makespan"]) < float(s["makespan"])
    assert (tmp_path / "a" / "events.csv").exists()


def test_stdout_fields_subset_of_summary(tmp_path, capsys):
    _, out, _ = run_cli(capsys, "run", "--tasks", "2", "--samples", "10", "--dim", "3", "--out", str(tmp_path))
    printed = parse_summary(out)
    with open(tmp_path / "summary.csv", newline="") as fh:
        row = next(csv.DictReader(fh))
    for key, value in printed.items():
        assert row[key] == value


def test_dynamic_step_not_worse(capsys):
    common = ["--offset", "20", "--tasks", "5", "--samples", "50", "--dim", "20", "--iterations", "10"]
    _, static, _ = run_cli(capsys, "run", *common)
    _, dynamic, _ = run_cli(capsys, "run", "--dynamic-step", *common)
    assert float(parse_summary(dynamic)["final_objective"]) <= float(parse_summary(static)["final_objective"])


def test_eta_min_above_cap_reports_cap(capsys):
    code, _, err = run_cli(capsys, "run", "--tasks", "5", "--samples", "10", "--dim", "3", "--eta-min", "0.5")
    assert code == 2
    assert "cap 0.0905" in err


def test_staleness_violation_exits_3(capsys):
    code, _, err = run_cli(capsys, "run", "--tasks", "5", "--samples", "10", "--dim", "3", "--tau-max", "1")
    assert code == 3
    assert "task" in err and "k=" in err


def test_bad_data_dir_exits_2(tmp_path, capsys):
    code, _, err = run_cli(capsys, "run", "--data", str(tmp_path))
    assert code == 2 and "manifest" in err


def test_run_from_data_dir(tmp_path, capsys):
    run_cli(capsys, "gen", "--tasks", "3", "--samples", "10", "--dim", "4", "--out", str(tmp_path / "d"))
    code, out, _ = run_cli(capsys, "run", "--data", str(tmp_path / "d"), "--offset", "1")
    assert code == 0 and parse_summary(out)["T"] == "3"


def test_rerun_is_bitwise_identical(tmp_path, capsys):
    args = ["run", "--tasks", "4", "--samples", "20", "--dim", "6", "--offset", "3", "--seed", "5"]
    run_cli(capsys, *args, "--out", str(tmp_path / "x"))
    run_cli(capsys, *args, "--out", str(tmp_path / "y"))
    for name in ("events.csv", "summary.csv"):
        assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()


def test_compare_writes_curves(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "compare", "--tasks", "3", "--samples", "10", "--dim", "4", "--offset", "5",
                           "--out", str(tmp_path))
    assert code == 0
    assert "makespan_ratio=" in out
    with open(tmp_path / "curves.csv", newline="") as fh:
        assert len(list(csv.reader(fh))) == 1 + 3 * 10


def test_bench_tasks_sweep(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, _ = run_cli(capsys, "bench", "--axis", "tasks", "--values", "5,10,15", "--offset", "5",
                         "--out", str(out))
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6
    for amtl, smtl in zip(rows[::2], rows[1::2]):
        assert (amtl["mode"], smtl["mode"]) == ("amtl", "smtl")
        assert amtl["T"] == smtl["T"]
        assert float(amtl["makespan"]) < float(smtl["makespan"])


def test_bench_dim_sweep_gap_grows(tmp_path, capsys):
    # compute-bound regime: forward and prox cost comparable to the delays
    out = tmp_path / "sweep.csv"
    run_cli(capsys, "bench", "--axis", "dim", "--values", "10,25,50,100,200", "--offset", "5",
            "--kappa", "1e-2", "--kappa-svd", "1e-2", "--out", str(out))
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    gaps = [float(s["makespan"]) - float(a["makespan"]) for a, s in zip(rows[::2], rows[1::2])]
    assert all(g > 0 for g in gaps)
    assert all(later >= earlier for earlier, later in zip(gaps, gaps[1:]))


def test_bench_empty_range(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--axis", "dim", "--values", "", "--out", str(tmp_path / "s.csv")])
    assert exc.value.code == 2


def test_selftest(capsys):
    code, out, _ = run_cli(capsys, "selftest")
    assert code == 0
    assert "FAIL" not in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "amtl", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "selftest" in proc.stdout
