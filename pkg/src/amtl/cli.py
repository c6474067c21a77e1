"""
Command line entry point.

Exit codes: 0 on success, 2 for usage or configuration errors, 3 when a
run aborts (staleness bound exceeded, divergence, numerical failure).
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import data as data_mod
from .errors import ConfigurationError, DataFormatError, NumericalFailure, StalenessViolation
from .kinds import Clock, LossKind, Mode, Regularizer
from .model import loss_gradient, loss_value, objective
from .numerics import thin_svd
from .operators import default_eta, ista, optimality_residual
from .runtime import ComputeModel, DelayModel, RunConfig, run
from .scheduler import StepPolicy
from .trace import SUMMARY_FIELDS, compare_report, export_csv, summarize, summary_row, write_curves

EXIT_OK, EXIT_USAGE, EXIT_ABORT = 0, 2, 3
STDOUT_FIELDS = ("mode", "T", "makespan", "final_objective", "measured_tau", "seed")


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _non_negative(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _slow_task(text):
    try:
        task, offset = text.split(":")
        return int(task), _non_negative(offset)
    except (ValueError, argparse.ArgumentTypeError):
        raise argparse.ArgumentTypeError(f"expected TASK:OFFSET, got {text!r}") from None


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty range")
    if min(values) < 1:
        raise argparse.ArgumentTypeError("sweep values must be >= 1")
    return values


def _add_problem_args(p):
    g = p.add_argument_group("problem")
    g.add_argument("--data", type=Path, help="task directory written by 'gen'; overrides the synthetic flags")
    g.add_argument("--tasks", type=_positive_int, default=5)
    g.add_argument("--samples", type=_positive_int, default=100)
    g.add_argument("--dim", type=_positive_int, default=50)
    g.add_argument("--rank", type=_positive_int, default=None, help="default: ceil(min(dim, tasks) / 5)")
    g.add_argument("--noise", type=_non_negative, default=0.1)
    g.add_argument("--loss", choices=[k.value for k in LossKind], default="squared")
    g.add_argument("--lambda", dest="lam", type=_non_negative, default=1.0)
    g.add_argument("--regularizer", choices=[r.value for r in Regularizer], default="nuclear")
    g.add_argument("--seed", type=int, default=0)


def _add_run_args(p):
    _add_problem_args(p)
    g = p.add_argument_group("execution")
    g.add_argument("--clock", choices=[c.value for c in Clock], default="virtual")
    g.add_argument("--iterations", type=_positive_int, default=10, help="accepted updates per task")
    g.add_argument("--offset", type=_non_negative, default=0.0, help="delay offset in seconds")
    g.add_argument("--jitter", type=_non_negative, default=None, help="delay jitter scale; default: equal to --offset")
    g.add_argument("--slow-task", type=_slow_task, action="append", default=[], metavar="TASK:OFFSET")
    g.add_argument("--delay-seed", type=int, default=None, help="default: --seed")
    g.add_argument("--kappa", type=_non_negative, default=1e-8, help="gradient cost per sample-feature (s)")
    g.add_argument("--kappa-svd", type=_non_negative, default=1e-8)
    g.add_argument("--compute-jitter", type=_non_negative, default=0.5)
    g.add_argument("--sample-every", type=_positive_int, default=None, help="objective sampling period; default T")
    g.add_argument("--time-scale", type=_non_negative, default=1e-3, help="real clock: wall seconds per delay second")
    s = p.add_argument_group("step sizes")
    s.add_argument("--eta", type=float, default=None, help="default: c_eta / L")
    s.add_argument("--c-eta", type=float, default=1.0)
    s.add_argument("--c", type=float, default=0.9)
    s.add_argument("--eta-min", type=float, default=1e-4)
    s.add_argument("--tau-max", type=int, default=None, help="staleness bound; default 2T")
    s.add_argument("--dynamic-step", action="store_true")
    s.add_argument("--window", type=_positive_int, default=5)


def build_parser():
    parser = argparse.ArgumentParser(prog="amtl", description="Asynchronous multi-task learning experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic task directory")
    _add_problem_args(p)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("run", help="run one engine and export its trace")
    _add_run_args(p)
    p.add_argument("--mode", choices=[m.value for m in Mode], default="amtl")
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("compare", help="run AMTL and SMTL on one configuration")
    _add_run_args(p)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("bench", help="sweep one axis with matched AMTL/SMTL pairs")
    _add_run_args(p)
    p.add_argument("--axis", choices=("tasks", "samples", "dim"), required=True)
    p.add_argument("--values", type=_int_list, required=True, help="comma-separated sweep values")
    p.add_argument("--out", type=Path, required=True, help="sweep CSV path")

    sub.add_parser("selftest", help="quick numerical sanity checks")
    return parser


def load_problem(args):
    if args.data is not None:
        return data_mod.load_csv_dir(args.data)
    spec = data_mod.SyntheticSpec(
        t_count=args.tasks,
        n_per_task=args.samples,
        dim=args.dim,
        true_rank=args.rank,
        noise_sigma=args.noise,
        seed=args.seed,
        loss_kind=args.loss,
        lam=args.lam,
        regularizer=args.regularizer,
    )
    return data_mod.gen_synthetic(spec)


def make_config(args, problem, mode):
    t_count = problem.t_count
    eta = args.eta if args.eta is not None else default_eta(problem, args.c_eta)
    policy = StepPolicy(
        eta=eta,
        eta_min=args.eta_min,
        c=args.c,
        tau_max=2 * t_count if args.tau_max is None else args.tau_max,
        dynamic=args.dynamic_step,
        window=args.window,
    )
    delays = DelayModel(
        offset=args.offset,
        jitter_scale=args.offset if args.jitter is None else args.jitter,
        seed=args.seed if args.delay_seed is None else args.delay_seed,
        task_offsets=tuple(args.slow_task),
    )
    return RunConfig(
        mode=mode,
        step_policy=policy,
        iterations_per_task=args.iterations,
        delay_model=delays,
        clock=args.clock,
        seed=args.seed,
        compute=ComputeModel(args.kappa, args.kappa_svd, args.compute_jitter),
        sample_every=args.sample_every,
        time_scale=args.time_scale,
    )


def _print_summary(result):
    row = summary_row(summarize(result))
    print(" ".join(f"{k}={row[k]}" for k in STDOUT_FIELDS))


def cmd_gen(args):
    problem = load_problem(args)
    data_mod.save_csv_dir(problem, args.out)
    print(f"wrote {problem.t_count} tasks to {args.out}")


def cmd_run(args):
    problem = load_problem(args)
    result = run(problem, make_config(args, problem, args.mode))
    if args.out is not None:
        export_csv(result, args.out)
    _print_summary(result)
    return result


def cmd_compare(args):
    problem = load_problem(args)
    results = {m: run(problem, make_config(args, problem, m)) for m in (Mode.AMTL, Mode.SMTL)}
    report = compare_report(results[Mode.AMTL], results[Mode.SMTL])
    if args.out is not None:
        for mode, result in results.items():
            export_csv(result, args.out / mode.value)
        write_curves(report, args.out / "curves.csv", labels=("amtl", "smtl"))
    for result in results.values():
        _print_summary(result)
    print(f"makespan_ratio={report.makespan_ratio!r} objective_difference={report.objective_difference!r}")
    return report


def cmd_bench(args):
    fields = ("axis", "value") + SUMMARY_FIELDS
    attr = {"tasks": "tasks", "samples": "samples", "dim": "dim"}[args.axis]
    base_seed = args.seed
    rows = []
    for index, value in enumerate(args.values):
        setattr(args, attr, value)
        args.seed = base_seed + index
        if args.delay_seed is None:
            # one delay stream for the whole sweep keeps points comparable
            args.delay_seed = base_seed
        problem = load_problem(args)
        for mode in (Mode.AMTL, Mode.SMTL):
            result = run(problem, make_config(args, problem, mode))
            row = summary_row(summarize(result))
            row.update(axis=args.axis, value=str(value))
            rows.append(row)
            _print_summary(result)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return rows


def cmd_selftest(args):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((12, 7))
    f = thin_svd(a)
    err = np.linalg.norm(f.reconstruct() - a) / np.linalg.norm(a)
    checks = [("svd reconstruction", err, 1e-8)]

    problem = data_mod.gen_synthetic(data_mod.SyntheticSpec(t_count=3, n_per_task=20, dim=6, seed=1))
    task, w = problem.tasks[0], rng.standard_normal(6)
    h = 1e-6
    fd = np.array([(loss_value(task, w + h * e) - loss_value(task, w - h * e)) / (2 * h) for e in np.eye(6)])
    g = loss_gradient(task, w)
    checks.append(("gradient finite difference", np.linalg.norm(fd - g) / np.linalg.norm(g), 1e-6))

    eta = 1.9 / problem.lipschitz()
    config = RunConfig(Mode.AMTL, StepPolicy(eta=eta, tau_max=6), iterations_per_task=300)
    result = run(problem, config)
    checks.append(("amtl optimality residual", optimality_residual(problem, result.final_w, eta), 1e-3))
    ref = ista(problem, eta=eta, iterations=2000)
    checks.append(("amtl vs ista objective", abs(result.final_objective / objective(problem, ref) - 1), 1e-2))

    ok = True
    for name, value, tol in checks:
        passed = value <= tol
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: {value:.3e} (tol {tol:g})")
    return ok


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "compare": cmd_compare, "bench": cmd_bench}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "selftest":
            return EXIT_OK if cmd_selftest(args) else EXIT_ABORT
        COMMANDS[args.command](args)
    except (ConfigurationError, DataFormatError) as exc:
        print(f"amtl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"amtl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StalenessViolation, NumericalFailure) as exc:
        print(f"amtl {args.command}: aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
