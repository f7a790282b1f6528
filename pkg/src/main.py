# path: src/main.py
"""
linger-bench command line.

    python -m src.main run     --config run.conf [--out DIR] [--seed N] [--budget PASSES] [--data PATH]
    python -m src.main tune    --config run.conf [--out DIR] ...
    python -m src.main suite   lp-convergence [--out DIR] [--seed N] [--budget PASSES] [--data PATH]
    python -m src.main profile --config run.conf [--at zero|reference] [--out DIR]

Exit codes: 0 done, 2 bad config or input, 3 solver abort.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from src.app_logging import get_logger
from src.bench.services.config_loader import dump_config, load_config, load_problem_spec
from src.bench.services.manifest import Manifest, csv_name
from src.bench.services.reference import resolve_reference
from src.bench.services.report_service import ReportService
from src.bench.services.runner import build_problem, execute_run, finalize_run
from src.bench.services.suites import SUMMARY_NAME, SuiteName, radius_grid, run_suite, write_profile
from src.bench.services.tuning import tune
from src.core.config import settings
from src.core.exceptions import EXIT_OK, SolverAbort, exit_code_for
from src.core.meter import GradMeter
from src.core.services.recorder import write_csv
from src.problems.profiling import profile_B

log = get_logger("main")


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, seed=args.seed, budget=args.budget, data=args.data)
    built = build_problem(cfg.problem, cfg.problem_seed())
    result = execute_run(cfg, built)
    if result.aborted:
        raise SolverAbort(result.abort_reason or "run aborted", method=result.method, passes=result.passes)

    ref = resolve_reference(cfg, built).lowered([result])
    finalize_run(result, built, ref.f_star, ref.opt)
    target = cfg.output.path or Path(csv_name(result))
    if args.out is not None:
        target = args.out / target.name
    path = write_csv(target, result.records)
    log.info("run_written", extra={"csv": str(path), "passes": result.passes, "f_star": ref.f_star})
    print(path)
    return EXIT_OK


def _cmd_tune(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, seed=args.seed, budget=args.budget, data=args.data)
    out = args.out or Path("tune-out")
    out.mkdir(parents=True, exist_ok=True)
    built = build_problem(cfg.problem, cfg.problem_seed())
    outcome = tune(cfg, cfg.grid, built)

    ref = resolve_reference(outcome.best_config, built, eta_hint=outcome.best.eta).lowered(outcome.candidates)
    manifest = Manifest(name="tune", problem=built.describe(), reference=ref.to_manifest())
    for c in outcome.candidates:
        if not c.aborted:
            finalize_run(c, built, ref.f_star, ref.opt)
        manifest.add_candidate(c)
        if c is outcome.best:
            manifest.add_run(c, write_csv(out / csv_name(c), c.records))
    (out / "best.conf").write_text(dump_config(outcome.best_config), encoding="utf-8")
    manifest.extra["best_eta"] = outcome.best.eta
    manifest.write(out)
    ReportService().write_summary(manifest.to_dict(), out / SUMMARY_NAME)
    print(out)
    return EXIT_OK


def _cmd_suite(args: argparse.Namespace) -> int:
    name = SuiteName(args.name)
    out = args.out or Path("suite-out") / name.value
    path = run_suite(name, out, seed=args.seed or 0, data=args.data, budget=args.budget)
    print(path)
    return EXIT_OK


def _cmd_profile(args: argparse.Namespace) -> int:
    out = args.out or Path(".")
    if args.at == "zero":
        spec = load_problem_spec(args.config, data=args.data)
        built = build_problem(spec, spec.seed if spec.seed is not None else (args.seed or 0))
        x = np.zeros(built.problem.d)
    else:
        cfg = load_config(args.config, seed=args.seed, budget=args.budget, data=args.data)
        built = build_problem(cfg.problem, cfg.problem_seed())
        ref = resolve_reference(cfg, built)
        if ref.x is None:
            raise SolverAbort("reference point unavailable for a given f*; use --at zero")
        x = ref.x
    problem = built.problem
    grid = radius_grid(problem.radii(np.arange(problem.n), x), settings.suite.profile_points)
    curve = profile_B(problem, x, grid, GradMeter(problem.n))
    path = write_profile(out / f"profile_{args.at}.csv", curve)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linger-bench", description="Lingering-gradient solvers and benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, config: bool) -> None:
        if config:
            p.add_argument("--config", type=Path, required=True, help="key = value run config")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--budget", type=float, default=None, help="pass budget")
        p.add_argument("--data", type=Path, default=None, help="dataset or instance file")

    p_run = sub.add_parser("run", help="one run, one CSV")
    common(p_run, config=True)
    p_run.set_defaults(handler=_cmd_run)

    p_tune = sub.add_parser("tune", help="learning-rate grid search")
    common(p_tune, config=True)
    p_tune.set_defaults(handler=_cmd_tune)

    p_suite = sub.add_parser("suite", help="experiment suite")
    p_suite.add_argument("name", choices=[s.value for s in SuiteName])
    common(p_suite, config=False)
    p_suite.set_defaults(handler=_cmd_suite)

    p_prof = sub.add_parser("profile", help="|B(x, r)| / n curve")
    common(p_prof, config=True)
    p_prof.add_argument("--at", choices=("zero", "reference"), default="zero")
    p_prof.set_defaults(handler=_cmd_profile)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except Exception as exc:  # mapped to an exit code below
        code = exit_code_for(exc)
        if code == 1:
            raise
        log.error(
            "command_failed",
            extra={"command": args.command, "error": type(exc).__name__, "detail": str(exc), "exit_code": code},
        )
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
