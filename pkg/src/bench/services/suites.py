# path: src/bench/services/suites.py
"""
Experiment suites at desk scale. Each suite writes into its own directory:

    <method>_eta<eta>.csv     the best `top_etas` curves of each method (rank 1 is the tuned one)
    mu<mu>/                   svm-convergence: one comparison per smoothing
    profile_<lp|svm>_<x>.csv  b-profile: |B(x, r)| / n at x0 and at the reference point
    manifest.json             seeds, config hashes, versions, reference values, fits
    summary.xlsx              the manifest as a table

Sizes, budgets and grids come from `settings.suite` (env LINGER_SUITE__*).
"""

from __future__ import annotations

import csv
import math
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from src.app_logging import get_logger
from src.bench.schemas.run_config import (
    GridSpec,
    MethodName,
    MethodSpec,
    ProblemKind,
    ProblemSpec,
    RunConfig,
    grid_from_exponents,
)
from src.bench.services.manifest import Manifest, csv_name
from src.bench.services.reference import ReferenceValues, resolve_reference
from src.bench.services.report_service import ReportService
from src.bench.services.runner import BuiltProblem, RunResult, build_problem, execute_run, finalize_run
from src.bench.services.tuning import tune
from src.core.config import settings
from src.core.exceptions import ConfigError
from src.core.meter import GradMeter
from src.core.services.oracle import full_objective
from src.core.services.recorder import write_csv
from src.problems.profiling import fit_affine_envelope, profile_B, rate_shape_fits
from src.solvers.schemas.configs import GdLinMode

log = get_logger("bench.suites")

SUMMARY_NAME = "summary.xlsx"


class SuiteName(str, Enum):
    LP_CONVERGENCE = "lp-convergence"
    LP_PRIMAL = "lp-primal"
    SVM_CONVERGENCE = "svm-convergence"
    GD_RATE_SHAPE = "gd-rate-shape"
    B_PROFILE = "b-profile"
    GAUSSIAN_THEOREM = "gaussian-theorem"


LP_METHODS = (MethodName.SVRG_LIN, MethodName.SVRG, MethodName.SAGA, MethodName.SCSG_LIN, MethodName.SCSG)
SVM_METHODS = (MethodName.SVRG_LIN, MethodName.SVRG, MethodName.SAGA, MethodName.PEGASOS, MethodName.GD)
# lingering variants against their own baselines, reported beside the main comparison
SVM_VARIANT_METHODS = (MethodName.SCSG_LIN, MethodName.SCSG, MethodName.GD_LIN)


def _lp_grid() -> GridSpec:
    return grid_from_exponents(settings.suite.lp_grid_exponents, settings.suite.lp_grid_mantissas)


def _svm_grid() -> GridSpec:
    return grid_from_exponents(settings.suite.svm_grid_exponents, settings.suite.svm_grid_mantissas)


def _lp_spec() -> ProblemSpec:
    return ProblemSpec(kind=ProblemKind.LP, n=settings.suite.lp_n, d=settings.suite.lp_d)


def _emit(manifest: Manifest, results: list[RunResult], built: BuiltProblem, ref: ReferenceValues, out: Path) -> None:
    for r in results:
        finalize_run(r, built, ref.f_star, ref.opt)
        path = write_csv(out / csv_name(r), r.records)
        manifest.add_run(r, path)


def _finish(manifest: Manifest, out: Path) -> Path:
    path = manifest.write(out)
    ReportService().write_summary(manifest.to_dict(), out / SUMMARY_NAME)
    log.info("suite_done", extra={"suite": manifest.name, "runs": len(manifest.runs), "out": str(out)})
    return path


def _method_spec(method: MethodName, built: BuiltProblem) -> MethodSpec:
    # plain hinge has no smoothness constant to derive a warmup step from
    if method is MethodName.GD_LIN and built.problem.smoothness is None:
        return MethodSpec(name=method, warmup_steps=0)
    return MethodSpec(name=method)


def _compare(
    name: str,
    built: BuiltProblem,
    methods: tuple[MethodName, ...],
    *,
    grid: GridSpec,
    budget: Callable[[MethodName], float],
    seed: int,
    out: Path,
    variants: tuple[MethodName, ...] = (),
    f_star: Optional[float] = None,
) -> tuple[Path, ReferenceValues]:
    """
    Tunes every method on one problem, then writes the `top_etas` best curves of each
    against a shared f*. A given `f_star` replaces the SVRG-lin reference run.
    """
    ranked: list[list[RunResult]] = []
    candidates: list[RunResult] = []
    for method in (*methods, *variants):
        base = RunConfig(problem=built.spec, method=_method_spec(method, built), budget=budget(method), seed=seed)
        if method is MethodName.PEGASOS:
            ranked.append([execute_run(base, built)])
            continue
        outcome = tune(base, grid, built)
        ranked.append(outcome.top(settings.suite.top_etas))
        candidates.extend(outcome.candidates)
    best = [curves[0] for curves in ranked]

    if f_star is not None:
        ref = ReferenceValues(f_star=f_star, f_star_method="given")
    else:
        lin = next((r for r in best if r.method == MethodName.SVRG_LIN.value), None)
        anchor = lin.config if lin is not None else best[0].config
        ref = resolve_reference(anchor, built, eta_hint=lin.eta if lin is not None else None)
    ref = ref.lowered(best + candidates)

    manifest = Manifest(name=name, problem=built.describe(), reference=ref.to_manifest())
    manifest.extra["methods"] = [m.value for m in methods]
    if variants:
        manifest.extra["variant_methods"] = [m.value for m in variants]
    manifest.extra["grid"] = grid.etas
    written: list[RunResult] = []
    for curves in ranked:
        for rank, r in enumerate(curves, start=1):
            finalize_run(r, built, ref.f_star, ref.opt)
            manifest.add_run(r, write_csv(out / csv_name(r), r.records), rank=rank)
            written.append(r)
    for c in candidates:
        if not any(c is w for w in written):
            finalize_run(c, built, ref.f_star, None)
        manifest.add_candidate(c)
    return _finish(manifest, out), ref


def lp_convergence(out: Path, seed: int, budget: Optional[float] = None) -> Path:
    built = build_problem(_lp_spec(), seed)
    b = budget or settings.suite.lp_budget
    path, _ = _compare(
        SuiteName.LP_CONVERGENCE.value, built, LP_METHODS, grid=_lp_grid(), budget=lambda m: b, seed=seed, out=out
    )
    return path


def lp_primal(out: Path, seed: int, budget: Optional[float] = None) -> Path:
    built = build_problem(_lp_spec(), seed)
    b = budget or settings.suite.lp_primal_budget
    path, _ = _compare(
        SuiteName.LP_PRIMAL.value, built, LP_METHODS, grid=_lp_grid(), budget=lambda m: b, seed=seed, out=out
    )
    return path


def _smoothing_dir(mu: float) -> str:
    return f"mu{mu:g}"


def svm_convergence(out: Path, seed: int, data: Optional[Path], budget: Optional[float] = None) -> Path:
    """
    One comparison per smoothing in `settings.suite.svm_smoothings`, each in its own
    subdirectory and all scored on the plain hinge objective. The unsmoothed problem runs
    first; its f* is the reference of the smoothed ones.
    """
    if data is None:
        raise ConfigError("svm-convergence needs --data pointing at a LibSVM file (Adult / a9a)")
    if not Path(data).exists():
        raise ConfigError(f"dataset not found: {data}")

    def method_budget(m: MethodName) -> float:
        if budget is not None:
            return budget
        return settings.suite.pegasos_budget if m is MethodName.PEGASOS else settings.suite.svm_budget

    index = Manifest(name=SuiteName.SVM_CONVERGENCE.value, problem={"kind": ProblemKind.SVM.value, "data": str(data)})
    smoothings: dict[str, str] = {}
    f_star: Optional[float] = None
    for mu in sorted(settings.suite.svm_smoothings):
        built = build_problem(ProblemSpec(kind=ProblemKind.SVM, data=Path(data), mu_smooth=mu), seed)
        sub = out / _smoothing_dir(mu)
        path, ref = _compare(
            f"{SuiteName.SVM_CONVERGENCE.value}-{_smoothing_dir(mu)}",
            built,
            SVM_METHODS,
            variants=SVM_VARIANT_METHODS,
            grid=_svm_grid(),
            budget=method_budget,
            seed=seed,
            out=sub,
            f_star=f_star,
        )
        f_star = ref.f_star if f_star is None else min(f_star, ref.f_star)
        smoothings[f"{mu:g}"] = str(path.relative_to(out))
    index.extra["smoothings"] = smoothings
    index.reference = {"f_star": f_star, "f_star_method": "unsmoothed_suite"}
    return index.write(out)


def gd_rate_shape(out: Path, seed: int, budget: Optional[float] = None) -> Path:
    """
    GD-lin (theoretical schedule, C = radius scale of the ramp family) against GD with
    step 1/L on a psi(r) = r / C problem, both for the same number of passes.
    """
    s = settings.suite
    spec = ProblemSpec(kind=ProblemKind.RAMP, n=s.rate_shape_n, d=s.rate_shape_d)
    built = build_problem(spec, seed)
    problem = built.problem
    C = 1.0
    D = max(C, float(np.linalg.norm(built.x_star)))
    lin_cfg = RunConfig(
        problem=spec,
        method=MethodSpec(name=MethodName.GD_LIN, mode=GdLinMode.THEORETICAL, C=C, D=D, S=s.rate_shape_epochs),
        budget=budget or math.inf,
        seed=seed,
    )
    lin = execute_run(lin_cfg, built)
    gd_cfg = RunConfig(
        problem=spec,
        method=MethodSpec(name=MethodName.GD, eta=1.0 / problem.smoothness),
        budget=max(lin.passes, 1.0),
        seed=seed,
    )
    gd = execute_run(gd_cfg, built)

    ref = ReferenceValues(f_star=full_objective(built.scored, built.x_star), f_star_method="closed_form")
    manifest = Manifest(name=SuiteName.GD_RATE_SHAPE.value, problem=built.describe(), reference=ref.to_manifest())
    _emit(manifest, [lin, gd], built, ref, out)
    for r in (lin, gd):
        passes = np.array([p.pass_count for p in r.records])
        errors = np.array([p.objective_error for p in r.records])
        manifest.fits[r.method] = rate_shape_fits(passes, errors)
    return _finish(manifest, out)


def radius_grid(radii: np.ndarray, points: int, *, quantile: float = 0.99) -> np.ndarray:
    finite = radii[np.isfinite(radii)]
    top = float(np.quantile(finite, quantile)) if finite.size else 1.0
    return np.linspace(0.0, max(top, 1e-12), points)


def write_profile(path: Path, curve: list[tuple[float, float]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("r", "fraction"))
        for r, f in curve:
            w.writerow((repr(r), repr(f)))
    return path


def _tuned_reference(built: BuiltProblem, grid: GridSpec, budget: float, seed: int) -> ReferenceValues:
    base = RunConfig(problem=built.spec, method=MethodSpec(name=MethodName.SVRG_LIN), budget=budget, seed=seed)
    tuned = tune(base, grid, built)
    return resolve_reference(tuned.best_config, built, eta_hint=tuned.best.eta)


def _profile_pair(manifest: Manifest, label: str, built: BuiltProblem, x_ref: np.ndarray, out: Path) -> None:
    problem = built.problem
    points = {"x0": np.zeros(problem.d), "reference": x_ref}
    all_idx = np.arange(problem.n)
    radii = np.concatenate([problem.radii(all_idx, x) for x in points.values()])
    grid = radius_grid(radii, settings.suite.profile_points)
    for where, x in points.items():
        curve = profile_B(problem, x, grid, GradMeter(problem.n))
        path = write_profile(out / f"profile_{label}_{where}.csv", curve)
        fit = fit_affine_envelope(curve)
        manifest.fits[f"{label}_{where}"] = {
            "csv": path.name,
            "c1": fit.slope,
            "c2": fit.offset,
            "c2_envelope": fit.envelope_offset,
        }


def _profile_svm_spec(data: Optional[Path]) -> ProblemSpec:
    s = settings.suite
    if data is not None:
        if not Path(data).exists():
            raise ConfigError(f"dataset not found: {data}")
        return ProblemSpec(kind=ProblemKind.SVM, data=Path(data))
    return ProblemSpec(
        kind=ProblemKind.GAUSSIAN, n=s.gaussian_sizes[0], d=s.gaussian_d, sigma=s.gaussian_sigma, kappa=s.gaussian_kappa
    )


def b_profile(out: Path, seed: int, budget: Optional[float] = None, data: Optional[Path] = None) -> Path:
    """
    |B(x, r)| / n at x = 0 and at the reference point, on an LP instance and on SVM data
    (the LibSVM file when given, Gaussian data otherwise).
    """
    s = settings.suite
    lp = build_problem(_lp_spec(), seed)
    lp_ref = _tuned_reference(lp, _lp_grid(), budget or s.lp_budget, seed)
    manifest = Manifest(name=SuiteName.B_PROFILE.value, problem=lp.describe(), reference=lp_ref.to_manifest())
    _profile_pair(manifest, "lp", lp, lp_ref.x, out)

    svm = build_problem(_profile_svm_spec(data), seed)
    svm_ref = _tuned_reference(svm, _svm_grid(), budget or s.svm_budget, seed)
    manifest.extra["svm_problem"] = svm.describe()
    manifest.extra["svm_reference"] = svm_ref.to_manifest()
    _profile_pair(manifest, "svm", svm, svm_ref.x, out)
    return _finish(manifest, out)


def gaussian_theorem(out: Path, seed: int, budget: Optional[float] = None) -> Path:
    """
    Profiles B(x, r) along SVRG-lin trajectories on Gaussian SVM data for growing n and
    records the affine fit c1 r + c2 of each; the offset is expected to shrink with n.
    """
    s = settings.suite
    b = budget or s.gaussian_passes
    manifest = Manifest(name=SuiteName.GAUSSIAN_THEOREM.value, problem={"kind": ProblemKind.GAUSSIAN.value, "d": s.gaussian_d})
    offsets: dict[int, float] = {}
    for n in s.gaussian_sizes:
        spec = ProblemSpec(kind=ProblemKind.GAUSSIAN, n=n, d=s.gaussian_d, sigma=s.gaussian_sigma, kappa=s.gaussian_kappa)
        built = build_problem(spec, seed)
        problem = built.problem
        tuned = tune(RunConfig(problem=spec, method=MethodSpec(name=MethodName.SVRG_LIN), budget=b, seed=seed), _svm_grid(), built)
        run = tuned.best
        ref = ReferenceValues(f_star=run.min_objective, f_star_method="run_minimum")
        finalize_run(run, built, ref.f_star, None)
        path = write_csv(out / f"n{n}_{csv_name(run)}", run.records)
        manifest.add_run(run, path)

        # second half of the trajectory, where x has settled
        iterates = run.recorder.iterates[len(run.recorder.iterates) // 2 :]
        picks = [iterates[i] for i in np.linspace(0, len(iterates) - 1, min(5, len(iterates))).astype(int)]
        all_idx = np.arange(problem.n)
        grid = radius_grid(np.concatenate([problem.radii(all_idx, x) for x in picks]), s.profile_points)
        curve = [pt for x in picks for pt in profile_B(problem, x, grid, GradMeter(problem.n))]
        fit = fit_affine_envelope(curve)
        offsets[n] = fit.offset
        manifest.fits[f"n{n}"] = {
            "c1": fit.slope,
            "c2": fit.offset,
            "c2_envelope": fit.envelope_offset,
            "r2": fit.r2,
            "profiled_points": len(picks),
        }
    sizes = sorted(offsets)
    manifest.fits["c2_decreasing"] = all(offsets[a] > offsets[b] for a, b in zip(sizes, sizes[1:]))
    return _finish(manifest, out)


def run_suite(name: SuiteName, out: Path, *, seed: int = 0, data: Optional[Path] = None, budget: Optional[float] = None) -> Path:
    out = Path(out)
    log.info("suite_start", extra={"suite": name.value, "seed": seed, "out": str(out)})
    if name is SuiteName.SVM_CONVERGENCE:
        return svm_convergence(out, seed, data, budget)
    if name is SuiteName.B_PROFILE:
        return b_profile(out, seed, budget, data)
    handlers = {
        SuiteName.LP_CONVERGENCE: lp_convergence,
        SuiteName.LP_PRIMAL: lp_primal,
        SuiteName.GD_RATE_SHAPE: gd_rate_shape,
        SuiteName.GAUSSIAN_THEOREM: gaussian_theorem,
    }
    return handlers[name](out, seed, budget)
