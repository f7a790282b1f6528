from pathlib import Path

import numpy as np
import pytest
from openpyxl import load_workbook

from src.bench.schemas.run_config import (
    GridSpec,
    MethodName,
    MethodSpec,
    ProblemKind,
    ProblemSpec,
    ReferenceSpec,
    RunConfig,
    grid_from_exponents,
)
from src.bench.services.config_loader import build_config, dump_config, load_config, parse_text
from src.bench.services.manifest import MANIFEST_NAME, read_manifest
from src.bench.services.reference import resolve_reference
from src.bench.services.runner import BuiltProblem, build_problem, build_solver, execute_run
from src.bench.services.suites import SUMMARY_NAME, SuiteName, run_suite
from src.bench.services.tuning import rank_candidates, select_best, tune
from src.core.config import settings
from src.core.exceptions import EXIT_ABORT, EXIT_CONFIG, EXIT_OK, ConfigError, SolverAbort
from src.core.schemas.run_record import CSV_HEADER
from src.core.services.oracle import full_objective
from src.core.services.recorder import read_csv
from src.main import main
from src.problems.synthetic import LinearProblem

QUAD_RUN = """\
# small smooth problem with a closed-form optimum
problem.kind = quadratic
problem.n = 40
problem.d = 5
method.name = svrg_lin
method.eta = 0.05
budget = 3
seed = 11
output.wall_clock = false
"""


def _write(tmp_path: Path, text: str, name: str = "run.conf") -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def _quad_config(**method) -> RunConfig:
    return RunConfig(
        problem=ProblemSpec(kind=ProblemKind.QUADRATIC, n=40, d=5),
        method=MethodSpec(name=MethodName.SVRG, eta=0.05, **method),
        budget=3.0,
        seed=1,
        output={"wall_clock": False},
    )


class TestConfigText:
    def test_nested_keys_comments_and_lists(self):
        tree = parse_text("a.b = 1  # one\n\n# full line\na.c = x, y\ngrid.etas = 0.1\n")
        assert tree == {"a": {"b": "1", "c": ["x", "y"]}, "grid": {"etas": ["0.1"]}}

    @pytest.mark.parametrize(
        "text",
        ["a = 1\na = 2\n", "just words\n", "a..b = 1\n", "= 3\n", "a = 1\na.b = 2\n"],
    )
    def test_bad_lines(self, text):
        with pytest.raises(ConfigError):
            parse_text(text)

    def test_values_are_validated(self):
        cfg = build_config(parse_text(QUAD_RUN))
        assert cfg.method.name is MethodName.SVRG_LIN
        assert cfg.budget == 3.0 and cfg.output.wall_clock is False

    @pytest.mark.parametrize(
        "text",
        [
            QUAD_RUN.replace("svrg_lin", "newton"),
            QUAD_RUN.replace("budget = 3", "budget = 0"),
            QUAD_RUN + "problem.colour = red\n",
            QUAD_RUN + "grid.etas = 0.1, -1\n",
        ],
    )
    def test_invalid_values(self, text):
        with pytest.raises(ConfigError):
            build_config(parse_text(text))

    def test_overrides_and_missing_file(self, tmp_path):
        cfg = load_config(_write(tmp_path, QUAD_RUN), seed=5, budget=2.0)
        assert (cfg.seed, cfg.budget) == (5, 2.0)
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.conf")

    def test_dumped_config_loads_back(self):
        cfg = _quad_config().model_copy(update={"grid": GridSpec(etas=[0.1, 0.01])})
        assert build_config(parse_text(dump_config(cfg))) == cfg

    def test_hash_tracks_the_learning_rate(self):
        cfg = _quad_config()
        assert cfg.config_hash() == _quad_config().config_hash()
        assert cfg.with_eta(0.01).config_hash() != cfg.config_hash()


def test_grid_from_exponents():
    assert grid_from_exponents([1, 2], [1.0, 5.0]).etas == [0.01, 0.05, 0.1, 0.5]


class TestSolverMapping:
    def test_gd_lin_needs_a_travel_budget(self):
        with pytest.raises(ConfigError):
            build_solver(MethodSpec(name=MethodName.GD_LIN), seed=0)
        build_solver(MethodSpec(name=MethodName.GD_LIN, eta=0.5), seed=0)

    def test_step_size_is_required(self):
        for name in (MethodName.SAGA, MethodName.SVRG_LIN):
            with pytest.raises(ConfigError):
                build_solver(MethodSpec(name=name), seed=0)
        build_solver(MethodSpec(name=MethodName.PEGASOS), seed=0)

    def test_svm_needs_a_dataset(self, tmp_path):
        with pytest.raises(ConfigError):
            build_problem(ProblemSpec(kind=ProblemKind.SVM), 0)
        with pytest.raises(ConfigError):
            build_problem(ProblemSpec(kind=ProblemKind.SVM, data=tmp_path / "none.svm"), 0)


def test_run_respects_the_budget():
    result = execute_run(_quad_config())
    assert not result.aborted
    assert result.passes <= 3.0 + 2.0 / 40
    assert result.final_objective <= result.recorder.points[0].objective


class TestTuning:
    def test_diverging_candidate_is_dropped(self):
        outcome = tune(_quad_config(), GridSpec(etas=[1e6, 0.05]))
        assert outcome.best.eta == 0.05
        assert [c.aborted for c in outcome.candidates] == [True, False]

    def test_single_candidate_is_the_winner(self):
        base = _quad_config()
        outcome = tune(base, GridSpec(etas=[0.05]))
        assert outcome.best_config == base

    def test_all_aborted(self):
        with pytest.raises(SolverAbort):
            tune(_quad_config(), GridSpec(etas=[1e6, 1e7]))

    def test_ties_go_to_the_smaller_step(self):
        problem = LinearProblem(np.zeros((10, 2)))
        built = BuiltProblem(problem=problem, spec=ProblemSpec(kind=ProblemKind.QUADRATIC, n=10, d=2), seed=0)
        base = RunConfig(method=MethodSpec(name=MethodName.GD, eta=0.1), budget=2.0)
        outcome = tune(base, GridSpec(etas=[0.3, 0.1, 0.2]), built, threads=2)
        assert outcome.best.eta == 0.1
        assert select_best(list(reversed(outcome.candidates))).eta == 0.1

    def test_top_keeps_the_runners_up_in_order(self):
        outcome = tune(_quad_config(), GridSpec(etas=[1e6, 0.01, 0.05, 0.02]))
        top = outcome.top(3)
        assert len(top) == 3
        assert top[0] is outcome.best
        assert all(not r.aborted for r in top)
        objectives = [r.final_objective for r in top]
        assert objectives == sorted(objectives)
        assert len(rank_candidates(outcome.candidates)) == 3


class TestReference:
    def test_closed_form_optimum(self):
        cfg = _quad_config()
        built = build_problem(cfg.problem, cfg.problem_seed())
        ref = resolve_reference(cfg, built)
        assert ref.f_star_method == "closed_form"
        result = execute_run(cfg, built)
        assert ref.lowered([result]).f_star <= ref.f_star

    def test_methods_without_a_donor_step_need_a_value(self):
        cfg = RunConfig(
            problem=ProblemSpec(kind=ProblemKind.LP, n=30, d=3),
            method=MethodSpec(name=MethodName.GD, eta=0.1),
            budget=1.0,
        )
        built = build_problem(cfg.problem, cfg.problem_seed())
        with pytest.raises(ConfigError):
            resolve_reference(cfg, built)
        given = cfg.model_copy(update={"reference": ReferenceSpec(f_star=0.5, opt=2.0)})
        ref = resolve_reference(given, built)
        assert (ref.f_star, ref.opt, ref.opt_method) == (0.5, 2.0, "given")


class TestCli:
    def test_run_writes_a_csv(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["run", "--config", str(_write(tmp_path, QUAD_RUN)), "--out", str(out)]) == EXIT_OK
        path = Path(capsys.readouterr().out.strip())
        assert path == out / "svrg_lin_eta0.05.csv"
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        rows = read_csv(path)
        passes = [float(r["pass"]) for r in rows]
        assert passes == sorted(passes)
        assert passes[-1] <= 3.0 + 2.0 / 40
        assert all(float(r["obj_error"]) >= 0.0 for r in rows)

    def test_equal_seeds_give_identical_files(self, tmp_path):
        conf = _write(tmp_path, QUAD_RUN)
        main(["run", "--config", str(conf), "--out", str(tmp_path / "a")])
        main(["run", "--config", str(conf), "--out", str(tmp_path / "b")])
        name = "svrg_lin_eta0.05.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_lp_run_reports_primal_error(self, tmp_path):
        text = "problem.kind = lp\nproblem.n = 60\nproblem.d = 4\nmethod.name = svrg\nmethod.eta = 0.001\nbudget = 2\n"
        assert main(["run", "--config", str(_write(tmp_path, text)), "--out", str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path / "svrg_eta0.001.csv")
        assert all(r["primal_error"] != "" for r in rows)
        assert all(float(r["primal_error"]) >= -1e-9 for r in rows)

    def test_unknown_method_exits_with_config_code(self, tmp_path):
        conf = _write(tmp_path, QUAD_RUN.replace("svrg_lin", "newton"))
        assert main(["run", "--config", str(conf)]) == EXIT_CONFIG

    def test_missing_config(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.conf")]) == EXIT_CONFIG

    def test_diverging_run_exits_with_abort_code(self, tmp_path):
        conf = _write(tmp_path, QUAD_RUN.replace("method.eta = 0.05", "method.eta = 1e6"))
        assert main(["run", "--config", str(conf), "--out", str(tmp_path / "o")]) == EXIT_ABORT
        assert not (tmp_path / "o").exists()

    def test_svm_suite_without_data(self, tmp_path):
        assert main(["suite", "svm-convergence", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_tune_writes_artifacts(self, tmp_path):
        conf = _write(tmp_path, QUAD_RUN + "grid.etas = 0.05, 0.01\n")
        out = tmp_path / "tuned"
        assert main(["tune", "--config", str(conf), "--out", str(out)]) == EXIT_OK
        manifest = read_manifest(out / MANIFEST_NAME)
        assert len(manifest["candidates"]) == 2
        assert manifest["reference"]["f_star_method"].startswith("closed_form")
        best = manifest["best_eta"]
        assert (out / f"svrg_lin_eta{best:g}.csv").exists()
        assert load_config(out / "best.conf").method.eta == best
        assert load_workbook(out / SUMMARY_NAME).sheetnames[:2] == ["Runs", "Candidates"]

    def test_profile_at_zero(self, tmp_path):
        conf = _write(tmp_path, "problem.kind = ramp\nproblem.n = 200\nproblem.d = 3\n")
        assert main(["profile", "--config", str(conf), "--out", str(tmp_path)]) == EXIT_OK
        lines = (tmp_path / "profile_zero.csv").read_text().splitlines()
        assert lines[0] == "r,fraction"
        fractions = [float(line.split(",")[1]) for line in lines[1:]]
        assert fractions == sorted(fractions)


class TestSmoothedScoring:
    def _config(self, mu: float) -> RunConfig:
        return RunConfig(
            problem=ProblemSpec(kind=ProblemKind.GAUSSIAN, n=200, d=5, mu_smooth=mu),
            method=MethodSpec(name=MethodName.SVRG_LIN, eta=0.05),
            budget=2.0,
            seed=3,
            output={"wall_clock": False},
        )

    def test_smoothed_run_is_scored_on_the_plain_hinge(self):
        cfg = self._config(0.01)
        built = build_problem(cfg.problem, cfg.problem_seed())
        assert built.problem.mu == 0.01
        assert built.scoring is not None and built.scoring.mu == 0.0
        result = execute_run(cfg, built)
        rec = result.recorder
        # every margin is 0 at x = 0, so each plain hinge term is 1
        assert rec.points[0].objective == pytest.approx(1.0)
        x = rec.last_x
        assert rec.final_objective() == full_objective(built.scoring, x)
        assert rec.final_objective() >= full_objective(built.problem, x)

    def test_unsmoothed_run_scores_its_own_objective(self):
        cfg = self._config(0.0)
        built = build_problem(cfg.problem, cfg.problem_seed())
        assert built.scoring is None
        assert built.scored is built.problem


@pytest.mark.slow
class TestSuites:
    def test_gd_rate_shape(self, tmp_path):
        manifest = read_manifest(run_suite(SuiteName.GD_RATE_SHAPE, tmp_path, seed=0))
        lin, gd = manifest["fits"][MethodName.GD_LIN.value], manifest["fits"][MethodName.GD.value]
        assert lin["r2_cuberoot"] - lin["r2_log"] >= 0.05
        assert gd["r2_log"] > gd["r2_cuberoot"]

    def test_gaussian_offset_shrinks_with_n(self, tmp_path, monkeypatch):
        monkeypatch.setattr(settings.suite, "gaussian_passes", 4.0)
        manifest = read_manifest(run_suite(SuiteName.GAUSSIAN_THEOREM, tmp_path, seed=0))
        assert manifest["fits"]["c2_decreasing"] is True

    def test_lp_convergence_keeps_three_curves_per_method(self, tmp_path, monkeypatch):
        monkeypatch.setattr(settings.suite, "lp_n", 400)
        monkeypatch.setattr(settings.suite, "lp_d", 4)
        monkeypatch.setattr(settings.suite, "lp_grid_exponents", [2, 3])
        manifest = read_manifest(run_suite(SuiteName.LP_CONVERGENCE, tmp_path, seed=0, budget=2.0))
        for method in manifest["methods"]:
            ranks = sorted(r["rank"] for r in manifest["runs"] if r["method"] == method)
            assert ranks[0] == 1 and ranks == list(range(1, len(ranks) + 1))
            assert len(ranks) <= 3
        assert all((tmp_path / r["csv"]).exists() for r in manifest["runs"])
        assert all(r["wall_ms"] is not None for r in manifest["runs"])

    def test_b_profile_covers_lp_and_svm(self, tmp_path, monkeypatch):
        monkeypatch.setattr(settings.suite, "lp_n", 400)
        monkeypatch.setattr(settings.suite, "lp_d", 4)
        monkeypatch.setattr(settings.suite, "gaussian_sizes", [300])
        monkeypatch.setattr(settings.suite, "lp_grid_exponents", [2, 3])
        monkeypatch.setattr(settings.suite, "svm_grid_exponents", [1, 2])
        manifest = read_manifest(run_suite(SuiteName.B_PROFILE, tmp_path, seed=0, budget=2.0))
        for key in ("lp_x0", "lp_reference", "svm_x0", "svm_reference"):
            assert (tmp_path / manifest["fits"][key]["csv"]).exists()
        assert manifest["svm_problem"]["kind"] == ProblemKind.GAUSSIAN.value
