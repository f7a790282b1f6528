# path: src/bench/services/manifest.py
from __future__ import annotations

import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Optional

import orjson

from src.bench.services.runner import RunResult, checkpoint_units
from src.core.config import settings

MANIFEST_NAME = "manifest.json"
_VERSIONED = ("numpy", "scipy", "pydantic", "pydantic-settings", "orjson", "openpyxl")


def library_versions() -> dict[str, str]:
    out = {"python": platform.python_version()}
    for name in _VERSIONED:
        try:
            out[name] = version(name)
        except PackageNotFoundError:
            out[name] = "unknown"
    return out


def csv_name(result: RunResult) -> str:
    eta = "none" if result.eta is None else f"{result.eta:g}"
    return f"{result.method}_eta{eta}.csv"


@dataclass
class Manifest:
    """Index of one artifact directory: what ran, with which seeds, and against which reference."""

    name: str
    problem: dict[str, Any]
    runs: list[dict[str, Any]] = field(default_factory=list)
    candidates: list[dict[str, Any]] = field(default_factory=list)
    reference: Optional[dict[str, Any]] = None
    fits: dict[str, Any] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    def add_run(self, result: RunResult, csv_path: Optional[Path], *, rank: int = 1) -> None:
        """rank 1 is the tuned curve of its method; higher ranks are the runner-up learning rates."""
        self.runs.append({**self._entry(result, csv_path), "rank": rank})

    def add_candidate(self, result: RunResult) -> None:
        self.candidates.append(self._entry(result, None))

    @staticmethod
    def _entry(result: RunResult, csv_path: Optional[Path]) -> dict[str, Any]:
        last = result.records[-1] if result.records else None
        return {
            "method": result.method,
            "eta": result.eta,
            "seed": result.config.seed,
            "problem_seed": result.config.problem_seed(),
            "budget": result.config.budget,
            "config_hash": result.config.config_hash(),
            "csv": csv_path.name if csv_path is not None else None,
            "passes": result.passes,
            "wall_ms": last.wall_ms if last else None,
            "final_objective": result.final_objective,
            "final_obj_error": last.objective_error if last else None,
            "final_primal_error": last.primal_error if last else None,
            "aborted": result.aborted,
            "abort_reason": result.abort_reason,
        }

    def to_dict(self) -> dict[str, Any]:
        n = int(self.problem.get("n", 0))
        return {
            "name": self.name,
            "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "versions": library_versions(),
            "settings": settings.model_dump(mode="json"),
            "problem": self.problem,
            "checkpoint": {
                "fraction_of_n": settings.solver.checkpoint_fraction,
                "every_units": checkpoint_units(n) if n else None,
            },
            "reference": self.reference,
            "runs": self.runs,
            "candidates": self.candidates,
            "fits": self.fits,
            **self.extra,
        }

    def write(self, out_dir: Path) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / MANIFEST_NAME
        path.write_bytes(
            orjson.dumps(self.to_dict(), option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS)
        )
        return path


def read_manifest(path: Path) -> dict[str, Any]:
    return orjson.loads(Path(path).read_bytes())
