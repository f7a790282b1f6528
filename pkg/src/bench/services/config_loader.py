# path: src/bench/services/config_loader.py
"""
Run-config files: one `key = value` per line.

- dotted keys address nested sections: `method.eta = 0.1`, `problem.kind = lp`
- `#` starts a comment, blank lines are ignored
- a value containing commas is a list: `grid.etas = 0.1, 0.03, 0.01`
- values stay strings here; pydantic coerces and validates them in RunConfig
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

from pydantic import ValidationError

from src.bench.schemas.run_config import ProblemSpec, RunConfig
from src.core.exceptions import ConfigError

LIST_KEYS = {"grid.etas"}


def parse_text(text: str, *, source: str = "<config>") -> dict[str, Any]:
    tree: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        parts = key.split(".")
        if any(not p for p in parts):
            raise ConfigError(f"{source}:{lineno}: malformed key {key!r}")
        parsed: Any = value
        if "," in value or key in LIST_KEYS:
            parsed = [v.strip() for v in value.split(",") if v.strip()]
        node = tree
        for p in parts[:-1]:
            child = node.setdefault(p, {})
            if not isinstance(child, dict):
                raise ConfigError(f"{source}:{lineno}: {key!r} nests under a scalar")
            node = child
        if parts[-1] in node:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        node[parts[-1]] = parsed
    return tree


def build_config(tree: dict[str, Any], *, source: str = "<config>") -> RunConfig:
    try:
        return RunConfig.model_validate(tree)
    except ValidationError as exc:
        problems = "; ".join(f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors())
        raise ConfigError(f"{source}: {problems}") from exc


def apply_overrides(
    tree: dict[str, Any],
    *,
    seed: Optional[int] = None,
    budget: Optional[float] = None,
    data: Optional[Path] = None,
) -> dict[str, Any]:
    if seed is not None:
        tree["seed"] = seed
    if budget is not None:
        tree["budget"] = budget
    if data is not None:
        tree.setdefault("problem", {})["data"] = str(data)
    return tree


def load_config(
    path: Path,
    *,
    seed: Optional[int] = None,
    budget: Optional[float] = None,
    data: Optional[Path] = None,
) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    tree = apply_overrides(parse_text(text, source=str(path)), seed=seed, budget=budget, data=data)
    return build_config(tree, source=str(path))


def dump_config(cfg: RunConfig) -> str:
    """Inverse of load_config for the fields that are set."""
    lines: list[str] = []

    def walk(prefix: str, value: Any) -> None:
        if isinstance(value, dict):
            for k, v in value.items():
                walk(f"{prefix}.{k}" if prefix else k, v)
        elif value is None:
            return
        elif isinstance(value, list):
            lines.append(f"{prefix} = {', '.join(str(v) for v in value)}")
        else:
            lines.append(f"{prefix} = {str(value).lower() if isinstance(value, bool) else value}")

    walk("", cfg.model_dump(mode="json", exclude_none=True))
    return "\n".join(lines) + "\n"


def load_problem_spec(path: Path, *, data: Optional[Path] = None) -> ProblemSpec:
    """Only the `problem.*` section; the profile command needs no method."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    tree = apply_overrides(parse_text(text, source=str(path)), data=data)
    try:
        return ProblemSpec.model_validate(tree.get("problem", {}))
    except ValidationError as exc:
        raise ConfigError(f"{path}: {exc.errors()[0]['msg']}") from exc
