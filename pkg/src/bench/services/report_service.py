# path: src/bench/services/report_service.py
from __future__ import annotations

import io
import math
from pathlib import Path
from typing import Any

from openpyxl import Workbook


class ReportService:
    """
    Excel summary of an artifact directory: one row per emitted run, one per tuning candidate.
    The CSVs stay the source of truth; this is only a table for people.
    """

    RUN_HEADERS = [
        "Method",
        "Eta",
        "Seed",
        "Passes",
        "Final objective",
        "Objective error",
        "Primal error",
        "Wall ms",
        "Aborted",
        "CSV",
    ]

    def build_summary_xlsx(self, manifest: dict[str, Any]) -> bytes:
        wb = Workbook()
        ws = wb.active
        ws.title = "Runs"
        ws.append(self.RUN_HEADERS)
        for r in manifest.get("runs", []):
            ws.append(self._row(r, with_csv=True))

        candidates = manifest.get("candidates", [])
        if candidates:
            wc = wb.create_sheet("Candidates")
            wc.append(self.RUN_HEADERS[:-1])
            for r in candidates:
                wc.append(self._row(r, with_csv=False))

        ref = manifest.get("reference")
        if ref:
            wr = wb.create_sheet("Reference")
            for key, value in ref.items():
                wr.append([key, value])

        fits = manifest.get("fits")
        if fits:
            wf = wb.create_sheet("Fits")
            for key, value in self._flatten(fits):
                wf.append([key, value])

        buf = io.BytesIO()
        wb.save(buf)
        return buf.getvalue()

    def write_summary(self, manifest: dict[str, Any], path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.build_summary_xlsx(manifest))
        return path

    @staticmethod
    def _row(r: dict[str, Any], *, with_csv: bool) -> list[Any]:
        row = [
            r.get("method"),
            r.get("eta"),
            r.get("seed"),
            r.get("passes"),
            _cell(r.get("final_objective")),
            _cell(r.get("final_obj_error")),
            _cell(r.get("final_primal_error")),
            _cell(r.get("wall_ms")),
            bool(r.get("aborted")),
        ]
        if with_csv:
            row.append(r.get("csv"))
        return row

    @classmethod
    def _flatten(cls, tree: dict[str, Any], prefix: str = "") -> list[tuple[str, Any]]:
        out: list[tuple[str, Any]] = []
        for key, value in tree.items():
            name = f"{prefix}.{key}" if prefix else str(key)
            if isinstance(value, dict):
                out.extend(cls._flatten(value, name))
            elif isinstance(value, list):
                out.append((name, ", ".join(str(v) for v in value)))
            else:
                out.append((name, _cell(value)))
        return out


def _cell(value: Any) -> Any:
    # inf and nan are not valid xlsx numbers
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value
