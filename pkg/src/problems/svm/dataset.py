# path: src/problems/svm/dataset.py
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import sparse

from src.app_logging import get_logger
from src.core.config import settings
from src.core.exceptions import DataParseError, InputError

log = get_logger("problems.svm")


@dataclass(frozen=True)
class SvmDataset:
    a: sparse.csr_matrix  # (n, d) feature rows
    labels: np.ndarray  # (n,) in {-1, +1}
    lam: float
    mu_smooth: float = 0.0

    def __post_init__(self) -> None:
        if self.a.shape[0] != self.labels.size:
            raise InputError(f"{self.a.shape[0]} rows but {self.labels.size} labels")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise InputError("labels must be -1 or +1")
        if self.lam <= 0 or self.mu_smooth < 0:
            raise InputError("need lam > 0 and mu_smooth >= 0")

    @property
    def n(self) -> int:
        return int(self.a.shape[0])

    @property
    def d(self) -> int:
        return int(self.a.shape[1])

    @property
    def row_norms(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.a.multiply(self.a).sum(axis=1)).ravel())

    def with_smoothing(self, mu_smooth: float) -> "SvmDataset":
        return replace(self, mu_smooth=float(mu_smooth))


def make_dataset(
    a: sparse.spmatrix | np.ndarray,
    labels: np.ndarray,
    *,
    lam: Optional[float] = None,
    mu_smooth: Optional[float] = None,
) -> SvmDataset:
    a = sparse.csr_matrix(a, dtype=np.float64)
    n = a.shape[0]
    return SvmDataset(
        a=a,
        labels=np.asarray(labels, dtype=np.float64),
        lam=1.0 / n if lam is None else float(lam),
        mu_smooth=settings.svm.smoothing if mu_smooth is None else float(mu_smooth),
    )


def rescale(ds: SvmDataset) -> SvmDataset:
    """Scales every row by n / sum_i |a_i| so the average row norm is 1."""
    total = float(ds.row_norms.sum())
    if total <= 0:
        raise InputError("cannot rescale an all-zero dataset")
    return replace(ds, a=(ds.a * (ds.n / total)).tocsr())


def parse_libsvm(
    path: Path,
    *,
    zero_label_as_negative: Optional[bool] = None,
    n_features: Optional[int] = None,
    lam: Optional[float] = None,
    mu_smooth: Optional[float] = None,
) -> SvmDataset:
    """
    Reads '<label> <idx>:<val> ...' lines with 1-based feature indices.

    Labels must be +-1; with zero_label_as_negative a 0 label maps to -1. d is the largest
    index seen unless n_features is given.
    """
    if zero_label_as_negative is None:
        zero_label_as_negative = settings.svm.zero_label_as_negative
    path = Path(path)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    labels: list[float] = []
    try:
        fh = path.open(encoding="utf-8")
    except OSError as exc:
        raise DataParseError(f"cannot read dataset: {exc}", path=str(path)) from exc

    with fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split("#", 1)[0].split()
            if not tokens:
                continue
            try:
                label = float(tokens[0])
            except ValueError as exc:
                raise DataParseError(f"non-numeric label {tokens[0]!r}", path=str(path), line=lineno) from exc
            if label == 0 and zero_label_as_negative:
                label = -1.0
            if label not in (-1.0, 1.0):
                raise DataParseError(f"label {tokens[0]!r} is not +1 or -1", path=str(path), line=lineno)
            row = len(labels)
            labels.append(label)
            for tok in tokens[1:]:
                key, sep, value = tok.partition(":")
                if not sep:
                    raise DataParseError(f"token {tok!r} is not idx:val", path=str(path), line=lineno)
                try:
                    j = int(key)
                    v = float(value)
                except ValueError as exc:
                    raise DataParseError(f"non-numeric token {tok!r}", path=str(path), line=lineno) from exc
                if j <= 0:
                    raise DataParseError(f"feature index {j} must be >= 1", path=str(path), line=lineno)
                rows.append(row)
                cols.append(j - 1)
                vals.append(v)

    if not labels:
        raise DataParseError("no data lines", path=str(path))
    d = max(cols, default=-1) + 1
    if n_features is not None:
        if n_features < d:
            raise DataParseError(f"index {d} exceeds n_features={n_features}", path=str(path))
        d = n_features
    a = sparse.csr_matrix((vals, (rows, cols)), shape=(len(labels), max(d, 1)))
    a.sum_duplicates()
    log.info("libsvm_loaded", extra={"path": str(path), "n": len(labels), "d": a.shape[1], "nnz": int(a.nnz)})
    return make_dataset(a, np.asarray(labels), lam=lam, mu_smooth=mu_smooth)
