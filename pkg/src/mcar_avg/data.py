"""Ingestion of tabular data with missing covariate entries.

A dataset is a fully observed response, a covariate matrix, and a boolean
mask (True = observed).  Values at unobserved positions carry no numeric
meaning: all estimation goes through the mask, never through sentinels.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError, RankError


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ObservedDataset:
    """Response vector, covariate matrix, and observed-entry mask."""

    y: np.ndarray
    x: np.ndarray
    mask: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self):
        y = _freeze(np.asarray(self.y, dtype=np.float64))
        x = _freeze(np.asarray(self.x, dtype=np.float64))
        mask = _freeze(np.asarray(self.mask, dtype=bool))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise DataError(f"covariate matrix must be n x K with n,K >= 1, got {x.shape}")
        if mask.shape != x.shape:
            raise DataError(f"mask shape {mask.shape} != covariate shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise DataError(f"response length {y.shape} does not match {x.shape[0]} rows")
        if not np.all(np.isfinite(y)):
            raise DataError("response contains non-finite entries")
        if not np.all(np.isfinite(np.where(mask, x, 0.0))):
            raise DataError("observed covariate entries must be finite")
        if len(self.column_names) != x.shape[1]:
            raise DataError("column_names length does not match covariate count")

    @property
    def n_rows(self) -> int:
        return self.x.shape[0]

    @property
    def n_columns(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class ZeroFilledMatrix:
    """Covariate matrix with unobserved entries replaced by exact zeros."""

    xt: np.ndarray
    source_mask: np.ndarray


def zero_fill(d: ObservedDataset) -> ZeroFilledMatrix:
    """Zero out unobserved entries and verify full column rank.

    Rank is the count of singular values above max(n, K) * sigma_max * eps.
    """
    xt = np.where(d.mask, d.x, 0.0)
    sv = np.linalg.svd(xt, compute_uv=False)
    tol = max(xt.shape) * (sv[0] if len(sv) else 0.0) * np.finfo(np.float64).eps
    if int(np.sum(sv > tol)) < d.n_columns:
        raise RankError("zero-filled covariate matrix is not full column rank")
    return ZeroFilledMatrix(xt=_freeze(xt), source_mask=d.mask)


def load_csv(path, na_token: str = "NA", response_column: str = "y") -> ObservedDataset:
    """Load a comma-delimited UTF-8 file with a header row.

    A covariate cell is unobserved exactly when it equals ``na_token`` after
    whitespace trimming.  The response column must be complete and numeric.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if response_column not in header:
            raise DataError(f"{path}: no column named {response_column!r} in header")
        r_idx = header.index(response_column)
        cov_idx = [j for j in range(len(header)) if j != r_idx]
        if not cov_idx:
            raise DataError(f"{path}: no covariate columns besides the response")
        y, rows, mask_rows = [], [], []
        for line_no, record in enumerate(reader, start=2):
            if len(record) != len(header):
                raise DataError(
                    f"{path}: line {line_no}: expected {len(header)} fields, got {len(record)}"
                )
            cells = [c.strip() for c in record]
            if cells[r_idx] == na_token:
                raise DataError(
                    f"{path}: line {line_no}: missing value in response column "
                    f"{response_column!r}"
                )
            try:
                y.append(float(cells[r_idx]))
            except ValueError:
                raise DataError(
                    f"{path}: line {line_no}: non-numeric response {cells[r_idx]!r}"
                ) from None
            vals, obs = [], []
            for j in cov_idx:
                if cells[j] == na_token:
                    vals.append(0.0)
                    obs.append(False)
                else:
                    try:
                        vals.append(float(cells[j]))
                    except ValueError:
                        raise DataError(
                            f"{path}: line {line_no}: non-numeric cell {cells[j]!r} "
                            f"in column {header[j]!r}"
                        ) from None
                    obs.append(True)
            rows.append(vals)
            mask_rows.append(obs)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return ObservedDataset(
        y=np.array(y),
        x=np.array(rows),
        mask=np.array(mask_rows),
        column_names=tuple(header[j] for j in cov_idx),
    )


def write_csv(d: ObservedDataset, path, na_token: str = "NA", response_column: str = "y") -> None:
    """Write a dataset back to CSV; unobserved cells become ``na_token``.

    Floats are written with repr so a reload reproduces them bit-exactly.
    """
    if response_column in d.column_names:
        raise DataError(f"response name {response_column!r} collides with a covariate")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([response_column, *d.column_names])
        for i in range(d.n_rows):
            row = [repr(float(d.y[i]))]
            for j in range(d.n_columns):
                row.append(repr(float(d.x[i, j])) if d.mask[i, j] else na_token)
            writer.writerow(row)
