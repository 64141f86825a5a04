"""Column-missingness grouping and candidate-model construction.

Covariate columns sharing an identical set of missing rows form one group.
The candidate set is: one complete-case (CC) model using every column on the
fully observed rows, plus one sufficient-sample-information (SSI) model per
group, using only that group's columns on the rows where the group is
observed.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CandidateError, RankError

CC = "cc"
SSI = "ssi"
SUBSET = "subset"  # used by the all-subsets baseline, never emitted here


@dataclass(frozen=True)
class ColumnGroup:
    """Maximal set of columns whose missing-row sets coincide."""

    columns: np.ndarray
    missing_rows: np.ndarray


@dataclass(frozen=True)
class CandidateModel:
    """One candidate: a row index set and a column index set (0-based)."""

    id: int
    kind: str
    rows: np.ndarray
    columns: np.ndarray

    @property
    def n_s(self) -> int:
        return len(self.rows)

    @property
    def k_s(self) -> int:
        return len(self.columns)


@dataclass(frozen=True)
class Projection:
    """Maps coefficients of a column subset to and from the full K-vector."""

    zeta: np.ndarray
    total_columns: int

    def expand(self, b) -> np.ndarray:
        """Place b on the zeta coordinates of a zero K-vector."""
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (len(self.zeta),):
            raise CandidateError(
                f"expected a vector of length {len(self.zeta)}, got shape {b.shape}"
            )
        out = np.zeros(self.total_columns)
        out[self.zeta] = b
        return out

    def compress(self, v) -> np.ndarray:
        """Extract the zeta coordinates of a full K-vector."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.total_columns,):
            raise CandidateError(
                f"expected a vector of length {self.total_columns}, got shape {v.shape}"
            )
        return v[self.zeta].copy()


def detect_column_groups(d) -> list[ColumnGroup]:
    """Partition columns by exact equality of their missing-row sets.

    Groups are ordered by their smallest member column; a fully observed
    matrix yields a single group with no missing rows.
    """
    by_pattern: dict[bytes, list[int]] = {}
    for j in range(d.n_columns):
        by_pattern.setdefault(d.mask[:, j].tobytes(), []).append(j)
    groups = []
    for cols in by_pattern.values():
        missing = np.flatnonzero(~d.mask[:, cols[0]])
        groups.append(
            ColumnGroup(columns=np.asarray(cols, dtype=np.intp), missing_rows=missing)
        )
    return groups


def _check_feasible(c: CandidateModel, x: np.ndarray) -> None:
    if c.n_s < c.k_s + 1:
        raise CandidateError(
            f"candidate {c.id} ({c.kind}, columns {list(c.columns)}) infeasible: "
            f"{c.n_s} rows < {c.k_s + 1} required"
        )
    sub = x[np.ix_(c.rows, c.columns)]
    if np.linalg.matrix_rank(sub) < c.k_s:
        raise RankError(
            f"candidate {c.id} ({c.kind}) design matrix is rank deficient"
        )


def build_candidates(d) -> list[CandidateModel]:
    """Construct the CC model followed by one SSI model per column group.

    Raises when there are no complete cases, when any candidate has fewer
    than k_s + 1 rows, or when a candidate submatrix is rank deficient.
    """
    groups = detect_column_groups(d)
    cc_rows = np.flatnonzero(d.mask.all(axis=1))
    if len(cc_rows) == 0:
        raise CandidateError("no complete cases")
    all_cols = np.arange(d.n_columns, dtype=np.intp)
    candidates = [CandidateModel(id=1, kind=CC, rows=cc_rows, columns=all_cols)]
    for i, g in enumerate(groups):
        observed = np.setdiff1d(
            np.arange(d.n_rows, dtype=np.intp), g.missing_rows, assume_unique=True
        )
        candidates.append(
            CandidateModel(id=i + 2, kind=SSI, rows=observed, columns=g.columns)
        )
    for c in candidates:
        _check_feasible(c, d.x)
    return candidates


def patterns_summary(d) -> dict:
    """JSON-ready view of groups and candidates (1-based indices)."""
    groups = detect_column_groups(d)
    candidates = build_candidates(d)
    return {
        "groups": [
            {
                "columns": [int(j) + 1 for j in g.columns],
                "missing_rows": [int(i) + 1 for i in g.missing_rows],
            }
            for g in groups
        ],
        "candidates": [
            {
                "id": c.id,
                "kind": c.kind,
                "rows_count": c.n_s,
                "columns": [int(j) + 1 for j in c.columns],
            }
            for c in candidates
        ],
    }
