"""In-memory data model for missing-outcome and treatment-outcome tables.

CSV conventions: comma separated, header row required, '.' decimal, UTF-8.
In the outcome column of a missing-outcome table, an empty cell or "NA" means
the value is missing; any other non-numeric token is rejected. Covariate,
response, and treatment cells must always parse.

Masked outcome cells are represented by an explicit validity mask rather than
a sentinel number, so downstream code cannot silently consume garbage values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadValue,
    EmptyArm,
    InconsistentRow,
    MaskedAccess,
    MissingColumn,
)

_MISSING_TOKENS = ("", "NA")


class MaskedVector:
    """Float vector whose masked entries are unreadable.

    Masked slots hold NaN; reading one through :meth:`take` increments
    ``masked_reads`` and raises MaskedAccess. After any estimation run the
    counter of every dataset involved must still be zero.
    """

    __slots__ = ("values", "mask", "masked_reads")

    def __init__(self, values, mask=None):
        values = np.array(values, dtype=float)
        if mask is None:
            mask = np.ones(values.shape, dtype=bool)
        else:
            mask = np.array(mask, dtype=bool)
        if mask.shape != values.shape:
            raise ValueError("mask shape must match values")
        values[~mask] = np.nan
        if not np.all(np.isfinite(values[mask])):
            raise BadValue("observed outcome values must be finite")
        values.setflags(write=False)
        mask.setflags(write=False)
        self.values = values
        self.mask = mask
        self.masked_reads = 0

    def __len__(self):
        return self.values.size

    @property
    def n_observed(self):
        return int(self.mask.sum())

    def take(self, index):
        """Values at ``index`` (boolean or integer indexer).

        Raises MaskedAccess if any requested entry is masked.
        """
        hit = np.count_nonzero(~self.mask[index])
        if hit:
            self.masked_reads += hit
            raise MaskedAccess(f"{hit} masked outcome cell(s) dereferenced")
        return self.values[index]


def as_masked(y) -> MaskedVector:
    """Wrap a plain array as a fully observed MaskedVector (no-op otherwise)."""
    if isinstance(y, MaskedVector):
        return y
    return MaskedVector(np.asarray(y, dtype=float))


@dataclass(frozen=True)
class Dataset:
    """Covariates, binary response indicator, and a partially observed outcome.

    The outcome is semantically defined only where response == 1; its mask
    must equal the response indicator.
    """

    covariates: np.ndarray
    response: np.ndarray
    outcome: MaskedVector

    def __post_init__(self):
        x = np.asarray(self.covariates, dtype=float)
        r = np.asarray(self.response)
        if x.ndim != 2:
            raise BadValue("covariates must be a 2-D matrix")
        n, p = x.shape
        if n < 1 or p < 1:
            raise BadValue("need at least one row and one covariate")
        if not np.all(np.isfinite(x)):
            raise BadValue("covariates must be finite")
        if not np.all((r == 0) | (r == 1)):
            raise BadValue("response entries must be exactly 0 or 1")
        r = r.astype(np.int64)
        if len(self.outcome) != n:
            raise BadValue("outcome length must match covariates")
        if not np.array_equal(self.outcome.mask, r == 1):
            raise InconsistentRow("outcome mask must equal the response indicator")
        x = x.copy()
        x.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "covariates", x)
        object.__setattr__(self, "response", r)

    @property
    def n(self):
        return self.covariates.shape[0]

    @property
    def p(self):
        return self.covariates.shape[1]


@dataclass(frozen=True)
class AteDataset:
    """Covariates, binary treatment, and a fully observed outcome."""

    covariates: np.ndarray
    treatment: np.ndarray
    outcome: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.covariates, dtype=float)
        a = np.asarray(self.treatment)
        y = np.asarray(self.outcome, dtype=float)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise BadValue("covariates must be a nonempty 2-D matrix")
        if not np.all(np.isfinite(x)):
            raise BadValue("covariates must be finite")
        if not np.all((a == 0) | (a == 1)):
            raise BadValue("treatment entries must be exactly 0 or 1")
        a = a.astype(np.int64)
        if y.shape != (x.shape[0],) or not np.all(np.isfinite(y)):
            raise BadValue("outcome must be a finite vector matching covariates")
        if a.sum() == 0 or a.sum() == a.size:
            raise EmptyArm("both treatment arms must be nonempty")
        x = x.copy()
        y = y.copy()
        for arr in (x, a, y):
            arr.setflags(write=False)
        object.__setattr__(self, "covariates", x)
        object.__setattr__(self, "treatment", a)
        object.__setattr__(self, "outcome", y)

    @property
    def n(self):
        return self.covariates.shape[0]

    @property
    def p(self):
        return self.covariates.shape[1]


def _read_table(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError:
        raise
    if not rows:
        raise BadValue(f"{path}: empty file")
    return rows[0], rows[1:]


def _column_index(header, name):
    try:
        return header.index(name)
    except ValueError:
        raise MissingColumn(f"column {name!r} not found in header {header}") from None


def _parse_number(token, where):
    try:
        value = float(token)
    except ValueError:
        raise BadValue(f"{where}: cannot parse {token!r} as a number") from None
    if not np.isfinite(value):
        raise BadValue(f"{where}: non-finite value {token!r}")
    return value


def _parse_binary(token, where):
    value = _parse_number(token, where)
    if value not in (0.0, 1.0):
        raise BadValue(f"{where}: expected 0 or 1, got {token!r}")
    return int(value)


def load_missing_csv(path, schema) -> Dataset:
    """Load a missing-outcome table.

    ``schema`` maps roles to column names: ``covariates`` (list of names),
    ``response``, and ``outcome``. Outcome cells may be empty or "NA" only on
    rows with response 0; a row with response 1 and an empty outcome raises
    InconsistentRow.
    """
    header, body = _read_table(path)
    cov_idx = [_column_index(header, c) for c in schema["covariates"]]
    r_idx = _column_index(header, schema["response"])
    y_idx = _column_index(header, schema["outcome"])

    cov_rows, resp, vals, mask = [], [], [], []
    for i, row in enumerate(body):
        where = f"{path}: row {i + 2}"
        if len(row) != len(header):
            raise BadValue(f"{where}: expected {len(header)} cells, got {len(row)}")
        cov_rows.append([_parse_number(row[j], where) for j in cov_idx])
        r = _parse_binary(row[r_idx], where)
        resp.append(r)
        token = row[y_idx].strip()
        if token in _MISSING_TOKENS:
            if r == 1:
                raise InconsistentRow(f"{where}: response is 1 but outcome is missing")
            vals.append(np.nan)
            mask.append(False)
        else:
            vals.append(_parse_number(token, where))
            mask.append(r == 1)
            if r == 0:
                # A value present on an unlabeled row is legal in the file but
                # masked in memory: estimators must never read it.
                vals[-1] = np.nan
    if not cov_rows:
        raise BadValue(f"{path}: no data rows")
    return Dataset(
        covariates=np.asarray(cov_rows, dtype=float),
        response=np.asarray(resp, dtype=np.int64),
        outcome=MaskedVector(vals, mask),
    )


def save_missing_csv(dataset: Dataset, path, schema) -> None:
    """Write a Dataset using the same schema convention as load_missing_csv.

    Unmasked outcome values round-trip bit-exactly (written with repr);
    masked cells are written empty.
    """
    names = list(schema["covariates"]) + [schema["response"], schema["outcome"]]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(dataset.n):
            row = [repr(v) for v in dataset.covariates[i]]
            row.append(str(int(dataset.response[i])))
            if dataset.outcome.mask[i]:
                row.append(repr(float(dataset.outcome.values[i])))
            else:
                row.append("")
            writer.writerow(row)


def load_ate_csv(path, schema, outcome_columns) -> list[AteDataset]:
    """Load a multi-outcome treatment table: one AteDataset per outcome column.

    All returned datasets share the same covariate matrix and treatment
    vector. Every named outcome column must be fully populated and numeric.
    """
    header, body = _read_table(path)
    cov_idx = [_column_index(header, c) for c in schema["covariates"]]
    a_idx = _column_index(header, schema["treatment"])
    y_idx = [_column_index(header, c) for c in outcome_columns]

    cov_rows, treat = [], []
    outs = [[] for _ in y_idx]
    for i, row in enumerate(body):
        where = f"{path}: row {i + 2}"
        if len(row) != len(header):
            raise BadValue(f"{where}: expected {len(header)} cells, got {len(row)}")
        cov_rows.append([_parse_number(row[j], where) for j in cov_idx])
        treat.append(_parse_binary(row[a_idx], where))
        for k, j in enumerate(y_idx):
            outs[k].append(_parse_number(row[j], where))
    if not cov_rows:
        raise BadValue(f"{path}: no data rows")
    x = np.asarray(cov_rows, dtype=float)
    a = np.asarray(treat, dtype=np.int64)
    if a.sum() == 0 or a.sum() == a.size:
        raise EmptyArm(f"{path}: one treatment arm is empty")
    return [
        AteDataset(covariates=x, treatment=a, outcome=np.asarray(col, dtype=float))
        for col in outs
    ]
