"""Dataset container, CSV ingestion and standardization.

Predictors are standardized to mean zero and unit population variance
(divide by n, not n-1); fits happen on the standardized scale, and the
stored column means and scales translate coefficients back.
"""

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateScaleError, IngestionError

CONTINUOUS = "continuous"
BINARY = "binary"


def standardize(X):
    """Center and scale columns; returns (X_std, means, scales).

    Scales are population standard deviations.  A column with zero spread
    cannot be standardized and raises.
    """
    X = np.asarray(X, dtype=float)
    means = X.mean(axis=0)
    scales = np.sqrt(((X - means) ** 2).mean(axis=0))
    if np.any(scales == 0.0):
        j = int(np.flatnonzero(scales == 0.0)[0])
        raise DegenerateScaleError(f"column {j} is constant; cannot standardize")
    return (X - means) / scales, means, scales


@dataclass
class Dataset:
    """Standardized design matrix with enough context to undo the scaling."""

    X: np.ndarray
    y: np.ndarray
    means: np.ndarray
    scales: np.ndarray
    intercept: bool = True
    response_kind: str = CONTINUOUS
    column_names: list = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2 or self.y.ndim != 1 or self.X.shape[0] != self.y.size:
            raise IngestionError("X must be (n, p) and y length n")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise IngestionError("non-finite values in data")
        if self.response_kind == BINARY and not np.all(np.abs(self.y) == 1.0):
            raise IngestionError("binary response must be coded +-1")
        if not self.column_names:
            self.column_names = [f"x{j + 1}" for j in range(self.X.shape[1])]

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def raw_X(self):
        return self.X * self.scales + self.means

    def with_response(self, y):
        """Same design, different response; used for refits on adjusted data."""
        return replace(self, y=np.asarray(y, dtype=float))

    def subset(self, rows):
        """Re-standardized dataset of the selected rows."""
        rows = np.asarray(rows)
        return make_dataset(
            self.raw_X[rows],
            self.y[rows],
            intercept=self.intercept,
            response_kind=self.response_kind,
            column_names=list(self.column_names),
        )


def make_dataset(X_raw, y, intercept=True, response_kind=CONTINUOUS, column_names=None):
    """Standardize a raw design matrix and wrap it as a Dataset."""
    Xs, means, scales = standardize(X_raw)
    return Dataset(
        Xs,
        np.asarray(y, dtype=float),
        means,
        scales,
        intercept=intercept,
        response_kind=response_kind,
        column_names=list(column_names) if column_names else [],
    )


def raw_coefficients(dataset, beta, intercept):
    """Map standardized-scale coefficients to the raw predictor scale."""
    beta = np.asarray(beta, dtype=float)
    beta_raw = beta / dataset.scales
    intercept_raw = float(intercept) - float(np.dot(beta_raw, dataset.means))
    return beta_raw, intercept_raw


def load_csv(path, response_column, label_mode=None, intercept=True):
    """Read a strictly numeric CSV with a header row into a Dataset.

    Arguments
    ---------
    path : str or Path
        File to read.
    response_column : str
        Header name of the response.
    label_mode : {None, "01", "pm1"}
        None treats the response as continuous.  "01" maps {0, 1} labels to
        -+1; "pm1" requires labels already coded +-1.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise IngestionError(f"{path}: empty file") from None
            header = [h.strip() for h in header]
            rows = list(reader)
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc

    if response_column not in header:
        raise IngestionError(
            f"{path}: response column {response_column!r} not in header {header}"
        )
    if len(set(header)) != len(header):
        raise IngestionError(f"{path}: duplicate column names in header")
    if not rows:
        raise IngestionError(f"{path}: no data rows")

    ncol = len(header)
    values = np.empty((len(rows), ncol))
    for i, row in enumerate(rows):
        if len(row) != ncol:
            raise IngestionError(f"{path}: row {i + 2} has {len(row)} fields, expected {ncol}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                raise IngestionError(
                    f"{path}: missing value at row {i + 2}, column {header[j]!r}"
                )
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise IngestionError(
                    f"{path}: non-numeric value {cell!r} at row {i + 2}, "
                    f"column {header[j]!r}"
                ) from None
    if not np.all(np.isfinite(values)):
        i, j = np.argwhere(~np.isfinite(values))[0]
        raise IngestionError(
            f"{path}: non-finite value at row {i + 2}, column {header[j]!r}"
        )

    yidx = header.index(response_column)
    y = values[:, yidx]
    X = np.delete(values, yidx, axis=1)
    names = [h for k, h in enumerate(header) if k != yidx]

    for j in range(X.shape[1]):
        if np.all(X[:, j] == X[0, j]):
            raise IngestionError(f"{path}: column {names[j]!r} is constant")

    response_kind = CONTINUOUS
    if label_mode is not None:
        levels = set(np.unique(y))
        if label_mode == "01":
            if not levels <= {0.0, 1.0}:
                raise IngestionError(
                    f"{path}: labels must be 0/1 under --labels 01, got {sorted(levels)}"
                )
            y = 2.0 * y - 1.0
        elif label_mode == "pm1":
            if not levels <= {-1.0, 1.0}:
                raise IngestionError(
                    f"{path}: labels must be +-1 under --labels pm1, got {sorted(levels)}"
                )
        else:
            raise IngestionError(f"unknown label mode {label_mode!r}")
        response_kind = BINARY

    return make_dataset(
        X, y, intercept=intercept, response_kind=response_kind, column_names=names
    )


def write_csv(path, dataset, response_name="y"):
    """Write the raw-scale data back out; load_csv then round-trips it."""
    Xr = dataset.raw_X
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.column_names) + [response_name])
        for i in range(dataset.n):
            writer.writerow([repr(float(v)) for v in Xr[i]] + [repr(float(dataset.y[i]))])
