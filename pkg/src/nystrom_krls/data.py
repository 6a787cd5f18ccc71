"""CSV ingestion and train/test datasets."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass
class Dataset:
    """Training part, optional fixed test part, and standardization statistics.

    When standardized, ``mean``/``std`` were estimated on the training part
    and already applied to both ``X`` and ``X_test``.
    """

    X: np.ndarray
    y: np.ndarray
    X_test: np.ndarray = None
    y_test: np.ndarray = None
    mean: np.ndarray = None
    std: np.ndarray = None

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]


def ingest_csv(path, target_column=-1, delimiter=",", header=False):
    """Read a numeric CSV into ``(X, y)``.

    Blank lines and lines starting with ``#`` are skipped. Errors carry the
    1-based line number.
    """
    rows = []
    width = None
    try:
        f = open(path, newline="")
    except OSError as e:
        raise DataError(f"cannot read file: {e.strerror}", path) from None
    with f:
        skipped_header = not header
        for lineno, line in enumerate(f, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if not skipped_header:
                skipped_header = True
                continue
            fields = next(csv.reader([text], delimiter=delimiter))
            if width is None:
                width = len(fields)
                if width < 2:
                    raise DataError("need at least one feature column and a target column", path, lineno)
                col = target_column if target_column >= 0 else width + target_column
                if not 0 <= col < width:
                    raise DataError(f"target column {target_column} out of range for {width} columns",
                                    path, lineno)
            elif len(fields) != width:
                raise DataError(f"ragged row: expected {width} fields, got {len(fields)}", path, lineno)
            try:
                vals = [float(v) for v in fields]
            except ValueError:
                bad = next(i for i, v in enumerate(fields) if not _is_float(v))
                what = "target" if bad == col else f"column {bad}"
                raise DataError(f"non-numeric {what}: {fields[bad]!r}", path, lineno) from None
            if not all(np.isfinite(vals)):
                raise DataError("NaN or Inf value", path, lineno)
            rows.append(vals)
    if not rows:
        raise DataError("file contains no data rows", path)
    a = np.array(rows)
    y = a[:, col].copy()
    X = np.delete(a, col, axis=1)
    return np.ascontiguousarray(X), y


def _is_float(v):
    try:
        float(v)
        return True
    except ValueError:
        return False


def write_csv(path, X, y, delimiter=","):
    """Write features followed by the target as the last column, 17 significant digits."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f, delimiter=delimiter)
        for row, target in zip(np.asarray(X), np.asarray(y)):
            w.writerow([format(float(v), ".17g") for v in row] + [format(float(target), ".17g")])


def standardize(X, X_test=None):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    Xs = (X - mean) / std
    Xt = None if X_test is None else (X_test - mean) / std
    return Xs, Xt, mean, std


def load_dataset(train, test=None, target_column=-1, delimiter=",", header=False, standardized=True):
    X, y = ingest_csv(train, target_column, delimiter, header)
    X_test = y_test = None
    if test is not None:
        X_test, y_test = ingest_csv(test, target_column, delimiter, header)
        if X_test.shape[1] != X.shape[1]:
            raise DataError(f"test file has {X_test.shape[1]} features, training file {X.shape[1]}", test)
    mean = std = None
    if standardized:
        X, X_test, mean, std = standardize(X, X_test)
    return Dataset(X, y, X_test, y_test, mean, std)
