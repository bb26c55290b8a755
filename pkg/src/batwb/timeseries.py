"""Column-oriented time series with a deterministic CSV form."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import DataError


class TimeSeries:
    """Named equal-length 1-D columns; ``t`` is required."""

    def __init__(self, columns: dict):
        cols = {}
        n = None
        for k, v in columns.items():
            a = np.asarray(v)
            if a.ndim != 1:
                raise DataError(f"column {k!r} must be 1-D")
            if n is None:
                n = a.size
            elif a.size != n:
                raise DataError(f"column {k!r} has length {a.size}, expected {n}")
            cols[k] = a
        if "t" not in cols:
            raise DataError("time series needs a 't' column")
        self.columns = cols

    def __len__(self):
        return int(self.columns["t"].size)

    def __contains__(self, key):
        return key in self.columns

    def __getitem__(self, key):
        try:
            return self.columns[key]
        except KeyError:
            raise DataError(f"no column {key!r}") from None

    def __getattr__(self, name):
        cols = self.__dict__.get("columns")
        if cols is not None and name in cols:
            return cols[name]
        raise AttributeError(name)

    @property
    def names(self):
        return list(self.columns)

    def slice(self, start: int, stop: int) -> "TimeSeries":
        return TimeSeries({k: v[start:stop] for k, v in self.columns.items()})

    def to_csv(self, path, columns=None):
        names = list(columns) if columns is not None else self.names
        arrays = [self.columns[k] for k in names]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            for row in zip(*arrays):
                w.writerow([_fmt(v) for v in row])

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        path = Path(path)
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        if not rows:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in rows[0]]
        try:
            data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None
        if data.size == 0:
            data = data.reshape(0, len(header))
        if data.shape[1] != len(header):
            raise DataError(f"{path}: row width does not match header")
        return cls({h: data[:, i] for i, h in enumerate(header)})


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))
