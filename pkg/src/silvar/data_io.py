"""Ingestion and persistence.

Regression matrices are stored column-per-sample: a CSV row is a variable
(feature or response), a CSV column is a sample.  This is the transpose of
the common tabular convention but matches the m x n / p x n orientation
used throughout the package.  Time-series CSVs are the other way around:
one header row of series names, then one row per time step.

All numeric output is written with ``repr`` (shortest round-trip, locale
independent), so write/read cycles are lossless at double precision.
"""

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import FixedLink
from .errors import InvalidInputError
from .link import LinkFunction
from .solver import Dataset, SilvarModel, Standardization
from .timeseries import TimeSeries


def _fmt(v):
    return repr(float(v))


@dataclass(frozen=True)
class CountDataset(Dataset):
    """Dataset whose entries are validated as non-negative integers
    (stored as reals)."""

    def __post_init__(self):
        super().__post_init__()
        for name, M in (("X", self.X), ("Y", self.Y)):
            if np.any(M < 0) or np.any(M != np.floor(M)):
                raise InvalidInputError(
                    f"count data requires non-negative integer entries in {name}"
                )


def _read_rows(path):
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"file not found: {path}")
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def _parse_cell(cell, file_row, col, path):
    try:
        return float(cell)
    except ValueError:
        raise InvalidInputError(
            f"non-numeric cell at row {file_row}, column {col + 1} of {path}: {cell!r}"
        ) from None


def read_timeseries_csv(path):
    """Read a time-series CSV: header of series names, one row per step.

    A sibling ``<stem>.json`` file, when present, supplies per-series
    coordinates as {"coordinates": {name: [lon, lat], ...}}.
    """
    rows = _read_rows(path)
    if not rows:
        raise InvalidInputError(f"empty CSV: {path}")
    names = tuple(s.strip() for s in rows[0])
    m = len(names)
    if m == 0:
        raise InvalidInputError(f"no series columns in {path}")
    data_rows = rows[1:]
    if len(data_rows) < 2:
        raise InvalidInputError(f"fewer than 2 time steps in {path}")
    values = np.empty((m, len(data_rows)))
    for r, row in enumerate(data_rows):
        if len(row) != m:
            raise InvalidInputError(
                f"ragged row {r + 2} in {path}: expected {m} cells, got {len(row)}"
            )
        for c, cell in enumerate(row):
            values[c, r] = _parse_cell(cell, r + 2, c, path)

    coordinates = None
    sidecar = Path(path).with_suffix(".json")
    if sidecar.exists():
        with open(sidecar) as fh:
            payload = json.load(fh)
        table = payload.get("coordinates", {})
        coords = np.empty((m, 2))
        for i, name in enumerate(names):
            if name not in table:
                raise InvalidInputError(
                    f"{sidecar} has no coordinates for series {name!r}"
                )
            lon, lat = table[name]
            coords[i] = (float(lon), float(lat))
        coordinates = coords
    return TimeSeries(values, series_names=names, coordinates=coordinates)


def read_matrix_csv(path):
    """Read a headerless numeric CSV as a 2-d array (rows = variables)."""
    rows = _read_rows(path)
    if not rows:
        raise InvalidInputError(f"empty CSV: {path}")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for r, row in enumerate(rows):
        if len(row) != width:
            raise InvalidInputError(
                f"ragged row {r + 1} in {path}: expected {width} cells, got {len(row)}"
            )
        for c, cell in enumerate(row):
            out[r, c] = _parse_cell(cell, r + 1, c, path)
    return out


def write_matrix_csv(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="") as fh:
        for row in M:
            fh.write(",".join(_fmt(v) for v in row))
            fh.write("\n")


def read_regression_csv(x_path, y_path, count=False):
    """Read paired X/Y regression CSVs (rows = variables, columns =
    samples); ``count=True`` additionally validates non-negative integer
    entries and returns a CountDataset."""
    X = read_matrix_csv(x_path)
    Y = read_matrix_csv(y_path)
    if X.shape[1] != Y.shape[1]:
        raise InvalidInputError(
            f"sample-count mismatch: {x_path} has {X.shape[1]} columns, "
            f"{y_path} has {Y.shape[1]}"
        )
    cls = CountDataset if count else Dataset
    return cls(X, Y)


def _link_to_dict(link):
    return link.to_dict()


def _link_from_dict(payload):
    if not isinstance(payload, dict):
        raise InvalidInputError("model JSON field 'link' must be an object")
    if "fixed" in payload:
        return FixedLink.from_dict(payload)
    return LinkFunction.from_dict(payload)


def write_model(path, model):
    """Serialize a model to JSON, lossless at double precision."""
    payload = {
        "m": model.m,
        "p": model.p,
        "lags": model.lag_count,
        "A": [[float(v) for v in row] for row in model.A],
        "L": [[float(v) for v in row] for row in model.L],
        "link": _link_to_dict(model.link),
        "standardization": {
            "mean": [float(v) for v in model.standardization.mean]
            if model.standardization is not None
            else [0.0] * model.p_total,
            "scale": [float(v) for v in model.standardization.scale]
            if model.standardization is not None
            else [1.0] * model.p_total,
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def read_model(path):
    """Read and fully validate a model JSON (shapes, link invariants,
    standardization)."""
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"file not found: {path}")
    with open(path) as fh:
        payload = json.load(fh)
    missing = {"m", "p", "lags", "A", "L", "link", "standardization"} - set(payload)
    if missing:
        raise InvalidInputError(f"model JSON missing keys: {sorted(missing)}")
    m = int(payload["m"])
    p = int(payload["p"])
    lags = int(payload["lags"])
    A = np.asarray(payload["A"], dtype=float)
    L = np.asarray(payload["L"], dtype=float)
    if A.ndim != 2 or A.shape != L.shape:
        raise InvalidInputError(f"A shape {A.shape} and L shape {L.shape} must match")
    if A.shape != (m, p * lags):
        raise InvalidInputError(
            f"declared shape {m}x{p}x{lags} lags does not match A shape {A.shape}"
        )
    std = payload["standardization"]
    standardization = Standardization(
        np.asarray(std["mean"], dtype=float), np.asarray(std["scale"], dtype=float)
    )
    if standardization.mean.shape[0] != p * lags:
        raise InvalidInputError(
            f"standardization length {standardization.mean.shape[0]} does not match "
            f"{p * lags} coefficient columns"
        )
    link = _link_from_dict(payload["link"])
    return SilvarModel(
        link=link, A=A, L=L, lag_count=lags, standardization=standardization
    )


def write_report_json(path, report):
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh)
        fh.write("\n")


def write_graph_csv(path, export):
    """Edge list CSV (source,target,weight); node coordinates, when known,
    go to a sibling ``<stem>.json``."""
    with open(path, "w", newline="") as fh:
        fh.write("source,target,weight\n")
        for source, target, weight in export.edges:
            fh.write(f"{source},{target},{_fmt(weight)}\n")
    if export.coordinates is not None:
        sidecar = Path(path).with_suffix(".json")
        with open(sidecar, "w") as fh:
            json.dump(
                {"coordinates": {str(k): [v[0], v[1]] for k, v in export.coordinates.items()}},
                fh,
            )
            fh.write("\n")


def write_score_table_csv(path, table):
    with open(path, "w", newline="") as fh:
        fh.write("lambda_sparse,lambda_lowrank,val_rmse,test_rmse,iters,converged\n")
        for cell in table:
            test = "" if math.isnan(cell.test_rmse) else _fmt(cell.test_rmse)
            fh.write(
                f"{_fmt(cell.lambda_sparse)},{_fmt(cell.lambda_lowrank)},"
                f"{_fmt(cell.val_rmse)},{test},{cell.iterations},"
                f"{'true' if cell.converged else 'false'}\n"
            )


def read_link_json(path):
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"file not found: {path}")
    with open(path) as fh:
        return _link_from_dict(json.load(fh))


def write_link_json(path, link):
    with open(path, "w") as fh:
        json.dump(_link_to_dict(link), fh)
        fh.write("\n")
