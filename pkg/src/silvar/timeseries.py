"""Autoregressive dataset construction and graph export.

A multivariate series with m rows and T time columns yields T - M samples
for an order-M autoregression: each target column is predicted from the M
previous columns stacked newest-lag-first, so the stacked input dimension
is m * M and coefficient matrices carry M square lag blocks.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .solver import Dataset


@dataclass(frozen=True)
class TimeSeries:
    """One row per series, one column per time step."""

    values: np.ndarray
    timestamps: tuple = None
    series_names: tuple = None
    coordinates: np.ndarray = None  # (m, 2) longitude/latitude rows

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 2:
            raise InvalidInputError("time series values must be 2-d")
        if values.shape[1] < 2:
            raise InvalidInputError("time series needs at least 2 time steps")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("time series values must be finite")
        if self.series_names is not None:
            names = tuple(str(s) for s in self.series_names)
            object.__setattr__(self, "series_names", names)
            if len(names) != values.shape[0]:
                raise InvalidInputError(
                    f"{len(names)} series names for {values.shape[0]} series"
                )
        if self.timestamps is not None:
            stamps = tuple(self.timestamps)
            object.__setattr__(self, "timestamps", stamps)
            if len(stamps) != values.shape[1]:
                raise InvalidInputError(
                    f"{len(stamps)} timestamps for {values.shape[1]} time steps"
                )
        if self.coordinates is not None:
            coords = np.asarray(self.coordinates, dtype=float)
            object.__setattr__(self, "coordinates", coords)
            if coords.shape != (values.shape[0], 2):
                raise InvalidInputError(
                    f"coordinates must be ({values.shape[0]}, 2), got {coords.shape}"
                )

    @property
    def m(self):
        return self.values.shape[0]

    @property
    def T(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class GraphExport:
    """Weighted directed edges (source, target, weight) where the weight is
    the l2 norm of the per-edge lag-coefficient block.  Self-loops are
    allowed.  ``density`` is the realized fraction of nonzero entries."""

    edges: tuple
    coordinates: dict = None
    density: float = 0.0


def build_ar_dataset(series, lag_count):
    """Stack an order-M autoregression into a regression Dataset.

    Sample i predicts column M+i of the series from the stack of columns
    (M+i-1, M+i-2, ..., i): newest lag first, so the lag-1 block occupies
    the first m feature rows.
    """
    if lag_count < 1:
        raise InvalidInputError("lag_count must be positive")
    V = series.values
    m, T = V.shape
    if T <= lag_count:
        raise InvalidInputError(
            f"need more time steps than lags: T={T}, lags={lag_count}"
        )
    n = T - lag_count
    X = np.vstack([V[:, lag_count - 1 - l : T - 1 - l] for l in range(lag_count)])
    Y = V[:, lag_count:]
    names = series.series_names
    feature_names = None
    if names is not None:
        feature_names = tuple(
            f"{s}(t-{l + 1})" for l in range(lag_count) for s in names
        )
    return Dataset(X.copy(), Y.copy(), feature_names=feature_names, response_names=names)


def group_norm_matrix(model):
    """m x m matrix of l2 norms of the per-entry lag blocks of A."""
    m = model.m
    p = model.p
    if p != m:
        raise InvalidInputError(
            f"per-lag blocks must be square for a graph: m={m}, per-lag p={p}"
        )
    blocks = model.A.reshape(m, model.lag_count, p)
    return np.sqrt((blocks * blocks).sum(axis=1))


def to_graph(model, target_density, series_names=None, coordinates=None):
    """Threshold the group-norm matrix to a fixed edge density.

    Keeps the ceil(target_density * m^2) largest norms (ties broken by
    (row, column) lexicographic order), dropping exact zeros, and labels
    nodes by the given names or 1-based indices.
    """
    if not (0.0 < target_density <= 1.0):
        raise InvalidInputError(f"target density must lie in (0, 1], got {target_density}")
    W = group_norm_matrix(model)
    m = W.shape[0]
    if series_names is not None and len(series_names) != m:
        raise InvalidInputError(f"{len(series_names)} names for {m} series")
    keep = math.ceil(target_density * m * m)
    flat = W.ravel()
    rows, cols = np.divmod(np.arange(flat.size), m)
    order = np.lexsort((cols, rows, -flat))
    chosen = order[:keep]
    chosen = chosen[flat[chosen] > 0.0]

    def label(i):
        return series_names[i] if series_names is not None else i + 1

    edges = tuple(
        (label(rows[idx]), label(cols[idx]), float(flat[idx])) for idx in chosen
    )
    coord_map = None
    if coordinates is not None:
        coords = np.asarray(coordinates, dtype=float)
        if coords.shape != (m, 2):
            raise InvalidInputError(f"coordinates must be ({m}, 2), got {coords.shape}")
        coord_map = {label(i): (float(coords[i, 0]), float(coords[i, 1])) for i in range(m)}
    return GraphExport(edges=edges, coordinates=coord_map, density=len(edges) / (m * m))
