"""Trajectory similarity metrics and evaluation statistics.

Curves are time-ordered (lat, lon) sequences in decimal degrees; any
nested sequence or (n, 2) array works. All distances are haversine
metres on the package Earth model.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import gaussian_kde

from . import _kernels
from .geo_core import EmptyInputError, GeoPoint, haversine

__all__ = [
    "MetricSummary",
    "InsufficientDataError",
    "DegeneratePredictionError",
    "discrete_frechet",
    "point_mae",
    "point_mse",
    "prediction_distance",
    "relative_deviation",
    "density_peak",
    "completed_filter",
    "lower_median",
    "summarize",
]


class InsufficientDataError(ValueError):
    """Statistic needs more samples than were provided."""


class DegeneratePredictionError(ValueError):
    """Relative deviation is undefined for a zero-length prediction."""


class MetricSummary(NamedTuple):
    mean: float
    median: float
    density_peak: float
    count: int


def _as_curve(points, name: str) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInputError(f"{name} curve is empty")
    arr = arr.reshape(-1, 2)
    return arr


def discrete_frechet(a, b) -> float:
    """Discrete Frechet distance in metres.

    Dynamic programme over the haversine coupling matrix:
    D(i,j) = max(d(a_i, b_j), min(D(i-1,j), D(i,j-1), D(i-1,j-1))).
    Endpoints couple to endpoints, so the result is bounded below by
    both endpoint distances.
    """
    ca = _as_curve(a, "first")
    cb = _as_curve(b, "second")
    return float(_kernels.frechet_m(ca[:, 0], ca[:, 1], cb[:, 0], cb[:, 1]))


def _aligned(a, b) -> tuple[np.ndarray, np.ndarray]:
    ca = _as_curve(a, "first")
    cb = _as_curve(b, "second")
    n = min(len(ca), len(cb))
    return ca[:n], cb[:n]


def point_mae(a, b) -> float:
    """Mean haversine (metres) over index-aligned pairs up to min length."""
    ca, cb = _aligned(a, b)
    return float(np.mean(_kernels.haversine_m(ca[:, 0], ca[:, 1], cb[:, 0], cb[:, 1])))


def point_mse(a, b) -> float:
    """Mean squared haversine (metres squared) over index-aligned pairs."""
    ca, cb = _aligned(a, b)
    d = _kernels.haversine_m(ca[:, 0], ca[:, 1], cb[:, 0], cb[:, 1])
    return float(np.mean(d * d))


def prediction_distance(context, prediction) -> float:
    """Straight-line metres from the context's last point to the prediction's."""
    cc = _as_curve(context, "context")
    cp = _as_curve(prediction, "prediction")
    return haversine(GeoPoint(cc[-1, 0], cc[-1, 1]), GeoPoint(cp[-1, 0], cp[-1, 1]))


def relative_deviation(frechet_m: float, prediction_distance_m: float) -> float:
    """Frechet error as a percentage of how far the prediction reached."""
    if prediction_distance_m <= 0:
        raise DegeneratePredictionError(
            f"prediction distance must be positive, got {prediction_distance_m}"
        )
    return 100.0 * frechet_m / prediction_distance_m


def density_peak(samples) -> float:
    """Argmax of a Gaussian KDE (Silverman bandwidth) on a 512-point grid."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if len(x) < 2:
        raise InsufficientDataError(f"density peak needs >= 2 samples, got {len(x)}")
    lo = float(x.min())
    hi = float(x.max())
    if lo == hi:
        return lo
    kde = gaussian_kde(x, bw_method="silverman")
    grid = np.linspace(lo, hi, 512)
    return float(grid[int(np.argmax(kde(grid)))])


def lower_median(samples) -> float:
    """Median taking the lower middle element for even counts."""
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    if len(x) == 0:
        raise EmptyInputError("median of an empty sample set")
    return float(x[(len(x) - 1) // 2])


def completed_filter(predicted_minutes) -> np.ndarray:
    """Indices of items whose predicted minutes exceed median minus 5.

    The threshold adapts to the batch: eta = median(X) - 5, items with
    X > eta are retained (strictly greater).
    """
    x = np.asarray(predicted_minutes, dtype=np.float64).ravel()
    if len(x) == 0:
        raise EmptyInputError("completed_filter on an empty batch")
    eta = lower_median(x) - 5.0
    return np.nonzero(x > eta)[0]


def summarize(samples) -> MetricSummary:
    """Mean, lower median, KDE peak and count of a sample set."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if len(x) == 0:
        raise EmptyInputError("summarize on an empty sample set")
    peak = float(x[0]) if len(x) == 1 else density_peak(x)
    return MetricSummary(
        mean=float(np.mean(x)),
        median=lower_median(x),
        density_peak=peak,
        count=int(len(x)),
    )
