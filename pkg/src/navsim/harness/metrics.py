"""Trajectory-error metrics.

Both paths are resampled by arc length at 1 cm. rmse and max_dev compare
arc-length-corresponding points (equal fractions along each path), so a
rigid translation of a path scores exactly the translation distance.
nearest_rmse / nearest_max are the directed nearest-point statistics,
reported symmetrically as the max of both directions; their fast path is a
KD-tree and they are oracle-checked against a brute-force O(n^2) scan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .trajectory import TrajectoryLog

SAMPLE_SPACING = 0.01  # meters


class DegenerateLog(ValueError):
    pass


@dataclass(frozen=True)
class PathErrorMetrics:
    rmse: float
    max_dev: float
    endpoint: float
    nearest_rmse: float
    nearest_max: float

    def to_items(self):
        return [("rmse", self.rmse), ("max_dev", self.max_dev),
                ("endpoint", self.endpoint), ("nearest_rmse", self.nearest_rmse),
                ("nearest_max", self.nearest_max)]


def _as_xy(log) -> np.ndarray:
    if isinstance(log, TrajectoryLog):
        xy = log.xy()
    else:
        xy = np.asarray(log, dtype=float)
    if xy.ndim != 2 or xy.shape[1] != 2 or len(xy) < 2:
        raise DegenerateLog("trajectory must contain at least two 2D points")
    return xy


def _arclength(xy: np.ndarray) -> np.ndarray:
    steps = np.hypot(*np.diff(xy, axis=0).T)
    return np.concatenate([[0.0], np.cumsum(steps)])


def resample_by_arclength(xy: np.ndarray, count: int) -> np.ndarray:
    """`count` points at uniform arc-length fractions along the polyline."""
    s = _arclength(xy)
    total = s[-1]
    if total <= 0:
        return np.repeat(xy[:1], count, axis=0)
    targets = np.linspace(0.0, total, count)
    return np.column_stack([np.interp(targets, s, xy[:, 0]),
                            np.interp(targets, s, xy[:, 1])])


def _point_count(xy: np.ndarray, spacing: float) -> int:
    return max(2, int(np.ceil(_arclength(xy)[-1] / spacing)) + 1)


def nearest_distances(points: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Distance from each point to its nearest reference point (KD-tree)."""
    distances, _ = cKDTree(reference).query(points)
    return distances


def nearest_distances_bruteforce(points: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """O(n^2) oracle for nearest_distances; kept independent on purpose."""
    out = np.empty(len(points))
    for i, p in enumerate(points):
        out[i] = np.sqrt(np.min(np.sum((reference - p) ** 2, axis=1)))
    return out


def compute_path_error(a, b, spacing: float = SAMPLE_SPACING) -> PathErrorMetrics:
    """Error metrics between two trajectories (TrajectoryLog or (n,2) arrays)."""
    xa, xb = _as_xy(a), _as_xy(b)
    count = max(_point_count(xa, spacing), _point_count(xb, spacing))
    ra = resample_by_arclength(xa, count)
    rb = resample_by_arclength(xb, count)
    d = np.hypot(*(ra - rb).T)
    rmse = float(np.sqrt(np.mean(d ** 2)))
    max_dev = float(np.max(d))
    endpoint = float(np.hypot(*(xa[-1] - xb[-1])))

    pa = resample_by_arclength(xa, _point_count(xa, spacing))
    pb = resample_by_arclength(xb, _point_count(xb, spacing))
    d_ab = nearest_distances(pa, pb)
    d_ba = nearest_distances(pb, pa)
    nearest_rmse = max(float(np.sqrt(np.mean(d_ab ** 2))),
                       float(np.sqrt(np.mean(d_ba ** 2))))
    nearest_max = max(float(np.max(d_ab)), float(np.max(d_ba)))
    return PathErrorMetrics(rmse, max_dev, endpoint, nearest_rmse, nearest_max)


def write_metrics(path, metrics: PathErrorMetrics | dict) -> None:
    """Flat key=value file."""
    items = metrics.to_items() if isinstance(metrics, PathErrorMetrics) else metrics.items()
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in items:
            fh.write(f"{key}={value}\n")
