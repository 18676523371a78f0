"""Error metrics and diagnostic extracts.

Model quality is reported three ways: squared relative Frobenius errors
per variable (split into training and prediction horizons), distributions
of pointwise relative errors over binned magnitudes, and one-dimensional
profiles along a probe of spatial points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SnapshotSet

__all__ = [
    "ErrorReport",
    "BinReport",
    "LineProbe",
    "squared_l2_relative_error",
    "relative_error_curve",
    "error_report",
    "pointwise_error_bins",
    "line_probe",
]

DEFAULT_THRESHOLDS = (0.05, 0.10, 0.20)


@dataclass(frozen=True)
class ErrorReport:
    """Squared relative errors per variable over both horizons."""

    variables: tuple[str, ...]
    training: tuple[float, ...]
    prediction: tuple[float | None, ...]
    horizon_split: int

    def __post_init__(self):
        for err in self.training + self.prediction:
            if err is not None and err < 0.0:
                raise ValueError("errors must be nonnegative")


@dataclass(frozen=True)
class BinReport:
    """Fractions of spatial DOFs per relative-error bin, per time instant.

    With thresholds (t1 < t2 < ... < tB) the bins are [0, t1], (t1, t2],
    ..., (tB, inf): upper edges closed, B+1 bins in total.
    """

    thresholds: tuple[float, ...]
    times: np.ndarray
    fractions: np.ndarray  # (n_t, len(thresholds) + 1)

    def __post_init__(self):
        fr = np.asarray(self.fractions, dtype=np.float64)
        if fr.ndim != 2 or fr.shape[1] != len(self.thresholds) + 1:
            raise ValueError("need one fraction column per bin")
        if np.abs(fr.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValueError("per-instant fractions must sum to 1")


@dataclass(frozen=True)
class LineProbe:
    """Field values along an ordered list of points, one column per instant."""

    coordinate: np.ndarray
    values: np.ndarray  # (|probe|, n_t)
    times: np.ndarray


def _check_pair(ref: SnapshotSet, approx: SnapshotSet):
    if ref.data.shape != approx.data.shape or ref.layout.n_s != approx.layout.n_s:
        raise ValueError("reference and approximation dimensions do not match")


def _columns_slice(columns, n_t: int) -> slice:
    if columns is None:
        return slice(0, n_t)
    if isinstance(columns, slice):
        return columns
    lo, hi = columns
    return slice(int(lo), int(hi))


def squared_l2_relative_error(
    ref: SnapshotSet, approx: SnapshotSet, variable: int = 0, columns=None
) -> float:
    """||ref - approx||_F^2 / ||ref||_F^2 over one variable's block,
    restricted to a column range given as ``(start, stop)`` or a slice."""
    _check_pair(ref, approx)
    cols = _columns_slice(columns, ref.n_t)
    r = ref.variable_block(variable)[:, cols]
    a = approx.variable_block(variable)[:, cols]
    denom = float(np.sum(r * r))
    if denom == 0.0:
        raise ValueError("reference block is identically zero on the range")
    diff = r - a
    return float(np.sum(diff * diff) / denom)


def relative_error_curve(
    ref: SnapshotSet, approx: SnapshotSet, variable: int = 0
) -> np.ndarray:
    """Per-instant squared relative errors: one Frobenius ratio per column."""
    _check_pair(ref, approx)
    r = ref.variable_block(variable)
    a = approx.variable_block(variable)
    denom = np.sum(r * r, axis=0)
    if np.any(denom == 0.0):
        raise ValueError("reference block has an identically zero column")
    diff = r - a
    return np.sum(diff * diff, axis=0) / denom


def error_report(ref: SnapshotSet, approx: SnapshotSet) -> ErrorReport:
    """Training and prediction errors for every variable.

    The split follows the reference set's training column count; the
    prediction entry is None when there is no prediction horizon.
    """
    _check_pair(ref, approx)
    m = ref.time.n_train
    training, prediction = [], []
    for v in range(ref.layout.n_s):
        training.append(squared_l2_relative_error(ref, approx, v, (0, m)))
        if m < ref.n_t:
            prediction.append(
                squared_l2_relative_error(ref, approx, v, (m, ref.n_t))
            )
        else:
            prediction.append(None)
    return ErrorReport(
        variables=ref.layout.variable_names,
        training=tuple(training),
        prediction=tuple(prediction),
        horizon_split=m,
    )


def pointwise_error_bins(
    ref: SnapshotSet,
    approx: SnapshotSet,
    variable: int = 0,
    thresholds=DEFAULT_THRESHOLDS,
    floor: float | None = None,
) -> BinReport:
    """Distribution of pointwise relative errors over time.

    Per instant and spatial DOF, the relative error is
    |approx - ref| / max(|ref|, floor); the report holds the fraction of
    DOFs in each threshold bin (upper edges closed).  The default floor is
    1e-12 times the largest reference magnitude, guarding near-zero
    denominators.
    """
    _check_pair(ref, approx)
    thresholds = tuple(float(t) for t in thresholds)
    if not thresholds or any(t <= 0 for t in thresholds):
        raise ValueError("thresholds must be positive")
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly increasing")
    if floor is None:
        floor = 1e-12 * float(np.abs(ref.data).max())
    if floor <= 0.0:
        floor = np.finfo(np.float64).tiny
    r = ref.variable_block(variable)
    a = approx.variable_block(variable)
    rel = np.abs(a - r) / np.maximum(np.abs(r), floor)
    # side="left" puts values equal to a threshold into the bin below it,
    # which closes every bin's upper edge
    bins = np.searchsorted(thresholds, rel, side="left")
    n_bins = len(thresholds) + 1
    n_x = r.shape[0]
    fractions = np.empty((ref.n_t, n_bins))
    for kcol in range(ref.n_t):
        fractions[kcol] = np.bincount(bins[:, kcol], minlength=n_bins) / n_x
    return BinReport(
        thresholds=thresholds, times=ref.time.timestamps, fractions=fractions
    )


def line_probe(sset: SnapshotSet, variable: int, probe) -> LineProbe:
    """Values along an ordered list of point indices, with the probe's own
    coordinate axis attached (angles for annular geometries, else the
    first coordinate)."""
    probe = np.asarray(probe)
    if probe.ndim != 1 or probe.size < 1:
        raise ValueError("probe must be a non-empty 1-D list of point indices")
    if not np.issubdtype(probe.dtype, np.integer):
        raise ValueError("probe indices must be integers")
    if np.any(probe < 0) or np.any(probe >= sset.layout.n_x):
        raise ValueError("probe index out of range")
    block = sset.variable_block(variable)
    geom = sset.geometry
    coord = (geom.angular if geom.angular is not None else geom.coords[:, 0])[probe]
    return LineProbe(
        coordinate=coord, values=block[probe], times=sset.time.timestamps
    )
