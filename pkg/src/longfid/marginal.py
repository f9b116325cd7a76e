"""Marginal-structure metrics: smoothed mean, quantile, and class profiles.

Profiles are computed separately for each dataset with that dataset's own
observation times and then compared pointwise on the shared grid.  Every
profile carries an effective-sample-size series ``ESS(t) = 1 / sum(w^2)``
so downstream reporting can flag grid regions with little nearby data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data_model import LongDataset, MeasurementMatrix, TimeGrid, dropout_points
from .errors import DataError
from .kernel import (
    DEFAULT_QUANTILE_LEVELS,
    batch_weighted_quantiles,
    effective_sample_size,
    weight_matrix,
)

#: Grid points with ESS below this are flagged as low-support in reports.
LOW_SUPPORT_ESS = 5.0


@dataclass(frozen=True, eq=False)
class ProfileSeries:
    """A grid-indexed series of metric values.

    ``values`` is ``(n_grid,)`` for scalar profiles (mean, variance, density)
    or ``(n_grid, k)`` for vector profiles, in which case ``columns`` names
    the ``k`` components (quantile levels or class labels).
    """

    grid: TimeGrid
    values: np.ndarray
    label: str
    params: dict = field(default_factory=dict)
    columns: tuple[str, ...] | None = None
    ess: np.ndarray | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape[0] != self.grid.n_points:
            raise DataError(
                f"profile {self.label!r}: {values.shape[0]} values for "
                f"{self.grid.n_points} grid points"
            )
        if values.ndim == 2 and self.columns is not None:
            if len(self.columns) != values.shape[1]:
                raise DataError(f"profile {self.label!r}: column names do not match")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.ess is not None:
            ess = np.asarray(self.ess, dtype=np.float64)
            ess.flags.writeable = False
            object.__setattr__(self, "ess", ess)

    def low_support(self) -> np.ndarray:
        """Boolean mask of grid points with ESS below the reporting threshold."""
        if self.ess is None:
            return np.zeros(self.grid.n_points, dtype=bool)
        return self.ess < LOW_SUPPORT_ESS


def _continuous_view(dataset: LongDataset, variable_id: str):
    spec = dataset.spec(variable_id)
    if not spec.is_continuous:
        raise DataError(f"variable {variable_id!r} is discrete; expected continuous")
    view = dataset.variable_view(variable_id)
    if view.times.size == 0:
        raise DataError(f"no data for variable {variable_id!r}")
    return view


def _discrete_view(dataset: LongDataset, variable_id: str):
    spec = dataset.spec(variable_id)
    if not spec.is_discrete:
        raise DataError(f"variable {variable_id!r} is continuous; expected discrete")
    view = dataset.variable_view(variable_id)
    if view.times.size == 0:
        raise DataError(f"no data for variable {variable_id!r}")
    return spec, view


def mean_profile(
    dataset: LongDataset, variable_id: str, grid: TimeGrid, h: float
) -> ProfileSeries:
    """Kernel-smoothed mean of a continuous variable on the grid."""
    view = _continuous_view(dataset, variable_id)
    weights = weight_matrix(grid.points, view.times, h)
    values = weights @ view.values
    return ProfileSeries(
        grid=grid,
        values=values,
        label="mean",
        params={"bandwidth": float(h)},
        ess=effective_sample_size(weights),
    )


def quantile_profile(
    dataset: LongDataset,
    variable_id: str,
    grid: TimeGrid,
    h: float,
    q_levels=DEFAULT_QUANTILE_LEVELS,
) -> ProfileSeries:
    """Kernel-smoothed quantile curves, one column per level, never crossing."""
    view = _continuous_view(dataset, variable_id)
    q_levels = tuple(float(q) for q in q_levels)
    weights = weight_matrix(grid.points, view.times, h)
    values = batch_weighted_quantiles(view.values, weights, q_levels)
    return ProfileSeries(
        grid=grid,
        values=values,
        label="quantiles",
        params={"bandwidth": float(h), "q_levels": list(q_levels)},
        columns=tuple(f"q{q:g}" for q in q_levels),
        ess=effective_sample_size(weights),
    )


def class_profile(
    dataset: LongDataset, variable_id: str, grid: TimeGrid, h: float
) -> ProfileSeries:
    """Kernel-smoothed class proportions of a discrete variable.

    Classes in the spec but absent from this dataset get identically-zero
    curves, so profiles from both sides of a pair share the same columns.
    """
    spec, view = _discrete_view(dataset, variable_id)
    weights = weight_matrix(grid.points, view.times, h)
    labels = np.asarray([str(v) for v in view.values], dtype=object)
    unknown = set(labels) - set(spec.classes)
    if unknown:
        raise DataError(
            f"variable {variable_id!r}: labels {sorted(unknown)} not in class set"
        )
    onehot = np.empty((len(labels), len(spec.classes)), dtype=np.float64)
    for li, label in enumerate(spec.classes):
        onehot[:, li] = labels == label
    values = weights @ onehot
    return ProfileSeries(
        grid=grid,
        values=values,
        label="class_proportions",
        params={"bandwidth": float(h)},
        columns=spec.classes,
        ess=effective_sample_size(weights),
    )


def outlier_overlay(
    dataset: LongDataset,
    variable_id: str,
    grid: TimeGrid,
    h: float,
    q_low: float = 0.05,
    q_high: float = 0.95,
) -> list[tuple[str, float, float]]:
    """Raw observations strictly outside the [q_low, q_high] quantile band.

    Each observation is compared against the quantile curves at its nearest
    grid point; returns ``(subject_id, time, value)`` triples.
    """
    view = _continuous_view(dataset, variable_id)
    profile = quantile_profile(dataset, variable_id, grid, h, q_levels=(q_low, q_high))
    nearest = grid.snap(view.times)
    low = profile.values[nearest, 0]
    high = profile.values[nearest, 1]
    outside = (view.values < low) | (view.values > high)
    subjects = dataset.subjects
    return [
        (subjects[view.subject_index[k]], float(view.times[k]), float(view.values[k]))
        for k in np.nonzero(outside)[0]
    ]


def subjects_at_risk(matrix: MeasurementMatrix) -> ProfileSeries:
    """Companion diagnostic: count of subjects under follow-up per grid point.

    A subject is under follow-up at t when its first measurement is at or
    before t and its dropout point at or after t.
    """
    bits = matrix.bits
    n, n_grid = bits.shape
    counts = np.zeros(n_grid + 1, dtype=np.float64)
    has_obs = bits.any(axis=1)
    if has_obs.any():
        first = np.argmax(bits, axis=1)[has_obs]
        last = dropout_points(matrix).indices[has_obs]
        np.add.at(counts, first, 1.0)
        np.add.at(counts, last + 1, -1.0)
    values = np.cumsum(counts[:-1])
    return ProfileSeries(
        grid=matrix.grid,
        values=values,
        label="subjects_at_risk",
        params={"n_subjects": n},
    )
