"""Core immutable data types for unbalanced long-format longitudinal data.

A dataset is a collection of (subject, variable, time, value) observations.
Subjects may be measured at arbitrary, subject-specific times; the number of
measurements may differ between subjects and variables.  All metric modules
consume these types and evaluate on a shared regular :class:`TimeGrid`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, DataError

CONTINUOUS = "continuous"
DISCRETE = "discrete"

#: Sentinel dropout index for subjects without any measurement of a variable.
NO_MEASUREMENTS = -1


class Observation(NamedTuple):
    """One measurement: a value of one variable for one subject at one time."""

    subject_id: str
    variable_id: str
    time: float
    value: float | str


@dataclass(frozen=True)
class VariableSpec:
    """Declares how a variable is typed and gridded.

    Parameters
    ----------
    variable_id : str
        Identifier matching the dataset's variable column.
    kind : str
        ``"continuous"`` or ``"discrete"``.
    classes : tuple of str
        Ordered class labels; required (non-empty, unique) for discrete
        variables and ignored for continuous ones.
    time_unit : str
        Free-text unit of the time axis, e.g. ``"hour"``.
    grid_step : float
        Spacing of the regular evaluation grid for this variable.
    """

    variable_id: str
    kind: str
    classes: tuple[str, ...] = ()
    time_unit: str = "hour"
    grid_step: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in (CONTINUOUS, DISCRETE):
            raise ConfigurationError(
                f"variable {self.variable_id!r}: kind must be "
                f"'{CONTINUOUS}' or '{DISCRETE}', got {self.kind!r}"
            )
        object.__setattr__(self, "classes", tuple(str(c) for c in self.classes))
        if self.kind == DISCRETE:
            if not self.classes:
                raise ConfigurationError(
                    f"discrete variable {self.variable_id!r} needs a non-empty class set"
                )
            if len(set(self.classes)) != len(self.classes):
                raise ConfigurationError(
                    f"variable {self.variable_id!r}: duplicate class labels"
                )
        if not (isinstance(self.grid_step, (int, float)) and self.grid_step > 0):
            raise ConfigurationError(
                f"variable {self.variable_id!r}: grid_step must be > 0"
            )

    @property
    def is_continuous(self) -> bool:
        return self.kind == CONTINUOUS

    @property
    def is_discrete(self) -> bool:
        return self.kind == DISCRETE


@dataclass(frozen=True)
class TimeGrid:
    """Regular evaluation grid ``t_min + m * step`` for ``m = 0..floor(span/step)``."""

    t_min: float
    t_max: float
    step: float
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not (self.step > 0):
            raise ConfigurationError(f"grid step must be > 0, got {self.step}")
        if not (math.isfinite(self.t_min) and math.isfinite(self.t_max)):
            raise DataError("grid bounds must be finite")
        if self.t_max < self.t_min:
            raise DataError(f"grid t_max {self.t_max} < t_min {self.t_min}")
        # 1e-9 relative slack so spans that are an exact multiple of the step
        # are not truncated by floating-point noise.
        m_max = int(math.floor((self.t_max - self.t_min) / self.step + 1e-9))
        pts = self.t_min + self.step * np.arange(m_max + 1, dtype=np.float64)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def n_points(self) -> int:
        return len(self.points)

    def snap(self, times: np.ndarray) -> np.ndarray:
        """Indices of the nearest grid points, ties resolved toward the earlier one."""
        q = (np.asarray(times, dtype=np.float64) - self.t_min) / self.step
        idx = np.ceil(q - 0.5).astype(np.int64)
        return np.clip(idx, 0, self.n_points - 1)


@dataclass(frozen=True, eq=False)
class MeasurementMatrix:
    """Binary subject-by-grid-point indicator of observed measurements."""

    subjects: tuple[str, ...]
    grid: TimeGrid
    bits: np.ndarray  # shape (n_subjects, n_grid_points), uint8

    def __post_init__(self) -> None:
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if bits.shape != (len(self.subjects), self.grid.n_points):
            raise DataError(
                f"indicator matrix shape {bits.shape} does not match "
                f"{len(self.subjects)} subjects x {self.grid.n_points} grid points"
            )
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)


@dataclass(frozen=True, eq=False)
class DropoutVector:
    """Per-subject dropout points expressed as grid indices.

    ``indices[i]`` is the index of the last grid point at which subject ``i``
    has a measurement, or :data:`NO_MEASUREMENTS` for all-zero rows.
    """

    grid: TimeGrid
    indices: np.ndarray  # int64, NO_MEASUREMENTS sentinel

    def __post_init__(self) -> None:
        idx = np.ascontiguousarray(self.indices, dtype=np.int64)
        idx.flags.writeable = False
        object.__setattr__(self, "indices", idx)

    def times(self) -> np.ndarray:
        """Dropout times on the grid; NaN for subjects without measurements."""
        out = np.full(len(self.indices), np.nan)
        seen = self.indices >= 0
        out[seen] = self.grid.points[self.indices[seen]]
        return out


class VariableView(NamedTuple):
    """Flattened per-variable observation arrays, grouped by subject.

    ``segments`` lists ``(subject_position, start, stop)`` half-open slices
    into the flat arrays, one per subject with at least one observation, in
    roster order.  Within a segment, times are non-decreasing.
    """

    subject_index: np.ndarray  # int64, position in the dataset roster
    times: np.ndarray  # float64
    values: np.ndarray  # float64 (continuous) or str (discrete)
    segments: tuple[tuple[int, int, int], ...]


def _as_value_array(values: Sequence, spec: VariableSpec) -> np.ndarray:
    if spec.is_continuous:
        arr = np.asarray(values, dtype=np.float64)
        if arr.size and not np.all(np.isfinite(arr)):
            raise DataError(
                f"variable {spec.variable_id!r}: non-finite continuous value"
            )
    else:
        arr = np.asarray([str(v) for v in values], dtype=object)
    return arr


class LongDataset:
    """Immutable long-format dataset: per-(subject, variable) sorted series.

    The subject roster is the sorted set of subject identifiers and fixes the
    row order of every derived measurement matrix.  Series are sorted by time
    at construction (stable, so equal-time duplicates keep input order).
    """

    def __init__(
        self,
        series: Mapping[str, Mapping[str, tuple[np.ndarray, np.ndarray]]],
        specs: Mapping[str, VariableSpec],
        subjects: Sequence[str] | None = None,
    ) -> None:
        self._specs = dict(specs)
        for var in series:
            if var not in self._specs:
                raise DataError(f"variable {var!r} has no spec")
        self._series: dict[str, dict[str, tuple[np.ndarray, np.ndarray]]] = {}
        roster: set[str] = set(subjects) if subjects is not None else set()
        for var, per_subject in series.items():
            spec = self._specs[var]
            cleaned: dict[str, tuple[np.ndarray, np.ndarray]] = {}
            for subject, (times, values) in per_subject.items():
                t = np.asarray(times, dtype=np.float64)
                if t.size and not np.all(np.isfinite(t)):
                    raise DataError(
                        f"subject {subject!r}, variable {var!r}: non-finite time"
                    )
                v = _as_value_array(values, spec)
                if t.shape != v.shape:
                    raise DataError(
                        f"subject {subject!r}, variable {var!r}: "
                        "times and values differ in length"
                    )
                if t.size == 0:
                    continue
                order = np.argsort(t, kind="stable")
                t, v = t[order], v[order]
                t.flags.writeable = False
                v.flags.writeable = False
                cleaned[str(subject)] = (t, v)
                roster.add(str(subject))
            self._series[var] = cleaned
        self._subjects = tuple(sorted(roster))
        self._subject_pos = {s: i for i, s in enumerate(self._subjects)}
        self._views: dict[str, VariableView] = {}
        self._observed_labels: dict[str, tuple[str, ...]] = {}

    @classmethod
    def from_observations(
        cls,
        observations: Iterable[Observation | tuple],
        specs: Mapping[str, VariableSpec],
        subjects: Sequence[str] | None = None,
    ) -> "LongDataset":
        buckets: dict[str, dict[str, tuple[list, list]]] = {}
        for obs in observations:
            subject, var, time, value = obs
            per_subject = buckets.setdefault(str(var), {})
            times, values = per_subject.setdefault(str(subject), ([], []))
            times.append(float(time))
            values.append(value)
        series = {
            var: {
                subj: (np.asarray(t), v)
                for subj, (t, v) in per_subject.items()
            }
            for var, per_subject in buckets.items()
        }
        for var in specs:
            series.setdefault(var, {})
        return cls(series, specs, subjects=subjects)

    # -- basic accessors ---------------------------------------------------

    @property
    def subjects(self) -> tuple[str, ...]:
        return self._subjects

    @property
    def specs(self) -> dict[str, VariableSpec]:
        return dict(self._specs)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(sorted(self._specs))

    def spec(self, variable_id: str) -> VariableSpec:
        try:
            return self._specs[variable_id]
        except KeyError:
            raise DataError(f"unknown variable {variable_id!r}") from None

    def series(self, subject_id: str, variable_id: str) -> tuple[np.ndarray, np.ndarray]:
        self.spec(variable_id)
        empty_v: np.ndarray
        if self._specs[variable_id].is_continuous:
            empty_v = np.empty(0, dtype=np.float64)
        else:
            empty_v = np.empty(0, dtype=object)
        return self._series.get(variable_id, {}).get(
            subject_id, (np.empty(0, dtype=np.float64), empty_v)
        )

    def n_observations(self, variable_id: str) -> int:
        return sum(len(t) for t, _ in self._series.get(variable_id, {}).values())

    def iter_observations(self) -> Iterator[Observation]:
        for var in self.variables:
            continuous = self._specs[var].is_continuous
            for subject in self._subjects:
                times, values = self.series(subject, var)
                for t, v in zip(times, values):
                    yield Observation(
                        subject, var, float(t), float(v) if continuous else str(v)
                    )

    def variable_view(self, variable_id: str) -> VariableView:
        """Flat, subject-grouped arrays for ``variable_id`` (cached)."""
        if variable_id in self._views:
            return self._views[variable_id]
        spec = self.spec(variable_id)
        per_subject = self._series.get(variable_id, {})
        idx_parts: list[np.ndarray] = []
        time_parts: list[np.ndarray] = []
        value_parts: list[np.ndarray] = []
        segments: list[tuple[int, int, int]] = []
        cursor = 0
        for pos, subject in enumerate(self._subjects):
            if subject not in per_subject:
                continue
            t, v = per_subject[subject]
            idx_parts.append(np.full(len(t), pos, dtype=np.int64))
            time_parts.append(t)
            value_parts.append(v)
            segments.append((pos, cursor, cursor + len(t)))
            cursor += len(t)
        if cursor == 0:
            subject_index = np.empty(0, dtype=np.int64)
            times = np.empty(0, dtype=np.float64)
            values = _as_value_array([], spec)
        else:
            subject_index = np.concatenate(idx_parts)
            times = np.concatenate(time_parts)
            values = np.concatenate(value_parts)
        for arr in (subject_index, times):
            arr.flags.writeable = False
        if values.dtype == np.float64:
            values.flags.writeable = False
        view = VariableView(subject_index, times, values, tuple(segments))
        self._views[variable_id] = view
        return view

    def observed_labels(self, variable_id: str) -> tuple[str, ...]:
        """Distinct class labels observed for a discrete variable, sorted."""
        if variable_id not in self._observed_labels:
            spec = self.spec(variable_id)
            if spec.is_continuous:
                raise DataError(
                    f"variable {variable_id!r} is continuous, has no class labels"
                )
            view = self.variable_view(variable_id)
            self._observed_labels[variable_id] = tuple(
                sorted({str(v) for v in view.values})
            )
        return self._observed_labels[variable_id]

    # -- derived datasets ---------------------------------------------------

    def restrict_subjects(self, subjects: Iterable[str]) -> "LongDataset":
        """New dataset containing only the given subjects (full spec set kept)."""
        keep = set(subjects)
        unknown = keep - set(self._subjects)
        if unknown:
            raise DataError(f"unknown subjects: {sorted(unknown)[:5]}")
        series = {
            var: {s: tv for s, tv in per_subject.items() if s in keep}
            for var, per_subject in self._series.items()
        }
        return LongDataset(series, self._specs, subjects=sorted(keep))

    def with_specs(self, specs: Mapping[str, VariableSpec]) -> "LongDataset":
        """Same observations under replacement specs (e.g. unified class sets)."""
        return LongDataset(self._series, specs, subjects=self._subjects)


def build_time_grid(
    original_times: Iterable[float],
    synthetic_times: Iterable[float],
    step: float,
) -> TimeGrid:
    """Common regular grid spanning the union of both datasets' times."""
    if not (isinstance(step, (int, float)) and step > 0):
        raise ConfigurationError(f"grid step must be > 0, got {step}")
    pooled = [float(t) for t in original_times] + [float(t) for t in synthetic_times]
    if not pooled:
        raise DataError("no measurements for variable: cannot build a time grid")
    return TimeGrid(t_min=min(pooled), t_max=max(pooled), step=float(step))


def build_measurement_matrix(
    dataset: LongDataset, variable_id: str, grid: TimeGrid
) -> MeasurementMatrix:
    """Indicator matrix with one row per roster subject, snapped to the grid."""
    view = dataset.variable_view(variable_id)
    bits = np.zeros((len(dataset.subjects), grid.n_points), dtype=np.uint8)
    if len(view.times):
        cols = grid.snap(view.times)
        bits[view.subject_index, cols] = 1
    return MeasurementMatrix(subjects=dataset.subjects, grid=grid, bits=bits)


def dropout_points(matrix: MeasurementMatrix) -> DropoutVector:
    """Last grid point with a measurement per subject; sentinel when none."""
    bits = matrix.bits
    any_obs = bits.any(axis=1)
    last = bits.shape[1] - 1 - np.argmax(bits[:, ::-1], axis=1)
    indices = np.where(any_obs, last, NO_MEASUREMENTS).astype(np.int64)
    return DropoutVector(grid=matrix.grid, indices=indices)
