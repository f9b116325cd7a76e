"""Individual-structure tools: baseline strata and trajectory subsampling.

Plotting every subject of a large dataset is unreadable, so subjects are
grouped by the quantile bin of their first observed value (against the
dataset's own smoothed quantile curves) and a seeded subsample per stratum
is drawn for display.  Raw unsmoothed series are returned; subjects with a
single observation appear as isolated points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data_model import LongDataset, TimeGrid
from .errors import DataError
from .kernel import DEFAULT_QUANTILE_LEVELS
from .marginal import _continuous_view, quantile_profile


@dataclass(frozen=True)
class StratumAssignment:
    """Map from subject id to stratum label, with an explicit label order."""

    labels: tuple[str, ...]
    by_subject: dict[str, str]

    def __post_init__(self) -> None:
        unknown = set(self.by_subject.values()) - set(self.labels)
        if unknown:
            raise DataError(f"stratum labels {sorted(unknown)} missing from order")


@dataclass(frozen=True)
class TrajectorySample:
    subject_id: str
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class TrajectoryPanel:
    """Seeded per-stratum samples of raw subject series for one variable."""

    variable_id: str
    strata: tuple[str, ...]
    series: dict[str, tuple[TrajectorySample, ...]]
    per_stratum: int
    seed: int
    params: dict = field(default_factory=dict)


def baseline_strata(
    dataset: LongDataset,
    variable_id: str,
    grid: TimeGrid,
    h: float,
    boundaries=DEFAULT_QUANTILE_LEVELS,
) -> StratumAssignment:
    """Assign each subject to the quantile bin of its first observed value.

    With the default five boundaries this yields six percentile classes.
    Values exactly on a boundary curve fall into the lower bin, matching the
    rank-order bin convention.  Subjects without observations of the
    variable are omitted.
    """
    view = _continuous_view(dataset, variable_id)
    boundaries = tuple(float(q) for q in boundaries)
    profile = quantile_profile(dataset, variable_id, grid, h, q_levels=boundaries)
    labels = tuple(str(i) for i in range(1, len(boundaries) + 2))
    by_subject: dict[str, str] = {}
    subjects = dataset.subjects
    for pos, start, _ in view.segments:
        first_value = view.values[start]
        g = int(grid.snap(np.asarray([view.times[start]]))[0])
        bin_idx = int(np.searchsorted(profile.values[g], first_value, side="left")) + 1
        by_subject[subjects[pos]] = str(bin_idx)
    return StratumAssignment(labels=labels, by_subject=by_subject)


def sample_trajectories(
    dataset: LongDataset,
    variable_id: str,
    strata: StratumAssignment,
    per_stratum: int = 20,
    seed: int = 0,
) -> TrajectoryPanel:
    """Deterministic seeded sample of up to ``per_stratum`` subjects per stratum.

    Strata smaller than ``per_stratum`` are returned in full.  Only subjects
    with at least one observation of the variable are eligible.
    """
    view = dataset.variable_view(variable_id)
    present = {dataset.subjects[pos] for pos, _, _ in view.segments}
    groups: dict[str, list[str]] = {label: [] for label in strata.labels}
    for subject in sorted(present):
        label = strata.by_subject.get(subject)
        if label is not None:
            groups[label].append(subject)
    rng = np.random.default_rng(seed)
    series: dict[str, tuple[TrajectorySample, ...]] = {}
    for label in strata.labels:
        members = groups[label]
        if len(members) > per_stratum:
            picked_idx = rng.choice(len(members), size=per_stratum, replace=False)
            picked = [members[i] for i in sorted(picked_idx)]
        else:
            picked = members
        samples = []
        for subject in picked:
            times, values = dataset.series(subject, variable_id)
            samples.append(TrajectorySample(subject, times, values))
        series[label] = tuple(samples)
    return TrajectoryPanel(
        variable_id=variable_id,
        strata=strata.labels,
        series=series,
        per_stratum=per_stratum,
        seed=seed,
    )
