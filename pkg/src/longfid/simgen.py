"""Ground-truth longitudinal data generators used to validate the estimators.

Continuous trajectories follow a mixed model

    x_i(t) = m(t) + b_i + W_i(t) + eps_ik,

with a subject-level random intercept b_i ~ N(0, intercept_var), a zero-mean
Gaussian process W_i with variance serial_var and exponential or Gaussian
correlation over the time distance (range parameter serial_range), and
independent measurement noise eps ~ N(0, nugget_var).  The implied variogram
is ``nugget_var + serial_var * (1 - corr(u))``, which plateaus at
``nugget_var + serial_var`` while the total variance adds intercept_var on
top.  Discrete trajectories follow a first-order Markov chain on the design
grid.

Observation designs thin measurements independently per grid point and
truncate each subject at a geometric dropout time, producing unbalanced
datasets with known dropout distributions.  Subjects are simulated from
per-subject seeds derived from one master seed, so results are reproducible
regardless of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .data_model import CONTINUOUS, DISCRETE, LongDataset, TimeGrid, VariableSpec
from .errors import ConfigurationError, DataError

EXPONENTIAL = "exponential"
GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class ContinuousModel:
    """Parameters of the continuous mixed model."""

    mean: Callable[[np.ndarray], np.ndarray] = lambda t: np.zeros_like(t)
    nugget_var: float = 0.0
    serial_var: float = 0.0
    serial_range: float = 1.0
    serial_kind: str = EXPONENTIAL
    intercept_var: float = 0.0

    def __post_init__(self) -> None:
        for name in ("nugget_var", "serial_var", "intercept_var"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")
        if self.serial_range <= 0:
            raise ConfigurationError("serial_range must be > 0")
        if self.serial_kind not in (EXPONENTIAL, GAUSSIAN):
            raise ConfigurationError(
                f"serial_kind must be '{EXPONENTIAL}' or '{GAUSSIAN}'"
            )

    def correlation(self, u: np.ndarray) -> np.ndarray:
        """Serial correlation at time distance u."""
        r = np.abs(np.asarray(u, dtype=np.float64)) / self.serial_range
        if self.serial_kind == EXPONENTIAL:
            return np.exp(-r)
        return np.exp(-(r * r))

    def theoretical_variogram(self, u: np.ndarray) -> np.ndarray:
        return self.nugget_var + self.serial_var * (1.0 - self.correlation(u))


@dataclass(frozen=True)
class DiscreteModel:
    """First-order Markov chain: classes, row-stochastic transitions, start."""

    classes: tuple[str, ...]
    transitions: np.ndarray  # (L, L), rows sum to 1
    initial: np.ndarray  # (L,), sums to 1

    def __post_init__(self) -> None:
        classes = tuple(str(c) for c in self.classes)
        object.__setattr__(self, "classes", classes)
        trans = np.asarray(self.transitions, dtype=np.float64)
        init = np.asarray(self.initial, dtype=np.float64)
        L = len(classes)
        if L == 0:
            raise ConfigurationError("discrete model needs at least one class")
        if trans.shape != (L, L):
            raise ConfigurationError(f"transition matrix must be {L}x{L}")
        if np.any(trans < 0) or not np.allclose(trans.sum(axis=1), 1.0, atol=1e-12):
            raise ConfigurationError("transition rows must be non-negative and sum to 1")
        if init.shape != (L,) or np.any(init < 0) or not np.isclose(init.sum(), 1.0, atol=1e-12):
            raise ConfigurationError("initial distribution must be non-negative and sum to 1")
        trans.flags.writeable = False
        init.flags.writeable = False
        object.__setattr__(self, "transitions", trans)
        object.__setattr__(self, "initial", init)


@dataclass(frozen=True)
class ObservationDesign:
    """Where and how often subjects are measured.

    ``keep_probability`` and ``dropout_hazard`` may be scalars or per-grid-
    point sequences.  A subject survives grid point m to m+1 with probability
    ``1 - dropout_hazard[m]``; surviving points are then observed
    independently with ``keep_probability``.
    """

    n_subjects: int
    grid: TimeGrid
    keep_probability: float | Sequence[float] = 1.0
    dropout_hazard: float | Sequence[float] = 0.0
    keep: np.ndarray = field(init=False, repr=False, compare=False)
    hazard: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n_subjects < 0:
            raise ConfigurationError("n_subjects must be >= 0")
        n_grid = self.grid.n_points
        keep = np.broadcast_to(
            np.asarray(self.keep_probability, dtype=np.float64), (n_grid,)
        ).copy()
        hazard = np.broadcast_to(
            np.asarray(self.dropout_hazard, dtype=np.float64), (n_grid,)
        ).copy()
        for name, arr in (("keep_probability", keep), ("dropout_hazard", hazard)):
            if np.any(arr < 0) or np.any(arr > 1):
                raise ConfigurationError(f"{name} entries must lie in [0, 1]")
        keep.flags.writeable = False
        hazard.flags.writeable = False
        object.__setattr__(self, "keep", keep)
        object.__setattr__(self, "hazard", hazard)

    def draw_observed_indices(self, rng: np.random.Generator) -> np.ndarray:
        """Grid indices one subject is observed at, after dropout and thinning."""
        n_grid = self.grid.n_points
        alive = n_grid - 1
        if self.hazard.any():
            dropped = rng.random(n_grid - 1) < self.hazard[:-1]
            hits = np.nonzero(dropped)[0]
            if hits.size:
                alive = int(hits[0])
        idx = np.arange(alive + 1)
        kept = rng.random(alive + 1) < self.keep[: alive + 1]
        return idx[kept]


def _subject_ids(n: int) -> list[str]:
    width = max(1, len(str(max(n - 1, 0))))
    return [f"s{idx:0{width}d}" for idx in range(n)]


def simulate_continuous(
    model: ContinuousModel,
    design: ObservationDesign,
    seed: int,
    variable_id: str = "y",
    grid_step: float | None = None,
) -> LongDataset:
    """Sample one continuous variable for every subject in the design.

    The Gaussian process is factorized exactly on each subject's observed
    times, so thinning introduces no discretization error.
    """
    if design.n_subjects < 1:
        raise ConfigurationError("need at least one subject to simulate")
    spec = VariableSpec(
        variable_id=variable_id,
        kind=CONTINUOUS,
        grid_step=grid_step if grid_step is not None else design.grid.step,
    )
    points = design.grid.points
    seeds = np.random.SeedSequence(seed).spawn(design.n_subjects)
    series: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for subject, child in zip(_subject_ids(design.n_subjects), seeds):
        rng = np.random.default_rng(child)
        obs_idx = design.draw_observed_indices(rng)
        if obs_idx.size == 0:
            continue
        t = points[obs_idx]
        x = np.asarray(model.mean(t), dtype=np.float64).copy()
        if model.intercept_var > 0:
            x += rng.normal(0.0, np.sqrt(model.intercept_var))
        if model.serial_var > 0:
            cov = model.serial_var * model.correlation(t[:, None] - t[None, :])
            jitter = 1e-10 * max(model.serial_var, 1.0)
            for _ in range(4):
                try:
                    chol = np.linalg.cholesky(cov + jitter * np.eye(len(t)))
                    break
                except np.linalg.LinAlgError:
                    jitter *= 100.0
            else:
                raise DataError("serial covariance not positive definite")
            x += chol @ rng.standard_normal(len(t))
        if model.nugget_var > 0:
            x += rng.normal(0.0, np.sqrt(model.nugget_var), size=len(t))
        series[subject] = (t, x)
    return LongDataset(
        {variable_id: series},
        {variable_id: spec},
        subjects=_subject_ids(design.n_subjects),
    )


def simulate_discrete(
    model: DiscreteModel,
    design: ObservationDesign,
    seed: int,
    variable_id: str = "state",
    grid_step: float | None = None,
) -> LongDataset:
    """Sample a Markov chain per subject on the design grid, then thin it.

    The chain advances at every grid step; thinning only hides states from
    the output, so consecutive observed states may span several steps when
    ``keep_probability`` is below one.
    """
    if design.n_subjects < 1:
        raise ConfigurationError("need at least one subject to simulate")
    spec = VariableSpec(
        variable_id=variable_id,
        kind=DISCRETE,
        classes=model.classes,
        grid_step=grid_step if grid_step is not None else design.grid.step,
    )
    points = design.grid.points
    labels = np.asarray(model.classes, dtype=object)
    cum_trans = np.cumsum(model.transitions, axis=1)
    cum_init = np.cumsum(model.initial)
    seeds = np.random.SeedSequence(seed).spawn(design.n_subjects)
    series: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for subject, child in zip(_subject_ids(design.n_subjects), seeds):
        rng = np.random.default_rng(child)
        obs_idx = design.draw_observed_indices(rng)
        if obs_idx.size == 0:
            continue
        horizon = int(obs_idx[-1]) + 1
        draws = rng.random(horizon)
        states = np.empty(horizon, dtype=np.int64)
        states[0] = np.searchsorted(cum_init, draws[0], side="right")
        for m in range(1, horizon):
            states[m] = np.searchsorted(cum_trans[states[m - 1]], draws[m], side="right")
        series[subject] = (points[obs_idx], labels[states[obs_idx]])
    return LongDataset(
        {variable_id: series},
        {variable_id: spec},
        subjects=_subject_ids(design.n_subjects),
    )


def apply_design(
    dataset: LongDataset, design: ObservationDesign, seed: int
) -> LongDataset:
    """Thin and truncate an existing dataset according to a design.

    Observations are snapped to the design grid to decide the per-point keep
    draw and the dropout truncation; each subject keeps the observations at
    surviving, kept grid points.  All variables share a subject's draws so
    the dropout pattern is consistent across variables.
    """
    points = design.grid
    seeds = np.random.SeedSequence(seed).spawn(len(dataset.subjects))
    keep_masks: dict[str, np.ndarray] = {}
    for subject, child in zip(dataset.subjects, seeds):
        rng = np.random.default_rng(child)
        obs_idx = design.draw_observed_indices(rng)
        mask = np.zeros(points.n_points, dtype=bool)
        mask[obs_idx] = True
        keep_masks[subject] = mask
    series: dict[str, dict[str, tuple[np.ndarray, np.ndarray]]] = {}
    for var in dataset.variables:
        per_subject: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for subject in dataset.subjects:
            times, values = dataset.series(subject, var)
            if times.size == 0:
                continue
            kept = keep_masks[subject][points.snap(times)]
            if kept.any():
                per_subject[subject] = (times[kept], values[kept])
        series[var] = per_subject
    return LongDataset(series, dataset.specs, subjects=dataset.subjects)


def merge_datasets(datasets: Sequence[LongDataset]) -> LongDataset:
    """Combine single-variable datasets over the same roster into one.

    Variable sets must be disjoint; rosters must agree.
    """
    if not datasets:
        raise ConfigurationError("nothing to merge")
    roster = datasets[0].subjects
    specs: dict[str, VariableSpec] = {}
    series: dict[str, dict[str, tuple[np.ndarray, np.ndarray]]] = {}
    for ds in datasets:
        if ds.subjects != roster:
            raise DataError("datasets to merge must share the subject roster")
        for var, spec in ds.specs.items():
            if var in specs:
                raise DataError(f"duplicate variable {var!r} while merging")
            specs[var] = spec
            per_subject = {}
            for subject in ds.subjects:
                times, values = ds.series(subject, var)
                if times.size:
                    per_subject[subject] = (times, values)
            series[var] = per_subject
    return LongDataset(series, specs, subjects=roster)


def geometric_dropout_masses(design: ObservationDesign) -> np.ndarray:
    """Analytic dropout-point distribution implied by the design's hazard.

    Valid for full observation (keep probability one): the dropout point of
    a subject surviving to grid index m is exactly grid point m.
    """
    hazard = design.hazard
    n_grid = design.grid.n_points
    masses = np.empty(n_grid, dtype=np.float64)
    surviving = 1.0
    for m in range(n_grid - 1):
        masses[m] = surviving * hazard[m]
        surviving *= 1.0 - hazard[m]
    masses[n_grid - 1] = surviving
    return masses
