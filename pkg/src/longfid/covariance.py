"""Covariance-structure metrics for repeated measurements.

Four estimators live here:

* the smoothed variance profile (total variance over time),
* the smoothed variogram (half the weighted mean squared difference of
  within-subject residuals at a given time lag, which tracks autocorrelation),
* rank-order variability (average directional drift of a subject's
  quantile-bin index, in [-1, 1]),
* local transition probabilities between classes of a discrete variable.

Residuals for the variogram are taken against the smoothed mean evaluated
exactly at each observation's own time (no interpolation from the grid).
Subjects with a single observation contribute to the variance profile but
are skipped by the pair-based estimators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data_model import LongDataset, TimeGrid
from .errors import ConfigurationError, DataError
from .kernel import DEFAULT_QUANTILE_LEVELS, effective_sample_size, weight_matrix
from .marginal import ProfileSeries, _continuous_view, _discrete_view, quantile_profile

_CHUNK = 262_144  # observation/pair chunk size for memory-bounded passes


@dataclass(frozen=True, eq=False)
class VariogramSeries:
    """Smoothed variogram values per time lag."""

    lags: np.ndarray
    gamma: np.ndarray
    params: dict = field(default_factory=dict)
    n_pairs: int = 0
    n_subjects_used: int = 0
    n_subjects_skipped: int = 0

    def __post_init__(self) -> None:
        for name in ("lags", "gamma"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass(frozen=True, eq=False)
class RankVariabilityDistribution:
    """Per-subject rank-order variability values (subjects with >= 2 obs)."""

    subject_ids: tuple[str, ...]
    values: np.ndarray  # aligned with subject_ids, all within [-1, 1]
    q_count: int
    n_excluded: int
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class TransitionProfile:
    """Local transition matrices over the grid for a discrete variable.

    ``probs[t, a, b]`` is the smoothed probability of moving from class ``a``
    to class ``b`` near grid point ``t``.  Rows of source classes without any
    consecutive observation pair anywhere in the data are undefined and hold
    NaN; they are reported as masked gaps, never imputed.
    """

    grid: TimeGrid
    classes: tuple[str, ...]
    probs: np.ndarray  # (n_grid, L, L) with NaN rows where undefined
    pair_counts: np.ndarray  # (L,) consecutive pairs per source class
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("probs", "pair_counts"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def defined_sources(self) -> np.ndarray:
        return self.pair_counts > 0


def variance_profile(
    dataset: LongDataset, variable_id: str, grid: TimeGrid, h: float
) -> ProfileSeries:
    """Smoothed total variance around the mean profile, per grid point."""
    view = _continuous_view(dataset, variable_id)
    weights = weight_matrix(grid.points, view.times, h)
    mu = weights @ view.values
    dev = view.values[None, :] - mu[:, None]
    values = np.einsum("ti,ti->t", weights, dev * dev)
    return ProfileSeries(
        grid=grid,
        values=values,
        label="variance",
        params={"bandwidth": float(h)},
        ess=effective_sample_size(weights),
    )


def mean_at_times(
    dataset: LongDataset, variable_id: str, times: np.ndarray, h: float
) -> np.ndarray:
    """Smoothed mean evaluated exactly at arbitrary times (not just the grid).

    Evaluation targets are de-duplicated and processed in chunks so that the
    all-times weight matrix never materializes for large datasets.
    """
    view = _continuous_view(dataset, variable_id)
    times = np.asarray(times, dtype=np.float64)
    uniq, inverse = np.unique(times, return_inverse=True)
    mu_uniq = np.empty(len(uniq), dtype=np.float64)
    step = max(1, _CHUNK // max(1, len(view.times)))
    for start in range(0, len(uniq), step):
        chunk = uniq[start : start + step]
        weights = weight_matrix(chunk, view.times, h)
        mu_uniq[start : start + len(chunk)] = weights @ view.values
    return mu_uniq[inverse]


def default_lags(grid: TimeGrid) -> np.ndarray:
    """Grid-step multiples up to half the grid span."""
    span = grid.t_max - grid.t_min
    n = int(np.floor(span / 2.0 / grid.step + 1e-9))
    if n < 1:
        raise DataError("grid span too short for any variogram lag")
    return grid.step * np.arange(1, n + 1, dtype=np.float64)


def _within_subject_pairs(view):
    """Gaps, squared residual differences and counts for all k < l pairs."""
    gap_parts: list[np.ndarray] = []
    idx_pairs: list[tuple[np.ndarray, np.ndarray]] = []
    used = skipped = 0
    for _, start, stop in view.segments:
        m = stop - start
        if m < 2:
            skipped += 1
            continue
        used += 1
        k, l = np.triu_indices(m, k=1)
        idx_pairs.append((start + k, start + l))
        gap_parts.append(view.times[start + l] - view.times[start + k])
    if not gap_parts:
        return None, None, used, skipped
    first = np.concatenate([a for a, _ in idx_pairs])
    second = np.concatenate([b for _, b in idx_pairs])
    gaps = np.concatenate(gap_parts)
    return (first, second), gaps, used, skipped


def variogram(
    dataset: LongDataset,
    variable_id: str,
    h: float,
    lags: np.ndarray | None = None,
    grid: TimeGrid | None = None,
) -> VariogramSeries:
    """Smoothed variogram over within-subject observation pairs.

    For each lag u, pairs are weighted by a Gaussian kernel on the distance
    between u and the pair's time gap, normalized over all pairs; the value
    is half the weighted mean of squared residual differences.
    """
    view = _continuous_view(dataset, variable_id)
    if lags is None:
        if grid is None:
            raise ConfigurationError("variogram needs either explicit lags or a grid")
        lags = default_lags(grid)
    lags = np.asarray(lags, dtype=np.float64)
    if lags.size == 0 or not np.all(lags > 0):
        raise ConfigurationError("variogram lags must be positive")

    pair_idx, gaps, used, skipped = _within_subject_pairs(view)
    if pair_idx is None:
        raise DataError(
            f"variogram undefined for {variable_id!r}: "
            "no subject has two or more observations"
        )
    residuals = view.values - mean_at_times(dataset, variable_id, view.times, h)
    sq_diff = (residuals[pair_idx[0]] - residuals[pair_idx[1]]) ** 2

    h = float(h)
    # Accumulate exp sums per lag in gap chunks; the shift by the per-lag
    # maximum exponent keeps the normalization stable for distant lags.
    max_exp = np.full(len(lags), -np.inf)
    for start in range(0, len(gaps), _CHUNK):
        g = gaps[start : start + _CHUNK]
        e = -((lags[:, None] - g[None, :]) ** 2) / (2.0 * h * h)
        max_exp = np.maximum(max_exp, e.max(axis=1))
    num = np.zeros(len(lags), dtype=np.float64)
    den = np.zeros(len(lags), dtype=np.float64)
    for start in range(0, len(gaps), _CHUNK):
        g = gaps[start : start + _CHUNK]
        s = sq_diff[start : start + _CHUNK]
        e = -((lags[:, None] - g[None, :]) ** 2) / (2.0 * h * h)
        w = np.exp(e - max_exp[:, None])
        num += w @ s
        den += w.sum(axis=1)
    gamma = 0.5 * num / den
    return VariogramSeries(
        lags=lags,
        gamma=gamma,
        params={"bandwidth": h},
        n_pairs=len(gaps),
        n_subjects_used=used,
        n_subjects_skipped=skipped,
    )


def quantile_bin_indices(
    dataset: LongDataset,
    variable_id: str,
    grid: TimeGrid,
    h: float,
    q_levels=DEFAULT_QUANTILE_LEVELS,
) -> np.ndarray:
    """Quantile-bin index (1..Q+1) of every observation of the variable.

    Bin ``l`` collects values in (Q_{l-1}(t), Q_l(t)], with the open lower
    end at -inf and the open upper end at +inf; t is the observation's
    nearest grid point.  Values equal to a curve fall in the lower bin.
    """
    view = _continuous_view(dataset, variable_id)
    profile = quantile_profile(dataset, variable_id, grid, h, q_levels=q_levels)
    nearest = grid.snap(view.times)
    bins = np.empty(len(view.times), dtype=np.int64)
    for g in np.unique(nearest):
        sel = nearest == g
        bins[sel] = np.searchsorted(profile.values[g], view.values[sel], side="left") + 1
    return bins


def rank_order_variability(
    dataset: LongDataset,
    variable_id: str,
    grid: TimeGrid,
    h: float,
    q_levels=DEFAULT_QUANTILE_LEVELS,
) -> RankVariabilityDistribution:
    """Average directional drift of quantile-bin indices per subject.

    Computed only over subjects with at least two observations; the number
    of excluded subjects is reported alongside.
    """
    view = _continuous_view(dataset, variable_id)
    q_levels = tuple(float(q) for q in q_levels)
    bins = quantile_bin_indices(dataset, variable_id, grid, h, q_levels=q_levels)
    q_count = len(q_levels)
    subjects = dataset.subjects
    ids: list[str] = []
    values: list[float] = []
    excluded = 0
    for pos, start, stop in view.segments:
        m = stop - start
        if m < 2:
            excluded += 1
            continue
        drift = int(np.diff(bins[start:stop]).sum())
        ids.append(subjects[pos])
        values.append(drift / (q_count * (m - 1)))
    return RankVariabilityDistribution(
        subject_ids=tuple(ids),
        values=np.asarray(values, dtype=np.float64),
        q_count=q_count,
        n_excluded=excluded,
        params={"bandwidth": float(h), "q_levels": list(q_levels)},
    )


def transition_profile(
    dataset: LongDataset,
    variable_id: str,
    grid: TimeGrid,
    h: float,
    max_gap: float | None = None,
) -> TransitionProfile:
    """Smoothed local transition probabilities of a discrete variable.

    Consecutive within-subject observation pairs (a at t_k, b at t_{k+1})
    are weighted at grid point t by a Gaussian kernel on the pair distance
    max(|t - t_k|, |t - t_{k+1}|), normalized within each source class.
    All consecutive observed pairs count regardless of gap length unless
    ``max_gap`` filters pairs whose time gap exceeds it.
    """
    spec, view = _discrete_view(dataset, variable_id)
    classes = spec.classes
    code_of = {c: i for i, c in enumerate(classes)}
    try:
        codes = np.asarray([code_of[str(v)] for v in view.values], dtype=np.int64)
    except KeyError as exc:
        raise DataError(
            f"variable {variable_id!r}: label {exc.args[0]!r} not in class set"
        ) from None

    src_parts, dst_parts, tk_parts, tl_parts = [], [], [], []
    for _, start, stop in view.segments:
        if stop - start < 2:
            continue
        src_parts.append(codes[start : stop - 1])
        dst_parts.append(codes[start + 1 : stop])
        tk_parts.append(view.times[start : stop - 1])
        tl_parts.append(view.times[start + 1 : stop])
    if not src_parts:
        raise DataError(
            f"transition profile undefined for {variable_id!r}: "
            "no subject has two consecutive observations"
        )
    src = np.concatenate(src_parts)
    dst = np.concatenate(dst_parts)
    tk = np.concatenate(tk_parts)
    tl = np.concatenate(tl_parts)
    if max_gap is not None:
        keep = (tl - tk) <= float(max_gap)
        src, dst, tk, tl = src[keep], dst[keep], tk[keep], tl[keep]

    h = float(h)
    n_grid = grid.n_points
    L = len(classes)
    probs = np.full((n_grid, L, L), np.nan)
    pair_counts = np.bincount(src, minlength=L)
    for a in range(L):
        sel = src == a
        if not sel.any():
            continue
        tk_a, tl_a, dst_a = tk[sel], tl[sel], dst[sel]
        for g, t in enumerate(grid.points):
            d = np.maximum(np.abs(t - tk_a), np.abs(t - tl_a))
            e = -(d * d) / (2.0 * h * h)
            w = np.exp(e - e.max())
            w /= w.sum()
            probs[g, a, :] = np.bincount(dst_a, weights=w, minlength=L)
    return TransitionProfile(
        grid=grid,
        classes=classes,
        probs=probs,
        pair_counts=pair_counts,
        params={"bandwidth": h, "max_gap": max_gap},
    )


@dataclass(frozen=True)
class VarianceDecomposition:
    """Descriptive split of total variance; meaningful under stationarity.

    * ``nugget``: variogram at the smallest lag (measurement error).
    * ``sill``: mean variogram over the top quartile of lags (plateau).
    * ``between_subject``: mean total variance minus the sill.
    """

    nugget: float
    sill: float
    between_subject: float
    total_variance: float


def variance_decomposition(
    vario: VariogramSeries, variance: ProfileSeries
) -> VarianceDecomposition:
    order = np.argsort(vario.lags)
    gamma = vario.gamma[order]
    top_start = int(np.ceil(0.75 * len(gamma)))
    if top_start >= len(gamma):
        top_start = len(gamma) - 1
    sill = float(np.mean(gamma[top_start:]))
    total = float(np.mean(variance.values))
    return VarianceDecomposition(
        nugget=float(gamma[0]),
        sill=sill,
        between_subject=total - sill,
        total_variance=total,
    )
