"""Measurement-structure metrics: density, similarity, dropout divergence.

Measurement similarity compares the binary indicator matrices of the two
datasets after optimally re-ordering the synthetic rows (subjects do not
correspond across datasets).  Because the alignment needs equal dimensions,
unequal rosters are handled by the repeated-subsample protocol: sample an
equal number of subjects from both sides, score, and average over seeded
iterations.  Reference values from original-vs-original splits put the
scores in context.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .assignment import Assignment, _solve_lap
from .data_model import (
    DropoutVector,
    LongDataset,
    MeasurementMatrix,
    TimeGrid,
    build_measurement_matrix,
    build_time_grid,
    dropout_points,
)
from .errors import ConfigurationError, DataError
from .marginal import ProfileSeries

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-6
DEFAULT_SUBSAMPLE = 2000
DEFAULT_ITERATIONS = 100

# Full cross-distance matrices are precomputed when they stay below this many
# cells; beyond that, distances are recomputed per iteration from sampled rows.
PRECOMPUTE_CELL_BUDGET = 16_000_000


def measurement_density(matrix: MeasurementMatrix) -> ProfileSeries:
    """Share of all measurements that fall on each grid point; sums to 1."""
    counts = matrix.bits.sum(axis=0, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        raise DataError("no measurements: cannot compute measurement density")
    return ProfileSeries(
        grid=matrix.grid,
        values=counts / total,
        label="measurement_density",
        params={"n_measurements": int(total)},
    )


def _row_distance_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances between binary rows (float32).

    For binary rows this equals the Hamming distance, so every entry is a
    small integer and exactly representable.
    """
    a = a.astype(np.float32)
    b = b.astype(np.float32)
    d = a.sum(axis=1)[:, None] + b.sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    np.maximum(d, 0.0, out=d)
    return d


class MeasurementSimilarity(NamedTuple):
    similarity: float
    frobenius: float
    alignment: Assignment


def _similarity_from_distances(distances: np.ndarray, n_cells: int) -> tuple[float, float, Assignment]:
    # Distances between binary rows are small integers, exact in float32,
    # and the solver's dual arithmetic runs in float64 either way.
    perm, total = _solve_lap(np.ascontiguousarray(distances))
    mismatches = float(total)
    similarity = 1.0 - mismatches / n_cells
    return similarity, math.sqrt(mismatches), Assignment(perm, mismatches)


def measurement_similarity(
    original: MeasurementMatrix, synthetic: MeasurementMatrix
) -> MeasurementSimilarity:
    """Normalized bit agreement after optimal row alignment, plus Frobenius.

    Rows are aligned by a minimum-cost assignment on pairwise squared
    Euclidean row distances (the same minimizer as plain Euclidean).  The
    score is 1 minus the fraction of disagreeing cells; the Frobenius norm
    of the aligned difference doubles as a secondary distance.
    """
    if original.bits.shape != synthetic.bits.shape:
        raise DataError(
            f"indicator matrices differ in shape {original.bits.shape} vs "
            f"{synthetic.bits.shape}; subsample an equal number of subjects first"
        )
    n, n_grid = original.bits.shape
    if n == 0:
        raise DataError("cannot compare empty indicator matrices")
    distances = _row_distance_matrix(original.bits, synthetic.bits)
    similarity, frob, assignment = _similarity_from_distances(distances, n * n_grid)
    return MeasurementSimilarity(similarity, frob, assignment)


def kl_divergence(p: np.ndarray, q: np.ndarray, epsilon: float = DEFAULT_EPSILON) -> float:
    """KL(P || Q) with epsilon smoothing: add epsilon to every mass, renormalize.

    Natural logarithm; inputs are non-negative mass vectors on the same
    support (they are normalized before smoothing).
    """
    if epsilon <= 0:
        raise ConfigurationError(f"epsilon must be > 0, got {epsilon}")
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DataError("distributions must share a support")
    if p.sum() <= 0 or q.sum() <= 0:
        raise DataError("distributions must have positive total mass")
    ps = (p / p.sum() + epsilon) / (1.0 + epsilon * len(p))
    qs = (q / q.sum() + epsilon) / (1.0 + epsilon * len(q))
    return float(np.sum(ps * np.log(ps / qs)))


def _dropout_masses(vector: DropoutVector) -> np.ndarray:
    idx = vector.indices[vector.indices >= 0]
    if idx.size == 0:
        raise DataError("no subjects with measurements: dropout distribution empty")
    return np.bincount(idx, minlength=vector.grid.n_points).astype(np.float64)


def dropout_divergence(
    original: DropoutVector,
    synthetic: DropoutVector,
    epsilon: float = DEFAULT_EPSILON,
) -> float:
    """Epsilon-smoothed KL divergence between dropout-point distributions."""
    if original.grid.n_points != synthetic.grid.n_points:
        raise DataError("dropout vectors must share a grid")
    return kl_divergence(_dropout_masses(original), _dropout_masses(synthetic), epsilon)


@dataclass(frozen=True)
class ScoreStats:
    """Mean and standard deviation of a score across protocol iterations."""

    mean: float
    sd: float | None  # None when fewer than two iterations ran

    @staticmethod
    def from_samples(samples: np.ndarray) -> "ScoreStats":
        mean = float(np.mean(samples))
        sd = float(np.std(samples, ddof=1)) if len(samples) > 1 else None
        return ScoreStats(mean=mean, sd=sd)


@dataclass(frozen=True)
class ScoreBlock:
    similarity: ScoreStats
    frobenius: ScoreStats
    dropout_divergence: ScoreStats


@dataclass(frozen=True)
class MeasurementReport:
    """Measurement-structure scores with reference baselines.

    The reference block holds the same statistics computed between two
    disjoint random halves of the original data, iteration by iteration,
    giving the natural within-original variability of each score.
    """

    variable_id: str
    density_original: ProfileSeries
    density_synthetic: ProfileSeries
    scores: ScoreBlock
    reference: ScoreBlock
    iterations: int
    subsample_size: int
    seed: int
    epsilon: float


def _iteration_scores(distances, dropout_a, dropout_b, n_grid, epsilon):
    n = distances.shape[0]
    similarity, frob, _ = _similarity_from_distances(distances, n * n_grid)
    div = kl_divergence(
        np.bincount(dropout_a[dropout_a >= 0], minlength=n_grid).astype(np.float64),
        np.bincount(dropout_b[dropout_b >= 0], minlength=n_grid).astype(np.float64),
        epsilon,
    )
    return similarity, frob, div


def _block(samples: np.ndarray) -> ScoreBlock:
    return ScoreBlock(
        similarity=ScoreStats.from_samples(samples[:, 0]),
        frobenius=ScoreStats.from_samples(samples[:, 1]),
        dropout_divergence=ScoreStats.from_samples(samples[:, 2]),
    )


def subsample_protocol(
    original: LongDataset,
    synthetic: LongDataset,
    variable_id: str,
    grid: TimeGrid | None = None,
    subsample_size: int = DEFAULT_SUBSAMPLE,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
) -> MeasurementReport:
    """Repeated-subsample measurement comparison with reference baselines.

    Each iteration samples ``subsample_size`` subjects without replacement
    from both sides and scores similarity, Frobenius distance, and dropout
    divergence on the subsampled indicator matrices.  The reference block
    repeats the computation between two disjoint halves of the original
    roster, freshly split per iteration.  One master seed derives the
    per-iteration seeds, so results do not depend on execution order.
    """
    if iterations < 1:
        raise ConfigurationError("iterations must be >= 1")
    if subsample_size < 1:
        raise ConfigurationError("subsample size must be >= 1")
    if grid is None:
        grid = build_time_grid(
            original.variable_view(variable_id).times,
            synthetic.variable_view(variable_id).times,
            original.spec(variable_id).grid_step,
        )
    mat_o = build_measurement_matrix(original, variable_id, grid)
    mat_s = build_measurement_matrix(synthetic, variable_id, grid)
    n_o, n_s = mat_o.n_subjects, mat_s.n_subjects
    if n_o < 2:
        raise DataError("need at least 2 original subjects to build a reference")
    size = min(subsample_size, n_o, n_s)
    if size < subsample_size:
        logger.warning(
            "variable %s: subsample size clamped from %d to %d (rosters: %d original, %d synthetic)",
            variable_id, subsample_size, size, n_o, n_s,
        )

    if size < 1 or n_s < 1:
        raise DataError("both datasets need at least one subject")

    density_o = measurement_density(mat_o)
    density_s = measurement_density(mat_s)
    drop_o = dropout_points(mat_o).indices
    drop_s = dropout_points(mat_s).indices
    # When the full cross-distance matrices fit comfortably in memory they
    # are computed once and each iteration only gathers sampled sub-blocks;
    # otherwise distances are recomputed per iteration from the sampled rows.
    precompute = n_o * max(n_o, n_s) <= PRECOMPUTE_CELL_BUDGET
    dist_os = _row_distance_matrix(mat_o.bits, mat_s.bits) if precompute else None
    dist_oo = _row_distance_matrix(mat_o.bits, mat_o.bits) if precompute else None

    def block_distances(full, bits_a, bits_b, rows, cols):
        if full is not None:
            return full[np.ix_(rows, cols)]
        return _row_distance_matrix(bits_a[rows], bits_b[cols])

    n_grid = grid.n_points
    half = n_o - n_o // 2  # larger half first
    ref_size = min(size, n_o // 2)

    main = np.empty((iterations, 3))
    ref = np.empty((iterations, 3))
    seeds = np.random.SeedSequence(seed).spawn(iterations)
    for it in range(iterations):
        rng = np.random.default_rng(seeds[it])
        rows = np.sort(rng.choice(n_o, size=size, replace=False))
        cols = np.sort(rng.choice(n_s, size=size, replace=False))
        main[it] = _iteration_scores(
            block_distances(dist_os, mat_o.bits, mat_s.bits, rows, cols),
            drop_o[rows], drop_s[cols], n_grid, epsilon,
        )
        split = rng.permutation(n_o)
        half_a, half_b = split[:half], split[half:]
        ra = np.sort(rng.choice(half_a, size=ref_size, replace=False))
        rb = np.sort(rng.choice(half_b, size=ref_size, replace=False))
        ref[it] = _iteration_scores(
            block_distances(dist_oo, mat_o.bits, mat_o.bits, ra, rb),
            drop_o[ra], drop_o[rb], n_grid, epsilon,
        )

    return MeasurementReport(
        variable_id=variable_id,
        density_original=density_o,
        density_synthetic=density_s,
        scores=_block(main),
        reference=_block(ref),
        iterations=iterations,
        subsample_size=size,
        seed=seed,
        epsilon=epsilon,
    )


def reference_protocol(
    original: LongDataset,
    variable_id: str,
    grid: TimeGrid | None = None,
    subsample_size: int = DEFAULT_SUBSAMPLE,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
) -> ScoreBlock:
    """Original-vs-original baselines only: scores between disjoint halves.

    The split and the per-half subsamples are redrawn every iteration from
    seeds derived from the master seed.
    """
    if iterations < 1:
        raise ConfigurationError("iterations must be >= 1")
    if grid is None:
        view = original.variable_view(variable_id)
        grid = build_time_grid(view.times, (), original.spec(variable_id).grid_step)
    matrix = build_measurement_matrix(original, variable_id, grid)
    n = matrix.n_subjects
    if n < 2:
        raise DataError("need at least 2 original subjects to build a reference")
    drop = dropout_points(matrix).indices
    precompute = n * n <= PRECOMPUTE_CELL_BUDGET
    dist = _row_distance_matrix(matrix.bits, matrix.bits) if precompute else None
    half = n - n // 2
    ref_size = min(subsample_size, n // 2)
    scores = np.empty((iterations, 3))
    seeds = np.random.SeedSequence(seed).spawn(iterations)
    for it in range(iterations):
        rng = np.random.default_rng(seeds[it])
        split = rng.permutation(n)
        ra = np.sort(rng.choice(split[:half], size=ref_size, replace=False))
        rb = np.sort(rng.choice(split[half:], size=ref_size, replace=False))
        block = (
            dist[np.ix_(ra, rb)]
            if dist is not None
            else _row_distance_matrix(matrix.bits[ra], matrix.bits[rb])
        )
        scores[it] = _iteration_scores(block, drop[ra], drop[rb], grid.n_points, epsilon)
    return _block(scores)
