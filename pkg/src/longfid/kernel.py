"""Gaussian kernel smoothing: normalized weights, weighted ECDF, quantiles.

All smoothed metrics share this machinery.  A target time ``t`` receives a
weight for every observation time ``t'`` of the variable, proportional to

    K_h(t, t') = (1 / h) * exp(-(t - t')^2 / (2 h^2)),

normalized to sum to one over all observations of the variable.  Weights are
computed with a max-shifted exponent so that normalization stays exact even
when every observation is many bandwidths away from the target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataError

#: Bandwidth used by the CLI when none is given (in time units).
DEFAULT_BANDWIDTH = 6.0

#: Quantile levels used by quantile profiles and baseline strata by default.
DEFAULT_QUANTILE_LEVELS = (0.05, 0.25, 0.50, 0.75, 0.95)


def _check_bandwidth(h: float) -> float:
    if not (isinstance(h, (int, float)) and h > 0 and np.isfinite(h)):
        raise ConfigurationError(f"bandwidth must be a positive finite real, got {h}")
    return float(h)


def gaussian_kernel(t, t_prime, h: float):
    """Gaussian kernel value(s) ``(1/h) exp(-(t - t')^2 / (2 h^2))``."""
    h = _check_bandwidth(h)
    diff = np.asarray(t, dtype=np.float64) - np.asarray(t_prime, dtype=np.float64)
    return np.exp(-(diff * diff) / (2.0 * h * h)) / h


def normalized_weights(t: float, times: np.ndarray, h: float) -> np.ndarray:
    """Kernel weights of all observation times for target ``t``, summing to 1."""
    h = _check_bandwidth(h)
    times = np.asarray(times, dtype=np.float64)
    if times.size == 0:
        raise DataError("no data for variable: cannot compute kernel weights")
    e = -((t - times) ** 2) / (2.0 * h * h)
    e -= e.max()
    w = np.exp(e)
    w /= w.sum()
    return w


def weight_matrix(targets: np.ndarray, times: np.ndarray, h: float) -> np.ndarray:
    """Row-normalized kernel weights, one row per target time.

    Shape ``(len(targets), len(times))``; each row sums to 1.
    """
    h = _check_bandwidth(h)
    targets = np.asarray(targets, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    if times.size == 0:
        raise DataError("no data for variable: cannot compute kernel weights")
    e = -((targets[:, None] - times[None, :]) ** 2) / (2.0 * h * h)
    e -= e.max(axis=1, keepdims=True)
    w = np.exp(e)
    w /= w.sum(axis=1, keepdims=True)
    return w


def effective_sample_size(weights: np.ndarray) -> np.ndarray:
    """ESS = 1 / sum(w^2) per weight vector (last axis)."""
    w = np.asarray(weights, dtype=np.float64)
    return 1.0 / np.sum(w * w, axis=-1)


@dataclass(frozen=True, eq=False)
class WeightedEcdf:
    """Weighted empirical CDF materialized at the sorted distinct values."""

    values: np.ndarray  # sorted distinct observed values
    cumulative: np.ndarray  # F at each value, non-decreasing, ends at ~1

    def __post_init__(self) -> None:
        for arr in (self.values, self.cumulative):
            arr.flags.writeable = False


def weighted_ecdf(values: np.ndarray, weights: np.ndarray) -> WeightedEcdf:
    """F(z) = sum of weights of observations with value <= z."""
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if values.shape != weights.shape:
        raise DataError("values and weights must be parallel arrays")
    if values.size == 0:
        raise DataError("cannot build an ECDF from zero observations")
    order = np.argsort(values, kind="stable")
    v = values[order]
    cum = np.cumsum(weights[order])
    keep = np.empty(len(v), dtype=bool)
    keep[-1] = True
    keep[:-1] = v[1:] != v[:-1]
    return WeightedEcdf(values=v[keep].copy(), cumulative=cum[keep].copy())


def weighted_quantile(ecdf: WeightedEcdf, q: float) -> float:
    """Generalized inverse ``inf { z : F(z) >= q }`` for ``q`` in (0, 1)."""
    if not (0.0 < q < 1.0):
        raise ConfigurationError(f"quantile level must lie in (0, 1), got {q}")
    idx = int(np.searchsorted(ecdf.cumulative, q, side="left"))
    idx = min(idx, len(ecdf.values) - 1)
    return float(ecdf.values[idx])


def batch_weighted_quantiles(
    values: np.ndarray, weights: np.ndarray, q_levels
) -> np.ndarray:
    """Quantiles at several levels for several weight vectors at once.

    ``weights`` has shape ``(m, n)`` with rows summing to 1 (one row per
    target time); returns shape ``(m, len(q_levels))``.  Uses the same
    generalized-inverse convention as :func:`weighted_quantile`.
    """
    values = np.asarray(values, dtype=np.float64)
    weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    q_levels = [float(q) for q in q_levels]
    for q in q_levels:
        if not (0.0 < q < 1.0):
            raise ConfigurationError(f"quantile level must lie in (0, 1), got {q}")
    if values.size == 0:
        raise DataError("cannot compute quantiles from zero observations")
    order = np.argsort(values, kind="stable")
    v = values[order]
    cum = np.cumsum(weights[:, order], axis=1)
    out = np.empty((weights.shape[0], len(q_levels)), dtype=np.float64)
    last = len(v) - 1
    for row in range(weights.shape[0]):
        for qi, q in enumerate(q_levels):
            idx = min(int(np.searchsorted(cum[row], q, side="left")), last)
            out[row, qi] = v[idx]
    return out
