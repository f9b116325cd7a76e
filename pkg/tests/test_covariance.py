import numpy as np
import pytest

from longfid.covariance import (
    default_lags,
    quantile_bin_indices,
    rank_order_variability,
    transition_profile,
    variance_decomposition,
    variance_profile,
    variogram,
)
from longfid.data_model import TimeGrid
from longfid.errors import DataError
from longfid.kernel import normalized_weights, weight_matrix
from longfid.marginal import ProfileSeries
from longfid.simgen import ContinuousModel, ObservationDesign, simulate_continuous

from conftest import continuous_dataset, discrete_dataset


def _rank_background(low=1, high=100, times=(0.0, 1.0, 2.0)):
    """Population with values low..high at every time: known quantile curves."""
    series = {}
    for v in range(low, high + 1):
        series[f"b{v:03d}"] = (list(times), [float(v)] * len(times))
    return series


class TestVarianceProfile:
    def test_constant_data_has_zero_variance(self):
        ds = continuous_dataset({"A": ([0.0, 1.0], [5.0, 5.0]), "B": ([2.0], [5.0])})
        profile = variance_profile(ds, "y", TimeGrid(0.0, 2.0, 1.0), 6.0)
        np.testing.assert_allclose(profile.values, 0.0, atol=1e-12)

    def test_symmetric_pair_splits_variance(self):
        ds = continuous_dataset({"A": ([0.0], [0.0]), "B": ([2.0], [10.0])})
        profile = variance_profile(ds, "y", TimeGrid(0.0, 2.0, 1.0), 6.0)
        # at t=1 weights are exactly (0.5, 0.5): mu=5, var=25
        assert profile.values[1] == 25.0

    def test_single_observation_zero_variance(self):
        ds = continuous_dataset({"A": ([0.0], [3.0])})
        profile = variance_profile(ds, "y", TimeGrid(0.0, 4.0, 1.0), 2.0)
        np.testing.assert_allclose(profile.values, 0.0, atol=1e-25)

    def test_moment_identity(self):
        rng = np.random.default_rng(2)
        series = {
            f"s{i}": (np.sort(rng.uniform(0, 20, 5)), rng.normal(2, 3, 5))
            for i in range(25)
        }
        ds = continuous_dataset(series)
        grid = TimeGrid(0.0, 20.0, 1.0)
        profile = variance_profile(ds, "y", grid, 4.0)
        view = ds.variable_view("y")
        weights = weight_matrix(grid.points, view.times, 4.0)
        moment = weights @ (view.values**2) - (weights @ view.values) ** 2
        np.testing.assert_allclose(profile.values, moment, atol=1e-9)


class TestVariogram:
    def test_random_intercept_data_is_flat_zero(self):
        times = np.arange(5.0)
        series = {f"s{i}": (times, np.full(5, float(i))) for i in range(10)}
        ds = continuous_dataset(series)
        result = variogram(ds, "y", h=1.0, grid=TimeGrid(0.0, 4.0, 1.0))
        np.testing.assert_allclose(result.gamma, 0.0, atol=1e-9)

    def test_single_pair_hand_value(self):
        # residuals (-1, +1) against an (effectively) flat mean of 1
        ds = continuous_dataset({"A": ([0.0, 1.0], [0.0, 2.0])})
        result = variogram(ds, "y", h=1e4, lags=np.array([1.0]))
        assert result.gamma[0] == pytest.approx(2.0, abs=1e-5)
        assert result.n_pairs == 1

    def test_matches_explicit_double_sum(self):
        rng = np.random.default_rng(9)
        series = {
            f"s{i}": (np.sort(rng.uniform(0, 12, 4)), rng.normal(0, 1, 4))
            for i in range(8)
        }
        ds = continuous_dataset(series)
        h = 1.5
        lags = np.array([1.0, 3.0, 5.0])
        result = variogram(ds, "y", h=h, lags=lags)

        # independent oracle: explicit loops over subjects and pairs
        from longfid.covariance import mean_at_times

        gaps, sqd = [], []
        for subject in ds.subjects:
            t, x = ds.series(subject, "y")
            r = x - mean_at_times(ds, "y", t, h)
            for k in range(len(t) - 1):
                for l in range(k + 1, len(t)):
                    gaps.append(t[l] - t[k])
                    sqd.append((r[k] - r[l]) ** 2)
        gaps, sqd = np.array(gaps), np.array(sqd)
        for lag, got in zip(lags, result.gamma):
            w = normalized_weights(lag, gaps, h)
            assert abs(w.sum() - 1.0) <= 1e-12
            assert got == pytest.approx(0.5 * np.sum(w * sqd), rel=1e-10)

    def test_needs_a_pair(self):
        ds = continuous_dataset({"A": ([0.0], [1.0]), "B": ([1.0], [2.0])})
        with pytest.raises(DataError, match="variogram undefined"):
            variogram(ds, "y", h=1.0, lags=np.array([1.0]))

    def test_single_observation_subjects_skipped(self):
        ds = continuous_dataset(
            {"A": ([0.0, 1.0], [0.0, 1.0]), "B": ([0.5], [9.0])}
        )
        result = variogram(ds, "y", h=1.0, lags=np.array([1.0]))
        assert result.n_subjects_used == 1
        assert result.n_subjects_skipped == 1

    def test_default_lags_cover_half_span(self):
        lags = default_lags(TimeGrid(0.0, 10.0, 1.0))
        assert lags.tolist() == [1.0, 2.0, 3.0, 4.0, 5.0]

    def test_stationary_variance_range_shrinks_with_n(self):
        model = ContinuousModel(nugget_var=0.5, serial_var=0.5, serial_range=3.0)
        grid = TimeGrid(0.0, 23.0, 1.0)

        def profile_range(n, seed):
            design = ObservationDesign(n_subjects=n, grid=grid)
            ds = simulate_continuous(model, design, seed=seed)
            values = variance_profile(ds, "y", grid, 6.0).values
            return values.max() - values.min()

        small = profile_range(40, seed=100)
        large = profile_range(640, seed=101)
        assert large < small
        assert large < 0.12  # frozen from the fixed-seed run


class TestRankOrderVariability:
    def test_constant_background_single_bin_subject(self):
        series = _rank_background()
        series["target"] = ([0.0, 1.0, 2.0], [50.0, 50.0, 50.0])
        ds = continuous_dataset(series)
        result = rank_order_variability(ds, "y", TimeGrid(0.0, 2.0, 1.0), 0.1)
        value = dict(zip(result.subject_ids, result.values))["target"]
        assert value == 0.0

    def test_maximal_upward_drift(self):
        series = _rank_background(times=(0.0, 1.0))
        series["target"] = ([0.0, 1.0], [0.5, 99.5])
        ds = continuous_dataset(series)
        grid = TimeGrid(0.0, 1.0, 1.0)
        bins = quantile_bin_indices(ds, "y", grid, 0.1)
        view = ds.variable_view("y")
        target_rows = view.subject_index == list(ds.subjects).index("target")
        assert bins[target_rows].tolist() == [1, 6]
        result = rank_order_variability(ds, "y", grid, 0.1)
        assert dict(zip(result.subject_ids, result.values))["target"] == 1.0

    def test_three_step_hand_value(self):
        series = _rank_background()
        series["target"] = ([0.0, 1.0, 2.0], [10.0, 60.0, 30.0])
        ds = continuous_dataset(series)
        grid = TimeGrid(0.0, 2.0, 1.0)
        bins = quantile_bin_indices(ds, "y", grid, 0.1)
        view = ds.variable_view("y")
        target_rows = view.subject_index == list(ds.subjects).index("target")
        assert bins[target_rows].tolist() == [2, 4, 3]
        result = rank_order_variability(ds, "y", grid, 0.1)
        value = dict(zip(result.subject_ids, result.values))["target"]
        assert value == pytest.approx((1 / 5) * (1 / 2) * ((4 - 2) + (3 - 4)), abs=1e-15)

    def test_boundary_value_falls_in_lower_bin(self):
        series = _rank_background()
        series["target"] = ([0.0], [5.0])  # exactly on a constant background value
        ds = continuous_dataset(series)
        bins = quantile_bin_indices(ds, "y", TimeGrid(0.0, 2.0, 1.0), 0.1)
        view = ds.variable_view("y")
        target_rows = view.subject_index == list(ds.subjects).index("target")
        # 5 is the 5th of 100 values: exactly on the 0.05 curve, lower bin
        assert bins[target_rows].tolist() == [1]

    def test_telescoping_identity_and_range(self):
        rng = np.random.default_rng(23)
        series = {}
        for i in range(200):
            m = int(rng.integers(1, 7))
            series[f"s{i:03d}"] = (np.sort(rng.uniform(0, 30, m)), rng.normal(0, 1, m))
        ds = continuous_dataset(series)
        grid = TimeGrid(0.0, 30.0, 1.0)
        result = rank_order_variability(ds, "y", grid, 6.0)
        bins = quantile_bin_indices(ds, "y", grid, 6.0)
        view = ds.variable_view("y")
        by_subject = dict(zip(result.subject_ids, result.values))
        checked = 0
        for pos, start, stop in view.segments:
            if stop - start < 2:
                continue
            seg = bins[start:stop]
            expected = (int(seg[-1]) - int(seg[0])) / (result.q_count * (len(seg) - 1))
            assert by_subject[ds.subjects[pos]] == expected
            checked += 1
        assert checked == len(result.values) > 50
        assert np.all(result.values >= -1.0) and np.all(result.values <= 1.0)
        assert result.n_excluded == 200 - checked


class TestTransitionProfile:
    def test_single_state_everywhere(self):
        ds = discrete_dataset(
            {"A": ([0.0, 1.0, 2.0], ["a", "a", "a"]), "B": ([0.0, 1.0], ["a", "a"])},
            classes=("a", "b"),
        )
        result = transition_profile(ds, "s", TimeGrid(0.0, 2.0, 1.0), 6.0)
        np.testing.assert_allclose(result.probs[:, 0, 0], 1.0)
        np.testing.assert_allclose(result.probs[:, 0, 1], 0.0)
        assert np.all(np.isnan(result.probs[:, 1, :]))
        assert result.defined_sources().tolist() == [True, False]

    def test_single_pair_is_certain(self):
        ds = discrete_dataset({"A": ([0.0, 1.0], ["a", "b"])}, classes=("a", "b"))
        result = transition_profile(ds, "s", TimeGrid(0.0, 5.0, 1.0), 2.0)
        np.testing.assert_allclose(result.probs[:, 0, 1], 1.0)

    def test_symmetric_pairs_split_evenly(self):
        ds = discrete_dataset(
            {"A": ([0.0, 2.0], ["a", "b"]), "B": ([4.0, 6.0], ["a", "a"])},
            classes=("a", "b"),
        )
        result = transition_profile(ds, "s", TimeGrid(0.0, 6.0, 1.0), 2.0)
        # at t=3 both pairs have distance max(|3-t_k|,|3-t_l|) = 3
        assert result.probs[3, 0, 0] == pytest.approx(0.5, abs=1e-12)
        assert result.probs[3, 0, 1] == pytest.approx(0.5, abs=1e-12)

    def test_rows_stochastic_where_defined(self):
        rng = np.random.default_rng(31)
        labels = np.array(["a", "b", "c"], dtype=object)
        series = {
            f"s{i}": (np.arange(6.0), labels[rng.integers(0, 3, 6)])
            for i in range(20)
        }
        ds = discrete_dataset(series, classes=("a", "b", "c"))
        result = transition_profile(ds, "s", TimeGrid(0.0, 5.0, 1.0), 3.0)
        sums = result.probs.sum(axis=2)
        defined = result.defined_sources()
        assert np.all(defined)
        np.testing.assert_allclose(sums, 1.0, atol=1e-9)
        assert np.nanmin(result.probs) >= 0.0
        assert np.nanmax(result.probs) <= 1.0

    def test_max_gap_filters_pairs(self):
        ds = discrete_dataset(
            {"A": ([0.0, 10.0], ["a", "b"]), "B": ([0.0, 1.0], ["a", "a"])},
            classes=("a", "b"),
        )
        grid = TimeGrid(0.0, 10.0, 1.0)
        unfiltered = transition_profile(ds, "s", grid, 2.0)
        filtered = transition_profile(ds, "s", grid, 2.0, max_gap=5.0)
        assert unfiltered.pair_counts[0] == 2
        np.testing.assert_allclose(filtered.probs[:, 0, 0], 1.0)

    def test_needs_consecutive_pair(self):
        ds = discrete_dataset({"A": ([0.0], ["a"])}, classes=("a",))
        with pytest.raises(DataError, match="transition profile undefined"):
            transition_profile(ds, "s", TimeGrid(0.0, 1.0, 1.0), 2.0)

    def test_self_identity(self):
        rng = np.random.default_rng(7)
        labels = np.array(["x", "y"], dtype=object)
        series = {
            f"s{i}": (np.arange(4.0), labels[rng.integers(0, 2, 4)])
            for i in range(10)
        }
        a = discrete_dataset(series, classes=("x", "y"))
        b = discrete_dataset(series, classes=("x", "y"))
        grid = TimeGrid(0.0, 3.0, 1.0)
        pa = transition_profile(a, "s", grid, 6.0)
        pb = transition_profile(b, "s", grid, 6.0)
        np.testing.assert_array_equal(pa.probs, pb.probs)


class TestVarianceDecomposition:
    def test_descriptive_estimates(self):
        lags = np.arange(1.0, 9.0)
        gamma = np.array([0.3, 0.5, 0.7, 0.8, 0.9, 0.95, 1.0, 1.05])
        vario = type("V", (), {})()
        from longfid.covariance import VariogramSeries

        vario = VariogramSeries(lags=lags, gamma=gamma)
        grid = TimeGrid(0.0, 3.0, 1.0)
        variance = ProfileSeries(
            grid=grid, values=np.array([1.4, 1.5, 1.6, 1.5]), label="variance"
        )
        result = variance_decomposition(vario, variance)
        assert result.nugget == 0.3
        assert result.sill == pytest.approx(np.mean(gamma[6:]))
        assert result.total_variance == pytest.approx(1.5)
        assert result.between_subject == pytest.approx(1.5 - np.mean(gamma[6:]))
