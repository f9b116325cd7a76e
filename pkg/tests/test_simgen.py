import numpy as np
import pytest

from longfid.covariance import transition_profile, variogram
from longfid.data_model import TimeGrid, build_measurement_matrix, dropout_points
from longfid.errors import ConfigurationError, DataError
from longfid.marginal import class_profile
from longfid.measurement import kl_divergence
from longfid.simgen import (
    ContinuousModel,
    DiscreteModel,
    ObservationDesign,
    apply_design,
    geometric_dropout_masses,
    merge_datasets,
    simulate_continuous,
    simulate_discrete,
)

GRID = TimeGrid(0.0, 9.0, 1.0)


def observations(ds):
    return list(ds.iter_observations())


class TestContinuousModel:
    def test_noiseless_model_reproduces_the_mean(self):
        model = ContinuousModel(mean=lambda t: 2.0 * t + 1.0)
        design = ObservationDesign(n_subjects=5, grid=GRID)
        ds = simulate_continuous(model, design, seed=0)
        for subject in ds.subjects:
            times, values = ds.series(subject, "y")
            np.testing.assert_array_equal(values, 2.0 * times + 1.0)

    def test_intercept_only_gives_constant_offsets(self):
        model = ContinuousModel(intercept_var=1.0)
        design = ObservationDesign(n_subjects=8, grid=GRID)
        ds = simulate_continuous(model, design, seed=1)
        offsets = []
        for subject in ds.subjects:
            _, values = ds.series(subject, "y")
            assert np.ptp(values) == 0.0
            offsets.append(values[0])
        assert np.ptp(offsets) > 0.0
        result = variogram(ds, "y", h=1.0, grid=GRID)
        np.testing.assert_allclose(result.gamma, 0.0, atol=1e-9)

    def test_seed_determinism(self):
        model = ContinuousModel(nugget_var=0.3, serial_var=0.7, serial_range=2.0,
                                intercept_var=0.2)
        design = ObservationDesign(n_subjects=6, grid=GRID,
                                   keep_probability=0.8, dropout_hazard=0.05)
        a = simulate_continuous(model, design, seed=5)
        b = simulate_continuous(model, design, seed=5)
        assert observations(a) == observations(b)
        c = simulate_continuous(model, design, seed=6)
        assert observations(a) != observations(c)

    def test_negative_variance_rejected(self):
        with pytest.raises(ConfigurationError):
            ContinuousModel(nugget_var=-0.1)

    def test_correlation_kinds(self):
        exp_model = ContinuousModel(serial_var=1.0, serial_range=3.0)
        assert exp_model.correlation(np.array([3.0]))[0] == pytest.approx(np.exp(-1.0))
        gauss = ContinuousModel(serial_var=1.0, serial_range=3.0, serial_kind="gaussian")
        assert gauss.correlation(np.array([3.0]))[0] == pytest.approx(np.exp(-1.0))
        assert gauss.correlation(np.array([6.0]))[0] == pytest.approx(np.exp(-4.0))

    def test_theoretical_variogram_shape(self):
        model = ContinuousModel(nugget_var=0.2, serial_var=0.8, serial_range=3.0)
        got = model.theoretical_variogram(np.array([0.0, 3.0]))
        np.testing.assert_allclose(got, [0.2, 0.2 + 0.8 * (1 - np.exp(-1.0))])

    def test_empirical_variogram_tracks_the_theoretical_curve(self):
        grid = TimeGrid(0.0, 47.0, 1.0)
        model = ContinuousModel(nugget_var=0.2, serial_var=0.8, serial_range=3.0)
        design = ObservationDesign(n_subjects=500, grid=grid)
        ds = simulate_continuous(model, design, seed=55)
        lags = np.array([3.0, 6.0, 9.0])
        estimate = variogram(ds, "y", h=0.5, lags=lags).gamma
        truth = model.theoretical_variogram(lags)
        np.testing.assert_allclose(estimate, truth, rtol=0.10)


class TestDiscreteModel:
    def test_identity_matrix_freezes_the_chain(self):
        model = DiscreteModel(classes=("a", "b"), transitions=np.eye(2),
                              initial=np.array([0.4, 0.6]))
        design = ObservationDesign(n_subjects=10, grid=GRID)
        ds = simulate_discrete(model, design, seed=2)
        for subject in ds.subjects:
            _, values = ds.series(subject, "state")
            assert len(set(values)) == 1

    def test_absorbing_state_class_share_is_monotone(self):
        model = DiscreteModel(
            classes=("a", "b"),
            transitions=np.array([[0.7, 0.3], [0.0, 1.0]]),
            initial=np.array([1.0, 0.0]),
        )
        design = ObservationDesign(n_subjects=400, grid=GRID)
        ds = simulate_discrete(model, design, seed=3)
        profile = class_profile(ds, "state", GRID, 0.5)
        share_b = profile.values[:, 1]
        assert np.all(np.diff(share_b) >= -0.02)
        assert share_b[-1] > share_b[0]

    def test_uniform_chain_recovers_half_transitions(self):
        model = DiscreteModel(
            classes=("a", "b"),
            transitions=np.full((2, 2), 0.5),
            initial=np.array([0.5, 0.5]),
        )
        design = ObservationDesign(n_subjects=1000, grid=GRID)
        ds = simulate_discrete(model, design, seed=4)
        profile = transition_profile(ds, "state", GRID, 6.0)
        defined = profile.defined_sources()
        assert defined.all()
        np.testing.assert_allclose(profile.probs, 0.5, atol=0.05)

    def test_bad_rows_rejected(self):
        with pytest.raises(ConfigurationError):
            DiscreteModel(classes=("a", "b"),
                          transitions=np.array([[0.5, 0.6], [0.5, 0.5]]),
                          initial=np.array([0.5, 0.5]))


class TestApplyDesign:
    def test_identity_design_is_identity(self):
        model = ContinuousModel(nugget_var=1.0)
        ds = simulate_continuous(model, ObservationDesign(n_subjects=4, grid=GRID), seed=7)
        same = apply_design(ds, ObservationDesign(n_subjects=4, grid=GRID), seed=9)
        assert observations(same) == observations(ds)

    def test_zero_keep_probability_empties_the_data(self):
        model = ContinuousModel(nugget_var=1.0)
        ds = simulate_continuous(model, ObservationDesign(n_subjects=4, grid=GRID), seed=7)
        empty = apply_design(
            ds, ObservationDesign(n_subjects=4, grid=GRID, keep_probability=0.0), seed=9
        )
        assert empty.n_observations("y") == 0
        assert empty.subjects == ds.subjects

    def test_geometric_dropout_distribution(self):
        design = ObservationDesign(
            n_subjects=1000, grid=GRID, dropout_hazard=0.1
        )
        ds = simulate_continuous(ContinuousModel(), design, seed=11)
        drops = dropout_points(build_measurement_matrix(ds, "y", GRID))
        counts = np.bincount(drops.indices[drops.indices >= 0], minlength=GRID.n_points)
        analytic = geometric_dropout_masses(design)
        assert analytic.sum() == pytest.approx(1.0, abs=1e-12)
        # closed-form geometric masses for constant hazard
        expected = [0.9**m * 0.1 for m in range(9)] + [0.9**9]
        np.testing.assert_allclose(analytic, expected, rtol=1e-12)
        assert kl_divergence(counts.astype(float), analytic, epsilon=1e-9) < 0.01

    def test_determinism(self):
        design = ObservationDesign(n_subjects=6, grid=GRID, keep_probability=0.5)
        ds = simulate_continuous(ContinuousModel(nugget_var=1.0),
                                 ObservationDesign(n_subjects=6, grid=GRID), seed=1)
        a = apply_design(ds, design, seed=3)
        b = apply_design(ds, design, seed=3)
        assert observations(a) == observations(b)


class TestObservationDesign:
    def test_probability_bounds_checked(self):
        with pytest.raises(ConfigurationError):
            ObservationDesign(n_subjects=1, grid=GRID, keep_probability=1.5)
        with pytest.raises(ConfigurationError):
            ObservationDesign(n_subjects=1, grid=GRID, dropout_hazard=-0.1)

    def test_per_point_vectors_accepted(self):
        keep = np.linspace(0.2, 1.0, GRID.n_points)
        design = ObservationDesign(n_subjects=1, grid=GRID, keep_probability=keep)
        assert design.keep.shape == (GRID.n_points,)


class TestMergeDatasets:
    def test_disjoint_variables_combined(self):
        design = ObservationDesign(n_subjects=3, grid=GRID)
        a = simulate_continuous(ContinuousModel(), design, seed=0, variable_id="u")
        b = simulate_continuous(ContinuousModel(), design, seed=1, variable_id="v")
        merged = merge_datasets([a, b])
        assert merged.variables == ("u", "v")
        assert merged.subjects == a.subjects

    def test_duplicate_variable_rejected(self):
        design = ObservationDesign(n_subjects=3, grid=GRID)
        a = simulate_continuous(ContinuousModel(), design, seed=0)
        with pytest.raises(DataError, match="duplicate variable"):
            merge_datasets([a, a])
