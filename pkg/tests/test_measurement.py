import logging
import math

import numpy as np
import pytest

from longfid.data_model import DropoutVector, MeasurementMatrix, TimeGrid
from longfid.errors import ConfigurationError, DataError
from longfid.measurement import (
    dropout_divergence,
    kl_divergence,
    measurement_density,
    measurement_similarity,
    reference_protocol,
    subsample_protocol,
)

from conftest import continuous_dataset


def matrix_from_bits(bits) -> MeasurementMatrix:
    bits = np.asarray(bits, dtype=np.uint8)
    return MeasurementMatrix(
        subjects=tuple(f"s{i}" for i in range(bits.shape[0])),
        grid=TimeGrid(0.0, float(bits.shape[1] - 1), 1.0),
        bits=bits,
    )


class TestMeasurementDensity:
    def test_fully_observed_is_uniform(self):
        matrix = matrix_from_bits(np.ones((4, 5)))
        np.testing.assert_allclose(measurement_density(matrix).values, 0.2)

    def test_single_column_gets_all_mass(self):
        bits = np.zeros((3, 4))
        bits[:, 2] = 1
        values = measurement_density(matrix_from_bits(bits)).values
        assert values.tolist() == [0.0, 0.0, 1.0, 0.0]

    def test_column_sums_over_total(self):
        values = measurement_density(
            matrix_from_bits([[1, 1, 0], [1, 0, 0]])
        ).values
        np.testing.assert_allclose(values, [2 / 3, 1 / 3, 0.0])

    def test_normalization_property(self):
        rng = np.random.default_rng(1)
        bits = (rng.random((20, 30)) < 0.3).astype(np.uint8)
        bits[0, 0] = 1
        values = measurement_density(matrix_from_bits(bits)).values
        assert abs(values.sum() - 1.0) <= 1e-12

    def test_empty_matrix_rejected(self):
        with pytest.raises(DataError, match="no measurements"):
            measurement_density(matrix_from_bits(np.zeros((2, 3))))


class TestMeasurementSimilarity:
    def test_row_permutation_is_perfect(self):
        rng = np.random.default_rng(2)
        bits = (rng.random((12, 9)) < 0.4).astype(np.uint8)
        permuted = bits[rng.permutation(12)]
        result = measurement_similarity(matrix_from_bits(bits), matrix_from_bits(permuted))
        assert result.similarity == 1.0
        assert result.frobenius == 0.0

    def test_complete_dissimilarity(self):
        ones = matrix_from_bits(np.ones((3, 4)))
        zeros = matrix_from_bits(np.zeros((3, 4)))
        assert measurement_similarity(ones, zeros).similarity == 0.0

    def test_two_by_two_hand_case(self):
        a = matrix_from_bits([[1, 0], [0, 1]])
        b = matrix_from_bits([[1, 1], [0, 0]])
        # brute force over both permutations: 2 mismatched bits either way
        result = measurement_similarity(a, b)
        assert result.similarity == 0.5
        assert result.frobenius == pytest.approx(math.sqrt(2.0), rel=1e-15)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a = matrix_from_bits((rng.random((10, 7)) < 0.5).astype(np.uint8))
        b = matrix_from_bits((rng.random((10, 7)) < 0.5).astype(np.uint8))
        assert measurement_similarity(a, b).similarity == measurement_similarity(b, a).similarity

    def test_frobenius_consistency(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            a = matrix_from_bits((rng.random((8, 6)) < 0.5).astype(np.uint8))
            b = matrix_from_bits((rng.random((8, 6)) < 0.5).astype(np.uint8))
            result = measurement_similarity(a, b)
            assert 0.0 <= result.similarity <= 1.0
            assert result.frobenius**2 == pytest.approx(
                8 * 6 * (1.0 - result.similarity), rel=1e-12
            )

    def test_dimension_mismatch_instructs_subsampling(self):
        a = matrix_from_bits(np.ones((3, 4)))
        b = matrix_from_bits(np.ones((2, 4)))
        with pytest.raises(DataError, match="subsample"):
            measurement_similarity(a, b)


class TestKlDivergence:
    def test_identical_is_exactly_zero(self):
        p = np.array([0.2, 0.5, 0.3])
        assert kl_divergence(p, p.copy(), epsilon=1e-6) == 0.0

    def test_hand_value(self):
        got = kl_divergence(np.array([0.5, 0.5]), np.array([0.25, 0.75]), epsilon=1e-9)
        expected = 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0)
        assert got == pytest.approx(expected, abs=1e-6)
        assert got == pytest.approx(0.1438, abs=1e-3)

    def test_disjoint_mass_grows_as_epsilon_shrinks(self):
        p = np.array([1.0, 0.0])
        q = np.array([0.0, 1.0])
        coarse = kl_divergence(p, q, epsilon=1e-3)
        fine = kl_divergence(p, q, epsilon=1e-6)
        assert math.isfinite(coarse) and math.isfinite(fine)
        assert fine > coarse > 0.0

    def test_non_negative_on_random_pairs(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            p = rng.random(6)
            q = rng.random(6)
            assert kl_divergence(p, q, epsilon=1e-6) >= 0.0

    def test_bad_epsilon(self):
        with pytest.raises(ConfigurationError):
            kl_divergence(np.array([1.0]), np.array([1.0]), epsilon=0.0)

    def test_mismatched_support(self):
        with pytest.raises(DataError):
            kl_divergence(np.array([1.0]), np.array([0.5, 0.5]))


class TestDropoutDivergence:
    def test_identical_vectors_zero(self):
        grid = TimeGrid(0.0, 3.0, 1.0)
        vec = DropoutVector(grid=grid, indices=np.array([0, 2, 2, 3]))
        assert dropout_divergence(vec, vec) == 0.0

    def test_sentinels_excluded(self):
        grid = TimeGrid(0.0, 1.0, 1.0)
        a = DropoutVector(grid=grid, indices=np.array([0, 1, -1]))
        b = DropoutVector(grid=grid, indices=np.array([0, 1]))
        assert dropout_divergence(a, b) == 0.0

    def test_grid_mismatch(self):
        a = DropoutVector(grid=TimeGrid(0.0, 1.0, 1.0), indices=np.array([0]))
        b = DropoutVector(grid=TimeGrid(0.0, 2.0, 1.0), indices=np.array([0]))
        with pytest.raises(DataError, match="share a grid"):
            dropout_divergence(a, b)

    def test_all_sentinels_rejected(self):
        grid = TimeGrid(0.0, 1.0, 1.0)
        a = DropoutVector(grid=grid, indices=np.array([-1, -1]))
        with pytest.raises(DataError, match="dropout distribution empty"):
            dropout_divergence(a, a)


def _protocol_dataset(n=12, seed=0):
    rng = np.random.default_rng(seed)
    series = {}
    for i in range(n):
        m = int(rng.integers(2, 6))
        series[f"p{i:02d}"] = (np.sort(rng.choice(10, m, replace=False)).astype(float),
                               rng.normal(0, 1, m))
    return continuous_dataset(series)


class TestSubsampleProtocol:
    def test_deterministic_given_seed(self):
        ds = _protocol_dataset()
        syn = _protocol_dataset(seed=5)
        a = subsample_protocol(ds, syn, "y", subsample_size=8, iterations=4, seed=42)
        b = subsample_protocol(ds, syn, "y", subsample_size=8, iterations=4, seed=42)
        assert a.scores == b.scores
        assert a.reference == b.reference

    def test_self_comparison_with_full_roster_is_exact(self):
        ds = _protocol_dataset()
        report = subsample_protocol(ds, ds, "y", subsample_size=100, iterations=3, seed=1)
        assert report.subsample_size == len(ds.subjects)
        assert report.scores.similarity.mean == 1.0
        assert report.scores.similarity.sd == 0.0
        assert report.scores.dropout_divergence.mean == 0.0
        assert report.scores.frobenius.mean == 0.0

    def test_clamping_warns(self, caplog):
        ds = _protocol_dataset()
        with caplog.at_level(logging.WARNING, logger="longfid.measurement"):
            report = subsample_protocol(ds, ds, "y", subsample_size=50, iterations=1, seed=0)
        assert report.subsample_size == len(ds.subjects)
        assert any("clamped" in rec.message for rec in caplog.records)

    def test_single_iteration_has_no_sd(self):
        ds = _protocol_dataset()
        report = subsample_protocol(ds, ds, "y", subsample_size=6, iterations=1, seed=0)
        assert report.scores.similarity.sd is None
        assert report.reference.similarity.sd is None

    def test_needs_two_original_subjects(self):
        ds = continuous_dataset({"A": ([0.0], [1.0])})
        with pytest.raises(DataError, match="at least 2"):
            subsample_protocol(ds, ds, "y", subsample_size=1, iterations=1, seed=0)

    def test_reference_matches_exchangeable_synthetic(self):
        # identical generators on both sides: the main score should sit within
        # a few standard errors of the reference score
        orig = _protocol_dataset(n=60, seed=7)
        syn = _protocol_dataset(n=60, seed=8)
        report = subsample_protocol(orig, syn, "y", subsample_size=30, iterations=20, seed=3)
        spread = report.reference.similarity.sd + report.scores.similarity.sd
        assert abs(report.scores.similarity.mean - report.reference.similarity.mean) < 4 * spread

    def test_fallback_distance_path_matches_precompute(self, monkeypatch):
        import longfid.measurement as m

        orig = _protocol_dataset(n=14, seed=2)
        syn = _protocol_dataset(n=14, seed=3)
        fast = subsample_protocol(orig, syn, "y", subsample_size=6, iterations=4, seed=9)
        monkeypatch.setattr(m, "PRECOMPUTE_CELL_BUDGET", 0)
        slow = subsample_protocol(orig, syn, "y", subsample_size=6, iterations=4, seed=9)
        assert fast.scores == slow.scores
        assert fast.reference == slow.reference


class TestReferenceProtocol:
    def test_deterministic_and_bounded(self):
        ds = _protocol_dataset(n=30, seed=11)
        a = reference_protocol(ds, "y", subsample_size=10, iterations=5, seed=2)
        b = reference_protocol(ds, "y", subsample_size=10, iterations=5, seed=2)
        assert a == b
        assert 0.0 <= a.similarity.mean <= 1.0
        assert a.dropout_divergence.mean >= 0.0

    def test_matches_protocol_reference_block(self):
        ds = _protocol_dataset(n=24, seed=13)
        syn = _protocol_dataset(n=24, seed=14)
        grid = TimeGrid(0.0, 9.0, 1.0)
        full = subsample_protocol(ds, syn, "y", grid=grid, subsample_size=8,
                                  iterations=6, seed=21)
        # reference block draws rows from the same derived per-iteration rngs,
        # but after the main draws; recomputing directly will not match unless
        # the iteration structure is identical, so only sanity-check ranges.
        ref = reference_protocol(ds, "y", grid=grid, subsample_size=8,
                                 iterations=6, seed=21)
        for block in (full.reference, ref):
            assert 0.0 <= block.similarity.mean <= 1.0
