"""
test_spectrum.py

Tests for FIM spectra, sign canonicalization and direction tracking.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from twigkit.exceptions import SpectrumError
from twigkit.integrate import SampleGrid, integrate_with_sensitivities
from twigkit.models import build_model
from twigkit.spectrum import (canonical_signs, fim_spectrum, match_directions, resolution_floor,
                              spectrum_from_jacobian, sweep_from_jacobians)

jacobians = arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)),
                   elements=st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False))


class TestSpectrum:
    def test_identity(self):
        spec = spectrum_from_jacobian(np.eye(3), 1.0)
        np.testing.assert_allclose(spec.eigenvalues, 1.0)
        np.testing.assert_allclose(np.abs(spec.eigenvectors), np.eye(3))
        np.testing.assert_allclose(spec.participation, np.eye(3))
        assert spec.rank_floor == 0

    def test_single_parameter(self):
        column = np.array([[0.5], [1.0], [2.0]])
        spec = spectrum_from_jacobian(column, 3.0)
        assert spec.eigenvalues[0] == pytest.approx(0.25 + 1.0 + 4.0)
        assert spec.participation[0, 0] == 1.0

    def test_zero_column_is_floored(self):
        jac = np.array([[1.0, 0.0], [2.0, 0.0]])
        spec = spectrum_from_jacobian(jac, 1.0)
        assert spec.rank_floor == 1
        np.testing.assert_array_equal(spec.floored, [False, True])
        assert spec.eigenvalues[1] == pytest.approx(spec.floor)
        assert spec.dominant(0) == 0

    def test_absolute_floor(self):
        spec = spectrum_from_jacobian(np.diag([1.0, 1e-6]), 1.0, abs_floor=1e-3)
        assert spec.rank_floor == 1
        assert spec.eigenvalues[1] == pytest.approx(1e-6)

    def test_non_finite_rejected(self):
        with pytest.raises(SpectrumError) as info:
            spectrum_from_jacobian(np.array([[np.nan, 1.0]]), 7.0)
        assert info.value.t_max == 7.0

    def test_more_parameters_than_rows(self):
        spec = spectrum_from_jacobian(np.array([[1.0, 1.0, 0.0]]), 1.0)
        assert spec.m == 3
        assert spec.rank_floor == 2
        np.testing.assert_allclose(spec.participation.sum(axis=0), 1.0)

    def test_trajectory_spectrum(self):
        model = build_model('saddle_node')
        tj = integrate_with_sensitivities(model, None, SampleGrid(0.0, 1.0, 10))
        spec = fim_spectrum(tj)
        np.testing.assert_allclose(np.sort(spec.eigenvalues)[::-1], spec.eigenvalues)
        assert spec.floor >= resolution_floor(tj) ** 2
        assert spec.t_max == 1.0

    @settings(max_examples=100, deadline=None)
    @given(jacobians)
    def test_matches_explicit_normal_matrix(self, jac):
        spec = spectrum_from_jacobian(jac, 1.0)
        reference = np.sort(np.linalg.eigvalsh(jac.T @ jac))[::-1]
        scale = max(float(reference[0]), 1e-300)
        np.testing.assert_allclose(spec.eigenvalues, reference, rtol=1e-8, atol=1e-10 * scale)

    @settings(max_examples=100, deadline=None)
    @given(jacobians)
    def test_spectrum_invariants(self, jac):
        spec = spectrum_from_jacobian(jac, 1.0)
        assert np.all(spec.eigenvalues >= 0)
        assert np.all(np.diff(spec.eigenvalues) <= 0)
        np.testing.assert_allclose(spec.participation.sum(axis=0), 1.0, atol=1e-12)
        np.testing.assert_allclose(spec.eigenvectors.T @ spec.eigenvectors, np.eye(spec.m), atol=1e-12)


class TestSigns:
    def test_largest_component_positive(self):
        vectors = canonical_signs(np.array([[0.6, 0.1], [-0.8, -0.9]]))
        np.testing.assert_allclose(vectors, [[-0.6, -0.1], [0.8, 0.9]])

    def test_zero_column_untouched(self):
        np.testing.assert_array_equal(canonical_signs(np.zeros((2, 1))), np.zeros((2, 1)))


class TestTracking:
    def test_swap_is_followed(self):
        prev = spectrum_from_jacobian(np.diag([2.0, 1.0]), 1.0)
        cur = spectrum_from_jacobian(np.diag([1.0, 2.0]), 2.0)
        perm, overlaps = match_directions(prev, cur)
        np.testing.assert_array_equal(perm, [1, 0])
        np.testing.assert_allclose(overlaps, 1.0)

    def test_ties_go_to_lower_indices(self):
        spec = spectrum_from_jacobian(np.eye(2), 1.0)
        perm, _ = match_directions(spec, spec)
        np.testing.assert_array_equal(perm, [0, 1])

    def test_track_path_through_crossing(self):
        t_values = [1.0, 2.0, 4.0]
        jacobians = [np.diag([3.0, 1.0]), np.diag([2.0, 1.5]), np.diag([1.0, 3.0])]
        sweep = sweep_from_jacobians(jacobians, t_values, ('a', 'b'))
        assert sweep.complete
        np.testing.assert_array_equal(sweep.track_path(0), [1, 1, 0])
        np.testing.assert_allclose(sweep.track_eigenvalues(0), [1.0, 2.25, 9.0])
        np.testing.assert_allclose(sweep.track_eigenvalues(1), [9.0, 4.0, 1.0])
        assert sweep.weak_links == 0

    def test_row_maximum_claimed(self):
        rng = np.random.default_rng(3)
        base = rng.normal(size=(6, 4))
        prev = spectrum_from_jacobian(base, 1.0)
        cur = spectrum_from_jacobian(base + 1e-3 * rng.normal(size=(6, 4)), 2.0)
        perm, overlaps = match_directions(prev, cur)
        overlap = np.abs(prev.eigenvectors.T @ cur.eigenvectors)
        np.testing.assert_array_equal(perm, np.argmax(overlap, axis=1))
        np.testing.assert_allclose(overlaps, overlap.max(axis=1))

    def test_sweep_properties(self, diagonal_sweep):
        assert diagonal_sweep.m == 3
        assert len(diagonal_sweep.tracking) == 15
        np.testing.assert_allclose(diagonal_sweep.horizons, diagonal_sweep.grid_tmax)
        assert not diagonal_sweep.track_floored(2).any()
