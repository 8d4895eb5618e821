"""
test_integrate.py

Tests for trajectory integration, forward sensitivities and the finite-difference cross-check.
"""

import math

import numpy as np
import pytest

from twigkit.exceptions import ConfigurationError, HorizonExceededError
from twigkit.integrate import (PoincareSection, SampleGrid, finite_difference_jacobian, integrate_trajectory,
                               integrate_with_sensitivities, trajectory_velocity)
from twigkit.models import build_model, model_from_document
from twigkit.utils import relative_discrepancy

TIGHT = {'rtol': 1e-10, 'atol': 1e-12}


def constant_model():
    return model_from_document({
        'name': 'constant',
        'state_dim': 1,
        'params': [{'name': 'k', 'value': 3.0}, {'name': 'y0', 'value': 2.0, 'kind': 'initial_condition'}],
        'equations': [[]],
    })


def rotation_model():
    """x' = -omega y, y' = omega x, started off the x axis"""
    return model_from_document({
        'name': 'rotation',
        'state_dim': 2,
        'params': [
            {'name': 'omega', 'value': 1.0},
            {'name': 'x0', 'value': 1.0, 'kind': 'initial_condition', 'state': 0},
            {'name': 'y0', 'value': -0.5, 'kind': 'initial_condition', 'state': 1},
        ],
        'equations': [
            [{'coeff': {'param': 'omega', 'scale': -1.0}, 'powers': [0, 1]}],
            [{'coeff': {'param': 'omega'}, 'powers': [1, 0]}],
        ],
    })


class TestSampleGrid:
    def test_times(self):
        grid = SampleGrid(0.0, 5.0, 5)
        np.testing.assert_allclose(grid.times, [1.0, 2.0, 3.0, 4.0, 5.0])
        assert grid.t_end == 5.0

    def test_offset_start(self):
        grid = SampleGrid(1.0, 2.0, 4)
        np.testing.assert_allclose(grid.times, [1.5, 2.0, 2.5, 3.0])

    def test_strictly_increasing(self):
        times = SampleGrid(0.0, 1e3, 50).times
        assert np.all(np.diff(times) > 0)
        assert times[-1] == pytest.approx(1e3)

    @pytest.mark.parametrize('kwargs', [{'t_max': 0.0}, {'t_max': -1.0}, {'t_max': np.inf}, {'n_samples': 0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            SampleGrid(**kwargs)


class TestSensitivities:
    def test_saddle_node_closed_form_values(self, unit_grid):
        model = build_model('saddle_node', 1)
        tj = integrate_with_sensitivities(model, None, unit_grid, **TIGHT)
        assert tj.states[-1, 0] == pytest.approx(-0.5, rel=1e-8)
        assert tj.sensitivity('r')[-1] == pytest.approx(7.0 / 12.0, rel=1e-6)
        assert tj.sensitivity('alpha1')[-1] == pytest.approx(-math.log(2.0) / 4.0, rel=1e-6)
        assert tj.sensitivity('y0')[-1] == pytest.approx(0.25, rel=1e-6)

    def test_transcritical_r_sensitivity(self, unit_grid):
        tj = integrate_with_sensitivities(build_model('transcritical'), None, unit_grid, **TIGHT)
        assert tj.sensitivity('r')[-1] == pytest.approx(0.375, rel=1e-6)

    def test_jacobian_layout(self):
        model = build_model('selkov')
        grid = SampleGrid(0.0, 2.0, 6)
        tj = integrate_with_sensitivities(model, None, grid)
        assert tj.jacobian.shape == (12, 8)
        assert tj.param_names == model.free_names
        # rows run over (sample, component)
        np.testing.assert_array_equal(tj.jacobian[1::2, model.index_of('b')], tj.sensitivity('b', 1))
        assert np.all(np.isfinite(tj.jacobian))

    def test_observed_subset(self):
        model = build_model('selkov')
        tj = integrate_with_sensitivities(model, None, SampleGrid(0.0, 2.0, 6), observed=[1])
        assert tj.jacobian.shape == (6, 8)
        assert tj.observed_components == (1,)
        with pytest.raises(ConfigurationError):
            integrate_with_sensitivities(model, None, SampleGrid(0.0, 2.0, 6), observed=[2])

    def test_fixed_parameters_have_no_column(self, unit_grid):
        model = build_model('saddle_node', 2).with_fixed(['r'])
        tj = integrate_with_sensitivities(model, None, unit_grid)
        assert tj.param_names == ('alpha1', 'alpha2', 'y0')
        assert tj.jacobian.shape == (10, 3)

    def test_constant_model(self, unit_grid):
        model = constant_model()
        tj = integrate_with_sensitivities(model, None, unit_grid)
        np.testing.assert_allclose(tj.states[:, 0], 2.0)
        np.testing.assert_array_equal(tj.jacobian[:, 0], 0.0)
        np.testing.assert_allclose(tj.jacobian[:, 1], 1.0)

        fd = finite_difference_jacobian(model, None, unit_grid)
        np.testing.assert_allclose(fd.jacobian[:, 0], 0.0, atol=1e-12)
        np.testing.assert_allclose(fd.jacobian[:, 1], 1.0, rtol=1e-8)

    def test_grid_refinement(self):
        model = build_model('pitchfork_super', 2)
        coarse = integrate_with_sensitivities(model, None, SampleGrid(0.0, 5.0, 10), **TIGHT)
        fine = integrate_with_sensitivities(model, None, SampleGrid(0.0, 5.0, 20), **TIGHT)
        np.testing.assert_allclose(coarse.jacobian, fine.jacobian[1::2], rtol=1e-7, atol=1e-12)

    def test_recenter_offsets_states_only(self):
        model = build_model('pitchfork_super').with_values({'r': -1.0})
        grid = SampleGrid(0.0, 30.0, 10)
        plain = integrate_with_sensitivities(model, None, grid)
        shifted = integrate_with_sensitivities(model, None, grid, recenter=[0.5])
        np.testing.assert_allclose(shifted.states, plain.states - 0.5)
        np.testing.assert_allclose(shifted.raw_states, plain.states)
        np.testing.assert_array_equal(shifted.jacobian, plain.jacobian)
        assert abs(plain.states[-1, 0]) < 1e-6
        with pytest.raises(ConfigurationError):
            integrate_with_sensitivities(model, None, grid, recenter=[0.0, 0.0])

    def test_divergence_names_escape_time(self):
        model = build_model('saddle_node').with_values({'y0': 1.0})
        with pytest.raises(HorizonExceededError) as info:
            integrate_with_sensitivities(model, None, SampleGrid(0.0, 2.0, 10))
        assert info.value.time is not None
        assert 0.9 < info.value.time <= 1.0

    def test_closed_form_path(self):
        toy = build_model('toy_exponential')
        grid = SampleGrid(0.0, 3.0, 12)
        tj = integrate_with_sensitivities(toy, None, grid)
        t = grid.times
        np.testing.assert_allclose(tj.sensitivity('theta1'), 1.0, rtol=1e-8)
        np.testing.assert_allclose(tj.sensitivity('theta2'), -t * np.exp(-t), rtol=1e-6)
        np.testing.assert_allclose(tj.sensitivity('theta3'), t, rtol=1e-6)

    def test_velocity(self):
        model = build_model('pitchfork_super')
        tj = integrate_with_sensitivities(model, None, SampleGrid(0.0, 2.0, 4))
        np.testing.assert_allclose(trajectory_velocity(model, None, tj)[:, 0], -tj.states[:, 0] ** 3)


class TestSection:
    def test_rotation_crossings(self):
        model = rotation_model()
        grid = SampleGrid(0.0, 20.0, 10)
        tj = integrate_with_sensitivities(model, None, grid, section=PoincareSection(1, 0.0), **TIGHT)
        laps = np.array([0, 0, 0, 1, 1, 1, 2, 2, 2, 3])
        np.testing.assert_allclose(tj.section_times, 2.0 * math.pi * laps, rtol=1e-7)
        block = tj.jacobian.reshape(10, 2, 3)
        radius = math.sqrt(1.25)
        # crossing times stretch as 1/omega; the crossing radius depends on the start only
        np.testing.assert_allclose(block[:, 1, 0], -tj.section_times, atol=1e-6)
        np.testing.assert_allclose(block[:, 1, 1:], 0.0, atol=1e-6)
        np.testing.assert_allclose(block[:, 0, 0], 0.0, atol=1e-6)
        np.testing.assert_allclose(block[:, 0, 1], 1.0 / radius, rtol=1e-6)
        np.testing.assert_allclose(block[:, 0, 2], -0.5 / radius, rtol=1e-6)
        np.testing.assert_allclose(tj.states[-1], [math.cos(20.0) + 0.5 * math.sin(20.0),
                                                   math.sin(20.0) - 0.5 * math.cos(20.0)], atol=1e-6)

    def test_samples_before_first_crossing_use_start(self):
        model = rotation_model()
        tj = integrate_with_sensitivities(model, None, SampleGrid(0.0, 0.4, 4), section=PoincareSection(1, 0.0))
        np.testing.assert_array_equal(tj.section_times, 0.0)
        block = tj.jacobian.reshape(4, 2, 3)
        np.testing.assert_array_equal(block[:, 0], [[0.0, 1.0, 0.0]] * 4)
        np.testing.assert_array_equal(block[:, 1], 0.0)

    def test_rejects_partial_observation(self):
        with pytest.raises(ConfigurationError):
            integrate_with_sensitivities(rotation_model(), None, SampleGrid(0.0, 1.0, 4), observed=[0],
                                         section=PoincareSection(1, 0.0))
        with pytest.raises(ConfigurationError):
            integrate_with_sensitivities(build_model('toy_exponential'), None, SampleGrid(0.0, 1.0, 4),
                                         section=PoincareSection(0, 0.0))


class TestFiniteDifferences:
    def test_pitchfork_agreement(self):
        model = build_model('pitchfork_super', 2)
        grid = SampleGrid(0.0, 10.0, 20)
        tj = integrate_with_sensitivities(model, None, grid, **TIGHT)
        fd = finite_difference_jacobian(model, None, grid)
        error, _ = relative_discrepancy(tj.jacobian, fd.jacobian, column_floor=1e-3)
        assert error < 1e-4

    def test_saddle_alpha_column(self, unit_grid):
        fd = finite_difference_jacobian(build_model('saddle_node', 1), None, unit_grid)
        assert fd.sensitivity('alpha1')[-1] == pytest.approx(-math.log(2.0) / 4.0, rel=1e-5)

    def test_plain_trajectory_matches_augmented(self):
        model = build_model('transcritical', 1)
        grid = SampleGrid(0.0, 4.0, 8)
        states = integrate_trajectory(model, None, grid, **TIGHT)
        np.testing.assert_allclose(states[:, 0], 1.0 / (1.0 + grid.times), rtol=1e-8)
