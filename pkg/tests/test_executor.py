"""
test_executor.py

Tests for sweep execution, recentering, concurrency and near-bifurcation profiles.
"""

import numpy as np
import pytest

from twigkit.exceptions import ConfigurationError
from twigkit.executor import (SweepConfig, SweepExecutor, dilation_signature, intermediate_regime_end,
                              phase_only_params, run_sweep)
from twigkit.integrate import SampleGrid, integrate_with_sensitivities
from twigkit.models import build_model


def short_config(**overrides):
    settings = {'t_min': 0.1, 't_max': 100.0, 'count': 16, 'n_samples': 20, 'threads': 1}
    settings.update(overrides)
    return SweepConfig(**settings)


class TestSweepConfig:
    def test_horizons(self):
        horizons = SweepConfig().horizons
        assert len(horizons) == 60
        assert horizons[0] == pytest.approx(1e-2)
        assert horizons[-1] == pytest.approx(1e3)
        ratios = horizons[1:] / horizons[:-1]
        np.testing.assert_allclose(ratios, ratios[0])

    @pytest.mark.parametrize('overrides', [{'count': 4}, {'n_samples': 2}, {'t_min': 10.0, 't_max': 1.0},
                                           {'t_min': 0.0}])
    def test_invalid(self, overrides):
        with pytest.raises(ConfigurationError):
            SweepExecutor(short_config(**overrides))


class TestRun:
    def test_complete_sweep(self):
        model = build_model('pitchfork_super')
        sweep = run_sweep(model, None, short_config())
        assert sweep.complete
        assert sweep.m == 2
        assert sweep.param_names == ('r', 'y0')
        assert len(sweep.spectra) == 16
        assert sweep.initial_condition_params == ('y0',)
        assert not sweep.oscillatory
        assert sweep.final_trajectory.grid.t_max == pytest.approx(100.0)
        # leading eigenvalue keeps growing at r = 0
        assert np.all(np.diff(sweep.track_eigenvalues(0)[-4:]) > 0)

    def test_threads_match_sequential(self):
        model = build_model('pitchfork_super', 1)
        sequential = run_sweep(model, None, short_config(threads=1))
        parallel = run_sweep(model, None, short_config(threads=4))
        for a, b in zip(sequential.spectra, parallel.spectra):
            np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)
            np.testing.assert_array_equal(a.eigenvectors, b.eigenvectors)
        for a, b in zip(sequential.tracking, parallel.tracking):
            np.testing.assert_array_equal(a, b)

    def test_partial_sweep(self):
        model = build_model('saddle_node').with_values({'y0': 0.5})
        sweep = run_sweep(model, None, short_config(t_max=10.0, count=8))
        assert not sweep.complete
        assert sweep.failure is not None
        assert sweep.failure.t_max > 2.0
        assert 0 < len(sweep.spectra) < 8
        assert np.all(sweep.horizons < 2.0)

    def test_recenter_on_fixed_point(self):
        model = build_model('pitchfork_super').with_values({'r': -1.0})
        sweep = run_sweep(model, None, short_config(recenter=True, t_max=30.0))
        assert sweep.fixed_point is not None
        assert sweep.fixed_point['stability'] == 'stable'
        assert abs(sweep.fixed_point['location'][0]) < 1e-8

    def test_recenter_skipped_for_closed_forms(self):
        sweep = run_sweep(build_model('toy_exponential'), None, short_config(recenter=True))
        assert sweep.fixed_point is None
        assert sweep.complete

    def test_hopf_oscillation(self):
        model = build_model('hopf_polar')
        sweep = run_sweep(model, None, short_config())
        assert sweep.oscillatory
        assert sweep.period_estimate == pytest.approx(2 * np.pi, rel=0.1)
        assert {'omega', 'beta', 'theta0'} <= set(sweep.phase_params)
        assert 'mu' not in sweep.phase_params
        assert sweep.dilation_signature is not None
        assert sweep.dilation_signature.shape == (sweep.final_jacobian.shape[0],)

    def test_selkov_section_sampling(self):
        model = build_model('selkov').with_values({'b': 0.5})
        sweep = run_sweep(model, None, short_config(section=True))
        assert sweep.complete
        assert sweep.oscillatory
        assert sweep.section is not None
        tj = sweep.final_trajectory
        assert tj.section.component == sweep.section['component']
        assert tj.section_times[-1] > 50.0
        signature = dilation_signature(model, model.default_params(), tj).reshape(-1, 2)
        np.testing.assert_array_equal(signature[:, tj.section.component], tj.section_times)
        np.testing.assert_array_equal(signature[:, 1 - tj.section.component], 0.0)

    def test_section_skipped_without_oscillation(self):
        sweep = run_sweep(build_model('pitchfork_super'), None, short_config(section=True))
        assert sweep.section is None
        assert sweep.final_trajectory.section_times is None
        assert sweep.complete


class TestHelpers:
    def test_phase_only_params_cartesian(self):
        model = build_model('pitchfork_super')
        tj = integrate_with_sensitivities(model, None, SampleGrid(0.0, 1.0, 5))
        assert phase_only_params(model, model.default_params(), tj) == ()

    def test_dilation_signature_is_scaled_velocity(self):
        model = build_model('pitchfork_super')
        grid = SampleGrid(0.0, 2.0, 4)
        tj = integrate_with_sensitivities(model, None, grid)
        expected = grid.times * -tj.states[:, 0] ** 3
        np.testing.assert_allclose(dilation_signature(model, model.default_params(), tj), expected)

    def test_intermediate_regime_end(self):
        t = np.geomspace(1.0, 1e4, 40)
        lam = np.where(t < 100.0, t ** 2, 1e4 * (t / 100.0) ** -1)
        end = intermediate_regime_end(t, lam, 0.2)
        assert 80.0 < end < 200.0
        assert intermediate_regime_end(t, t ** -1.0, 0.2) is None
        assert intermediate_regime_end(t[:2], t[:2], 0.2) is None


class TestProfile:
    def test_needs_bifurcation_parameter(self):
        executor = SweepExecutor(short_config())
        with pytest.raises(ConfigurationError):
            executor.profile(build_model('toy_exponential'), None, [0.1])

    def test_errors_do_not_abort_batch(self):
        model = build_model('saddle_node')
        executor = SweepExecutor(short_config(t_max=10.0))
        entries = executor.profile(model, None, [0.0, 1.0], param='y0')
        assert [e.param_value for e in entries] == [-1.0, 0.0]
        assert entries[0].report is not None
        assert entries[0].error is None
        # y0 = 0 sits on the fixed point; dy/dr = t and dy/dy0 = 1 there
        assert entries[1].report is not None
        assert entries[1].report.direction_for('r').relevance.value == 'hyperrelevant'
        assert set(entries[0].to_dict()) == {'offset', 'param_value', 'report', 'error', 'leading_tail_slope',
                                             'intermediate_end'}

    def test_divergent_offset_recorded(self):
        model = build_model('saddle_node')
        executor = SweepExecutor(short_config(t_max=10.0))
        entries = executor.profile(model, None, [1.5], param='y0')
        assert entries[0].param_value == pytest.approx(0.5)
        assert entries[0].error is not None
