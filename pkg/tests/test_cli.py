"""
test_cli.py

Tests for the twig command-line surface and its exit codes.
"""

import io
import json
import os

import pytest
from rich.console import Console

from twigkit.cli import EXIT_ERROR, EXIT_OK, EXIT_PARTIAL, EXIT_TOLERANCE, cmd_list_models, cmd_validate, main
from twigkit.exceptions import DivergenceError
from twigkit.executor import SweepExecutor


def capture():
    buffer = io.StringIO()
    return Console(file=buffer, width=300), buffer


def write_config(tmp_path, **document):
    settings = {'sweep': {'t_min': 0.1, 't_max': 100.0, 'count': 16}, 'n_samples': 20}
    settings.update(document)
    path = tmp_path / 'run.json'
    path.write_text(json.dumps(settings))
    return str(path)


def load_report(outputs):
    with open(os.path.join(outputs, 'report.json')) as f:
        return json.load(f)


class TestListModels:
    def test_lists_registry(self):
        console, buffer = capture()
        assert cmd_list_models(console) == EXIT_OK
        text = buffer.getvalue()
        for expected in ('selkov', 'hopf_polar', 'saddle_node', 'c4', 'omega', 'Normal-form list',
                         'Biophysical example', 'Toy observation map'):
            assert expected in text

    def test_main(self):
        assert main(['list-models']) == EXIT_OK


class TestAnalyze:
    def test_unknown_model(self, tmp_path):
        outputs = str(tmp_path / 'out')
        code = main(['analyze', '--config', write_config(tmp_path, model='no_such_model'), '-o', outputs])
        assert code == EXIT_ERROR
        report = load_report(outputs)
        assert 'Available models' in report['errors'][0]

    def test_complete_run(self, tmp_path):
        outputs = str(tmp_path / 'out')
        code = main(['analyze', '--config', write_config(tmp_path, model='pitchfork_super'), '-o', outputs])
        assert code == EXIT_OK
        for name in ('eigenvalues.csv', 'participation.csv', 'report.json', 'rainbow.svg'):
            assert os.path.exists(os.path.join(outputs, name))
        assert not os.path.exists(os.path.join(outputs, 'trajectories.csv'))
        report = load_report(outputs)
        assert report['errors'] == []
        assert report['seed'] == 0
        assert len(report['directions']) == 2

    def test_partial_run(self, tmp_path):
        outputs = str(tmp_path / 'out')
        config = write_config(tmp_path, model='saddle_node', sweep={'t_min': 0.1, 't_max': 10.0, 'count': 8},
                              classification={'tail_fraction': 0.5})
        code = main(['analyze', '--config', config, '--set', 'y0=0.5', '-o', outputs])
        assert code == EXIT_PARTIAL
        report = load_report(outputs)
        assert any('horizon' in e for e in report['errors'])

    def test_dump_trajectories(self, tmp_path):
        outputs = str(tmp_path / 'out')
        code = main(['analyze', '--config', write_config(tmp_path, model='transcritical'), '-o', outputs,
                     '--dump-trajectories'])
        assert code == EXIT_OK
        with open(os.path.join(outputs, 'trajectories.csv')) as f:
            lines = f.read().splitlines()
        assert lines[0] == 't,y'
        assert len(lines) == 21

    def test_sweep_error_written_to_report(self, tmp_path, monkeypatch):
        def diverge(self, model, params=None):
            raise DivergenceError(f"{model.name}: non-finite parameter Jacobian at t=1000", time=1000.0)

        monkeypatch.setattr(SweepExecutor, 'run', diverge)
        outputs = str(tmp_path / 'out')
        code = main(['analyze', '--config', write_config(tmp_path, model='pitchfork_super'), '-o', outputs])
        assert code == EXIT_ERROR
        report = load_report(outputs)
        assert report['model'] == 'pitchfork_super'
        assert 'non-finite parameter Jacobian' in report['errors'][0]

    def test_bad_override(self, tmp_path):
        config = write_config(tmp_path, model='transcritical')
        assert main(['analyze', '--config', config, '--set', 'r', '-o', str(tmp_path / 'out')]) == EXIT_ERROR

    def test_missing_config(self, tmp_path):
        assert main(['analyze', '--config', str(tmp_path / 'absent.yaml')]) == EXIT_ERROR


class TestValidate:
    def test_saddle_node(self):
        assert main(['validate', '--model', 'saddle_node', '--tmax', '5']) == EXIT_OK

    def test_closed_form_model(self):
        console, buffer = capture()
        assert cmd_validate('toy_exponential', 10.0, out=console) == EXIT_OK
        assert 'closed-form model' in buffer.getvalue()

    def test_tolerance_breach(self):
        console, buffer = capture()
        assert cmd_validate('saddle_node', 5.0, out=console, tolerance=0.0) == EXIT_TOLERANCE
        assert 'Tolerance breach' in buffer.getvalue()

    def test_unknown_model(self):
        assert main(['validate', '--model', 'no_such_model', '--tmax', '5']) == EXIT_ERROR


class TestMain:
    def test_no_command(self):
        assert main([]) == EXIT_ERROR

    def test_version(self):
        with pytest.raises(SystemExit) as exc:
            main(['--version'])
        assert exc.value.code == 0
