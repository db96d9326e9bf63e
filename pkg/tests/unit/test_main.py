# -*- coding: utf-8 -*-
#
# Copyright 2026 The mcvuln Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import copy
import json

import click
import pytest
from click.testing import CliRunner

from mcvuln import __version__
from mcvuln import exceptions
from mcvuln import main
from mcvuln import montecarlo
from mcvuln import report
from mcvuln import verify


def _with_defaults(config):
    expected = copy.deepcopy(main.DEFAULT_CONFIG)
    main._deep_merge_dict(expected, copy.deepcopy(config))
    return expected


#####
# Tests for configuration and setup
#####
@pytest.mark.parametrize('suffix', ['', '-user'])
def test_load_config(tmpdir, suffix, config_file, loaded_config):
    """Load prod and user config on top of the defaults."""
    conf_file = tmpdir.mkdir('config').join(f'mcvuln{suffix}.toml')
    conf_file.write(config_file)
    config = main._load_config(root=conf_file.dirpath())
    assert _with_defaults(loaded_config) == config


def test_load_config_defaults(tmpdir, monkeypatch):
    """Without any file in the working directory the defaults apply."""
    monkeypatch.chdir(tmpdir)
    assert main.DEFAULT_CONFIG == main._load_config()
    assert main._load_config() is not main.DEFAULT_CONFIG


def test_load_config_missing_root(tmpdir):
    """An explicit root without configuration is an error."""
    empty = tmpdir.mkdir('config')
    with pytest.raises(exceptions.ConfigError) as e:
        main._load_config(root=empty.strpath)
    e.match('Cannot find mcvuln.toml or mcvuln-user.toml')


def test_load_config_invalid(tmpdir):
    conf_file = tmpdir.mkdir('config').join('mcvuln.toml')
    conf_file.write('[core\nmetrics = ')
    with pytest.raises(exceptions.ConfigError) as e:
        main._load_config(root=conf_file.dirpath())
    e.match('Cannot load mcvuln configuration file')


def test_load_config_deep_merges(tmpdir, config_file, loaded_config):
    """Additively merge user file to main config."""
    config_dir = tmpdir.mkdir('mergeconfig')
    config_dir.join('mcvuln.toml').write(config_file)
    config_dir.join('mcvuln-user.toml').write(
        '[core.logging]\nlevel = "error"\n')

    config = main._load_config(root=config_dir.strpath)

    expected_config = _with_defaults(loaded_config)
    expected_config['core']['logging']['level'] = 'error'
    assert expected_config == config


@pytest.mark.parametrize('a,b,expected', [
    ({'a': 1}, {'b': 2}, {'a': 1, 'b': 2}),
    ({'a': 1}, {'a': 2}, {'a': 2}),
    ({'a': {'a1': 1}}, {'a': {'a2': 2}}, {'a': {'a1': 1, 'a2': 2}}),
    ({'a': {'a1': 1}}, {'a': {'a1': 2}}, {'a': {'a1': 2}}),
    ({}, {'a': {'a1': 1}}, {'a': {'a1': 1}}),
    ({'a': None}, {'a': {'a1': 1}}, {'a': {'a1': 1}}),
    ({'a': {'a1': 1}}, {'a': None}, {'a': None}),
    ({'a': {'a1': 1}}, {'a': {}}, {'a': {'a1': 1}}),
])
def test_deep_merge_dict(a, b, expected):
    main._deep_merge_dict(a, b)
    assert expected == a


@pytest.fixture
def ulogger_mock(mocker, monkeypatch):
    ulogger_mock = mocker.MagicMock(main.ulogger, autospec=True)
    ulogger_mock.setup_logging = mocker.Mock()
    monkeypatch.setattr(main, 'ulogger', ulogger_mock)
    return ulogger_mock


def test_setup(tmpdir, ulogger_mock, config_file, loaded_config):
    """Setup config and logging."""
    conf_file = tmpdir.mkdir('config').join('mcvuln.toml')
    conf_file.write(config_file)

    config = main.setup(config_root=conf_file.dirpath())

    assert _with_defaults(loaded_config) == config

    exp_kwargs = {
        'format': '%(created)f %(levelno)d %(message)s',
        'date_format': '%Y-%m-%dT%H:%M:%S',
    }
    ulogger_mock.setup_logging.assert_called_once_with(
        progname='mcvuln', level='DEBUG', handlers=['stream'], **exp_kwargs)


#####
# Tests for parameter types and workers
#####
@pytest.mark.parametrize('value,expected', [
    ('2..4', range(2, 5)),
    ('3', range(3, 4)),
    (' 0..0 ', range(0, 1)),
])
def test_int_range(value, expected):
    assert expected == main.INT_RANGE.convert(value, None, None)


@pytest.mark.parametrize('value', ['4..2', 'two', '1..x'])
def test_int_range_rejects(value):
    with pytest.raises(click.BadParameter):
        main.INT_RANGE.convert(value, None, None)


def test_int_list():
    assert (2, 0, 3) == main.INT_LIST.convert('2,0,3', None, None)
    with pytest.raises(click.BadParameter):
        main.INT_LIST.convert('2,-1', None, None)
    with pytest.raises(click.BadParameter):
        main.INT_LIST.convert('2,,3', None, None)


@pytest.mark.parametrize('env,option,config,expected', [
    (None, 3, {}, 3),
    ('5', 3, {}, 5),
    (None, None, {'simulate': {'workers': 2}}, 2),
])
def test_resolve_workers(monkeypatch, env, option, config, expected):
    monkeypatch.delenv(main.WORKERS_ENV, raising=False)
    if env is not None:
        monkeypatch.setenv(main.WORKERS_ENV, env)
    assert expected == main._resolve_workers(option, config)


def test_resolve_workers_falls_back_to_cpus(monkeypatch):
    monkeypatch.delenv(main.WORKERS_ENV, raising=False)
    monkeypatch.setattr(main, '_available_workers', lambda: 6)
    assert 6 == main._resolve_workers(None, {})


@pytest.mark.parametrize('env,option', [('many', None), (None, 0), ('0', 1)])
def test_resolve_workers_rejects(monkeypatch, env, option):
    monkeypatch.delenv(main.WORKERS_ENV, raising=False)
    if env is not None:
        monkeypatch.setenv(main.WORKERS_ENV, env)
    with pytest.raises(exceptions.UsageError):
        main._resolve_workers(option, {})


#####
# Tests for running the CLI
#####
@pytest.fixture
def config_root(tmpdir, config_file, ulogger_mock, monkeypatch):
    monkeypatch.delenv(main.WORKERS_ENV, raising=False)
    root = tmpdir.mkdir('cli')
    root.join('mcvuln.toml').write(config_file)
    return root.strpath


def _run(capsys, config_root, *args):
    code = main.run(['-c', config_root] + list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_run_version(capsys):
    assert 0 == main.run(['--version'])
    assert __version__ in capsys.readouterr().out


@pytest.mark.parametrize('args,key,expected', [
    (['analytic', 'two-thread', '--model', 'wo'], 'value', '7/54'),
    (['analytic', 'two-thread', '--model', 'TSO'], 'lower', '58/441'),
    (['analytic', 'disjoint', '--lengths', '2,2'], 'value', '1/6'),
    (['analytic', 'disjoint', '--lengths', '2,2,2'], 'value', '1/224'),
    (['analytic', 'sc-pr-a', '--threads', '3'], 'value', '1/224'),
    (['analytic', 'lower-bound', '--threads', '2'], 'value', '1/12'),
    (['analytic', 'bottom-store', '--index', '3'], 'value', '21/32'),
    (['analytic', 'lemma', '--mu', '0..3'], 'missing_mass', '2/21'),
    (['oracle', 'disjoint', '--lengths', '3', '--cap', '0'], 'lower', '1/2'),
])
def test_run_analytic(capsys, config_root, args, key, expected):
    code, out, _ = _run(capsys, config_root, *args)
    assert 0 == code
    document = json.loads(out)
    assert expected == document[key]
    assert ' '.join(args[:2]) == document['command']
    assert document['seed'] is None
    assert __version__ == document['version']


def test_run_analytic_window_tso(capsys, config_root):
    code, out, _ = _run(capsys, config_root,
                        'analytic', 'window', '--model', 'tso',
                        '--gamma', '0..2')
    assert 0 == code
    document = json.loads(out)
    assert [0, 1, 2] == [row['gamma'] for row in document['rows']]
    assert '3/14' == document['rows'][1]['lower']
    assert ('20/21', '22/21') == (document['total']['lower'],
                                  document['total']['upper'])


def test_run_analytic_exponent(capsys, config_root):
    code, out, _ = _run(capsys, config_root,
                        'analytic', 'exponent', '--threads', '2..3')
    assert 0 == code
    rows = json.loads(out)['rows']
    assert [2, 3] == [row['n'] for row in rows]
    assert rows[0]['ratio'] > rows[1]['ratio']


def test_run_oracle_window(capsys, config_root):
    code, out, _ = _run(capsys, config_root,
                        'oracle', 'window', '--model', 'sc',
                        '--program-len', '3')
    assert 0 == code
    document = json.loads(out)
    assert [{'gamma': 0, 'value': '1/1', 'float': 1.0}] == document['rows']
    assert 3 == document['params']['m']


def test_run_simulate(capsys, config_root):
    code, out, _ = _run(capsys, config_root,
                        'simulate', '--model', 'tso', '--samples', '200',
                        '--seed', '5', '--program-len', '8')
    assert 0 == code
    document = json.loads(out)
    assert 5 == document['seed']
    assert 200 == document['samples']
    assert 'tso' == document['params']['model']
    assert 2 == document['params']['threads']
    assert 0 <= document['mean'] <= 1


def test_run_simulate_uses_config_defaults(capsys, config_root):
    code, out, _ = _run(capsys, config_root,
                        'simulate', '--measure', 'window',
                        '--model', 'store-buffer')
    assert 0 == code
    document = json.loads(out)
    assert 42 == document['seed']
    assert 16 == document['params']['m']
    assert 'store-buffer' == document['params']['model']
    assert '0' in document['histogram']


def test_run_simulate_marginal(capsys, config_root):
    code, out, _ = _run(capsys, config_root,
                        'simulate', '--measure', 'marginal',
                        '--samples', '50', '--program-len', '4')
    assert 0 == code
    document = json.loads(out)
    assert 0.25 == document['mean']
    assert report.render_float(1 / 6) == document['pr_a']


def test_run_simulate_shift_only(capsys, config_root):
    code, out, _ = _run(capsys, config_root,
                        'simulate', '--lengths', '2,2', '--samples', '100')
    assert 0 == code
    document = json.loads(out)
    assert 'disjoint' == document['params']['measure']
    assert [2, 2] == document['config_echo']['lengths']


@pytest.mark.parametrize('workers', ['4', '16'])
def test_run_simulate_byte_identical_across_workers(
        workers, capsys, config_root, monkeypatch):
    samples = str(3 * montecarlo.BLOCK_SIZE + 5)
    args = ('simulate', '--model', 'wo', '--threads', '3', '--samples',
            samples, '--seed', '9', '--program-len', '8')
    _, serial, _ = _run(capsys, config_root, *args, '--workers', '1')
    monkeypatch.setenv(main.WORKERS_ENV, workers)
    _, parallel, _ = _run(capsys, config_root, *args)
    assert serial == parallel


def test_run_sweep_csv(capsys, config_root):
    code, out, _ = _run(capsys, config_root,
                        'sweep', '--models', 'sc,wo', '--threads', '2..3',
                        '--samples', '100', '--program-len', '6')
    assert 0 == code
    lines = out.splitlines()
    assert ','.join(report.SWEEP_COLUMNS) == lines[0]
    assert 5 == len(lines)
    assert ['sc', 'sc', 'wo', 'wo'] == [
        line.split(',')[0] for line in lines[1:]]


def test_run_sweep_json(capsys, config_root):
    code, out, _ = _run(capsys, config_root,
                        'sweep', '--models', 'sc', '--threads', '2',
                        '--samples', '100', '--format', 'json')
    assert 0 == code
    rows = json.loads(out)['rows']
    assert [2] == [row['n'] for row in rows]


def test_run_verify(capsys, config_root):
    code, out, _ = _run(capsys, config_root,
                        'verify', '--quick', '--exact-only')
    assert 0 == code
    document = json.loads(out)
    assert document['passed']
    assert not any(c['name'].startswith('mc-') for c in document['checks'])


@pytest.mark.parametrize('args,expected', [
    (['simulate', '--samples', '0'], 1),
    (['simulate', '--model', 'rc', '--samples', '10'], 1),
    (['simulate', '--threads', '1', '--samples', '10'], 1),
    (['simulate', '--workers', '0', '--samples', '10'], 1),
    (['analytic', 'two-thread', '--model', 'pso'], 1),
    (['analytic', 'disjoint', '--lengths', '2,x'], 1),
    (['analytic', 'nope'], 1),
    (['analytic', 'disjoint', '--lengths', ','.join(['2'] * 11)], 2),
    (['oracle', 'window', '--model', 'wo', '--program-len', '15'], 2),
])
def test_run_exit_codes(capsys, config_root, args, expected):
    code, out, err = _run(capsys, config_root, *args)
    assert expected == code
    assert '' == out
    assert err


def test_run_verify_failure(capsys, config_root, monkeypatch):
    def fails(settings):
        return False, 'got 1, expected 2'

    monkeypatch.setattr(verify, '_REGISTRY', [('fails', False, fails)])
    code, out, err = _run(capsys, config_root, 'verify', '--exact-only')
    assert 3 == code
    assert not json.loads(out)['passed']
    assert '1 check(s) failed: fails.' in err


def test_run_bad_config_root(capsys, tmpdir, ulogger_mock):
    empty = tmpdir.mkdir('empty').strpath
    assert 1 == main.run(['-c', empty, 'analytic', 'sc-pr-a',
                          '--threads', '2'])
    assert 'Cannot find' in capsys.readouterr().err


def test_cli_runner_help():
    runner = CliRunner()
    result = runner.invoke(main.cli, ['--help'])
    assert 0 == result.exit_code
    for command in ('simulate', 'analytic', 'oracle', 'verify', 'sweep'):
        assert command in result.output
