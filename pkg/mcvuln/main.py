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
"""
Command-line entry point.

mcvuln reads ``mcvuln.toml`` and/or ``mcvuln-user.toml`` from the
current working directory, or from a provided root directory. Any
configuration defined in ``mcvuln-user.toml`` overwrites those in
``mcvuln.toml``; without either file the built-in defaults apply.

Example:

.. code-block:: bash

    $ mcvuln analytic two-thread --model wo
    $ mcvuln simulate --model tso --threads 2 --samples 1000000 --seed 7
    $ mcvuln -c /etc/mcvuln/ sweep --models sc,tso --threads 2..4
    $ mcvuln verify

Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
resource guard refuses the request, 3 when ``verify`` finds a failing
check.
"""

import asyncio
import copy
import io
import logging
import os
import sys

import click
import toml
import ulogger

from mcvuln import __version__ as version
from mcvuln import analytic
from mcvuln import exceptions
from mcvuln import metrics
from mcvuln import models
from mcvuln import montecarlo
from mcvuln import oracle
from mcvuln import report
from mcvuln import shift
from mcvuln import verify


CONFIG_FILES = ('mcvuln.toml', 'mcvuln-user.toml')
WORKERS_ENV = 'MCVULN_WORKERS'

DEFAULT_CONFIG = {
    'core': {
        'metrics': metrics.DEFAULT_RELAY,
        'logging': {'level': 'INFO', 'handlers': ['stream']},
    },
    'metrics-logger': {'log_level': 'info', 'time_unit': 1},
    'simulate': {
        'program_len': 64,
        'samples': 1000000,
        'seed': 0,
        'overlap': shift.OVERLAP_CLOSED,
    },
    'verify': dict(verify.DEFAULTS),
}

MEASURES = (
    montecarlo.MEASURE_PR_A,
    montecarlo.MEASURE_WINDOW,
    montecarlo.MEASURE_L_MU,
    montecarlo.MEASURE_BOTTOM_STORE,
    montecarlo.MEASURE_MARGINAL,
)

_EXIT_CODES = (
    (exceptions.VerificationError, 3),
    (exceptions.ResourceGuardError, 2),
    (exceptions.McvulnError, 1),
)


def _deep_merge_dict(a, b):
    """Additively merge right side dict into left side dict."""
    for k, v in b.items():
        if k in a and isinstance(a[k], dict) and isinstance(v, dict):
            _deep_merge_dict(a[k], v)
        else:
            a[k] = v


def _load_config(root=None):
    conf, found = copy.deepcopy(DEFAULT_CONFIG), False
    for conf_file in CONFIG_FILES:
        path = os.path.join(root or '', conf_file)
        try:
            with open(path, 'r') as f:
                _deep_merge_dict(conf, toml.load(f))
        except FileNotFoundError:
            continue
        except (IOError, toml.TomlDecodeError) as e:
            raise exceptions.ConfigError(
                f'Cannot load mcvuln configuration file "{path}": {e}.')
        found = True

    if root is not None and not found:
        raise exceptions.ConfigError(
            f'Cannot find {" or ".join(CONFIG_FILES)} in "{root}".')
    return conf


def setup(config_root=None):
    """
    Configuration and logging setup.

    Configuration defined in ``mcvuln-user.toml`` will overwrite
    ``mcvuln.toml``.

    Args:
        config_root (str): (optional) Where configuration should load
            from; defaults to the current working directory, falling
            back to built-in defaults.
    Returns:
        A dict of mcvuln configuration.
    """
    config = _load_config(root=config_root)

    logging_config = config.get('core', {}).get('logging', {}).copy()

    log_level = logging_config.pop('level', 'INFO').upper()
    log_handlers = logging_config.pop('handlers', ['stream'])

    ulogger.setup_logging(
        progname='mcvuln', level=log_level, handlers=log_handlers,
        **logging_config)

    return config


class IntRangeType(click.ParamType):
    """``"A..B"`` (inclusive) or a single integer."""
    name = 'range'

    def convert(self, value, param, ctx):
        if isinstance(value, range):
            return value
        text = str(value).strip()
        try:
            if '..' in text:
                low, high = (int(part) for part in text.split('..', 1))
            else:
                low = high = int(text)
        except ValueError:
            self.fail(f'"{value}" is not an integer or an A..B range.',
                      param, ctx)
        if low > high:
            self.fail(f'Empty range "{value}".', param, ctx)
        return range(low, high + 1)


class IntListType(click.ParamType):
    """Comma-separated non-negative integers, e.g. ``"2,2,2"``."""
    name = 'list'

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            values = tuple(int(part) for part in str(value).split(','))
        except ValueError:
            self.fail(f'"{value}" is not a comma-separated integer list.',
                      param, ctx)
        if any(v < 0 for v in values):
            self.fail(f'"{value}" contains a negative length.', param, ctx)
        return values


INT_RANGE = IntRangeType()
INT_LIST = IntListType()


def _available_workers():
    if hasattr(os, 'sched_getaffinity'):
        return len(os.sched_getaffinity(0))
    return os.cpu_count() or 1


def _resolve_workers(option, config):
    env_value = os.environ.get(WORKERS_ENV)
    if env_value:
        try:
            workers = int(env_value)
        except ValueError:
            raise exceptions.UsageError(
                f'{WORKERS_ENV} must be an integer, got "{env_value}".')
    elif option is not None:
        workers = option
    else:
        workers = config.get('simulate', {}).get('workers') \
            or _available_workers()
    if workers < 1:
        raise exceptions.UsageError(
            f'Worker count must be positive, got {workers}.')
    return workers


def _model(config, name):
    return models.get_model(name, custom=models.models_from_config(config))


def _emit(document):
    click.echo(report.dumps(document))


def _flush_metrics(relay):
    asyncio.run(relay.cleanup())


@click.group()
@click.version_option(version=version, prog_name='mcvuln')
@click.option('-c', '--config-root',
              type=click.Path(exists=True, file_okay=False), default=None,
              help='Directory where to find mcvuln configuration.')
@click.pass_context
def cli(ctx, config_root):
    """Memory models and the odds of an atomicity violation."""
    root = os.path.abspath(config_root) if config_root else None
    ctx.obj = setup(root)


def _simulate_defaults(config):
    return config.get('simulate', {})


@cli.command()
@click.option('--model', default='sc', show_default=True,
              help='Memory model: sc, tso, pso, wo or a configured name.')
@click.option('--threads', type=int, default=2, show_default=True)
@click.option('--program-len', type=int, default=None,
              help='Non-critical instructions per program [64].')
@click.option('--samples', type=int, default=None,
              help='Number of samples [1000000].')
@click.option('--seed', type=int, default=None, help='Master seed [0].')
@click.option('--workers', type=int, default=None,
              help='Worker processes [available CPUs].')
@click.option('--overlap', type=click.Choice(shift.OVERLAPS), default=None,
              help='Segment overlap convention [closed].')
@click.option('--independent-programs', is_flag=True, default=False,
              help='Draw one program per thread instead of a shared one.')
@click.option('--measure', type=click.Choice(MEASURES),
              default=montecarlo.MEASURE_PR_A, show_default=True)
@click.option('--lengths', type=INT_LIST, default=None,
              help='Fixed segment lengths; skips settling (shift only).')
@click.pass_obj
def simulate(config, model, threads, program_len, samples, seed, workers,
             overlap, independent_programs, measure, lengths):
    """Estimate a probability by Monte Carlo sampling."""
    defaults = _simulate_defaults(config)
    program_len = defaults['program_len'] if program_len is None \
        else program_len
    samples = defaults['samples'] if samples is None else samples
    seed = defaults['seed'] if seed is None else seed
    overlap = overlap or defaults.get('overlap', shift.OVERLAP_CLOSED)
    workers = _resolve_workers(workers, config)
    relay = metrics.get_relay(config)

    if lengths is not None:
        estimate = montecarlo.estimate_disjoint(
            lengths, samples, seed, workers=workers, overlap=overlap,
            metrics=relay)
        params = {'lengths': list(lengths), 'overlap': overlap,
                  'samples': samples, 'measure': 'disjoint'}
        _flush_metrics(relay)
        _emit(report.payload('simulate', params,
                             report.estimate_record(estimate), seed))
        return

    memory_model = _model(config, model)
    params = models.params_from_config(config, m=program_len)
    echo = {'model': str(memory_model), 'measure': measure,
            'samples': samples}
    echo.update(params.echo())
    logging.info(f'Simulating "{measure}" under {memory_model} with '
                 f'{samples} samples on {workers} workers.')

    if measure == montecarlo.MEASURE_PR_A:
        echo.update(threads=threads, overlap=overlap,
                    independent_programs=independent_programs)
        estimate = montecarlo.estimate_pr_a(
            memory_model, threads, params, samples, seed, workers=workers,
            overlap=overlap, independent_programs=independent_programs,
            metrics=relay)
        result = report.estimate_record(estimate)
    elif measure == montecarlo.MEASURE_WINDOW:
        histogram = montecarlo.estimate_window_pmf(
            memory_model, params, samples, seed, workers=workers,
            metrics=relay)
        result = {'histogram': report.histogram_record(histogram)}
    elif measure == montecarlo.MEASURE_L_MU:
        histogram = montecarlo.estimate_l_mu(
            params, samples, seed, workers=workers, metrics=relay,
            model=memory_model)
        result = {'histogram': report.histogram_record(histogram)}
    elif measure == montecarlo.MEASURE_BOTTOM_STORE:
        estimate = montecarlo.estimate_bottom_store(
            params, samples, seed, workers=workers, metrics=relay,
            model=memory_model)
        result = report.estimate_record(estimate)
    else:
        echo.update(threads=threads)
        estimate = montecarlo.estimate_marginal_expectation(
            memory_model, threads, params, samples, seed, workers=workers,
            metrics=relay)
        result = report.estimate_record(estimate)
        result['pr_a'] = report.render_float(
            analytic.identical_marginal_pr_a(threads, estimate.mean))

    _flush_metrics(relay)
    _emit(report.payload('simulate', echo, result, seed))


@cli.group('analytic')
def analytic_group():
    """Exact closed-form values."""


@analytic_group.command('window')
@click.option('--model', required=True, help='sc, wo or tso.')
@click.option('--gamma', type=INT_RANGE, default='0..8', show_default=True)
@click.pass_obj
def analytic_window(config, model, gamma):
    """Critical window pmf; TSO rows carry lower and upper bounds."""
    memory_model = _model(config, model)
    rows = []
    for g in gamma:
        row = {'gamma': g}
        row.update(report.value_record(
            analytic.window_bounds(memory_model, g)
            if memory_model.kind is models.ModelName.TSO
            else analytic.window_pmf(memory_model, g)))
        rows.append(row)
    total = report.value_record(analytic.window_pmf_total(memory_model))
    params = {'model': str(memory_model),
              'gamma': [gamma.start, gamma.stop - 1]}
    _emit(report.payload('analytic window', params,
                         {'rows': rows, 'total': total}))


@analytic_group.command('disjoint')
@click.option('--lengths', type=INT_LIST, required=True)
def analytic_disjoint(lengths):
    """Exact probability that shifted segments are disjoint."""
    value = analytic.disjoint_probability(lengths)
    _emit(report.payload('analytic disjoint', {'lengths': list(lengths)},
                         report.exact_record(value)))


@analytic_group.command('two-thread')
@click.option('--model', required=True, help='sc, wo or tso.')
@click.pass_obj
def analytic_two_thread(config, model):
    """Two-thread probability that the bug stays hidden."""
    memory_model = _model(config, model)
    value = analytic.two_thread_pr_a(memory_model)
    _emit(report.payload('analytic two-thread', {'model': str(memory_model)},
                         report.value_record(value)))


@analytic_group.command('sc-pr-a')
@click.option('--threads', type=int, required=True)
def analytic_sc_pr_a(threads):
    value = analytic.sc_pr_a(threads)
    _emit(report.payload('analytic sc-pr-a', {'threads': threads},
                         report.exact_record(value)))


@analytic_group.command('exponent')
@click.option('--threads', type=INT_RANGE, required=True)
def analytic_exponent(threads):
    """``log2 Pr[A] / n**2`` under SC."""
    rows = [{'n': n, 'ratio': report.render_float(
        analytic.sc_exponent_ratio(n))} for n in threads]
    params = {'threads': [threads.start, threads.stop - 1]}
    _emit(report.payload('analytic exponent', params, {'rows': rows}))


@analytic_group.command('lower-bound')
@click.option('--threads', type=int, required=True)
def analytic_lower_bound(threads):
    """Lower bound on ``Pr[A]`` valid under every memory model."""
    value = analytic.any_model_pr_a_lower(threads)
    _emit(report.payload('analytic lower-bound', {'threads': threads},
                         report.exact_record(value)))


@analytic_group.command('lemma')
@click.option('--mu', type=INT_RANGE, default='0..8', show_default=True)
def analytic_lemma(mu):
    """Bounds on the store run above the critical load (TSO)."""
    rows = []
    for value in mu:
        row = {
            'mu': value,
            'lower': report.rational(analytic.pr_l_lower(value)),
            'bound': report.rational(analytic.pr_l_bound(value)),
        }
        if value >= 1:
            row['h'] = report.rational(analytic.h(value))
        rows.append(row)
    params = {'mu': [mu.start, mu.stop - 1]}
    result = {'rows': rows,
              'missing_mass': report.rational(analytic.missing_mass())}
    _emit(report.payload('analytic lemma', params, result))


@analytic_group.command('bottom-store')
@click.option('--index', type=int, required=True)
def analytic_bottom_store(index):
    """Chance the bottom settled body instruction is a store (TSO)."""
    result = report.exact_record(analytic.bottom_store_prob(index))
    result['limit'] = report.rational(analytic.bottom_store_limit())
    _emit(report.payload('analytic bottom-store', {'index': index}, result))


@cli.group('oracle')
def oracle_group():
    """Brute-force exact values at small sizes."""


@oracle_group.command('window')
@click.option('--model', required=True)
@click.option('--program-len', type=int, required=True,
              help=f'Non-critical instructions, at most {oracle.M_CAP}.')
@click.pass_obj
def oracle_window(config, model, program_len):
    memory_model = _model(config, model)
    params = models.params_from_config(config, m=program_len)
    pmf = oracle.exact_window_pmf(memory_model, params)
    rows = [dict(gamma=g, **report.exact_record(v)) for g, v in pmf.items()]
    echo = {'model': str(memory_model)}
    echo.update(params.echo())
    _emit(report.payload('oracle window', echo, {'rows': rows}))


@oracle_group.command('disjoint')
@click.option('--lengths', type=INT_LIST, required=True)
@click.option('--cap', type=int, default=20, show_default=True)
@click.option('--overlap', type=click.Choice(shift.OVERLAPS),
              default=shift.OVERLAP_CLOSED, show_default=True)
def oracle_disjoint(lengths, cap, overlap):
    bracket = oracle.exact_disjoint(lengths, cap, overlap=overlap)
    params = {'lengths': list(lengths), 'cap': cap, 'overlap': overlap}
    _emit(report.payload('oracle disjoint', params,
                         report.bounded_record(bracket)))


@cli.command('verify')
@click.option('--samples', type=int, default=None,
              help='Samples per Monte Carlo check.')
@click.option('--seed', type=int, default=None)
@click.option('--workers', type=int, default=None)
@click.option('--quick', is_flag=True, default=False,
              help='Smaller oracles and tenfold fewer samples.')
@click.option('--exact-only', is_flag=True, default=False,
              help='Skip the Monte Carlo checks.')
@click.pass_obj
def verify_command(config, samples, seed, workers, quick, exact_only):
    """Cross-check closed forms, oracles and simulation."""
    relay = metrics.get_relay(config)
    settings = verify.VerifySettings.from_config(
        config, samples=samples, seed=seed, quick=quick, metrics=relay,
        workers=_resolve_workers(workers, config))
    results = verify.run_checks(settings, include_sampling=not exact_only)
    _flush_metrics(relay)

    failed = [r.name for r in results if not r.passed]
    params = {'samples': settings.samples, 'quick': quick,
              'exact_only': exact_only}
    checks = [{'name': r.name, 'passed': r.passed, 'detail': r.detail}
              for r in results]
    _emit(report.payload('verify', params,
                         {'checks': checks, 'passed': not failed},
                         settings.seed))
    if failed:
        raise exceptions.VerificationError(
            f'{len(failed)} check(s) failed: {", ".join(failed)}.')


@cli.command()
@click.option('--models', 'model_names', default='sc,tso,pso,wo',
              show_default=True)
@click.option('--threads', type=INT_RANGE, default='2..8', show_default=True)
@click.option('--program-len', type=int, default=None)
@click.option('--samples', type=int, default=None)
@click.option('--seed', type=int, default=None)
@click.option('--workers', type=int, default=None)
@click.option('--format', 'output_format', type=click.Choice(['csv', 'json']),
              default='csv', show_default=True)
@click.pass_obj
def sweep(config, model_names, threads, program_len, samples, seed, workers,
          output_format):
    """Estimate Pr[A] for every (model, thread count) pair."""
    defaults = _simulate_defaults(config)
    program_len = defaults['program_len'] if program_len is None \
        else program_len
    samples = defaults['samples'] if samples is None else samples
    seed = defaults['seed'] if seed is None else seed
    workers = _resolve_workers(workers, config)
    params = models.params_from_config(config, m=program_len)
    relay = metrics.get_relay(config)

    rows = []
    for name in model_names.split(','):
        memory_model = _model(config, name)
        for n in threads:
            estimate = montecarlo.estimate_pr_a(
                memory_model, n, params, samples, seed, workers=workers,
                metrics=relay)
            rows.append(report.sweep_row(memory_model, estimate, params))
    _flush_metrics(relay)

    if output_format == 'csv':
        buffer = io.StringIO()
        report.write_csv(rows, buffer)
        click.echo(buffer.getvalue(), nl=False)
        return
    echo = {'models': model_names.split(','),
            'threads': [threads.start, threads.stop - 1],
            'samples': samples}
    echo.update(params.echo())
    _emit(report.payload('sweep', echo, {'rows': rows}, seed))


def _exit_code(exc):
    for exc_class, code in _EXIT_CODES:
        if isinstance(exc, exc_class):
            return code
    return 1


def run(argv=None):
    """Run the CLI and translate errors into exit codes.

    Args:
        argv (list(str)): (optional) Arguments; defaults to
            ``sys.argv[1:]``.
    Returns:
        int: The process exit code.
    """
    try:
        result = cli.main(args=argv, prog_name='mcvuln',
                          standalone_mode=False)
    except click.exceptions.Abort:
        click.echo('Aborted!', err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except exceptions.McvulnError as e:
        code = _exit_code(e)
        logging.debug(f'Exiting with code {code}.', exc_info=e)
        click.echo(f'Error: {e}', err=True)
        return code
    return result if isinstance(result, int) else 0


if __name__ == '__main__':
    sys.exit(run())
