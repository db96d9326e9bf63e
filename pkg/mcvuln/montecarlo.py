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
Monte Carlo estimation of the settling and shift processes.

Each sample draws one program and settles one copy per thread. Samples
are drawn in fixed blocks of :data:`BLOCK_SIZE`, and every block only
reads the random substreams addressed by its own index (see
:mod:`mcvuln.rng`). Chunks always start on a block boundary and
per-chunk outcome counts are merged by addition, so a fixed seed gives
identical counts for any number of workers.

Work is split into chunks and dispatched to a
:class:`concurrent.futures.ProcessPoolExecutor` from
:func:`count_events`; with a single worker or a single chunk
everything runs in-process.

Example:

.. code-block:: python

    from mcvuln import models, montecarlo

    estimate = montecarlo.estimate_pr_a(
        models.TSO, 2, models.ModelParams(), samples=10 ** 5, seed=7,
        workers=4)
    print(estimate.mean, estimate.ci95)
"""

import asyncio
import concurrent.futures
import dataclasses
import logging
import math
from collections import Counter
from dataclasses import dataclass
from dataclasses import field
from fractions import Fraction

import numpy as np
from scipy import stats

from mcvuln import exceptions
from mcvuln import models
from mcvuln import rng
from mcvuln import settling
from mcvuln import shift


#: Two-sided 95% normal quantile.
Z95 = float(stats.norm.ppf(0.975))

SAMPLE_CAP = 10 ** 10
THREAD_CAP = 64
CHUNKS_PER_WORKER = 4
#: Samples drawn together from one set of block substreams.
BLOCK_SIZE = 8192

MEASURE_PR_A = 'pr-a'
MEASURE_WINDOW = 'window'
MEASURE_L_MU = 'l-mu'
MEASURE_BOTTOM_STORE = 'bottom-store'
MEASURE_MARGINAL = 'marginal'
MEASURE_DISJOINT = 'disjoint'


def wilson_interval(hits, samples, z=Z95):
    """Wilson score interval for a binomial proportion."""
    mean = hits / samples
    denominator = 1 + z ** 2 / samples
    center = (mean + z ** 2 / (2 * samples)) / denominator
    half = z * math.sqrt(
        mean * (1 - mean) / samples + z ** 2 / (4 * samples ** 2)
    ) / denominator
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo estimate of a probability or expectation.

    Args:
        mean (float): Point estimate.
        stderr (float): Standard error of ``mean``.
        ci95 (tuple(float, float)): 95% confidence interval.
        samples (int): Number of samples drawn.
        seed (int): Master seed.
        config_echo (dict): Parameters which produced the estimate.
    """
    mean: float
    stderr: float
    ci95: tuple
    samples: int
    seed: int
    config_echo: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_counts(cls, hits, samples, seed, config_echo=None):
        """Proportion ``hits / samples`` with a Wilson interval."""
        mean = hits / samples
        stderr = math.sqrt(mean * (1 - mean) / samples)
        return cls(mean, stderr, wilson_interval(hits, samples), samples,
                   seed, dict(config_echo or {}))

    @classmethod
    def from_moments(cls, first, second, samples, seed, config_echo=None):
        """Sample mean of a bounded variable from its exact moments.

        Args:
            first (Fraction): Sum of the sampled values.
            second (Fraction): Sum of their squares.
        """
        mean = first / samples
        variance = max(second / samples - mean ** 2, Fraction(0))
        mean, stderr = float(mean), math.sqrt(variance / samples)
        ci95 = (mean - Z95 * stderr, mean + Z95 * stderr)
        return cls(mean, stderr, ci95, samples, seed,
                   dict(config_echo or {}))

    def covers(self, low, high=None, sigmas=3, slack=0.0):
        """Whether ``[low, high]`` comes within ``sigmas`` standard errors
        of the mean.

        When no sample or every sample hit, the standard error is zero;
        the 95% interval is accepted then instead.
        """
        low = float(low)
        high = low if high is None else float(high)
        band = sigmas * self.stderr + slack
        if low - band <= self.mean <= high + band:
            return True
        if self.stderr == 0:
            lower, upper = self.ci95
            return low - slack <= upper and lower <= high + slack
        return False

    def within(self, value, sigmas=3, slack=0.0):
        """Whether ``value`` lies within ``sigmas`` standard errors."""
        return self.covers(value, sigmas=sigmas, slack=slack)


@dataclass(frozen=True)
class SampleTask:
    """Everything a worker needs to draw samples ``start..stop - 1``."""
    measure: str
    seed: int
    model: models.MemoryModel = None
    params: models.ModelParams = None
    threads: int = 1
    lengths: tuple = ()
    overlap: str = shift.OVERLAP_CLOSED
    independent_programs: bool = False
    start: int = 0
    stop: int = 0

    def echo(self):
        record = {'measure': self.measure}
        if self.model is not None:
            record['model'] = str(self.model)
        if self.params is not None:
            record.update(self.params.echo())
        if self.measure in (MEASURE_PR_A, MEASURE_MARGINAL,
                            MEASURE_DISJOINT):
            record['threads'] = self.threads
        if self.measure in (MEASURE_PR_A, MEASURE_DISJOINT):
            record['overlap'] = self.overlap
        if self.lengths:
            record['lengths'] = list(self.lengths)
        if self.independent_programs:
            record['independent_programs'] = True
        return record


def _program_block(task, block):
    generator = rng.block_generator(task.seed, block)
    return settling.generate_block(task.params, BLOCK_SIZE, generator)


def _thread_generator(task, block, thread):
    return rng.block_generator(task.seed, block, slot=thread + 1)


def _segment_lengths(order):
    return settling.critical_windows(order) + 2


def _pr_a_outcomes(task, block, table):
    program = None
    if not task.independent_programs:
        program = _program_block(task, block)
    lengths = np.empty((BLOCK_SIZE, task.threads), dtype=np.int64)
    shifts = np.empty_like(lengths)
    for thread in range(task.threads):
        generator = _thread_generator(task, block, thread)
        codes = program
        if codes is None:
            codes = settling.generate_block(
                task.params, BLOCK_SIZE, generator)
        order = settling.settle_block(codes, table, generator)
        lengths[:, thread] = _segment_lengths(order)
        shifts[:, thread] = shift.sample_shift_block(BLOCK_SIZE, generator)
    return shift.disjoint_block(lengths, shifts, task.overlap)


def _window_outcomes(task, block, table):
    order = settling.settle_block(
        _program_block(task, block), table,
        _thread_generator(task, block, 0))
    return settling.critical_windows(order)


def _before_critical_load(task, block, table):
    codes = _program_block(task, block)
    order = settling.settle_block(
        codes, table, _thread_generator(task, block, 0),
        rounds=task.params.m)
    return settling.settled_codes(codes, order)


def _l_mu_outcomes(task, block, table):
    return settling.store_runs(_before_critical_load(task, block, table))


def _bottom_store_outcomes(task, block, table):
    settled = _before_critical_load(task, block, table)
    return settled[:, -1] == models.STORE_CODE


def _marginal_outcomes(task, block, table):
    """Dyadic exponent of ``prod 2 ** -(i * Gamma_i)`` over ``i < n``."""
    codes = _program_block(task, block)
    exponent = np.zeros(BLOCK_SIZE, dtype=np.int64)
    for thread in range(task.threads - 1):
        order = settling.settle_block(
            codes, table, _thread_generator(task, block, thread))
        exponent += (thread + 1) * _segment_lengths(order)
    return exponent


def _disjoint_outcomes(task, block, table):
    shifts = np.column_stack([
        shift.sample_shift_block(
            BLOCK_SIZE, _thread_generator(task, block, thread))
        for thread in range(len(task.lengths))
    ])
    lengths = np.broadcast_to(np.asarray(task.lengths), shifts.shape)
    return shift.disjoint_block(lengths, shifts, task.overlap)


_OUTCOMES = {
    MEASURE_PR_A: _pr_a_outcomes,
    MEASURE_WINDOW: _window_outcomes,
    MEASURE_L_MU: _l_mu_outcomes,
    MEASURE_BOTTOM_STORE: _bottom_store_outcomes,
    MEASURE_MARGINAL: _marginal_outcomes,
    MEASURE_DISJOINT: _disjoint_outcomes,
}


def count_chunk(task):
    """Count outcomes of samples ``task.start .. task.stop - 1``.

    Every block touched by the range is drawn in full and only the
    samples inside the range are counted. Module-level so it can be
    pickled into worker processes.
    """
    outcomes = _OUTCOMES[task.measure]
    table = None
    if task.model is not None:
        table = models.swap_table(task.model, task.params)
    counts = Counter()
    first = task.start // BLOCK_SIZE
    last = math.ceil(task.stop / BLOCK_SIZE)
    for block in range(first, last):
        offset = block * BLOCK_SIZE
        values = outcomes(task, block, table)[
            max(task.start - offset, 0):task.stop - offset]
        found, frequency = np.unique(values, return_counts=True)
        counts.update({value.item(): int(count)
                       for value, count in zip(found, frequency)})
    return counts


def chunk_bounds(samples, chunks):
    size = max(1, math.ceil(samples / chunks))
    return [(start, min(start + size, samples))
            for start in range(0, samples, size)]


def _check_run(samples, workers, threads=1):
    if isinstance(samples, bool) or not isinstance(samples, int) \
            or samples < 1:
        raise exceptions.UsageError(
            f'Sample count must be a positive integer, got "{samples}".')
    if isinstance(workers, bool) or not isinstance(workers, int) \
            or workers < 1:
        raise exceptions.UsageError(
            f'Worker count must be a positive integer, got "{workers}".')
    if samples > SAMPLE_CAP:
        raise exceptions.ResourceGuardError(
            f'Refusing to draw {samples} samples (limit {SAMPLE_CAP}).')
    if threads > THREAD_CAP:
        raise exceptions.ResourceGuardError(
            f'Refusing to simulate {threads} threads (limit {THREAD_CAP}).')


async def _dispatch(tasks, workers):
    if workers == 1 or len(tasks) == 1:
        return [count_chunk(task) for task in tasks]
    loop = asyncio.get_running_loop()
    workers = min(workers, len(tasks))
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [loop.run_in_executor(pool, count_chunk, task)
                   for task in tasks]
        return await asyncio.gather(*futures)


async def count_events(task, samples, workers=1, metrics=None):
    """Count the outcomes of ``samples`` samples of ``task``.

    Args:
        task (SampleTask): What to sample; ``start``/``stop`` are
            ignored.
        samples (int): Number of samples.
        workers (int): (optional) Worker processes.
        metrics (mcvuln.interfaces.IMetricRelay): (optional) Receives
            ``samples-drawn``, ``simulate-elapsed`` and the ``workers``
            gauge.
    Returns:
        collections.Counter: outcome -> number of samples.
    """
    _check_run(samples, workers, task.threads)
    rng.check_seed(task.seed)
    blocks = math.ceil(samples / BLOCK_SIZE)
    tasks = [dataclasses.replace(task, start=first * BLOCK_SIZE,
                                 stop=min(last * BLOCK_SIZE, samples))
             for first, last in chunk_bounds(
                 blocks, workers * CHUNKS_PER_WORKER)]
    logging.debug(f'Drawing {samples} "{task.measure}" samples in '
                  f'{len(tasks)} chunks on {workers} workers.')

    context = {'measure': task.measure}
    if task.model is not None:
        context['model'] = str(task.model)
    if metrics is None:
        chunk_counts = await _dispatch(tasks, workers)
    else:
        async with metrics.timer('simulate-elapsed', context=context):
            chunk_counts = await _dispatch(tasks, workers)
        await metrics.incr('samples-drawn', samples, context=context)
        await metrics.set('workers', workers, context=context)

    counts = Counter()
    for chunk in chunk_counts:
        counts.update(chunk)
    return counts


def _count(task, samples, workers, metrics):
    return asyncio.run(count_events(task, samples, workers, metrics))


def _histogram(task, counts, samples):
    echo = task.echo()
    return {
        outcome: Estimate.from_counts(
            counts[outcome], samples, task.seed, echo)
        for outcome in sorted(counts)
    }


def estimate_pr_a(model, n, params, samples, seed, workers=1,
                  overlap=shift.OVERLAP_CLOSED, independent_programs=False,
                  metrics=None):
    """Estimate ``Pr[A]``, the chance that no two critical windows of
    ``n`` threads overlap.

    Args:
        model (str or MemoryModel): Memory model of every thread.
        n (int): Thread count, at least 2.
        params (mcvuln.models.ModelParams): Generation and swap odds.
        samples (int): Number of samples.
        seed (int): Master seed.
        workers (int): (optional) Worker processes.
        overlap (str): (optional) Overlap convention.
        independent_programs (bool): (optional) Draw a separate program
            per thread instead of one shared program.
        metrics (mcvuln.interfaces.IMetricRelay): (optional) Metrics.
    Returns:
        Estimate: proportion of samples with disjoint windows.
    """
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise exceptions.UsageError(
            f'Thread count must be an integer >= 2, got "{n}".')
    shift.check_overlap(overlap)
    task = SampleTask(
        MEASURE_PR_A, seed, model=models.get_model(model), params=params,
        threads=n, overlap=overlap,
        independent_programs=independent_programs)
    counts = _count(task, samples, workers, metrics)
    return Estimate.from_counts(counts[True], samples, seed, task.echo())


def estimate_window_pmf(model, params, samples, seed, workers=1,
                        metrics=None):
    """Histogram of the critical window size.

    Returns:
        dict(int, Estimate): ``gamma -> Pr[gamma]`` for observed sizes.
    """
    task = SampleTask(MEASURE_WINDOW, seed, model=models.get_model(model),
                      params=params)
    return _histogram(task, _count(task, samples, workers, metrics), samples)


def estimate_l_mu(params, samples, seed, workers=1, metrics=None,
                  model=models.TSO):
    """Histogram of the store run directly above the critical load,
    measured before the critical load settles."""
    task = SampleTask(MEASURE_L_MU, seed, model=models.get_model(model),
                      params=params)
    return _histogram(task, _count(task, samples, workers, metrics), samples)


def estimate_bottom_store(params, samples, seed, workers=1, metrics=None,
                          model=models.TSO):
    """Chance that the bottom body instruction is a store once every
    body instruction has settled."""
    if params.m < 1:
        raise exceptions.UsageError(
            'The bottom-store measure needs a program length of at least 1.')
    task = SampleTask(MEASURE_BOTTOM_STORE, seed,
                      model=models.get_model(model), params=params)
    counts = _count(task, samples, workers, metrics)
    return Estimate.from_counts(counts[True], samples, seed, task.echo())


def estimate_disjoint(lengths, samples, seed, workers=1,
                      overlap=shift.OVERLAP_CLOSED, metrics=None):
    """Shift-only estimate of ``Pr[disjoint]`` for fixed lengths."""
    lengths = shift.SegmentLengths(tuple(lengths)).lengths
    shift.check_overlap(overlap)
    task = SampleTask(MEASURE_DISJOINT, seed, threads=len(lengths),
                      lengths=lengths, overlap=overlap)
    counts = _count(task, samples, workers, metrics)
    return Estimate.from_counts(counts[True], samples, seed, task.echo())


def estimate_marginal_expectation(model, n, params, samples, seed, workers=1,
                                  metrics=None):
    """Estimate ``E[prod 2 ** -(i * Gamma_i)]`` over ``i = 1..n-1``.

    Values are accumulated exactly per dyadic exponent, so the estimate
    does not depend on the worker count.
    """
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise exceptions.UsageError(
            f'Thread count must be an integer >= 2, got "{n}".')
    task = SampleTask(MEASURE_MARGINAL, seed, model=models.get_model(model),
                      params=params, threads=n)
    counts = _count(task, samples, workers, metrics)
    first = sum((Fraction(c, 2 ** e) for e, c in counts.items()), Fraction(0))
    second = sum((Fraction(c, 4 ** e) for e, c in counts.items()),
                 Fraction(0))
    return Estimate.from_moments(first, second, samples, seed, task.echo())
