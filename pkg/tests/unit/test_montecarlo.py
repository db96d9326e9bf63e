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

import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest

from mcvuln import analytic
from mcvuln import exceptions
from mcvuln import models
from mcvuln import montecarlo
from mcvuln import shift
from mcvuln.metrics import log


SIGMAS = 4


def _assert_within(estimate, low, high=None, slack=0.0, sigmas=SIGMAS):
    high = low if high is None else high
    band = sigmas * estimate.stderr + slack
    assert float(low) - band <= estimate.mean <= float(high) + band


#####
# Estimates
#####
def test_wilson_interval_symmetric_at_half():
    low, high = montecarlo.wilson_interval(50, 100)
    assert low + high == pytest.approx(1.0)
    assert low < 0.5 < high


def test_wilson_interval_clamps():
    low, high = montecarlo.wilson_interval(0, 10)
    assert 0.0 == low
    assert 0 < high < 1
    low, high = montecarlo.wilson_interval(10, 10)
    assert 1.0 == high


def test_z95():
    assert montecarlo.Z95 == pytest.approx(1.959964, abs=1e-6)


def test_estimate_from_counts():
    estimate = montecarlo.Estimate.from_counts(30, 100, 7, {'model': 'sc'})
    assert 0.3 == estimate.mean
    assert estimate.stderr == pytest.approx(math.sqrt(0.21 / 100))
    assert estimate.ci95[0] < 0.3 < estimate.ci95[1]
    assert (100, 7) == (estimate.samples, estimate.seed)
    assert {'model': 'sc'} == estimate.config_echo


def test_estimate_from_moments():
    """Values 1, 1, 0, 0: mean 1/2, variance 1/4."""
    estimate = montecarlo.Estimate.from_moments(
        Fraction(2), Fraction(2), 4, 1)
    assert 0.5 == estimate.mean
    assert 0.25 == estimate.stderr


def test_estimate_equality_ignores_echo():
    a = montecarlo.Estimate.from_counts(3, 10, 1, {'model': 'sc'})
    b = montecarlo.Estimate.from_counts(3, 10, 1, {'model': 'wo'})
    assert a == b


@pytest.mark.parametrize('value,sigmas,slack,expected', [
    (0.5, 3, 0.0, True),
    (0.9, 3, 0.0, False),
    (0.9, 3, 0.5, True),
])
def test_estimate_within(value, sigmas, slack, expected):
    estimate = montecarlo.Estimate(0.5, 0.01, (0.48, 0.52), 100, 1)
    assert expected is estimate.within(value, sigmas, slack)


def test_estimate_covers_interval():
    estimate = montecarlo.Estimate(0.5, 0.01, (0.48, 0.52), 100, 1)
    assert estimate.covers(0.52, 0.6)
    assert not estimate.covers(0.54, 0.6)


def test_estimate_covers_without_variance():
    """No hits: the Wilson interval stands in for the empty band."""
    none = montecarlo.Estimate.from_counts(0, 20000, 1)
    assert 0.0 == none.stderr
    assert none.within(4.8e-5, sigmas=4)
    assert not none.within(0.01, sigmas=4)
    every = montecarlo.Estimate.from_counts(50, 50, 1)
    assert every.within(0.99)
    assert not every.within(0.5)


#####
# Chunking and reproducibility
#####
@pytest.mark.parametrize('samples,chunks,expected', [
    (10, 4, [(0, 3), (3, 6), (6, 9), (9, 10)]),
    (2, 8, [(0, 1), (1, 2)]),
    (6, 1, [(0, 6)]),
])
def test_chunk_bounds(samples, chunks, expected):
    assert expected == montecarlo.chunk_bounds(samples, chunks)


@pytest.fixture
def pr_a_task():
    return montecarlo.SampleTask(
        montecarlo.MEASURE_PR_A, 11, model=models.TSO,
        params=models.ModelParams(m=12), threads=2)


def test_count_chunk_is_split_invariant(pr_a_task):
    whole = montecarlo.count_chunk(
        dataclasses.replace(pr_a_task, start=0, stop=150))
    head = montecarlo.count_chunk(
        dataclasses.replace(pr_a_task, start=0, stop=61))
    tail = montecarlo.count_chunk(
        dataclasses.replace(pr_a_task, start=61, stop=150))
    assert whole == head + tail
    assert 150 == sum(whole.values())


def test_sample_task_echo(pr_a_task):
    echo = pr_a_task.echo()
    assert 'tso' == echo['model']
    assert 2 == echo['threads']
    assert 'closed' == echo['overlap']
    assert 12 == echo['m']
    assert 'independent_programs' not in echo


@pytest.mark.asyncio
async def test_count_events(pr_a_task):
    counts = await montecarlo.count_events(pr_a_task, 120)
    assert 120 == sum(counts.values())
    assert set(counts) <= {True, False}


@pytest.mark.asyncio
async def test_count_events_reports_metrics(pr_a_task, caplog):
    relay = log.LogRelay({})
    await montecarlo.count_events(pr_a_task, 40, metrics=relay)
    assert 40 == relay.counters['samples-drawn']
    messages = [r.getMessage() for r in caplog.records
                if r.name == 'mcvuln.metrics-logger']
    assert any(m.startswith('[simulate-elapsed]') for m in messages)
    assert ('[samples-drawn] value: 40 context: measure=pr-a model=tso'
            in messages)
    assert {'workers': 1} == relay.gauges


@pytest.mark.asyncio
async def test_count_events_worker_invariant(pr_a_task):
    samples = 2 * montecarlo.BLOCK_SIZE + 300
    serial = await montecarlo.count_events(pr_a_task, samples, workers=1)
    parallel = await montecarlo.count_events(pr_a_task, samples, workers=3)
    assert serial == parallel
    assert samples == sum(serial.values())


def test_estimate_reproducible():
    params = models.ModelParams(m=10)
    a = montecarlo.estimate_pr_a(models.WO, 3, params, 300, 5)
    b = montecarlo.estimate_pr_a(models.WO, 3, params, 300, 5)
    assert a == b


@pytest.mark.parametrize('samples,workers,exc', [
    (0, 1, exceptions.UsageError),
    (10, 0, exceptions.UsageError),
    (True, 1, exceptions.UsageError),
    (montecarlo.SAMPLE_CAP + 1, 1, exceptions.ResourceGuardError),
])
def test_estimate_rejects_run_sizes(samples, workers, exc):
    with pytest.raises(exc):
        montecarlo.estimate_pr_a(
            models.SC, 2, models.ModelParams(m=4), samples, 1,
            workers=workers)


def test_estimate_rejects_thread_count():
    params = models.ModelParams(m=4)
    with pytest.raises(exceptions.UsageError):
        montecarlo.estimate_pr_a(models.SC, 1, params, 10, 1)
    with pytest.raises(exceptions.ResourceGuardError):
        montecarlo.estimate_pr_a(
            models.SC, montecarlo.THREAD_CAP + 1, params, 10, 1)


def test_estimate_rejects_seed():
    with pytest.raises(exceptions.UsageError):
        montecarlo.estimate_disjoint((2, 2), 10, -1)


def test_estimate_rejects_overlap():
    with pytest.raises(exceptions.UsageError):
        montecarlo.estimate_pr_a(
            models.SC, 2, models.ModelParams(m=4), 10, 1, overlap='open')


def test_bottom_store_rejects_empty_body():
    with pytest.raises(exceptions.UsageError):
        montecarlo.estimate_bottom_store(models.ModelParams(m=0), 10, 1)


#####
# Estimates against exact values
#####
@pytest.mark.parametrize('independent_programs', [False, True])
def test_estimate_pr_a_sc(independent_programs):
    """SC windows are always empty, so only the shifts matter."""
    estimate = montecarlo.estimate_pr_a(
        models.SC, 2, models.ModelParams(m=16), 4000, 3,
        independent_programs=independent_programs)
    _assert_within(estimate, Fraction(1, 6))
    assert independent_programs is \
        estimate.config_echo.get('independent_programs', False)


def test_estimate_disjoint():
    estimate = montecarlo.estimate_disjoint((2, 2), 5000, 8)
    _assert_within(estimate, Fraction(1, 6))
    assert [2, 2] == estimate.config_echo['lengths']


def test_estimate_disjoint_random_lengths():
    generator = np.random.default_rng(2026)
    for _ in range(20):
        n = int(generator.integers(2, 5))
        lengths = tuple(int(g) for g in generator.integers(0, 6, size=n))
        estimate = montecarlo.estimate_disjoint(lengths, 20000, 11)
        exact = analytic.disjoint_probability(lengths)
        assert estimate.within(exact, sigmas=SIGMAS), lengths


def test_estimate_disjoint_index_set():
    """Index-set segments (2, 2) are disjoint unless the shifts are
    within one of each other: 1 - 1/3 - 2 * 1/6."""
    estimate = montecarlo.estimate_disjoint(
        (2, 2), 5000, 8, overlap=shift.OVERLAP_INDEX_SET)
    _assert_within(estimate, Fraction(1, 3))


def test_estimate_window_pmf_wo():
    histogram = montecarlo.estimate_window_pmf(
        models.WO, models.ModelParams(m=16), 3000, 4)
    assert list(histogram) == sorted(histogram)
    _assert_within(histogram[0], Fraction(2, 3), slack=2.0 ** -14)
    _assert_within(histogram[1], Fraction(1, 6), slack=2.0 ** -14)


def test_estimate_l_mu():
    histogram = montecarlo.estimate_l_mu(
        models.ModelParams(m=16), 3000, 6)
    _assert_within(histogram[0], Fraction(1, 3), slack=2.0 ** -14)
    assert 3000 == sum(round(e.mean * e.samples) for e in histogram.values())


def test_estimate_bottom_store():
    estimate = montecarlo.estimate_bottom_store(
        models.ModelParams(m=4), 4000, 9)
    _assert_within(estimate, analytic.bottom_store_prob(4))


@pytest.mark.parametrize('n,expected', [(2, 0.25), (3, 2.0 ** -6)])
def test_estimate_marginal_expectation_sc(n, expected):
    """Every SC segment has length two, so the value is constant."""
    estimate = montecarlo.estimate_marginal_expectation(
        models.SC, n, models.ModelParams(m=6), 200, 2)
    assert expected == estimate.mean
    assert 0.0 == estimate.stderr


def test_estimate_marginal_expectation_wo():
    estimate = montecarlo.estimate_marginal_expectation(
        models.WO, 2, models.ModelParams(m=16), 3000, 12)
    _assert_within(estimate, Fraction(7, 36), slack=2.0 ** -14)


#####
# Acceptance runs (slow)
#####
ACCEPTANCE_SEED = 20260101


def _accept(estimate, low, high=None):
    _assert_within(estimate, low, high, slack=2.0 ** -60, sigmas=3)


@pytest.mark.slow
@pytest.mark.parametrize('model,expected,samples', [
    (models.SC, Fraction(1, 6), 10 ** 6),
    (models.WO, Fraction(7, 54), 10 ** 6),
    (models.TSO, analytic.two_thread_pr_a(models.TSO), 4 * 10 ** 6),
])
def test_two_thread_acceptance(model, expected, samples):
    estimate = montecarlo.estimate_pr_a(
        model, 2, models.ModelParams(), samples, ACCEPTANCE_SEED, workers=4)
    if isinstance(expected, analytic.BoundedValue):
        _accept(estimate, expected.lower, expected.upper)
    else:
        _accept(estimate, expected)


@pytest.mark.slow
def test_two_thread_model_ordering():
    """SC > TSO > WO, each gap larger than its combined 3 sigma."""
    estimates = [
        montecarlo.estimate_pr_a(
            model, 2, models.ModelParams(), 4 * 10 ** 6, ACCEPTANCE_SEED,
            workers=4)
        for model in (models.SC, models.TSO, models.WO)
    ]
    for higher, lower in zip(estimates, estimates[1:]):
        gap = higher.mean - lower.mean
        assert gap > 3 * math.sqrt(higher.stderr ** 2 + lower.stderr ** 2)


@pytest.mark.slow
def test_three_thread_sc_acceptance():
    estimate = montecarlo.estimate_pr_a(
        models.SC, 3, models.ModelParams(), 10 ** 6, ACCEPTANCE_SEED,
        workers=4)
    _accept(estimate, Fraction(1, 224))


@pytest.mark.slow
def test_window_pmf_acceptance():
    params = models.ModelParams()
    wo = montecarlo.estimate_window_pmf(
        models.WO, params, 10 ** 6, ACCEPTANCE_SEED, workers=4)
    for gamma in range(9):
        _accept(wo[gamma], analytic.window_pmf('wo', gamma))
    tso = montecarlo.estimate_window_pmf(
        models.TSO, params, 10 ** 6, ACCEPTANCE_SEED, workers=4)
    for gamma in range(7):
        bounds = analytic.window_pmf_bounds(gamma)
        _accept(tso[gamma], bounds.lower, bounds.upper)


@pytest.mark.slow
def test_store_run_acceptance():
    histogram = montecarlo.estimate_l_mu(
        models.ModelParams(), 10 ** 6, ACCEPTANCE_SEED, workers=4)
    _accept(histogram[0], Fraction(1, 3))
    for mu in range(1, 6):
        estimate = histogram[mu]
        lower = float(analytic.pr_l_lower(mu))
        assert estimate.mean >= lower - 3 * estimate.stderr


@pytest.mark.slow
@pytest.mark.parametrize('m', [1, 2, 3, 4, 5, 6, 64])
def test_bottom_store_acceptance(m):
    estimate = montecarlo.estimate_bottom_store(
        models.ModelParams(m=m), 10 ** 6, ACCEPTANCE_SEED, workers=4)
    _accept(estimate, analytic.bottom_store_prob(m))
