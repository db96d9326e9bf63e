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
Cross-checks between the closed forms, the brute-force oracles and the
Monte Carlo engine.

Checks register themselves with :func:`check`. Exact checks compare
rationals for equality; sampling checks compare against a band of
``sigmas`` standard errors around the exact value or envelope.

Configuration, with its defaults:

.. code-block:: ini

    [verify]
    samples = 200000
    seed = 20260101
    sigmas = 4
    program_len = 64
"""

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from mcvuln import analytic
from mcvuln import exceptions
from mcvuln import models
from mcvuln import montecarlo
from mcvuln import oracle
from mcvuln import rng
from mcvuln import settling


DEFAULTS = {
    'samples': 200000,
    'seed': 20260101,
    'sigmas': 4,
    'program_len': 64,
}

#: Cap on programs settled one at a time by the reference check.
REFERENCE_SAMPLES = 20000

_REGISTRY = []


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class VerifySettings:
    """Knobs shared by all checks."""
    samples: int = DEFAULTS['samples']
    seed: int = DEFAULTS['seed']
    sigmas: float = DEFAULTS['sigmas']
    program_len: int = DEFAULTS['program_len']
    workers: int = 1
    quick: bool = False
    metrics: object = None

    @classmethod
    def from_config(cls, config, **overrides):
        table = dict(DEFAULTS)
        table.update({k: v for k, v in config.get('verify', {}).items()
                      if k in DEFAULTS})
        table.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**table)

    @property
    def slack(self):
        """Finite-program truncation allowance."""
        return 2.0 ** -(self.program_len - 2)


def check(name, sampling=False):
    """Register a check function under ``name``."""
    def register(func):
        _REGISTRY.append((name, sampling, func))
        return func
    return register


def registered_checks():
    return list(_REGISTRY)


def _compare(actual, expected):
    return actual == expected, f'got {actual}, expected {expected}'


def _in_band(estimate, low, high, settings):
    passed = estimate.covers(low, high, settings.sigmas, settings.slack)
    return passed, (f'estimate {estimate.mean:.6f} +/- {estimate.stderr:.2g} '
                    f'vs [{float(low):.6f}, {float(high):.6f}]')


def _bin(histogram, key, samples, seed):
    """Histogram entry, or an empty bin if ``key`` was never observed."""
    estimate = histogram.get(key)
    if estimate is None:
        estimate = montecarlo.Estimate.from_counts(0, samples, seed)
    return estimate


@check('two-thread-exact')
def two_thread_exact(settings):
    actual = (analytic.two_thread_pr_a(models.SC),
              analytic.two_thread_pr_a(models.WO),
              analytic.two_thread_pr_a(models.TSO))
    expected = (Fraction(1, 6), Fraction(7, 54),
                analytic.BoundedValue(Fraction(58, 441),
                                      Fraction(58, 441) + Fraction(1, 189)))
    return _compare(actual, expected)


@check('disjoint-vs-sc-closed-form')
def disjoint_vs_sc(settings):
    top = 4 if settings.quick else 7
    mismatches = [n for n in range(2, top + 1)
                  if analytic.sc_pr_a(n)
                  != analytic.disjoint_probability((2,) * n)]
    return not mismatches, f'mismatched thread counts: {mismatches}'


@check('window-normalization')
def window_normalization(settings):
    actual = (analytic.window_pmf_total(models.SC),
              analytic.window_pmf_total(models.WO),
              analytic.window_envelope_totals())
    expected = (Fraction(1), Fraction(1),
                analytic.BoundedValue(Fraction(20, 21), Fraction(22, 21)))
    return _compare(actual, expected)


@check('partition-count-vs-brute-force')
def partitions(settings):
    x_max, y_max, z_max = (10, 5, 6) if settings.quick else (20, 8, 10)
    mismatches = [
        (x, y, z)
        for x in range(x_max + 1)
        for y in range(y_max + 1)
        for z in range(z_max + 1)
        if analytic.partition_count(x, y, z)
        != oracle.brute_partition_count(x, y, z)
    ]
    return not mismatches, f'mismatched triples: {mismatches[:5]}'


@check('store-run-bounds')
def store_run_bounds(settings):
    failures = []
    for mu in range(1, 9):
        for q in range(1, 9):
            exact = analytic.pr_f_exact(mu, q)
            lower = analytic.pr_f_lower(mu, q)
            if exact < lower or (mu == 1 and exact != lower):
                failures.append((mu, q))
    hs = [analytic.h(mu) for mu in range(1, 21)]
    if any(a > b for a, b in zip(hs, hs[1:])) or hs[0] != Fraction(4, 7):
        failures.append('h')
    if (Fraction(1, 3) + Fraction(4, 7) + analytic.missing_mass()) != 1:
        failures.append('missing-mass')
    return not failures, f'failures: {failures}'


@check('exponent-trend')
def exponent_trend(settings):
    ratios = [analytic.sc_exponent_ratio(n) for n in range(4, 51)]
    decreasing = all(a > b for a, b in zip(ratios, ratios[1:]))
    bounded = all(-1.5 < r < -1.2 for r in ratios[6:])
    return decreasing and bounded, (
        f'ratio(4) = {ratios[0]:.4f}, ratio(50) = {ratios[-1]:.4f}')


def _oracle_window_check(model, settings):
    m = 8 if settings.quick else 12
    params = models.ModelParams(m=m)
    pmf = oracle.exact_window_pmf(model, params)
    tolerance = Fraction(1, 2 ** (m - 2))
    failures = [] if sum(pmf.values()) == 1 else ['total']
    for gamma in range(m + 1):
        bounds = analytic.window_bounds(model, gamma)
        value = pmf.get(gamma, Fraction(0))
        if not bounds.lower - tolerance <= value <= bounds.upper + tolerance:
            failures.append(gamma)
    return not failures, f'm = {m}, failing bins: {failures}'


@check('oracle-window-wo')
def oracle_window_wo(settings):
    return _oracle_window_check(models.WO, settings)


@check('oracle-window-tso')
def oracle_window_tso(settings):
    return _oracle_window_check(models.TSO, settings)


@check('oracle-disjoint-brackets')
def oracle_disjoint(settings):
    generator = np.random.default_rng(settings.seed)
    n_max, cap = (3, 12) if settings.quick else (4, 24)
    failures = []
    for _ in range(10):
        n = int(generator.integers(1, n_max + 1))
        lengths = tuple(int(g) for g in generator.integers(0, 5, size=n))
        bracket = oracle.exact_disjoint(lengths, cap)
        if analytic.disjoint_probability(lengths) not in bracket:
            failures.append(lengths)
    return not failures, f'unbracketed lengths: {failures}'


def _samples(settings):
    return max(1, settings.samples // 10) if settings.quick \
        else settings.samples


def _estimate_pr_a(model, settings):
    return montecarlo.estimate_pr_a(
        model, 2, models.ModelParams(m=settings.program_len),
        _samples(settings), settings.seed, workers=settings.workers,
        metrics=settings.metrics)


@check('mc-two-thread-sc', sampling=True)
def mc_sc(settings):
    value = Fraction(1, 6)
    return _in_band(_estimate_pr_a(models.SC, settings), value, value,
                    settings)


@check('mc-two-thread-wo', sampling=True)
def mc_wo(settings):
    value = Fraction(7, 54)
    return _in_band(_estimate_pr_a(models.WO, settings), value, value,
                    settings)


@check('mc-two-thread-tso', sampling=True)
def mc_tso(settings):
    bounds = analytic.two_thread_pr_a(models.TSO)
    return _in_band(_estimate_pr_a(models.TSO, settings), bounds.lower,
                    bounds.upper, settings)


def _l_mu_histogram(settings):
    samples = _samples(settings)
    histogram = montecarlo.estimate_l_mu(
        models.ModelParams(m=settings.program_len), samples,
        settings.seed, workers=settings.workers, metrics=settings.metrics)
    return histogram, samples


@check('mc-l-zero', sampling=True)
def mc_l_zero(settings):
    histogram, samples = _l_mu_histogram(settings)
    value = Fraction(1, 3)
    return _in_band(_bin(histogram, 0, samples, settings.seed), value, value,
                    settings)


@check('mc-l-mu-bounds', sampling=True)
def mc_l_mu_bounds(settings):
    histogram, samples = _l_mu_histogram(settings)
    failures = []
    for mu in range(1, 6):
        estimate = _bin(histogram, mu, samples, settings.seed)
        band = settings.sigmas * estimate.stderr + settings.slack
        if estimate.mean < analytic.pr_l_lower(mu) - band:
            failures.append((mu, round(estimate.mean, 6)))
    return not failures, f'below the store-run lower bound: {failures}'


def _window_histogram(model, settings):
    samples = _samples(settings)
    histogram = montecarlo.estimate_window_pmf(
        model, models.ModelParams(m=settings.program_len), samples,
        settings.seed, workers=settings.workers, metrics=settings.metrics)
    return histogram, samples


def _window_bins(model, settings, largest):
    histogram, samples = _window_histogram(model, settings)
    failures = []
    for gamma in range(largest + 1):
        bounds = analytic.window_bounds(model, gamma)
        estimate = _bin(histogram, gamma, samples, settings.seed)
        if not _in_band(estimate, bounds.lower, bounds.upper, settings)[0]:
            failures.append((gamma, round(estimate.mean, 6)))
    return not failures, f'bins outside the closed form: {failures}'


@check('mc-window-wo', sampling=True)
def mc_window_wo(settings):
    return _window_bins(models.WO, settings, largest=8)


@check('mc-window-tso', sampling=True)
def mc_window_tso(settings):
    return _window_bins(models.TSO, settings, largest=6)


@check('mc-reference-settling', sampling=True)
def mc_reference_settling(settings):
    """One program at a time through :func:`mcvuln.settling.settle`, to
    check the block engine's WO window against the reference loop."""
    samples = min(_samples(settings), REFERENCE_SAMPLES)
    params = models.ModelParams(m=settings.program_len)
    zeros = 0
    for sample in range(samples):
        program = settling.generate_program(
            params, rng.RandomStream(settings.seed, sample))
        order = settling.settle(
            program, models.WO, params,
            rng.RandomStream.for_thread(settings.seed, sample, 0))
        zeros += settling.critical_window(order).gamma == 0
    estimate = montecarlo.Estimate.from_counts(zeros, samples, settings.seed)
    value = analytic.window_pmf(models.WO, 0)
    return _in_band(estimate, value, value, settings)


@check('mc-bottom-store', sampling=True)
def mc_bottom_store(settings):
    estimate = montecarlo.estimate_bottom_store(
        models.ModelParams(m=settings.program_len), _samples(settings),
        settings.seed, workers=settings.workers, metrics=settings.metrics)
    value = analytic.bottom_store_prob(settings.program_len)
    return _in_band(estimate, value, value, settings)


@check('mc-shift-only', sampling=True)
def mc_shift_only(settings):
    estimate = montecarlo.estimate_disjoint(
        (2, 2), _samples(settings), settings.seed,
        workers=settings.workers, metrics=settings.metrics)
    value = Fraction(1, 6)
    return _in_band(estimate, value, value, settings)


def run_checks(settings, include_sampling=True):
    """Run every registered check.

    Returns:
        list(CheckResult): One result per check, in registration order.
    """
    results = []
    for name, sampling, func in registered_checks():
        if sampling and not include_sampling:
            continue
        try:
            passed, detail = func(settings)
        except exceptions.McvulnError as e:
            passed, detail = False, f'raised {e.__class__.__name__}: {e}'
        level = logging.INFO if passed else logging.ERROR
        logging.log(level, f'Check {name}: '
                           f'{"pass" if passed else "FAIL"} ({detail})')
        results.append(CheckResult(name, bool(passed), detail))
    return results
