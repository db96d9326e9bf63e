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
Closed-form results for the settling and shift processes, evaluated in
exact rational arithmetic.

All values assume ``p = s = 1/2`` and an unbounded program. Results
which are only known up to an approximation term (TSO) are returned as
a :class:`BoundedValue`; nothing here invents a point estimate for
them.

Infinite sums are evaluated with closed geometric tails. The window
pmfs are written as a mass at ``gamma = 0`` plus a sum of
``coefficient * ratio ** gamma`` terms for ``gamma > 0``:

.. code-block:: none

    SC          1                      (no terms)
    WO          2/3                    1/3 * (1/2) ** gamma
    TSO lower   2/3                    6/7 * (1/4) ** gamma
    TSO upper   TSO lower              + 2/21 * (1/2) ** gamma
"""

import functools
import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from mcvuln import exceptions
from mcvuln import models


ExactValue = Fraction

#: Largest thread count for which the permutation sum is enumerated.
N_MAX = 10

#: Upper bound on the TSO approximation term.
R_MAX = Fraction(2, 21)

_TWO_THIRDS = Fraction(2, 3)


@dataclass(frozen=True)
class BoundedValue:
    """An exact lower and upper bound on a quantity.

    Args:
        lower (Fraction): Lower bound.
        upper (Fraction): Upper bound, at least ``lower``.
    """
    lower: Fraction
    upper: Fraction

    def __post_init__(self):
        lower, upper = Fraction(self.lower), Fraction(self.upper)
        if lower > upper:
            raise exceptions.McvulnError(
                f'Lower bound {lower} exceeds upper bound {upper}.')
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @classmethod
    def exact(cls, value):
        return cls(value, value)

    @property
    def is_exact(self):
        return self.lower == self.upper

    @property
    def width(self):
        return self.upper - self.lower

    def __contains__(self, value):
        return self.lower <= value <= self.upper


def _check_int(value, what, minimum=0):
    if isinstance(value, bool) or not isinstance(value, int) \
            or value < minimum:
        raise exceptions.UsageError(
            f'{what} must be an integer >= {minimum}, got "{value}".')
    return value


def _closed_form_model(model, supported):
    model = models.get_model(model)
    if model.kind not in supported:
        names = ', '.join(kind.value for kind in supported)
        raise exceptions.UnsupportedModelError(
            f'No closed form for model "{model}"; supported: {names}.')
    return model


def _geometric_tail(ratio):
    """``sum(ratio ** k for k >= 1)``."""
    return ratio / (1 - ratio)


def _window_terms(model):
    kind = model.kind
    if kind is models.ModelName.SC:
        return {'lower': (Fraction(1), ()), 'upper': (Fraction(1), ())}
    if kind is models.ModelName.WO:
        terms = (_TWO_THIRDS, ((Fraction(1, 3), Fraction(1, 2)),))
        return {'lower': terms, 'upper': terms}
    lower = ((Fraction(6, 7), Fraction(1, 4)),)
    upper = lower + ((R_MAX, Fraction(1, 2)),)
    return {'lower': (_TWO_THIRDS, lower), 'upper': (_TWO_THIRDS, upper)}


def _evaluate(model, at_zero, term):
    """Evaluate a functional of the window pmf for every bound."""
    values = {}
    for bound, (mass, terms) in _window_terms(model).items():
        values[bound] = at_zero(mass) + sum(
            (term(coefficient, ratio) for coefficient, ratio in terms),
            Fraction(0))
    if model.kind is models.ModelName.TSO:
        return BoundedValue(values['lower'], values['upper'])
    return values['lower']


_WINDOW_KINDS = (models.ModelName.SC, models.ModelName.WO)
_ENVELOPE_KINDS = _WINDOW_KINDS + (models.ModelName.TSO,)


def window_pmf(model, gamma):
    """``Pr[gamma]`` for the models with an exact window pmf.

    Args:
        model (str or MemoryModel): ``sc`` or ``wo``.
        gamma (int): Critical window size.
    Raises:
        mcvuln.exceptions.UnsupportedModelError: for any other model;
            TSO is served by :func:`window_pmf_bounds`.
    """
    model = _closed_form_model(model, _WINDOW_KINDS)
    _check_int(gamma, 'gamma')
    if model.kind is models.ModelName.SC:
        return Fraction(int(gamma == 0))
    if gamma == 0:
        return _TWO_THIRDS
    return Fraction(1, 3 * 2 ** gamma)


def window_pmf_bounds(gamma):
    """TSO envelope ``6/7 * 4**-gamma + R(gamma) * 2**-gamma``."""
    _check_int(gamma, 'gamma')
    if gamma == 0:
        return BoundedValue.exact(_TWO_THIRDS)
    lower = Fraction(6, 7) / 4 ** gamma
    return BoundedValue(lower, lower + R_MAX / 2 ** gamma)


def window_bounds(model, gamma):
    """Window pmf of any closed-form model as a :class:`BoundedValue`."""
    model = _closed_form_model(model, _ENVELOPE_KINDS)
    if model.kind is models.ModelName.TSO:
        return window_pmf_bounds(gamma)
    return BoundedValue.exact(window_pmf(model, gamma))


def window_pmf_total(model):
    """Total mass of the window pmf, summed in closed form."""
    model = _closed_form_model(model, _ENVELOPE_KINDS)
    return _evaluate(
        model,
        lambda mass: mass,
        lambda coefficient, ratio: coefficient * _geometric_tail(ratio))


def window_envelope_totals():
    """Total mass of the TSO lower and upper envelopes."""
    return window_pmf_total(models.TSO)


def window_expectation(model):
    """``E[2 ** -(gamma + 2)]``, the two-thread window functional."""
    model = _closed_form_model(model, _ENVELOPE_KINDS)
    return _evaluate(
        model,
        lambda mass: mass / 4,
        lambda coefficient, ratio: coefficient / 4 * _geometric_tail(
            ratio / 2))


def shift_constant(n):
    """``c(n) = 2 / prod(1 - 2 ** -(n + 1 - i) for i in 1..n-1)``."""
    _check_int(n, 'Thread count', minimum=2)
    product = Fraction(1)
    for exponent in range(2, n + 1):
        product *= 1 - Fraction(1, 2 ** exponent)
    return 2 / product


def _prefactor(n):
    return shift_constant(n) / 2 ** math.comb(n + 1, 2)


def disjoint_probability(lengths, n_max=N_MAX):
    """Exact probability that shifted segments are pairwise disjoint.

    Sums over every ordering of the threads, so cost grows as ``n!``.

    Args:
        lengths (sequence(int)): Segment lengths, one per thread.
        n_max (int): (optional) Largest thread count to enumerate.
    Returns:
        Fraction: ``Pr[disjoint]`` under the closed-interval convention.
    Raises:
        mcvuln.exceptions.ResourceGuardError: if more than ``n_max``
            segments are given.
    """
    lengths = tuple(lengths)
    if not lengths:
        raise exceptions.UsageError('At least one segment is required.')
    for length in lengths:
        _check_int(length, 'Segment length')
    n = len(lengths)
    if n > n_max:
        raise exceptions.ResourceGuardError(
            f'Refusing to enumerate {n}! orderings (limit n = {n_max}); '
            'use Monte Carlo ("simulate --lengths") or '
            '"identical_marginal_pr_a" instead.')
    if n == 1:
        return Fraction(1)

    weights = range(n - 1, 0, -1)
    exponents = Counter(
        sum(w * g for w, g in zip(weights, ordering))
        for ordering in itertools.permutations(lengths))
    total = sum(Fraction(count, 2 ** exponent)
                for exponent, count in exponents.items())
    logging.debug(f'Enumerated {math.factorial(n)} orderings of {lengths}.')
    return _prefactor(n) * total


def two_segment_disjoint(first, second):
    """``(2 ** -first + 2 ** -second) / 3``, the two-segment case."""
    _check_int(first, 'Segment length')
    _check_int(second, 'Segment length')
    return (Fraction(1, 2 ** first) + Fraction(1, 2 ** second)) / 3


@functools.lru_cache(maxsize=None)
def _partitions(x, y, z):
    if y == 0:
        return int(x == 0)
    if z == 0 or x < y or x > y * z:
        return 0
    # either no part equals z, or one part does
    return _partitions(x, y, z - 1) + _partitions(x - z, y - 1, z)


def partition_count(x, y, z):
    """Number of multisets of ``y`` positive integers ``<= z`` summing to ``x``.
    """
    _check_int(x, 'x')
    _check_int(y, 'y')
    _check_int(z, 'z')
    return _partitions(x, y, z)


def pr_psi(mu, q):
    """Probability that ``q`` loads precede the ``mu``-th store."""
    _check_int(mu, 'mu', minimum=1)
    _check_int(q, 'q')
    return Fraction(math.comb(mu + q - 1, q), 2 ** (mu + q))


def pr_f_exact(mu, q):
    """Probability that ``q`` loads all clear a run of ``mu`` stores."""
    _check_int(mu, 'mu', minimum=1)
    _check_int(q, 'q')
    if q == 0:
        return Fraction(1)
    arrangements = math.comb(mu + q - 1, q)
    total = sum(Fraction(partition_count(delta, q, mu), 2 ** delta)
                for delta in range(q, mu * q + 1))
    return total / arrangements


def pr_f_lower(mu, q):
    _check_int(mu, 'mu', minimum=1)
    _check_int(q, 'q', minimum=1)
    numerator = Fraction(1, 2 ** (q - 1)) - Fraction(1, 2 ** (mu * q))
    return numerator / math.comb(mu + q - 1, q)


def h(mu):
    """Coefficient of the tight lower bound on ``Pr[L_mu]``.

    Non-decreasing in ``mu``, with ``h(1) = 4/7``.
    """
    _check_int(mu, 'mu', minimum=1)
    return (Fraction(8, 7)
            - 1 / (1 - Fraction(1, 2 ** (mu + 1)))
            + _TWO_THIRDS / (1 - Fraction(1, 2 ** (mu + 2))))


def pr_l_lower(mu):
    """``Pr[L_0] = 1/3`` exactly; ``(4/7) * 2 ** -mu`` bounds ``mu >= 1``."""
    _check_int(mu, 'mu')
    if mu == 0:
        return Fraction(1, 3)
    return Fraction(4, 7) / 2 ** mu


def pr_l_bound(mu):
    """``h(mu) * 2 ** -mu``, at least :func:`pr_l_lower`."""
    _check_int(mu, 'mu')
    if mu == 0:
        return Fraction(1, 3)
    return h(mu) / 2 ** mu


def window_given_run(gamma, mu):
    """``Pr[gamma | mu]``: the critical store's window given the store run
    above the critical load."""
    _check_int(gamma, 'gamma')
    _check_int(mu, 'mu')
    if mu == gamma:
        return Fraction(1, 2 ** gamma)
    if mu > gamma:
        return Fraction(1, 2 ** (gamma + 1))
    return Fraction(0)


def bottom_store_prob(i):
    """Probability the instruction settled at position ``i`` is a store,
    once ``i`` rounds have run (TSO)."""
    _check_int(i, 'i', minimum=1)
    value = Fraction(1, 2)
    for _ in range(i - 1):
        value = Fraction(1, 2) + value / 4
    return value


def bottom_store_closed_form(i):
    _check_int(i, 'i', minimum=1)
    return _TWO_THIRDS + Fraction(1, 4 ** (i - 1)) * (
        Fraction(1, 2) - _TWO_THIRDS)


def bottom_store_limit():
    return _TWO_THIRDS


def missing_mass():
    """Mass of ``Pr[L_mu]`` not covered by the ``h(1)`` bound."""
    covered = pr_l_lower(0) + Fraction(4, 7) * _geometric_tail(
        Fraction(1, 2))
    return 1 - covered


def identical_marginal_pr_a(n, expectation):
    """``Pr[A]`` when every thread's window has the same marginal.

    Args:
        n (int): Thread count, at least 2.
        expectation (Fraction or float): ``E[prod 2 ** -(i * gamma_i)]``
            over ``i = 1..n-1``.
    Returns:
        Fraction if ``expectation`` is exact, otherwise float.
    """
    _check_int(n, 'Thread count', minimum=2)
    if not 0 <= expectation <= 1:
        raise exceptions.UsageError(
            f'Expectation must lie within [0, 1], got {expectation}.')
    constant = _prefactor(n) * math.factorial(n)
    if isinstance(expectation, float):
        return float(constant) * expectation
    return constant * Fraction(expectation)


def two_thread_pr_a(model):
    """Two-thread ``Pr[A]``: exact for SC and WO, bounded for TSO."""
    expectation = window_expectation(model)
    if isinstance(expectation, BoundedValue):
        return BoundedValue(identical_marginal_pr_a(2, expectation.lower),
                            identical_marginal_pr_a(2, expectation.upper))
    return identical_marginal_pr_a(2, expectation)


def sc_pr_a(n):
    """``Pr[A]`` under SC, where every segment has length 2."""
    _check_int(n, 'Thread count', minimum=2)
    return identical_marginal_pr_a(
        n, Fraction(1, 2 ** (2 * math.comb(n, 2))))


def any_model_pr_a_lower(n):
    """Lower bound on ``Pr[A]`` which holds under every memory model."""
    _check_int(n, 'Thread count', minimum=2)
    return sc_pr_a(n) / 2 ** (n - 1)


def sc_exponent_ratio(n):
    """``log2(sc_pr_a(n)) / n ** 2``; tends to ``-3/2``."""
    value = sc_pr_a(n)
    return (math.log2(value.numerator)
            - math.log2(value.denominator)) / n ** 2


def sc_wo_ratio():
    return two_thread_pr_a(models.SC) / two_thread_pr_a(models.WO)
