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
Brute-force ground truth at desk scale.

Everything here enumerates outcomes with exact rational weights and
shares no code with :mod:`mcvuln.analytic`, so the two can be checked
against each other.
"""

import logging
from collections import Counter
from collections import defaultdict
from fractions import Fraction

from mcvuln import analytic
from mcvuln import exceptions
from mcvuln import models
from mcvuln import shift


#: Largest program body enumerated by :func:`exact_window_pmf`.
M_CAP = 14
#: Largest thread count and shift cap for :func:`exact_disjoint`.
N_CAP = 5
K_CAP = 40
#: Domain of :func:`brute_partition_count`.
PARTITION_CAP = (20, 8, 10)


def _insertions(order, later, odds, floor=0):
    """Yield ``(position, probability)`` for settling ``later`` below
    ``order``, never rising above ``floor``."""
    reach = Fraction(1)
    position = len(order)
    while position > floor:
        success = odds[(order[position - 1], later)]
        if success < 1:
            yield position, reach * (1 - success)
        reach *= success
        if not reach:
            return
        position -= 1
    yield floor, reach


def exact_window_pmf(model, params):
    """Exact critical window pmf for a finite program.

    Orders are tracked by their type string only; orders reached along
    different decision paths with the same types are merged after every
    round.

    Args:
        model (str or MemoryModel): Any memory model.
        params (mcvuln.models.ModelParams): Odds and body length ``m``.
    Returns:
        dict(int, Fraction): ``gamma -> Pr[gamma]``.
    Raises:
        mcvuln.exceptions.ResourceGuardError: if ``params.m`` exceeds
            :data:`M_CAP`.
    """
    model = models.get_model(model)
    if params.m > M_CAP:
        raise exceptions.ResourceGuardError(
            f'Oracle program length {params.m} exceeds the cap of {M_CAP}.')
    odds = {
        pair: models.swap_probability(model, params, *pair)
        for pair in models.PAIRS.values()
    }
    kinds = [(kind, prob) for kind, prob in (
        (models.STORE, params.p), (models.LOAD, 1 - params.p)) if prob]

    states = {(): Fraction(1)}
    for _ in range(params.m):
        merged = defaultdict(Fraction)
        for order, weight in states.items():
            for kind, kind_prob in kinds:
                for position, prob in _insertions(order, kind, odds):
                    settled = order[:position] + (kind,) + order[position:]
                    merged[settled] += weight * kind_prob * prob
        states = merged
    logging.debug(f'Oracle reached {len(states)} distinct orders for '
                  f'{model} at m = {params.m}.')

    pmf = defaultdict(Fraction)
    for order, weight in states.items():
        for load, load_prob in _insertions(order, models.LOAD, odds):
            settled = order[:load] + (models.LOAD,) + order[load:]
            stores = _insertions(settled, models.STORE, odds, floor=load + 1)
            for store, store_prob in stores:
                pmf[store - load - 1] += weight * load_prob * store_prob
    return dict(sorted(pmf.items()))


def _points(start, length, overlap):
    if overlap == shift.OVERLAP_CLOSED:
        return start, start + length
    return start, start + length - 1


def exact_disjoint(lengths, cap, overlap=shift.OVERLAP_CLOSED):
    """Bracket ``Pr[disjoint]`` by enumerating every shift up to ``cap``.

    Args:
        lengths (sequence(int)): Segment lengths, at most :data:`N_CAP`.
        cap (int): Largest shift enumerated, at most :data:`K_CAP`.
        overlap (str): (optional) Overlap convention.
    Returns:
        mcvuln.analytic.BoundedValue: the enumerated disjoint mass, and
        that mass plus ``n * 2 ** -(cap + 1)``, the chance any shift
        exceeds ``cap``.
    """
    lengths = shift.SegmentLengths(tuple(lengths)).lengths
    shift.check_overlap(overlap)
    n = len(lengths)
    if n > N_CAP or not 0 <= cap <= K_CAP:
        raise exceptions.ResourceGuardError(
            f'Oracle enumerates at most {N_CAP} segments with shifts up to '
            f'{K_CAP}; got {n} segments and cap {cap}.')

    # total shift -> number of disjoint shift vectors
    totals = Counter()

    def assign(index, occupied, total):
        if index == n:
            totals[total] += 1
            return
        for start in range(cap + 1):
            low, high = _points(start, lengths[index], overlap)
            if high >= low and any(
                    low <= b and a <= high for a, b in occupied):
                continue
            segment = [(low, high)] if high >= low else []
            assign(index + 1, occupied + segment, total + start)

    assign(0, [], 0)
    lower = sum((Fraction(count, 2 ** (total + n))
                 for total, count in totals.items()), Fraction(0))
    return analytic.BoundedValue(lower, lower + Fraction(n, 2 ** (cap + 1)))


def _non_decreasing(parts, smallest, largest, total):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(smallest, largest + 1):
        if first * parts > total:
            break
        for rest in _non_decreasing(parts - 1, first, largest, total - first):
            yield (first,) + rest


def brute_partition_count(x, y, z):
    """Count partitions by listing every non-decreasing tuple."""
    if min(x, y, z) < 0:
        raise exceptions.UsageError('Partition arguments must be >= 0.')
    if any(value > limit for value, limit in zip((x, y, z), PARTITION_CAP)):
        raise exceptions.ResourceGuardError(
            f'Brute-force partitions are limited to (x, y, z) <= '
            f'{PARTITION_CAP}; got {(x, y, z)}.')
    return sum(1 for _ in _non_decreasing(y, 1, z, x))
