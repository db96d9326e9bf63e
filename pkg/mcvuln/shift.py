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
The shift process: each thread's critical segment is translated by an
independent geometric shift, and the bug stays hidden when the shifted
segments are mutually disjoint.

Two overlap conventions are supported:

* ``closed`` (default): a segment of length ``g`` shifted by ``s`` is
  the closed integer interval ``[s, s + g]``, so touching endpoints
  overlap.
* ``index-set``: the segment occupies the ``g`` points
  ``[s, s + g - 1]``; a zero-length segment occupies nothing.
"""

from dataclasses import dataclass

import numpy as np

from mcvuln import exceptions


OVERLAP_CLOSED = 'closed'
OVERLAP_INDEX_SET = 'index-set'
OVERLAPS = (OVERLAP_CLOSED, OVERLAP_INDEX_SET)


def _non_negative_ints(values, what):
    values = tuple(values)
    for value in values:
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            msg = f'{what} must be non-negative integers, got {values}.'
            raise exceptions.UsageError(msg)
    return values


@dataclass(frozen=True)
class SegmentLengths:
    """Per-thread segment lengths, one entry per thread."""
    lengths: tuple

    def __post_init__(self):
        lengths = _non_negative_ints(self.lengths, 'Segment lengths')
        if not lengths:
            raise exceptions.UsageError('At least one segment is required.')
        object.__setattr__(self, 'lengths', lengths)

    def __len__(self):
        return len(self.lengths)

    def __iter__(self):
        return iter(self.lengths)


@dataclass(frozen=True)
class ShiftVector:
    """Per-thread shifts, one entry per thread."""
    shifts: tuple

    def __post_init__(self):
        object.__setattr__(
            self, 'shifts', _non_negative_ints(self.shifts, 'Shifts'))

    def __len__(self):
        return len(self.shifts)

    def __iter__(self):
        return iter(self.shifts)


def check_overlap(overlap):
    if overlap not in OVERLAPS:
        msg = f'Unknown overlap convention "{overlap}"; expected {OVERLAPS}.'
        raise exceptions.UsageError(msg)
    return overlap


def sample_shift(rng):
    """Draw one shift ``k`` with probability ``2 ** -(k + 1)``."""
    return rng.coin_failures()


def sample_shifts(n, rng):
    return ShiftVector(tuple(sample_shift(rng) for _ in range(n)))


def disjoint(lengths, shifts, overlap=OVERLAP_CLOSED):
    """Whether the shifted segments are pairwise disjoint.

    Args:
        lengths (SegmentLengths or sequence(int)): Segment lengths.
        shifts (ShiftVector or sequence(int)): Shifts, same arity.
        overlap (str): (optional) ``closed`` or ``index-set``.
    Returns:
        bool: ``True`` if no two segments share an integer point.
    Raises:
        mcvuln.exceptions.UsageError: on an arity mismatch or an unknown
            overlap convention.
    """
    lengths = tuple(lengths)
    shifts = tuple(shifts)
    if len(lengths) != len(shifts):
        msg = (f'Got {len(lengths)} segment lengths but {len(shifts)} '
               'shifts.')
        raise exceptions.UsageError(msg)
    check_overlap(overlap)

    if overlap == OVERLAP_CLOSED:
        segments = [(s, s + g) for s, g in zip(shifts, lengths)]
    else:
        segments = [(s, s + g - 1) for s, g in zip(shifts, lengths) if g]

    last_end = None
    for start, end in sorted(segments):
        if last_end is not None and start <= last_end:
            return False
        last_end = end if last_end is None else max(last_end, end)
    return True


def sample_shift_block(samples, generator):
    """Draw ``samples`` shifts, each ``k`` with probability
    ``2 ** -(k + 1)``."""
    return generator.geometric(0.5, size=samples) - 1


def disjoint_block(lengths, shifts, overlap=OVERLAP_CLOSED):
    """Row-wise :func:`disjoint` over a block of samples.

    Args:
        lengths (numpy.ndarray): ``(samples, n)`` segment lengths.
        shifts (numpy.ndarray): ``(samples, n)`` shifts.
        overlap (str): (optional) ``closed`` or ``index-set``.
    Returns:
        numpy.ndarray: ``True`` where no two segments of a row meet.
    """
    check_overlap(overlap)
    lengths = np.asarray(lengths)
    shifts = np.asarray(shifts)
    if lengths.shape != shifts.shape:
        msg = (f'Got segment lengths of shape {lengths.shape} but shifts '
               f'of shape {shifts.shape}.')
        raise exceptions.UsageError(msg)

    if overlap == OVERLAP_CLOSED:
        ends = shifts + lengths
        present = np.ones(lengths.shape, dtype=bool)
    else:
        ends = shifts + lengths - 1
        present = lengths > 0

    clear = np.ones(lengths.shape[0], dtype=bool)
    threads = lengths.shape[1]
    for first in range(threads):
        for second in range(first + 1, threads):
            meet = ((shifts[:, first] <= ends[:, second])
                    & (shifts[:, second] <= ends[:, first])
                    & present[:, first] & present[:, second])
            clear &= ~meet
    return clear
