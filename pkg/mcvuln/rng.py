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
Splittable random streams built on the counter-based Philox generator.

The master seed is the Philox key. The 256-bit Philox counter is split
into four 64-bit words; the two high words address a substream by
``(sample, slot)`` and the low word counts draws within it:

.. code-block:: none

    counter = [draw, 0, slot, sample]

Slot 0 of a sample generates the shared program; slot ``k`` (k >= 1)
settles and shifts thread ``k``. Settling rounds consume draws from
their thread's substream in round order.

The Monte Carlo engine draws whole blocks of samples at once. A block
substream sets the second counter word to 1 so it never meets a
per-sample substream:

.. code-block:: none

    counter = [draw, 1, slot, block]

Because every substream is a pure function of the seed and its
address, results do not depend on how samples are spread over workers.
"""

import numpy as np
import zope.interface

from mcvuln import exceptions
from mcvuln import interfaces


SEED_MAX = 2 ** 64 - 1
PROGRAM_SLOT = 0
SAMPLE_LANE = 0
BLOCK_LANE = 1


def check_seed(seed):
    if not isinstance(seed, int) or not 0 <= seed <= SEED_MAX:
        msg = f'Seed must be an unsigned 64-bit integer, got "{seed}".'
        raise exceptions.UsageError(msg)
    return seed


@zope.interface.implementer(interfaces.IRandomStream)
class RandomStream:
    """Buffered uniform draws from one Philox substream.

    Args:
        seed (int): Master seed, an unsigned 64-bit integer.
        sample (int): (optional) Sample index.
        slot (int): (optional) Slot within the sample; see
            :data:`PROGRAM_SLOT`.
        block (int): (optional) Number of uniforms fetched per refill.
    """
    def __init__(self, seed, sample=0, slot=PROGRAM_SLOT, block=128):
        check_seed(seed)
        self.seed = seed
        self.substream = (sample, slot)
        bit_generator = np.random.Philox(
            key=seed, counter=[0, SAMPLE_LANE, slot, sample])
        self._generator = np.random.Generator(bit_generator)
        self._block = block
        self._buffer = []
        self._index = 0

    @classmethod
    def for_thread(cls, seed, sample, thread):
        """Substream of thread ``thread`` (0-based) within ``sample``."""
        return cls(seed, sample=sample, slot=thread + 1)

    def uniform(self):
        if self._index == len(self._buffer):
            self._buffer = self._generator.random(self._block).tolist()
            self._index = 0
        value = self._buffer[self._index]
        self._index += 1
        return value

    def bernoulli(self, probability):
        if probability <= 0:
            return False
        if probability >= 1:
            return True
        return self.uniform() < probability

    def coin_failures(self):
        failures = 0
        while self.uniform() >= 0.5:
            failures += 1
        return failures

    def __repr__(self):
        sample, slot = self.substream
        return (f'RandomStream(seed={self.seed}, sample={sample}, '
                f'slot={slot})')


def block_generator(seed, block, slot=PROGRAM_SLOT):
    """numpy Generator over the substream of ``slot`` in sample block
    ``block``.

    Args:
        seed (int): Master seed, an unsigned 64-bit integer.
        block (int): Index of the block of samples.
        slot (int): (optional) Slot within the block; slot ``k`` (k >= 1)
            serves thread ``k - 1``.
    Returns:
        numpy.random.Generator
    """
    check_seed(seed)
    bit_generator = np.random.Philox(
        key=seed, counter=[0, BLOCK_LANE, slot, block])
    return np.random.Generator(bit_generator)
