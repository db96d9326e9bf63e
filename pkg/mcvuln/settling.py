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
Random program generation and the settling (reordering) process.

A program is ``m`` random body instructions followed by the critical
load and the critical store, which access the same address. Settling
runs ``m + 2`` rounds; in round ``i`` instruction ``i`` repeatedly swaps
with its current predecessor until a swap fails or it reaches the top
of the program. Each swap succeeds with
:func:`mcvuln.models.swap_probability`, and the critical store never
passes the critical load.

Positions in :class:`FinalOrder` are 1-based, matching the usual
``pi(i)`` notation: ``pi[i - 1]`` is the settled position of the
instruction initially at position ``i``.

The ``*_block`` functions run the same process on a whole block of
programs at once, with instruction types held as
:data:`mcvuln.models.LOAD_CODE` and :data:`mcvuln.models.STORE_CODE`
in an integer array of shape ``(samples, m + 2)``. Each settling step
advances every program that is still moving and draws one uniform per
such program from a numpy Generator.
"""

from dataclasses import dataclass
from dataclasses import field

import numpy as np

from mcvuln import exceptions
from mcvuln import models


@dataclass(frozen=True)
class Program:
    """Instruction types of an initial program order.

    Args:
        types (tuple(InstructionType)): ``m + 2`` types; the final two
            are the critical load and the critical store.
    """
    types: tuple

    def __post_init__(self):
        types = tuple(self.types)
        if len(types) < 2 or types[-2:] != (models.LOAD, models.STORE):
            msg = ('A program must end with the critical load and the '
                   'critical store.')
            raise exceptions.UsageError(msg)
        object.__setattr__(self, 'types', types)

    @classmethod
    def from_body(cls, body):
        return cls(tuple(body) + (models.LOAD, models.STORE))

    @property
    def m(self):
        return len(self.types) - 2

    @property
    def critical_load(self):
        """0-based index of the critical load."""
        return len(self.types) - 2

    @property
    def critical_store(self):
        """0-based index of the critical store."""
        return len(self.types) - 1

    @property
    def body(self):
        return self.types[:-2]


@dataclass(frozen=True)
class FinalOrder:
    """Result of settling a program.

    Args:
        pi (tuple(int)): 1-based settled position of each instruction,
            indexed by its 0-based initial position.
        source (Program): The settled program.
    """
    pi: tuple
    source: Program

    @classmethod
    def from_order(cls, order, source):
        pi = [0] * len(order)
        for position, index in enumerate(order, 1):
            pi[index] = position
        return cls(tuple(pi), source)

    @property
    def order(self):
        """0-based initial indices listed by settled position."""
        order = [0] * len(self.pi)
        for index, position in enumerate(self.pi):
            order[position - 1] = index
        return tuple(order)

    @property
    def types(self):
        """Instruction types in settled order."""
        return tuple(self.source.types[i] for i in self.order)

    def is_permutation(self):
        return sorted(self.pi) == list(range(1, len(self.pi) + 1))

    def is_identity(self):
        return self.pi == tuple(range(1, len(self.pi) + 1))


@dataclass(frozen=True)
class WindowSample:
    """Size of the critical window of one settled program.

    ``gamma`` counts instructions strictly between the settled critical
    load and store; ``segment_length`` is ``gamma + 2``, the length fed
    to the shift process.
    """
    gamma: int
    segment_length: int = field(init=False)

    def __post_init__(self):
        if self.gamma < 0:
            raise exceptions.UsageError(
                f'Critical window cannot be negative, got {self.gamma}.')
        object.__setattr__(self, 'segment_length', self.gamma + 2)


def generate_program(params, rng):
    """Draw an initial program order.

    Args:
        params (mcvuln.models.ModelParams): Store odds ``p`` and
            length ``m``.
        rng (mcvuln.interfaces.IRandomStream): Source of randomness.
    Returns:
        A :class:`Program` whose body is i.i.d. with ``Pr[st] = p``.
    """
    p = float(params.p)
    body = [models.STORE if rng.bernoulli(p) else models.LOAD
            for _ in range(params.m)]
    return Program.from_body(body)


def settle_rounds(program, model, params, rng, rounds=None, table=None):
    """Run the first ``rounds`` settling rounds.

    Args:
        program (Program): Initial program order.
        model (mcvuln.models.MemoryModel): Reordering rules.
        params (mcvuln.models.ModelParams): Swap odds.
        rng (mcvuln.interfaces.IRandomStream): Source of randomness.
        rounds (int): (optional) Rounds to run; defaults to all
            ``m + 2``.
        table (list): (optional) Precomputed
            :func:`mcvuln.models.swap_table`.
    Returns:
        list(int): 0-based initial indices of the settled instructions
        ``1..rounds``, top of the program first.
    """
    if table is None:
        table = models.swap_table(model, params)
    codes = [instruction_type.code for instruction_type in program.types]
    critical_load = program.critical_load
    critical_store = program.critical_store
    if rounds is None:
        rounds = len(codes)

    order = []
    for index in range(rounds):
        odds = [row[codes[index]] for row in table]
        position = index
        while position > 0:
            earlier = order[position - 1]
            # same address: the critical pair never reorders
            if index == critical_store and earlier == critical_load:
                break
            if not rng.bernoulli(odds[codes[earlier]]):
                break
            position -= 1
        order.insert(position, index)
    return order


def settle(program, model, params, rng, table=None):
    """Settle every instruction of ``program`` under ``model``.

    Returns:
        FinalOrder: The settled permutation.
    """
    order = settle_rounds(program, model, params, rng, table=table)
    return FinalOrder.from_order(order, program)


def critical_window(order):
    """Critical window of a :class:`FinalOrder`."""
    program = order.source
    gamma = (order.pi[program.critical_store]
             - order.pi[program.critical_load] - 1)
    return WindowSample(gamma)


def store_run_above_critical(types):
    """Length of the run of stores at the bottom of ``types``.

    Applied to the order just before the critical load settles, this is
    the number of stores immediately preceding the critical load.
    """
    run = 0
    for instruction_type in reversed(types):
        if instruction_type is not models.STORE:
            break
        run += 1
    return run


def generate_block(params, samples, generator):
    """Draw ``samples`` initial programs at once.

    Args:
        params (mcvuln.models.ModelParams): Store odds ``p`` and
            length ``m``.
        samples (int): Number of programs.
        generator (numpy.random.Generator): Source of randomness.
    Returns:
        numpy.ndarray: ``(samples, m + 2)`` instruction codes.
    """
    body = generator.random((samples, params.m)) < float(params.p)
    codes = np.empty((samples, params.m + 2), dtype=np.int8)
    codes[:, :params.m] = body
    codes[:, -2] = models.LOAD_CODE
    codes[:, -1] = models.STORE_CODE
    return codes


def settle_block(codes, table, generator, rounds=None):
    """Run the first ``rounds`` settling rounds of every program in a
    block.

    Args:
        codes (numpy.ndarray): ``(samples, m + 2)`` instruction codes
            from :func:`generate_block`.
        table (list): :func:`mcvuln.models.swap_table` of the model.
        generator (numpy.random.Generator): Source of randomness.
        rounds (int): (optional) Rounds to run; defaults to all
            ``m + 2``.
    Returns:
        numpy.ndarray: ``(samples, rounds)`` 0-based initial indices,
        top of each program first.
    """
    samples, length = codes.shape
    if rounds is None:
        rounds = length
    critical_load, critical_store = length - 2, length - 1
    odds = np.asarray(table, dtype=float)
    order = np.empty((samples, rounds), dtype=np.intp)

    for index in range(rounds):
        order[:, index] = index
        later = codes[:, index]
        rows = np.arange(samples) if index else np.empty(0, dtype=np.intp)
        position = np.full(rows.size, index, dtype=np.intp)
        while rows.size:
            earlier = order[rows, position - 1]
            chance = odds[codes[rows, earlier], later[rows]]
            if index == critical_store:
                # same address: the critical pair never reorders
                chance[earlier == critical_load] = 0.0
            moved = generator.random(rows.size) < chance
            rows, position = rows[moved], position[moved]
            order[rows, position] = order[rows, position - 1]
            order[rows, position - 1] = index
            position -= 1
            moving = position > 0
            rows, position = rows[moving], position[moving]
    return order


def critical_windows(order):
    """Critical window ``gamma`` of every fully settled program in a
    block.

    Args:
        order (numpy.ndarray): Output of :func:`settle_block` over all
            ``m + 2`` rounds.
    Returns:
        numpy.ndarray: One ``gamma`` per program.
    """
    length = order.shape[1]
    load = np.argmax(order == length - 2, axis=1)
    store = np.argmax(order == length - 1, axis=1)
    return store - load - 1


def settled_codes(codes, order):
    """Instruction codes of a block in settled order."""
    return np.take_along_axis(codes, order, axis=1)


def store_runs(settled):
    """Length of the run of stores at the bottom of each settled row."""
    stores = (settled[:, ::-1] == models.STORE_CODE).astype(np.int64)
    return np.cumprod(stores, axis=1).sum(axis=1)
