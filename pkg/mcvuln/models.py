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
Instruction types, memory consistency models and the parameters of the
program generation and settling processes.

A memory model is described by which ordered pairs of instruction types
may reorder: the ``(earlier, later)`` entry says whether the *later*
instruction may settle past the *earlier* one.

======  =======  =======  =======  =======
Model   st/st    st/ld    ld/st    ld/ld
======  =======  =======  =======  =======
SC
TSO              X
PSO     X        X
WO      X        X        X        X
======  =======  =======  =======  =======

Additional (``Custom``) matrices may be declared in configuration:

.. code-block:: ini

    [models.store-buffer]
    relax = ["st/ld"]
"""

import enum
import fractions
from dataclasses import dataclass
from dataclasses import field

from mcvuln import exceptions


class InstructionType(enum.Enum):
    LOAD = 'ld'
    STORE = 'st'

    def __str__(self):
        return self.value

    @property
    def code(self):
        """Small-integer spelling used by the settling loops."""
        return STORE_CODE if self is InstructionType.STORE else LOAD_CODE


LOAD_CODE = 0
STORE_CODE = 1
LOAD = InstructionType.LOAD
STORE = InstructionType.STORE

#: All ordered ``(earlier, later)`` pairs, keyed by their config spelling.
PAIRS = {
    'st/st': (STORE, STORE),
    'st/ld': (STORE, LOAD),
    'ld/st': (LOAD, STORE),
    'ld/ld': (LOAD, LOAD),
}
PAIR_NAMES = {pair: name for name, pair in PAIRS.items()}


class ModelName(enum.Enum):
    SC = 'sc'
    TSO = 'tso'
    PSO = 'pso'
    WO = 'wo'
    CUSTOM = 'custom'


def as_probability(value, what='probability'):
    """Coerce ``value`` into an exact rational in ``[0, 1]``.

    Strings such as ``"1/2"`` and ``"0.3"`` and floats are read as
    their decimal spelling, so ``0.3`` becomes exactly ``3/10``.

    Raises:
        mcvuln.exceptions.UsageError: if the value is not a
            probability.
    """
    try:
        if isinstance(value, float):
            value = str(value)
        prob = fractions.Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise exceptions.UsageError(f'Invalid {what} "{value}": {e}')
    if not 0 <= prob <= 1:
        raise exceptions.UsageError(
            f'Invalid {what} "{value}": must lie within [0, 1].')
    return prob


@dataclass(frozen=True)
class MemoryModel:
    """A relaxation matrix over ordered instruction-type pairs.

    Args:
        name (str): Display name, e.g. ``"tso"``.
        kind (ModelName): Preset the matrix belongs to, or ``CUSTOM``.
        relaxed (frozenset): ``(earlier, later)`` pairs which may
            reorder.
    """
    name: str
    kind: ModelName
    relaxed: frozenset = frozenset()

    @classmethod
    def custom(cls, name, relaxed_pairs):
        """Build a custom model from pair spellings such as ``"st/ld"``."""
        pairs = set()
        for spelling in relaxed_pairs:
            try:
                pairs.add(PAIRS[str(spelling).lower()])
            except KeyError:
                msg = (f'Unknown instruction pair "{spelling}" for model '
                       f'"{name}"; expected one of {sorted(PAIRS)}.')
                raise exceptions.UsageError(msg)
        return cls(name=name.lower(), kind=ModelName.CUSTOM,
                   relaxed=frozenset(pairs))

    @property
    def relax(self):
        """Full matrix as a dict of ``(earlier, later) -> bool``."""
        return {pair: pair in self.relaxed for pair in PAIRS.values()}

    def allows(self, earlier, later):
        return (earlier, later) in self.relaxed

    def __str__(self):
        return self.name


SC = MemoryModel('sc', ModelName.SC)
TSO = MemoryModel('tso', ModelName.TSO, frozenset([(STORE, LOAD)]))
PSO = MemoryModel(
    'pso', ModelName.PSO, frozenset([(STORE, LOAD), (STORE, STORE)]))
WO = MemoryModel('wo', ModelName.WO, frozenset(PAIRS.values()))

PRESETS = {model.name: model for model in (SC, TSO, PSO, WO)}


def _default_swap_odds():
    return {pair: fractions.Fraction(1, 2) for pair in PAIRS.values()}


@dataclass(frozen=True)
class ModelParams:
    """Parameters of program generation and settling.

    Args:
        p (Fraction): Probability that a body instruction is a store.
        s (dict): ``(earlier, later) -> Fraction`` swap success odds.
            Only consulted for pairs the memory model relaxes.
        m (int): Number of non-critical instructions in the program.
    """
    p: fractions.Fraction = fractions.Fraction(1, 2)
    s: dict = field(default_factory=_default_swap_odds, hash=False)
    m: int = 64

    def __post_init__(self):
        object.__setattr__(self, 'p', as_probability(self.p, 'store odds p'))
        swap_odds = _default_swap_odds()
        for pair, value in dict(self.s).items():
            if isinstance(pair, str):
                if pair.lower() not in PAIRS:
                    raise exceptions.UsageError(
                        f'Unknown instruction pair "{pair}" in swap odds.')
                pair = PAIRS[pair.lower()]
            swap_odds[pair] = as_probability(
                value, f'swap odds for {PAIR_NAMES[pair]}')
        object.__setattr__(self, 's', swap_odds)
        if not isinstance(self.m, int) or self.m < 0:
            raise exceptions.UsageError(
                f'Program length must be a non-negative integer, got '
                f'"{self.m}".')

    def with_length(self, m):
        return ModelParams(p=self.p, s=self.s, m=m)

    def echo(self):
        """Serializable record of the parameters."""
        return {
            'p': _rational_str(self.p),
            's': {PAIR_NAMES[pair]: _rational_str(value)
                  for pair, value in sorted(
                      self.s.items(), key=lambda i: PAIR_NAMES[i[0]])},
            'm': self.m,
        }


def _rational_str(value):
    return f'{value.numerator}/{value.denominator}'


def allows_swap(model, earlier, later):
    """Whether ``later`` may settle past ``earlier`` under ``model``."""
    return model.allows(earlier, later)


def swap_probability(model, params, earlier, later):
    """Success odds of one swap of ``later`` past ``earlier``.

    Returns:
        Fraction: zero for disallowed pairs, otherwise the configured
        ``params.s`` entry.
    """
    if not model.allows(earlier, later):
        return fractions.Fraction(0)
    return params.s[(earlier, later)]


def swap_table(model, params):
    """Float swap odds indexed ``table[earlier.code][later.code]``."""
    table = [[0.0, 0.0], [0.0, 0.0]]
    for earlier, later in PAIRS.values():
        table[earlier.code][later.code] = float(
            swap_probability(model, params, earlier, later))
    return table


def get_model(name, custom=None):
    """Look up a memory model by case-insensitive name.

    Args:
        name (str or MemoryModel): One of ``sc``, ``tso``, ``pso``,
            ``wo`` or a custom model name.
        custom (dict): (optional) Custom models keyed by lower-case
            name, as built by :func:`models_from_config`.
    Raises:
        mcvuln.exceptions.UsageError: if the name is unknown.
    """
    if isinstance(name, MemoryModel):
        return name
    key = str(name).strip().lower()
    if key in PRESETS:
        return PRESETS[key]
    if custom and key in custom:
        return custom[key]
    known = sorted(PRESETS) + sorted(custom or {})
    raise exceptions.UsageError(
        f'Unknown memory model "{name}"; expected one of {known}.')


def models_from_config(config):
    """Build custom models from the ``[models.<name>]`` tables."""
    custom = {}
    for name, table in config.get('models', {}).items():
        if name.lower() in PRESETS:
            raise exceptions.ConfigError(
                f'Model "{name}" shadows a preset memory model.')
        custom[name.lower()] = MemoryModel.custom(
            name, table.get('relax', []))
    return custom


def params_from_config(config, m=None):
    """Build :class:`ModelParams` from the ``[params]`` table."""
    table = config.get('params', {})
    kwargs = {'p': table.get('p', fractions.Fraction(1, 2)),
              's': table.get('s', {})}
    if m is not None:
        kwargs['m'] = m
    return ModelParams(**kwargs)
