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
Module for reusable pytest fixtures.
"""

import logging
import os

import pytest
import zope.interface

from mcvuln import interfaces


@zope.interface.implementer(interfaces.IRandomStream)
class AlwaysSwapStream:
    """Every allowed swap succeeds; shifts are fixed."""
    substream = (0, 0)

    def __init__(self, shift=0):
        self.shift = shift
        self.bernoulli_calls = []

    def uniform(self):
        return 0.0

    def bernoulli(self, probability):
        self.bernoulli_calls.append(probability)
        return probability > 0

    def coin_failures(self):
        return self.shift


@zope.interface.implementer(interfaces.IRandomStream)
class NeverSwapStream(AlwaysSwapStream):
    """Every swap fails; every generated instruction is a load."""

    def bernoulli(self, probability):
        self.bernoulli_calls.append(probability)
        return False


@zope.interface.implementer(interfaces.IRandomStream)
class ScriptedStream:
    """Replays a fixed list of Bernoulli outcomes."""
    substream = (0, 0)

    def __init__(self, outcomes, shifts=()):
        self.outcomes = list(outcomes)
        self.shifts = list(shifts)

    def uniform(self):
        return 0.5

    def bernoulli(self, probability):
        if probability <= 0:
            return False
        return self.outcomes.pop(0)

    def coin_failures(self):
        return self.shifts.pop(0)


@pytest.fixture
def always_swap():
    return AlwaysSwapStream()


@pytest.fixture
def never_swap():
    return NeverSwapStream()


@pytest.fixture(scope='session')
def config_file():
    here = os.path.dirname(os.path.realpath(__file__))
    filepath = os.path.join(here, 'fixtures/test-mcvuln.toml')
    with open(filepath, 'r') as f:
        return f.read()


@pytest.fixture
def loaded_config():
    return {
        'core': {
            'metrics': 'metrics-logger',
            'logging': {
                'level': 'debug',
                'handlers': ['stream'],
                'format': '%(created)f %(levelno)d %(message)s',
                'date_format': '%Y-%m-%dT%H:%M:%S',
            },
        },
        'metrics-logger': {
            'log_level': 'info',
            'time_unit': 1000,
        },
        'simulate': {
            'program_len': 16,
            'samples': 2000,
            'seed': 42,
            'overlap': 'closed',
            'workers': 1,
        },
        'params': {
            'p': '1/2',
            's': {'st/ld': '1/2'},
        },
        'models': {
            'store-buffer': {'relax': ['st/ld']},
        },
    }


@pytest.fixture
def caplog(caplog):
    """Set global test logging levels."""
    caplog.set_level(logging.DEBUG)
    logging.getLogger('asyncio').setLevel(logging.WARNING)
    return caplog
