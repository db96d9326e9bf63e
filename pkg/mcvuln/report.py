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
Machine-readable output.

Every JSON document carries ``command``, ``params``, ``seed`` (``null``
for deterministic commands) and ``version``. Rationals are written as
``"num/den"`` strings and floats are rounded to 12 significant digits,
so repeating an invocation reproduces the document byte for byte.
"""

import csv
import json
from fractions import Fraction

from mcvuln import __version__ as version
from mcvuln import analytic
from mcvuln import montecarlo


SWEEP_COLUMNS = (
    'model', 'n', 'm', 'samples', 'seed',
    'pr_a_mean', 'pr_a_lo95', 'pr_a_hi95',
)


def render_float(value):
    return float(format(float(value), '.12g'))


def rational(value):
    value = Fraction(value)
    return f'{value.numerator}/{value.denominator}'


def exact_record(value):
    return {'value': rational(value), 'float': render_float(value)}


def bounded_record(value):
    return {
        'lower': rational(value.lower),
        'upper': rational(value.upper),
        'lower_float': render_float(value.lower),
        'upper_float': render_float(value.upper),
    }


def estimate_record(estimate):
    low, high = estimate.ci95
    return {
        'mean': render_float(estimate.mean),
        'stderr': render_float(estimate.stderr),
        'ci95': [render_float(low), render_float(high)],
        'samples': estimate.samples,
        'seed': estimate.seed,
        'config_echo': estimate.config_echo,
    }


def histogram_record(histogram):
    return {str(key): estimate_record(estimate)
            for key, estimate in sorted(histogram.items())}


def value_record(value):
    """Render any analytic or Monte Carlo result."""
    if isinstance(value, analytic.BoundedValue):
        return bounded_record(value)
    if isinstance(value, montecarlo.Estimate):
        return estimate_record(value)
    if isinstance(value, Fraction) or isinstance(value, int):
        return exact_record(value)
    return {'float': render_float(value)}


def payload(command, params, result, seed=None):
    """Assemble one JSON document; ``result`` keys are merged in."""
    document = {
        'command': command,
        'params': params,
        'seed': seed,
        'version': version,
    }
    document.update(result)
    return document


def dumps(document):
    return json.dumps(document, sort_keys=True, indent=2)


def sweep_row(model, estimate, params):
    low, high = estimate.ci95
    return {
        'model': str(model),
        'n': estimate.config_echo.get('threads'),
        'm': params.m,
        'samples': estimate.samples,
        'seed': estimate.seed,
        'pr_a_mean': render_float(estimate.mean),
        'pr_a_lo95': render_float(low),
        'pr_a_hi95': render_float(high),
    }


def write_csv(rows, stream):
    writer = csv.DictWriter(
        stream, fieldnames=SWEEP_COLUMNS, lineterminator='\n')
    writer.writeheader()
    writer.writerows(rows)
