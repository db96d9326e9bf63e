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
Default metric relay: every metric becomes a log line on the
``mcvuln.metrics-logger`` logger, e.g.::

    [samples-drawn] value: 200000 context: model=tso threads=2

Configuration, with its defaults:

.. code-block:: ini

    [metrics-logger]
    # One of the log levels available from the stdlib logging module.
    log_level = 'info'
    # Scaling factor for timers; 1000 reports milliseconds.
    time_unit = 1
"""

import collections
import logging
import time

import zope.interface

from mcvuln import exceptions
from mcvuln import interfaces


@zope.interface.implementer(interfaces.ITimer)
class LogTimer:
    """Wall-clock timer reported through a :class:`MetricLogger`.

    Args:
        metric (dict): Metric to fill in with the elapsed time.
        logger (MetricLogger): Destination of the metric.
        time_unit (number): (optional) Multiplier applied to seconds.
    """
    def __init__(self, metric, logger, time_unit=1):
        self.metric = metric
        self.logger = logger
        self.time_unit = time_unit
        self.elapsed = None
        self._start_time = None

    async def __aenter__(self):
        await self.start()
        return self

    async def __aexit__(self, *args):
        await self.stop()

    async def start(self):
        self._start_time = time.perf_counter()

    async def stop(self):
        if self._start_time is None:
            raise exceptions.McvulnError(
                f'Timer "{self.metric["metric_name"]}" was never started.')
        self.elapsed = (
            time.perf_counter() - self._start_time) * self.time_unit
        self.metric['value'] = self.elapsed
        self.logger.log(self.metric)


class MetricLogger:
    """Format metrics and emit them at a fixed log level.

    Args:
        level (str): Name of a stdlib log level, e.g. ``"info"``.
    """
    LOGFMT = '[{metric_name}] value: {value}'

    def __init__(self, level):
        try:
            self.level = getattr(logging, level.upper())
        except AttributeError:
            raise exceptions.ConfigError(
                f'Unknown metrics log level "{level}".')
        self._logger = logging.getLogger('mcvuln.metrics-logger')

    @staticmethod
    def format_context(context):
        return ' '.join(f'{key}={context[key]}' for key in sorted(context))

    def log(self, metric):
        message = self.LOGFMT.format(**metric)
        if metric['context']:
            message += f' context: {self.format_context(metric["context"])}'
        self._logger.log(self.level, message)


@zope.interface.implementer(interfaces.IMetricRelay)
class LogRelay:
    """Relay counters, gauges and timers to the log.

    Args:
        config (dict): The ``[metrics-logger]`` table. Optional keys:
            log_level (str): Level of metric log lines.
            time_unit (number): Multiplier applied to timer seconds.
    """
    def __init__(self, config):
        self.time_unit = config.get('time_unit', 1)
        self.logger = MetricLogger(config.get('log_level', 'info'))
        self.counters = collections.defaultdict(int)
        self.gauges = {}

    def _create_metric(self, metric_name, value, context, **kwargs):
        return {
            'metric_name': metric_name,
            'value': value,
            'context': dict(context or {}),
        }

    async def incr(self, metric_name, value=1, context=None, **kwargs):
        """Add ``value`` to a running counter and log its new total."""
        self.counters[metric_name] += value
        metric = self._create_metric(
            metric_name, self.counters[metric_name], context)
        self.logger.log(metric)

    def timer(self, metric_name, context=None, **kwargs):
        metric = self._create_metric(metric_name, None, context)
        return LogTimer(metric, self.logger, self.time_unit)

    async def set(self, metric_name, value, context=None, **kwargs):
        self.gauges[metric_name] = value
        self.logger.log(self._create_metric(metric_name, value, context))

    async def cleanup(self, **kwargs):
        """Log a final summary of every counter and reset them."""
        if self.counters:
            totals = MetricLogger.format_context(self.counters)
            logging.debug(f'Metric totals: {totals}')
        self.counters.clear()
        self.gauges.clear()
