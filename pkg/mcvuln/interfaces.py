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

from zope.interface import Attribute
from zope.interface import Interface


class IRandomStream(Interface):
    """A source of randomness consumed by the settling and shift processes.

    Every random decision in a simulation is drawn from an object
    providing this interface. The production implementation is
    :class:`mcvuln.rng.RandomStream`; tests may provide stubs which
    force particular outcomes.
    """

    substream = Attribute('Tuple identifying the (sample, slot) substream.')

    def uniform():
        """Draw a float uniformly from ``[0, 1)``."""

    def bernoulli(probability):
        """Return ``True`` with the given probability.

        Implementations must not consume a draw when ``probability`` is
        zero or one, so that certain outcomes leave the stream untouched.

        Args:
            probability (float): Success probability in ``[0, 1]``.
        """

    def coin_failures():
        """Count fair-coin failures before the first success.

        The count ``k`` is returned with probability ``2 ** -(k + 1)``.
        """


class IMetricRelay(Interface):
    """Report the progress of a simulation run out of band.

    Relays are looked up by name in :func:`mcvuln.metrics.get_relay`.
    """

    async def incr(metric_name, value=1, context=None, **kwargs):
        """Add ``value`` to a counter, e.g. ``samples-drawn``.

        Args:
            metric_name (str): Counter name.
            value (int): (optional) Amount to add; defaults to 1.
            context (dict): (optional) Run description attached to the
                report, such as ``{'measure': 'pr-a', 'model': 'tso'}``.
        """

    def timer(metric_name, context=None, **kwargs):
        """Return an :class:`ITimer` measuring a run's wall time.

        Args:
            metric_name (str): Timer name, e.g. ``simulate-elapsed``.
            context (dict): (optional) Run description attached to the
                report.
        """

    async def set(metric_name, value, context=None, **kwargs):
        """Record the current value of a gauge.

        Args:
            metric_name (str): Gauge name.
            value (number): Current value, such as the worker count.
            context (dict): (optional) Run description attached to the
                report.
        """

    async def cleanup(**kwargs):
        """Flush whatever the relay accumulated once a command ends."""


class ITimer(Interface):
    """Wall-clock timer usable manually or as an async context manager."""

    async def __aenter__():
        """Start the clock."""

    async def __aexit__(type, value, traceback):
        """Stop the clock and report the elapsed time."""

    async def start():
        """Start the clock."""

    async def stop():
        """Stop the clock and report the elapsed time."""
