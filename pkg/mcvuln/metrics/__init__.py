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
Metric relays report simulation progress (samples drawn, elapsed time)
out of band, through logging, so machine-readable output on stdout is
never affected.

The relay is picked by name from ``[core]``:

.. code-block:: ini

    [core]
    metrics = "metrics-logger"
"""

from mcvuln import exceptions
from mcvuln.metrics import log


DEFAULT_RELAY = 'metrics-logger'

_RELAYS = {
    DEFAULT_RELAY: log.LogRelay,
}


def get_relay(config):
    """Instantiate the metric relay named in ``[core] metrics``.

    Args:
        config (dict): Full mcvuln configuration.
    Returns:
        An :class:`mcvuln.interfaces.IMetricRelay` provider.
    Raises:
        mcvuln.exceptions.ConfigError: if the relay is unknown.
    """
    name = config.get('core', {}).get('metrics', DEFAULT_RELAY)
    try:
        relay_class = _RELAYS[name]
    except KeyError:
        msg = (f'Metrics relay "{name}" configured, but not available; '
               f'choose one of {sorted(_RELAYS)}.')
        raise exceptions.ConfigError(msg)
    return relay_class(config.get(name, {}))
