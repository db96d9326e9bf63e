# -*- coding: utf-8 -*-
# Copyright (c) 2026 The mcvuln Authors
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


class McvulnError(Exception):
    """General mcvuln Application Error."""


class ConfigError(McvulnError):
    """Error loading or interpreting configuration."""


class UsageError(McvulnError):
    """Invalid arguments given to an operation."""


class UnsupportedModelError(UsageError):
    """No closed form (or oracle) exists for the requested memory model."""


class ResourceGuardError(McvulnError):
    """Requested computation exceeds a configured enumeration limit."""


class VerificationError(McvulnError):
    """One or more cross-checks of the verification suite failed."""
