# Copyright 2026 The persistkit Authors
# SPDX-License-Identifier: Apache-2.0
"""Recoverable persistent-memory data structures."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
