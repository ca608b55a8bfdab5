# Copyright 2026 The SINQ Toolkit Authors
# SPDX-License-Identifier: Apache-2.0

from ._sinq import *  # noqa: F401,F403
from ._sinq import QuantizedMatrix, __doc__  # noqa: F401

__version__ = "0.1.0"
