"""Subordination kernels (alias of ``sqglab.kernels``)."""

import sys

from . import kernels as _impl

sys.modules[__name__] = _impl
