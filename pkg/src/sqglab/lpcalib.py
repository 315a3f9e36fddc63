"""Littlewood-Paley bands and velocity calibration (alias of ``sqglab.littlewood_paley``)."""

import sys

from . import littlewood_paley as _impl

sys.modules[__name__] = _impl
