"""Adversarial performance analysis for prediction-driven VM allocation.

The C++ core does the work; this package re-exports it.
"""

from packgap._core import *  # noqa: F401,F403
from packgap._core import __doc__ as _core_doc

__doc__ = _core_doc
