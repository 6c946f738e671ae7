"""Kernel backend selection.

The compiled extension is used when it imported cleanly; setting
``BREACHCAT_PURE=1`` forces the NumPy fallback. Either backend is
deterministic on its own; cross-backend results agree to rounding only.
"""

import os

from breachcat import _pykernels

try:
    from breachcat import _ckernels
except ImportError:
    _ckernels = None

_impl = _pykernels if (_ckernels is None or os.environ.get("BREACHCAT_PURE")) else _ckernels

compound_totals = _impl.compound_totals
pinball_best = _impl.pinball_best


def backend():
    """Name of the active kernel backend: 'cython' or 'python'."""
    return "cython" if _impl is _ckernels else "python"
