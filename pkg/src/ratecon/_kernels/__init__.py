"""Inner-loop kernels: compiled extension with a pure-Python fallback.

The compiled module is built from ``_sdca_cy.pyx`` at install time.  When
it is missing (no compiler, source checkout without a build step) the
numpy implementation in ``_sdca_py`` is used instead.  Set
``RATECON_PURE_PYTHON=1`` to force the fallback, e.g. for the
``benchmarks/bench_kernels.py`` comparison.
"""

from __future__ import annotations

import os

from . import _sdca_py

if os.environ.get("RATECON_PURE_PYTHON", "") not in ("", "0"):
    _impl = _sdca_py
    BACKEND = "python"
else:
    try:
        from . import _sdca_cy as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        _impl = _sdca_py
        BACKEND = "python"

sdca_epoch = _impl.sdca_epoch
