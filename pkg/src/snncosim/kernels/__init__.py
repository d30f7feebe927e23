"""Tick/learn kernel backends.

Two interchangeable implementations of the per-timestep network update and
the weight-update rule: a vectorized numpy one and a numba-jitted one.  Both
use the same wide-accumulate-then-saturate integer arithmetic, so their
results are bit-identical; the jitted one is simply faster per call.

Selection: environment variable SNNCOSIM_BACKEND = "numba" (default) or
"numpy".  If numba is requested but not importable, the numpy backend is
used silently (same results, slower).
"""

from __future__ import annotations

import os

from ..errors import ConfigError

_requested = os.environ.get("SNNCOSIM_BACKEND", "numba").strip().lower()

if _requested == "numba":
    try:
        from . import numba_backend as _impl
    except ImportError:
        from . import numpy_backend as _impl
elif _requested == "numpy":
    from . import numpy_backend as _impl
else:
    raise ConfigError(
        f"SNNCOSIM_BACKEND={_requested!r} (expected 'numba' or 'numpy')")

BACKEND = _impl.NAME
tick = _impl.tick
learn = _impl.learn
warmup = _impl.warmup
