"""Kernel backend selection.

The compiled core is used when it was built and ``LCRM_PURE_PYTHON`` is not
set; otherwise the numpy fallback is used. Both expose the same functions.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("LCRM_PURE_PYTHON", "0") != "1":
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND_NAME = "compiled" if compiled_backend is not None else "python"

spread = backend.spread
gather = backend.gather
trilinear = backend.trilinear
distance_band = backend.distance_band
fast_sweep = backend.fast_sweep
tetra_march = backend.tetra_march
closest_point_triangle = backend.closest_point_triangle
rbgs = backend.rbgs


def worker_count():
    """Worker count requested via ``LCRM_NUM_WORKERS`` (kernels run serially)."""
    try:
        return max(1, int(os.environ.get("LCRM_NUM_WORKERS", "1")))
    except ValueError:
        return 1
