"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy twin in ``_kernels_py``. Set ``POLYFIELD_BACKEND=python`` to force the
fallback (the benchmark and the backend-equivalence tests do this).
"""
import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

if os.environ.get("POLYFIELD_BACKEND", "").lower() == "python":
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        kernels = _kernels_py
        BACKEND = "python"
        log.debug("compiled kernels unavailable, using numpy fallback")

nearest_on_segments = kernels.nearest_on_segments
rasterize = kernels.rasterize
bilinear = kernels.bilinear
afm_votes = kernels.afm_votes
