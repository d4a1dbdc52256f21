"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy fallback is used. Set ``QRESTRICT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("QRESTRICT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

uniforms = _impl.uniforms
sample_categorical = _impl.sample_categorical
sprt_scan = _impl.sprt_scan
effect_grid_search = _impl.effect_grid_search

__all__ = [
    "BACKEND",
    "uniforms",
    "sample_categorical",
    "sprt_scan",
    "effect_grid_search",
]
