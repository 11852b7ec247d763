"""Hot-loop world queries with a compiled backend and a numpy fallback.

The compiled extension is optional: when it failed to build (or when the
``FIRECREW_KERNELS`` environment variable says otherwise) the pure numpy
reference takes over. Both backends are bit-identical by contract, so the
choice only affects speed.

FIRECREW_KERNELS=compiled   require the extension, fail loudly if missing
FIRECREW_KERNELS=reference  force the numpy fallback
(unset)                     prefer compiled, fall back silently
"""
from __future__ import annotations

import os

from . import reference
from .reference import ALIVE, BURNED_OUT, BURNING, EXTINGUISHED, WET

_requested = os.environ.get("FIRECREW_KERNELS", "").strip().lower()

_compiled = None
if _requested != "reference":
    try:
        from . import _speedups as _compiled
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "FIRECREW_KERNELS=compiled but the compiled extension is not "
                "available; rebuild the package or unset the variable"
            )
        _compiled = None

_active = _compiled if _compiled is not None else reference

BACKEND = "compiled" if _compiled is not None else "reference"

count_spread_candidates = _active.count_spread_candidates
spread_ignitions = _active.spread_ignitions
nearest_burning = _active.nearest_burning
count_burning_within = _active.count_burning_within
drop_effects = _active.drop_effects


def get_backend(name: str):
    """Return the backend module by name ("compiled" or "reference")."""
    if name == "reference":
        return reference
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernel backend is not available")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")


__all__ = [
    "ALIVE", "WET", "BURNING", "EXTINGUISHED", "BURNED_OUT",
    "BACKEND", "get_backend",
    "count_spread_candidates", "spread_ignitions", "nearest_burning",
    "count_burning_within", "drop_effects",
]
