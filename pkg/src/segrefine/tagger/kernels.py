"""LSTM kernel backend selection.

The compiled Cython backend is used when its extension module imported
successfully; otherwise the pure numpy backend is used.  Set
``SEGREFINE_BACKEND=py`` (or ``c``) to force a choice; forcing ``c``
when the extension is missing raises at import time.
"""

from __future__ import annotations

import os

from . import kernels_py

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_BACKENDS = {"py": kernels_py}
if _ckernels is not None:
    _BACKENDS["c"] = _ckernels


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend(name: str):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"backend {name!r} not available (have: {', '.join(sorted(_BACKENDS))})"
        ) from None


def _pick_default():
    forced = os.environ.get("SEGREFINE_BACKEND")
    if forced:
        return get_backend(forced)
    return _BACKENDS.get("c", kernels_py)


active = _pick_default()


def backend_name() -> str:
    return active.NAME
