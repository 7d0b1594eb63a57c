"""Kernel backend selection.

The compiled core is preferred when importable; SLAFORGE_BACKEND=python or
=compiled forces one side. Both backends implement the same algorithm over
the same random stream, so results are bit-identical either way.
"""

from __future__ import annotations

import os

from ..errors import InputError
from . import _core_py

_FORCED = os.environ.get("SLAFORGE_BACKEND", "auto").strip().lower()

_compiled = None
if _FORCED in ("auto", "compiled", "cython"):
    try:
        from . import _core_cy as _compiled  # type: ignore[attr-defined]
    except ImportError:
        _compiled = None
        if _FORCED != "auto":
            raise

_DEFAULT = _compiled if _compiled is not None else _core_py
if _FORCED in ("python", "pure"):
    _DEFAULT = _core_py


def backend_name(backend: str | None = None) -> str:
    return "compiled" if kernel(backend) is not _core_py else "python"


def kernel(backend: str | None = None):
    """Resolve a kernel module from a backend name (None = default)."""
    if backend is None or backend == "auto":
        return _DEFAULT
    name = backend.strip().lower()
    if name in ("python", "pure"):
        return _core_py
    if name in ("compiled", "cython"):
        if _compiled is None:
            raise InputError(
                "compiled simulator core is not available in this install"
            )
        return _compiled
    raise InputError(f"unknown backend {backend!r}")


def compiled_available() -> bool:
    return _compiled is not None
