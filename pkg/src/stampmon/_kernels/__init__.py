"""Kernel backend selection: compiled extension if available, else NumPy.

Set STAMPMON_FORCE_PYREF=1 to force the fallback (used by the parity tests
and the benchmark).
"""
from __future__ import annotations

import os

from . import _pyref

if os.environ.get("STAMPMON_FORCE_PYREF") == "1":
    _impl = _pyref
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pyref

sosfilt = _impl.sosfilt
smo_solve = _impl.smo_solve


def backend_name() -> str:
    return _impl.BACKEND


def available_backends() -> dict[str, object]:
    """Both kernel modules when the extension built, else just the fallback."""
    backends: dict[str, object] = {"pyref": _pyref}
    try:
        from . import _core

        backends["cython"] = _core
    except ImportError:
        pass
    return backends
