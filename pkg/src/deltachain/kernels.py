"""Kernel backend selection.

The compiled extension is used when it imports; setting
``DELTACHAIN_BACKEND=python`` forces the numpy fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels


def available() -> tuple[str, ...]:
    return tuple(_BACKENDS)


def get(name: str | None = None):
    """Return the kernel module ``name``, or the default one."""
    if name is None:
        name = os.environ.get("DELTACHAIN_BACKEND") or ("cython" if _ckernels is not None else "python")
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {available()}") from None


DEFAULT = get().NAME
