"""Kernel backend selection.

The compiled extension is used when present; set MIXEDSSL_BACKEND=python to
force the pure-numpy fallback or MIXEDSSL_BACKEND=compiled to require the
extension (raising if it is missing).
"""

from __future__ import annotations

import os

from . import _purepy

try:
    from . import _core
except ImportError:  # extension not built
    _core = None


def _select():
    forced = os.environ.get("MIXEDSSL_BACKEND", "").strip().lower()
    if forced in ("", "auto"):
        return _core if _core is not None else _purepy
    if forced == "python":
        return _purepy
    if forced == "compiled":
        if _core is None:
            raise ImportError(
                "MIXEDSSL_BACKEND=compiled but the mixedssl._core extension is not built"
            )
        return _core
    raise ValueError(f"unrecognized MIXEDSSL_BACKEND value: {forced!r}")


_impl = _select()


def active_backend() -> str:
    return "compiled" if _impl is _core else "python"


def get_kernels(name: str | None = None):
    """Return the kernel module: the active one, or 'python'/'compiled' explicitly."""
    if name is None:
        return _impl
    if name == "python":
        return _purepy
    if name == "compiled":
        if _core is None:
            raise ImportError("compiled backend unavailable")
        return _core
    raise ValueError(f"unknown backend {name!r}")


def liness_chain(*args, **kwargs):
    return _impl.liness_chain(*args, **kwargs)


def cd_sweeps(*args, **kwargs):
    return _impl.cd_sweeps(*args, **kwargs)
