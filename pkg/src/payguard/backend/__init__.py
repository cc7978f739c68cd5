"""Kernel backend selection.

Two interchangeable kernel sets exist: the compiled Cython extension
(payguard._kernels) and the pure-Python fallback (pykernels). The compiled
one is picked at import when present; PAYGUARD_BACKEND=python|compiled
forces a choice. Tests swap backends with use().
"""

import os
from contextlib import contextmanager

from . import pykernels

_COMPILED = None
_IMPORT_ERROR = None
try:
    from payguard import _kernels as _COMPILED
except ImportError as exc:  # extension not built on this install
    _IMPORT_ERROR = exc

_BACKENDS = {"python": pykernels}
if _COMPILED is not None:
    _BACKENDS["compiled"] = _COMPILED


def _initial():
    forced = os.environ.get("PAYGUARD_BACKEND")
    if forced:
        if forced not in ("python", "compiled"):
            raise RuntimeError(
                f"PAYGUARD_BACKEND must be 'python' or 'compiled', got {forced!r}")
        if forced == "compiled" and _COMPILED is None:
            raise RuntimeError(
                f"PAYGUARD_BACKEND=compiled but the extension is unavailable: "
                f"{_IMPORT_ERROR}")
        return _BACKENDS[forced]
    return _COMPILED if _COMPILED is not None else pykernels


kernels = _initial()


def active_name():
    return kernels.NAME


def available():
    return tuple(sorted(_BACKENDS))


def get(name):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise KeyError(f"no such backend {name!r}; built: {available()}") from None


@contextmanager
def use(name):
    """Temporarily switch the active kernel set (for tests/benchmarks)."""
    global kernels
    previous = kernels
    kernels = get(name)
    try:
        yield kernels
    finally:
        kernels = previous
