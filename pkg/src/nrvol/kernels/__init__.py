"""Kernel backend selection.

Two interchangeable implementations of the hot loops live here: numba
``@njit`` kernels and a pure-numpy fallback. ``NRVOL_BACKEND`` picks one at
import time (``numba``, the default, or ``numpy``); :func:`use_backend`
switches at runtime. If numba cannot be imported the numpy path is used.

Within one backend, results are bit-reproducible for any partitioning of the
input. Both backends use the same erfc and the same operation order, so
they differ only where the libm ``exp``/``log`` differ: a few float64 ulps,
which can occasionally move a float32 rounding by one ulp in single mode.
"""

from __future__ import annotations

import logging
import os
from types import ModuleType

from . import _numpy
from ._codes import CLAMPED_SIGMA, FROZEN_VEGA, INVALID_PRICE, NON_FINITE, OK

log = logging.getLogger(__name__)

ENV_VAR = "NRVOL_BACKEND"
BACKENDS = ("numba", "numpy")

try:
    from . import _numba
except ImportError as exc:  # pragma: no cover - numba is a declared dependency
    _numba = None
    log.warning("numba unavailable (%s); using the numpy kernels", exc)

_active: ModuleType = _numpy


def available_backends() -> tuple[str, ...]:
    return BACKENDS if _numba is not None else ("numpy",)


def use_backend(name: str) -> None:
    global _active
    name = name.lower()
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    if name == "numba":
        if _numba is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        _active = _numba
    else:
        _active = _numpy


def backend_name() -> str:
    return "numba" if _active is _numba else "numpy"


def get() -> ModuleType:
    """The active kernel module (``solve_into``, ``step_into``, ...)."""
    return _active


def _from_env() -> None:
    name = os.environ.get(ENV_VAR, "numba" if _numba is not None else "numpy")
    if name.lower() == "numba" and _numba is None:
        return
    use_backend(name)


_from_env()

__all__ = [
    "OK", "CLAMPED_SIGMA", "FROZEN_VEGA", "INVALID_PRICE", "NON_FINITE",
    "available_backends", "use_backend", "backend_name", "get", "ENV_VAR",
]
