"""Floating-point precision modes.

Single mode follows one rule everywhere: an operation reads float32 inputs,
evaluates its transcendentals in float64, and rounds its result to the
nearest float32. Every array crossing an operation boundary therefore holds
float32-representable values, even when it is stored as float64.
"""

from __future__ import annotations

import enum

import numpy as np

__all__ = ["Precision", "round_to", "machine_epsilon"]


class Precision(str, enum.Enum):
    SINGLE = "single"
    DOUBLE = "double"

    @classmethod
    def parse(cls, value: "Precision | str") -> "Precision":
        if isinstance(value, Precision):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown precision {value!r}; expected 'single' or 'double'") from None

    @property
    def is_single(self) -> bool:
        return self is Precision.SINGLE

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float32) if self.is_single else np.dtype(np.float64)


def machine_epsilon(precision: Precision | str) -> float:
    return float(np.finfo(Precision.parse(precision).dtype).eps)


def round_to(x, precision: Precision | str):
    """Round ``x`` to ``precision`` and return it as float64.

    Round-to-nearest-even through float32 in single mode; identity in double
    mode. Scalars come back as Python floats, arrays as float64 arrays.
    """
    precision = Precision.parse(precision)
    arr = np.asarray(x, dtype=np.float64)
    if precision.is_single:
        with np.errstate(over="ignore"):
            arr = arr.astype(np.float32).astype(np.float64)
    if arr.ndim == 0:
        return float(arr)
    return arr
