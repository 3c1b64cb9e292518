"""Scalar double-precision Newton-Raphson, one quote at a time.

This is the conventional way to compute implied volatility, with a Python
loop, ``math`` functions and an early exit. It shares no code with the
kernels, which makes it both the accuracy oracle for the batch engine and
the per-element timing baseline.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .bs_core import MarketInputs

__all__ = ["InvalidPrice", "ReferenceInfo", "reference_solve", "reference_loop"]

_R2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class InvalidPrice(ValueError):
    pass


class ReferenceInfo(NamedTuple):
    converged: bool
    iterations: int


def _newton(k, r, tau, c, call, tol, max_iter, floor):
    lnk = math.log(k)
    st = math.sqrt(tau)
    dk = math.exp(-r * tau) / k
    s = math.sqrt(abs(2.0 / tau * (lnk + r * tau)))
    if s < floor:
        s = floor
    for it in range(1, max_iter + 1):
        sst = s * st
        d1 = (lnk + (r + 0.5 * s * s) * tau) / sst
        d2 = d1 - sst
        if call:
            p = 0.5 * math.erfc(-d1 * _R2) - dk * 0.5 * math.erfc(-d2 * _R2)
        else:
            p = dk * 0.5 * math.erfc(d2 * _R2) - 0.5 * math.erfc(d1 * _R2)
        v = _INV_SQRT_2PI * math.exp(-0.5 * d1 * d1) * st
        if v == 0.0:
            return s, False, it
        ds = (p - c) / v
        s -= ds
        if s < floor:
            s = floor
        if abs(ds) <= tol:
            return s, True, it
    return s, False, max_iter


def _inside(k, r, tau, c, call) -> bool:
    dk = math.exp(-r * tau) / k
    if call:
        return max(1.0 - dk, 0.0) < c < 1.0
    return max(dk - 1.0, 0.0) < c < dk


def reference_solve(m: MarketInputs, c_mkt: float, tol: float = 1e-12, max_iter: int = 8,
                    sigma_floor: float = 1e-4, full_output: bool = False):
    """Implied volatility of a single quote.

    Starts at the vomma-zero point and stops once a step is below ``tol`` or
    after ``max_iter`` steps. With ``full_output`` it returns
    ``(sigma, ReferenceInfo)``; ``converged`` is False if ``tol`` was never met.
    """
    k, r, tau, call = float(m.k), float(m.r), float(m.tau), m.option_type.is_call
    c = float(c_mkt)
    if not _inside(k, r, tau, c, call):
        raise InvalidPrice(f"price {c!r} is outside the no-arbitrage bounds")
    s, ok, it = _newton(k, r, tau, c, call, tol, max_iter, sigma_floor)
    return (s, ReferenceInfo(ok, it)) if full_output else s


def reference_loop(k, r, tau, c, is_call, tol: float = 1e-12, max_iter: int = 8,
                   sigma_floor: float = 1e-4) -> list[float]:
    """Solve a list of quotes one by one; invalid quotes give NaN."""
    out = []
    append = out.append
    nan = math.nan
    for ki, ri, ti, ci, call in zip(k, r, tau, c, is_call):
        if _inside(ki, ri, ti, ci, call):
            append(_newton(ki, ri, ti, ci, call, tol, max_iter, sigma_floor)[0])
        else:
            append(nan)
    return out
