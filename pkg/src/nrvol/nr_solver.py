"""Fixed-depth Newton-Raphson inversion of the Black-Scholes price.

Each layer applies one update

    sigma <- sigma - (price(sigma) - c_mkt) / vega(sigma)

starting from the inflection point ``sigma_c = sqrt(|2/tau (ln k + r tau)|)``,
where price is convex below and concave above, so the iteration cannot
overshoot out of the basin. There is no stopping test: every quote passes
through exactly ``depth`` layers, which keeps the work per element constant.

Pathologies never raise. They are reported per element through
:class:`SolveStatus`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import bs_core, kernels
from .bs_core import MarketInputs
from .precision import Precision

__all__ = [
    "SolveStatus", "SolverConfig", "SolveOutcome",
    "initial_sigma", "nru_step", "solve_one", "quote_from_sigma",
]


class SolveStatus(enum.IntEnum):
    """Per-element outcome; a larger value is a worse event."""

    OK = kernels.OK
    CLAMPED_SIGMA = kernels.CLAMPED_SIGMA
    FROZEN_VEGA = kernels.FROZEN_VEGA
    INVALID_PRICE = kernels.INVALID_PRICE
    NON_FINITE = kernels.NON_FINITE

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_label(cls, text: str) -> "SolveStatus":
        for status, label in _LABELS.items():
            if label.lower() == text.strip().lower():
                return status
        raise ValueError(f"unknown status {text!r}")

    @property
    def has_sigma(self) -> bool:
        return self < SolveStatus.INVALID_PRICE


_LABELS = {
    SolveStatus.OK: "Ok",
    SolveStatus.CLAMPED_SIGMA: "ClampedSigma",
    SolveStatus.FROZEN_VEGA: "FrozenVega",
    SolveStatus.INVALID_PRICE: "InvalidPrice",
    SolveStatus.NON_FINITE: "NonFinite",
}

_DEFAULT_VEGA_FLOOR = {Precision.DOUBLE: 1e-12, Precision.SINGLE: 1e-8}


@dataclass(frozen=True)
class SolverConfig:
    """Pipeline settings.

    ``vega_floor`` defaults by precision (1e-12 double, 1e-8 single). Layers
    whose vega falls below it leave sigma unchanged. ``sigma_floor`` bounds
    both the starting point and every update from below.
    """

    depth: int = 8
    precision: Precision = Precision.DOUBLE
    sigma_floor: float = 1e-4
    vega_floor: float | None = None
    collect_trace: bool = False

    def __post_init__(self):
        object.__setattr__(self, "precision", Precision.parse(self.precision))
        if self.vega_floor is None:
            object.__setattr__(self, "vega_floor", _DEFAULT_VEGA_FLOOR[self.precision])
        if not isinstance(self.depth, (int, np.integer)) or self.depth < 0:
            raise ValueError(f"depth must be a non-negative integer, got {self.depth!r}")
        if not self.sigma_floor > 0:
            raise ValueError("sigma_floor must be > 0")
        if not self.vega_floor > 0:
            raise ValueError("vega_floor must be > 0")

    @property
    def single(self) -> bool:
        return self.precision.is_single


@dataclass
class SolveOutcome:
    sigma_pred: float
    status: SolveStatus
    residual: float
    trace: list[float] | None = field(default=None, repr=False)


def _columns(k, r, tau, c, is_call):
    k = np.ascontiguousarray(k, dtype=np.float64)
    n = k.shape[0]

    def col(x, dtype=np.float64):
        a = np.asarray(x, dtype=dtype)
        return np.ascontiguousarray(np.broadcast_to(a, (n,)) if a.ndim == 0 else a)

    return k, col(r), col(tau), col(c), col(is_call, np.bool_)


def _run(k, r, tau, c, is_call, cfg: SolverConfig, trace: bool):
    """Run the active kernel on columnar float64 inputs; returns fresh output arrays."""
    n = k.shape[0]
    sigma = np.empty(n, dtype=np.float64)
    status = np.empty(n, dtype=np.uint8)
    resid = np.empty(n, dtype=np.float64)
    tr = np.empty((cfg.depth + 1, n) if trace else (0, n), dtype=np.float64)
    kernels.get().solve_into(k, r, tau, c, is_call, int(cfg.depth), cfg.single,
                             float(cfg.sigma_floor), float(cfg.vega_floor),
                             sigma, status, resid, tr)
    return sigma, status, resid, (tr if trace else None)


def _market_columns(m: MarketInputs, c_mkt):
    k = np.atleast_1d(np.asarray(m.k, dtype=np.float64))
    return _columns(k, m.r, m.tau, c_mkt, m.option_type.is_call)


def initial_sigma(m: MarketInputs, cfg: SolverConfig | None = None) -> float:
    """``max(sigma_c, sigma_floor)`` in the configured precision."""
    cfg = cfg or SolverConfig()
    k, r, tau, _, _ = _market_columns(m, 0.0)
    out = np.empty(k.shape[0], dtype=np.float64)
    kernels.get().initial_into(k, r, tau, cfg.single, float(cfg.sigma_floor), out)
    return float(out[0]) if np.ndim(m.k) == 0 else out


def nru_step(sigma_n: float, m: MarketInputs, c_mkt: float,
             cfg: SolverConfig | None = None) -> tuple[float, SolveStatus]:
    """One Newton-Raphson layer. Returns the next sigma and the layer's flag.

    The flag is ``FROZEN_VEGA`` when vega is below the floor (sigma is
    returned unchanged), ``CLAMPED_SIGMA`` when the update fell below
    ``sigma_floor``, ``INVALID_PRICE`` when ``c_mkt`` is outside the
    no-arbitrage bounds and ``NON_FINITE`` if the arithmetic broke down.
    """
    cfg = cfg or SolverConfig()
    k, r, tau, c, call = _market_columns(m, c_mkt)
    s = np.ascontiguousarray(np.broadcast_to(np.asarray(sigma_n, dtype=np.float64), k.shape))
    out = np.empty(k.shape[0], dtype=np.float64)
    flag = np.empty(k.shape[0], dtype=np.uint8)
    kernels.get().step_into(s, k, r, tau, c, call, cfg.single, float(cfg.sigma_floor),
                            float(cfg.vega_floor), out, flag)
    return float(out[0]), SolveStatus(int(flag[0]))


def solve_one(m: MarketInputs, c_mkt: float, cfg: SolverConfig | None = None) -> SolveOutcome:
    cfg = cfg or SolverConfig()
    if np.ndim(m.k) != 0:
        raise ValueError("solve_one takes a scalar quote; use batch_engine.solve_batch for arrays")
    k, r, tau, c, call = _market_columns(m, c_mkt)
    sigma, status, resid, tr = _run(k, r, tau, c, call, cfg, cfg.collect_trace)
    return SolveOutcome(
        sigma_pred=float(sigma[0]),
        status=SolveStatus(int(status[0])),
        residual=float(resid[0]),
        trace=None if tr is None else tr[:, 0].tolist(),
    )


def quote_from_sigma(m: MarketInputs, sigma_true, precision: Precision | str = Precision.DOUBLE):
    """Black-Scholes price for a known volatility (the synthetic market quote)."""
    return bs_core.price(m, sigma_true, precision)
