"""Black-Scholes pricing on normalized inputs.

All prices are per unit of spot: the underlying is fixed at 1 and a quote is
described by its moneyness ``k = spot / strike``, the rate ``r`` and the time
to maturity ``tau``. Functions accept scalars or numpy arrays (broadcasting
as usual) and return floats for scalar input.

Single precision follows :mod:`nrvol.precision`: inputs are rounded to
float32, the formula is evaluated in float64, and the result is rounded to
float32.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import erfc

from .precision import Precision, round_to

__all__ = [
    "OptionType", "MarketInputs", "D1D2", "InvalidInput", "DegenerateInput",
    "norm_cdf", "norm_pdf", "d1_d2", "price", "vega", "vomma", "price_bounds",
    "normalize_quote", "sigma_c",
]

_INV_SQRT2 = 0.7071067811865476
_INV_SQRT_2PI = 0.3989422804014327


class InvalidInput(ValueError):
    pass


class DegenerateInput(ArithmeticError):
    """sigma * sqrt(tau) rounds to zero, so d1 and d2 are undefined."""


class OptionType(enum.Enum):
    CALL = "call"
    PUT = "put"

    @classmethod
    def parse(cls, value: "OptionType | str | bool") -> "OptionType":
        if isinstance(value, OptionType):
            return value
        if isinstance(value, (bool, np.bool_)):
            return cls.CALL if value else cls.PUT
        text = str(value).strip().lower()
        if text in ("call", "c"):
            return cls.CALL
        if text in ("put", "p"):
            return cls.PUT
        raise InvalidInput(f"unknown option type {value!r}")

    @property
    def is_call(self) -> bool:
        return self is OptionType.CALL


@dataclass(frozen=True)
class MarketInputs:
    """Normalized market state for one quote (or an array of quotes).

    ``k`` is spot over strike, ``r`` the continuously compounded rate and
    ``tau`` the time to maturity in years.
    """

    k: float | np.ndarray
    r: float | np.ndarray
    tau: float | np.ndarray
    option_type: OptionType = OptionType.CALL

    def __post_init__(self):
        object.__setattr__(self, "option_type", OptionType.parse(self.option_type))
        k, r, tau = (np.asarray(v, dtype=np.float64) for v in (self.k, self.r, self.tau))
        if not np.all(np.isfinite(k) & (k > 0)):
            raise InvalidInput("moneyness k must be finite and > 0")
        if not np.all(np.isfinite(tau) & (tau > 0)):
            raise InvalidInput("time to maturity tau must be finite and > 0")
        if not np.all(np.isfinite(r)):
            raise InvalidInput("rate r must be finite")

    def rounded(self, precision: Precision | str) -> "MarketInputs":
        return MarketInputs(round_to(self.k, precision), round_to(self.r, precision),
                            round_to(self.tau, precision), self.option_type)

    @property
    def discount_over_k(self):
        """``exp(-r tau) / k``: the discounted strike per unit spot."""
        return np.exp(-np.asarray(self.r) * self.tau) / np.asarray(self.k)


class D1D2(NamedTuple):
    d1: float | np.ndarray
    d2: float | np.ndarray


def _out(x, precision):
    return round_to(x, precision)


def norm_cdf(x):
    """Standard normal CDF via ``erfc``; saturates cleanly in both tails."""
    return _out(0.5 * erfc(-np.asarray(x, dtype=np.float64) * _INV_SQRT2), Precision.DOUBLE)


def norm_pdf(x):
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(under="ignore"):
        return _out(_INV_SQRT_2PI * np.exp(-0.5 * x * x), Precision.DOUBLE)


def _d1_d2(m: MarketInputs, sigma, precision=Precision.DOUBLE):
    sigma = np.asarray(sigma, dtype=np.float64)
    sst = sigma * np.sqrt(m.tau)
    if np.any(round_to(sst, precision) == 0.0):
        raise DegenerateInput("sigma * sqrt(tau) underflows to zero")
    d1 = (np.log(m.k) + (m.r + 0.5 * sigma * sigma) * m.tau) / sst
    return d1, d1 - sst


def _check_sigma(sigma):
    s = np.asarray(sigma, dtype=np.float64)
    if not np.all(np.isfinite(s) & (s > 0)):
        raise InvalidInput("volatility must be finite and > 0")


def d1_d2(m: MarketInputs, sigma, precision: Precision | str = Precision.DOUBLE) -> D1D2:
    _check_sigma(sigma)
    m = m.rounded(precision)
    d1, d2 = _d1_d2(m, round_to(sigma, precision), precision)
    return D1D2(_out(d1, precision), _out(d2, precision))


def price(m: MarketInputs, sigma, precision: Precision | str = Precision.DOUBLE):
    """Option value per unit spot."""
    _check_sigma(sigma)
    m = m.rounded(precision)
    d1, d2 = _d1_d2(m, round_to(sigma, precision), precision)
    dk = m.discount_over_k
    if m.option_type.is_call:
        p = 0.5 * erfc(-d1 * _INV_SQRT2) - dk * (0.5 * erfc(-d2 * _INV_SQRT2))
    else:
        p = dk * (0.5 * erfc(d2 * _INV_SQRT2)) - 0.5 * erfc(d1 * _INV_SQRT2)
    return _out(p, precision)


def vega(m: MarketInputs, sigma, precision: Precision | str = Precision.DOUBLE):
    """dPrice/dsigma; the same for calls and puts. May underflow to 0 in the tails."""
    _check_sigma(sigma)
    m = m.rounded(precision)
    d1, _ = _d1_d2(m, round_to(sigma, precision), precision)
    with np.errstate(under="ignore"):
        v = _INV_SQRT_2PI * np.exp(-0.5 * d1 * d1) * np.sqrt(m.tau)
    return _out(v, precision)


def vomma(m: MarketInputs, sigma, precision: Precision | str = Precision.DOUBLE):
    """d2Price/dsigma2 = vega * d1 * d2 / sigma; zero at the inflection point."""
    _check_sigma(sigma)
    m = m.rounded(precision)
    s = round_to(sigma, precision)
    d1, d2 = _d1_d2(m, s, precision)
    with np.errstate(under="ignore"):
        v = _INV_SQRT_2PI * np.exp(-0.5 * d1 * d1) * np.sqrt(m.tau)
    return _out(v * d1 * d2 / s, precision)


def price_bounds(m: MarketInputs, precision: Precision | str = Precision.DOUBLE):
    """No-arbitrage ``(lower, upper)``: the sigma -> 0 and sigma -> inf limits of price."""
    m = m.rounded(precision)
    dk = m.discount_over_k
    if m.option_type.is_call:
        lo, hi = np.maximum(1.0 - dk, 0.0), np.ones_like(dk)
    else:
        lo, hi = np.maximum(dk - 1.0, 0.0), dk
    return _out(lo, precision), _out(hi, precision)


def normalize_quote(spot, strike, raw_price, r, tau, option_type=OptionType.CALL):
    """Map a raw quote to ``(MarketInputs, price per unit spot)``.

    Implied volatility is invariant under this scaling.
    """
    spot, strike, raw_price = (np.asarray(v, dtype=np.float64) for v in (spot, strike, raw_price))
    if not np.all(np.isfinite(spot) & (spot > 0)):
        raise InvalidInput("spot must be finite and > 0")
    if not np.all(np.isfinite(strike) & (strike > 0)):
        raise InvalidInput("strike must be finite and > 0")
    if not np.all(raw_price >= 0):
        raise InvalidInput("raw price must be >= 0")
    k = spot / strike
    c = raw_price / spot
    if k.ndim == 0:
        k, c = float(k), float(c)
    return MarketInputs(k, r, tau, option_type), c


def sigma_c(m: MarketInputs):
    """Inflection point of price in sigma, where vomma vanishes."""
    x = (np.log(m.k) + np.asarray(m.r) * m.tau) * 2.0 / np.asarray(m.tau)
    out = np.sqrt(np.abs(x))
    return float(out) if np.ndim(out) == 0 else out
