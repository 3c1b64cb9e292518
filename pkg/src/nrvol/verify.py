"""Golden-value checks behind ``nrvol verify``.

Each check records what it measured, what it expected and the tolerance, so
a failure report says how far off the build is rather than only that it is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bs_core, kernels
from .batch_engine import QuoteBatch, solve_batch
from .bs_core import MarketInputs, OptionType
from .datagen import GenSpec, generate
from .metrics import compute_errors
from .nr_solver import SolverConfig, SolveStatus, quote_from_sigma, solve_one
from .precision import machine_epsilon
from .reference import reference_loop

__all__ = ["Check", "GOLDEN_TRACES", "run_checks", "trace_error"]

# Single-precision trajectories sigma_0..sigma_8 for (r=0, tau=1, sigma=0.3), keyed by k.
GOLDEN_TRACES: dict[float, tuple[float, ...]] = {
    1.5: (0.90051656961441, 0.37598699331284, 0.30990260839462, 0.30027109384537,
          0.30000036954880, 0.30000007152557, 0.30000016093254, 0.30000001192093,
          0.30000001192093),
    1.3: (0.72438144683838, 0.32452529668808, 0.30062055587769, 0.30000048875809,
          0.30000001192093, 0.30000001192093, 0.30000001192093, 0.30000001192093,
          0.30000001192093),
}
TRACE_TOL = 2e-7

# N(0.1) to 40 digits is 0.5398278372770289836689...
NORM_CDF_0_1 = 0.539827837277029


@dataclass
class Check:
    name: str
    measured: float
    expected: str
    tolerance: str
    passed: bool

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"{tag}  {self.name:<34} measured={self.measured:<18.10g} "
                f"expected={self.expected:<20} tol={self.tolerance}")


def trace_error(k: float) -> float:
    """Largest per-layer gap between the single-precision trace and the golden one."""
    m = MarketInputs(k, 0.0, 1.0)
    cfg = SolverConfig(depth=8, precision="single", collect_trace=True)
    out = solve_one(m, quote_from_sigma(m, 0.3, "single"), cfg)
    return max(abs(a - b) for a, b in zip(out.trace, GOLDEN_TRACES[k]))


def _abs_check(name, measured, expected, tol) -> Check:
    err = abs(measured - expected)
    return Check(name, measured, repr(expected), f"|diff| <= {tol:g}", bool(err <= tol))


def _bound(name, measured, bound, expected="0") -> Check:
    return Check(name, measured, expected, f"<= {bound:g}", bool(measured <= bound))


def _kernel_ncdf(x: float) -> float:
    out = np.empty(1)
    kernels.get().norm_cdf_into(np.array([x]), out)
    return float(out[0])


def _checks_pricing() -> list[Check]:
    out = [
        _abs_check("norm_cdf(0.1) [kernel]", _kernel_ncdf(0.1), NORM_CDF_0_1, 1e-15),
        _abs_check("norm_cdf(0.1) [core]", float(bs_core.norm_cdf(0.1)), NORM_CDF_0_1, 1e-15),
        _abs_check("norm_cdf(8.0) [kernel]", _kernel_ncdf(8.0), 1.0, 1e-15),
    ]
    grid = np.linspace(-8.0, 8.0, 1601)
    sym = float(np.max(np.abs(bs_core.norm_cdf(grid) + bs_core.norm_cdf(-grid) - 1.0)))
    out.append(_bound("N(x) + N(-x) - 1", sym, machine_epsilon("double")))

    rng = np.random.default_rng(11)
    k = np.exp(rng.uniform(-1.0, 1.0, 2000))
    r = rng.uniform(-0.02, 0.08, 2000)
    tau = rng.uniform(0.01, 2.0, 2000)
    sigma = rng.uniform(0.01, 0.5, 2000)
    call = bs_core.price(MarketInputs(k, r, tau, OptionType.CALL), sigma)
    put = bs_core.price(MarketInputs(k, r, tau, OptionType.PUT), sigma)
    parity = float(np.max(np.abs(call - put - (1.0 - np.exp(-r * tau) / k))))
    out.append(_bound("put-call parity", parity, 4 * machine_epsilon("double")))

    m = MarketInputs(1.5, 0.0, 1.0)
    s, h = 0.9005166, 1e-5 * 0.9005166
    fd = (bs_core.price(m, s + h) - bs_core.price(m, s - h)) / (2 * h)
    v = bs_core.vega(m, s)
    out.append(_bound("vega vs finite difference (rel)", abs(fd - v) / v, 1e-6))
    return out


def _checks_traces() -> list[Check]:
    return [_bound(f"trace k={k} max |diff|", trace_error(k), TRACE_TOL, "golden trace")
            for k in GOLDEN_TRACES]


def _checks_dataset(n: int, seed: int) -> list[Check]:
    ds = generate(GenSpec(n, seed))
    batch = QuoteBatch.from_dataset(ds)
    single = solve_batch(batch, SolverConfig(depth=8, precision="single"))
    rep = compute_errors(single.sigma_pred, ds.sigma_true, "single")
    out = [
        _bound(f"single MAE (n={n})", rep.mae, 1e-6),
        _bound(f"single MSE (n={n})", rep.mse, 1e-12),
        _bound(f"single MRE (n={n})", rep.mre, 1e-5),
    ]
    m = min(n, 10_000)
    sub = batch.slice(0, m)
    dbl = solve_batch(sub, SolverConfig(depth=8, precision="double"))
    ref = np.array(reference_loop(sub.k.tolist(), sub.r.tolist(), sub.tau.tolist(),
                                  sub.c_mkt.tolist(), sub.is_call.tolist()))
    out.append(_bound(f"double vs reference MAE (n={m})",
                      float(np.mean(np.abs(dbl.sigma_pred - ref))), 1e-9))
    return out


def _checks_validation() -> list[Check]:
    res = solve_one(MarketInputs(1.0, 0.0, 1.0), 1.5, SolverConfig(precision="single"))
    ok = res.status is SolveStatus.INVALID_PRICE and math.isnan(res.sigma_pred)
    return [Check("c_mkt=1.5 -> status, sigma", float(res.status),
                  f"{int(SolveStatus.INVALID_PRICE)} (InvalidPrice), NaN", "exact", ok)]


def run_checks(n: int = 1_000_000, seed: int = 2024,
               report: Callable[[Check], None] | None = None) -> list[Check]:
    """Run every golden check; ``report`` is called as each one finishes."""
    checks: list[Check] = []
    for group in (_checks_pricing, _checks_traces, lambda: _checks_dataset(n, seed),
                  _checks_validation):
        for c in group():
            checks.append(c)
            if report:
                report(c)
    return checks
