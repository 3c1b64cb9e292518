import math

import numpy as np
import pytest

from nrvol.batch_engine import QuoteBatch, solve_batch
from nrvol.bs_core import MarketInputs
from nrvol.datagen import GenSpec, generate
from nrvol.nr_solver import SolverConfig, quote_from_sigma
from nrvol.reference import InvalidPrice, reference_loop, reference_solve


def test_golden_case():
    m = MarketInputs(1.5, 0.0, 1.0)
    s, info = reference_solve(m, quote_from_sigma(m, 0.3), full_output=True)
    assert s == pytest.approx(0.3, abs=1e-9) and info.converged and info.iterations <= 8


def test_invalid_and_non_convergence():
    with pytest.raises(InvalidPrice):
        reference_solve(MarketInputs(1.0, 0.0, 1.0), 1.5)
    m = MarketInputs(1.5, 0.0, 1.0)
    _, info = reference_solve(m, quote_from_sigma(m, 0.3), max_iter=2, full_output=True)
    assert not info.converged and info.iterations == 2


def test_floor_fixed_point():
    m = MarketInputs(1.0, 0.0, 1.0)
    assert reference_solve(m, quote_from_sigma(m, 1e-4)) == pytest.approx(1e-4, abs=1e-12)


def test_put():
    m = MarketInputs(0.9, 0.02, 0.5, "put")
    assert reference_solve(m, quote_from_sigma(m, 0.2)) == pytest.approx(0.2, abs=1e-12)


def test_agrees_with_batch_double():
    ds = generate(GenSpec(10_000, 31))
    b = QuoteBatch.from_dataset(ds)
    out = solve_batch(b, SolverConfig(precision="double"))
    ref = np.array(reference_loop(b.k.tolist(), b.r.tolist(), b.tau.tolist(), b.c_mkt.tolist(),
                                  b.is_call.tolist()))
    assert np.mean(np.abs(out.sigma_pred - ref)) <= 1e-9


def test_loop_marks_invalid():
    out = reference_loop([1.0, 1.0], [0.0, 0.0], [1.0, 1.0], [0.1, 1.5], [True, True])
    assert math.isfinite(out[0]) and math.isnan(out[1])
