import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nrvol.batch_engine import (
    BatchOutcome, QuoteBatch, cast_precision, resolve_workers, solve_batch, solve_batch_layerwise,
)
from nrvol.bs_core import MarketInputs
from nrvol.datagen import GenSpec, generate
from nrvol.nr_solver import SolverConfig, initial_sigma, quote_from_sigma, solve_one
from nrvol.verify import GOLDEN_TRACES


def _bits(a):
    return np.asarray(a, dtype=np.float64).view(np.uint64)


@pytest.fixture(scope="module")
def data():
    return generate(GenSpec(10_000, 77))


def _mixed_batch(n, seed):
    rng = np.random.default_rng(seed)
    sigma = rng.uniform(0.01, 0.5, n)
    tau = rng.uniform(0.01, 2.0, n)
    r = rng.uniform(0.0, 0.05, n)
    lnk = -r * tau - 0.5 * sigma**2 * tau + rng.uniform(-2, 2, n) * sigma * np.sqrt(tau)
    call = rng.random(n) < 0.5
    c = np.empty(n)
    for t in (True, False):
        sel = call == t
        c[sel] = quote_from_sigma(MarketInputs(np.exp(lnk[sel]), r[sel], tau[sel], t), sigma[sel])
    c[::97] = 2.0  # sprinkle invalid quotes
    return QuoteBatch(np.exp(lnk), r, tau, c, call)


class TestQuoteBatch:
    def test_broadcasts_scalars(self):
        b = QuoteBatch.from_arrays([1.0, 1.1], 0.0, 1.0, [0.1, 0.2], "put")
        assert b.r.shape == (2,) and not b.is_call.any() and len(b) == 2

    def test_string_types(self):
        b = QuoteBatch.from_arrays([1.0, 1.1], 0.0, 1.0, [0.1, 0.2], np.array(["call", "p"]))
        assert b.is_call.tolist() == [True, False]

    def test_shape_errors(self):
        with pytest.raises(ValueError, match="tau"):
            QuoteBatch(np.ones(3), np.zeros(3), np.ones(2), np.ones(3), True)
        with pytest.raises(ValueError):
            QuoteBatch(np.ones(0), 0.0, 1.0, 0.1, True)

    def test_columns_contiguous(self, data):
        b = QuoteBatch.from_dataset(data).slice(10, 20)
        assert all(getattr(b, c).flags.c_contiguous for c in ("k", "r", "tau", "c_mkt", "is_call"))


class TestSolveBatch:
    def test_golden_pair(self, backend):
        ks = np.array(sorted(GOLDEN_TRACES))
        c = quote_from_sigma(MarketInputs(ks, 0.0, 1.0), 0.3, "single")
        out = solve_batch(QuoteBatch(ks, 0.0, 1.0, c, True), SolverConfig(precision="single"))
        assert np.allclose(out.sigma_pred, 0.30000001192093, atol=2e-7, rtol=0)
        trace = solve_batch_layerwise(QuoteBatch(ks, 0.0, 1.0, c, True), SolverConfig(precision="single"))
        for j, k in enumerate(ks):
            assert np.max(np.abs(trace[:, j] - GOLDEN_TRACES[k])) <= 2e-7

    @pytest.mark.parametrize("precision", ["single", "double"])
    def test_scalar_batch_equivalence(self, backend, precision):
        b = _mixed_batch(2_000, 3)
        cfg = SolverConfig(precision=precision)
        out = solve_batch(b, cfg)
        for i in range(0, len(b), 7):
            m_ok = b.k[i] > 0
            assert m_ok
            one = solve_one(MarketInputs(b.k[i], b.r[i], b.tau[i], bool(b.is_call[i])), b.c_mkt[i], cfg)
            assert _bits(one.sigma_pred) == _bits(out.sigma_pred[i])
            assert int(one.status) == out.status[i]
            assert _bits(one.residual) == _bits(out.residual[i])

    def test_length_one(self, backend):
        b = QuoteBatch.from_arrays([1.5], 0.0, 1.0, [0.3432393])
        one = solve_one(MarketInputs(1.5, 0.0, 1.0), 0.3432393)
        assert solve_batch(b).sigma_pred[0] == one.sigma_pred

    @pytest.mark.parametrize("precision", ["single", "double"])
    def test_partition_invariance(self, backend, precision):
        b = _mixed_batch(5_000, 4)
        cfg = SolverConfig(precision=precision, collect_trace=True)
        ref = solve_batch(b, cfg, workers=1)
        for workers, chunk in [(2, None), (8, 64), (3, 4096), (1, 1), (4, 777)]:
            out = solve_batch(b, cfg, workers=workers, chunk_size=chunk)
            assert np.array_equal(_bits(out.sigma_pred), _bits(ref.sigma_pred))
            assert np.array_equal(out.status, ref.status)
            assert np.array_equal(_bits(out.residual), _bits(ref.residual))
            assert np.array_equal(_bits(out.trace), _bits(ref.trace))

    def test_single_outputs_are_float32_values(self, data):
        out = solve_batch(QuoteBatch.from_dataset(data), SolverConfig(precision="single"))
        assert np.array_equal(out.sigma_pred, out.sigma_pred.astype(np.float32).astype(np.float64))

    def test_invalid_rows_do_not_abort(self, backend):
        b = _mixed_batch(1_000, 5)
        out = solve_batch(b, SolverConfig())
        bad = b.c_mkt == 2.0
        assert np.all(out.status[bad] == 3) and np.all(np.isnan(out.sigma_pred[bad]))
        assert np.all(out.status[~bad] <= 2)
        assert out.status_counts()["InvalidPrice"] == bad.sum()

    def test_layerwise(self, backend, data):
        b = QuoteBatch.from_dataset(data)
        cfg = SolverConfig(precision="single")
        trace = solve_batch_layerwise(b, cfg)
        assert trace.shape == (9, len(data))
        assert np.array_equal(trace[-1], solve_batch(b, cfg).sigma_pred)
        assert np.array_equal(trace[0], initial_sigma(MarketInputs(b.k, b.r, b.tau), cfg))
        t0 = solve_batch_layerwise(b, SolverConfig(precision="single", depth=0))
        assert t0.shape == (1, len(data)) and np.array_equal(t0[0], trace[0])


class TestCast:
    def test_round_trips(self):
        b = QuoteBatch.from_arrays([0.30000001192093, 1.5], 0.0, 1.0, [0.1, 0.2])
        s = cast_precision(b, "single")
        assert s.k.dtype == np.float32
        assert float(s.k[0]) == 0.30000001192092896
        d = cast_precision(s, "double")
        assert np.array_equal(cast_precision(d, "single").k, s.k)

    @given(st.lists(st.floats(width=32, allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
    def test_single_double_single_identity(self, xs):
        a = np.array(xs, dtype=np.float32)
        out = BatchOutcome(a.astype(np.float64), np.zeros(len(xs), np.uint8), a.astype(np.float64))
        back = cast_precision(cast_precision(out, "single"), "double")
        assert np.array_equal(back.sigma_pred.astype(np.float32), a)

    def test_overflow_becomes_nonfinite(self):
        b = QuoteBatch.from_arrays([1e300], 0.0, 1.0, [0.5])
        assert solve_batch(b, SolverConfig(precision="single")).status[0] == 4

    def test_rejects_other_types(self):
        with pytest.raises(TypeError):
            cast_precision([1.0], "single")


def test_resolve_workers(monkeypatch):
    monkeypatch.delenv("NRVOL_WORKERS", raising=False)
    assert resolve_workers() == 1
    monkeypatch.setenv("NRVOL_WORKERS", "3")
    assert resolve_workers() == 3
    assert resolve_workers(2) == 2
    assert resolve_workers("auto") >= 1
    for bad in ("0", "many", -1):
        with pytest.raises(ValueError):
            resolve_workers(bad)
