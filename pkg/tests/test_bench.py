import json

import pytest

from nrvol import kernels
from nrvol.bench import REFERENCE_PATH, run_bench
from nrvol.nr_solver import SolverConfig


def test_minimal_report():
    rep = run_bench([1], 2, warmup=0)
    assert len(rep.cells) == 2 and rep.repetitions == 2
    assert all(c.std_ms >= 0 and c.repetitions == 2 for c in rep.cells)
    doc = json.loads(rep.to_json())
    assert {"size", "path", "mean_ms", "std_ms"} <= set(doc["cells"][0])
    assert "1" in doc["speedups"]
    assert "speedup" in rep.to_text()


def test_backends_and_paths():
    backends = list(kernels.available_backends())
    rep = run_bench([100, 200], 3, SolverConfig(precision="double"), warmup=1, backends=backends)
    assert len(rep.cells) == 2 * (len(backends) + 1)
    assert rep.cell(200, REFERENCE_PATH) is not None
    assert set(rep.speedups()[100]) == {f"batch[{b}]" for b in backends}
    assert kernels.backend_name() == kernels.backend_name()


def test_without_reference():
    rep = run_bench([10], 2, warmup=0, reference=False)
    assert [c.path for c in rep.cells] == [f"batch[{kernels.backend_name()}]"]
    assert rep.speedups() == {}


def test_validation():
    with pytest.raises(ValueError):
        run_bench([10], 1)
    with pytest.raises(ValueError):
        run_bench([0], 2)


def test_memory_error_is_reported(monkeypatch):
    import nrvol.bench as bench

    real = bench.solve_batch

    def boom(batch, cfg, **kw):
        if len(batch) > 50:
            raise MemoryError("simulated")
        return real(batch, cfg, **kw)

    monkeypatch.setattr(bench, "solve_batch", boom)
    rep = run_bench([10, 100], 2, warmup=0)
    assert 100 in rep.failures and rep.cell(10, REFERENCE_PATH) is not None
    assert "FAILED" in rep.to_text()
