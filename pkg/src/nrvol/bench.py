"""Wall-clock comparison of the batch engine against the scalar reference loop.

For each size, a dataset slice is prepared outside the timer. Each path then
runs ``warmup`` untimed passes followed by ``repetitions`` timed passes. The
timed region is the solve call only, with ``perf_counter`` around it. For
the batch engine that includes the cast to the working precision.
"""

from __future__ import annotations

import json
import logging
import os
import statistics
import time
from dataclasses import asdict, dataclass, field

from . import kernels
from .batch_engine import QuoteBatch, resolve_workers, solve_batch
from .datagen import GenSpec, generate
from .nr_solver import SolverConfig
from .reference import reference_loop

__all__ = ["BenchCell", "BenchReport", "run_bench", "REFERENCE_PATH"]

log = logging.getLogger(__name__)

REFERENCE_PATH = "reference"


def batch_path(backend: str) -> str:
    return f"batch[{backend}]"


@dataclass
class BenchCell:
    size: int
    path: str
    mean_ms: float
    std_ms: float
    min_ms: float
    repetitions: int

    @property
    def rsd(self) -> float:
        return self.std_ms / self.mean_ms if self.mean_ms > 0 else 0.0


@dataclass
class BenchReport:
    sizes: list[int]
    repetitions: int
    warmup: int
    workers: int
    precision: str
    depth: int
    backends: list[str]
    cpu_count: int
    seed: int
    cells: list[BenchCell] = field(default_factory=list)
    failures: dict[int, str] = field(default_factory=dict)

    def cell(self, size: int, path: str) -> BenchCell | None:
        for c in self.cells:
            if c.size == size and c.path == path:
                return c
        return None

    def speedups(self) -> dict[int, dict[str, float]]:
        """Reference mean time divided by each batch path's mean time, per size."""
        out = {}
        for size in self.sizes:
            ref = self.cell(size, REFERENCE_PATH)
            if ref is None:
                continue
            out[size] = {c.path: ref.mean_ms / c.mean_ms for c in self.cells
                         if c.size == size and c.path != REFERENCE_PATH and c.mean_ms > 0}
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cells"] = [dict(asdict(c), rsd=c.rsd) for c in self.cells]
        d["failures"] = {str(k): v for k, v in self.failures.items()}
        d["speedups"] = {str(k): v for k, v in self.speedups().items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        paths = list(dict.fromkeys(c.path for c in self.cells))
        lines = [
            f"precision={self.precision} depth={self.depth} workers={self.workers} "
            f"cpus={self.cpu_count} repetitions={self.repetitions} warmup={self.warmup}",
            "times in ms, mean (std)",
            f"{'size':>10}" + "".join(f"{p:>26}" for p in paths) + f"{'speedup':>12}",
        ]
        sp = self.speedups()
        for size in self.sizes:
            if size in self.failures:
                lines.append(f"{size:>10}  FAILED: {self.failures[size]}")
                continue
            row = f"{size:>10}"
            for p in paths:
                c = self.cell(size, p)
                row += f"{'-':>26}" if c is None else f"{f'{c.mean_ms:.3f} ({c.std_ms:.4f})':>26}"
            best = max(sp.get(size, {}).values(), default=None)
            row += f"{'-':>12}" if best is None else f"{best:>11.1f}x"
            lines.append(row)
        return "\n".join(lines)


def _time(fn, repetitions: int, warmup: int) -> list[float]:
    for _ in range(warmup):
        fn()
    out = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        fn()
        out.append((time.perf_counter() - t0) * 1e3)
    return out


def _cell(size, path, samples) -> BenchCell:
    return BenchCell(size, path, statistics.fmean(samples), statistics.stdev(samples),
                     min(samples), len(samples))


def run_bench(sizes=(10_000, 100_000, 1_000_000), repetitions: int = 100,
              cfg: SolverConfig | None = None, *, workers: int | str | None = None,
              warmup: int = 3, seed: int = 42, backends: list[str] | None = None,
              reference: bool = True, progress=None) -> BenchReport:
    """Time the batch engine (per backend) and the scalar reference at each size."""
    if repetitions < 2:
        raise ValueError("repetitions must be >= 2 to report a standard deviation")
    cfg = cfg or SolverConfig(precision="single")
    sizes = [int(s) for s in sizes]
    if not sizes or min(sizes) < 1:
        raise ValueError("sizes must be positive")
    workers = resolve_workers(workers)
    backends = list(backends or [kernels.backend_name()])
    report = BenchReport(sizes, repetitions, warmup, workers, cfg.precision.value, cfg.depth,
                         backends, os.cpu_count() or 1, seed)
    previous = kernels.backend_name()
    data = generate(GenSpec(max(sizes), seed))
    try:
        for size in sizes:
            try:
                batch = QuoteBatch.from_dataset(data).slice(0, size)
                for backend in backends:
                    kernels.use_backend(backend)
                    samples = _time(lambda: solve_batch(batch, cfg, workers=workers),
                                    repetitions, warmup)
                    report.cells.append(_cell(size, batch_path(backend), samples))
                    if progress:
                        progress(report.cells[-1])
                if reference:
                    cols = (batch.k.tolist(), batch.r.tolist(), batch.tau.tolist(),
                            batch.c_mkt.tolist(), batch.is_call.tolist())
                    samples = _time(lambda: reference_loop(*cols), repetitions, warmup)
                    report.cells.append(_cell(size, REFERENCE_PATH, samples))
                    if progress:
                        progress(report.cells[-1])
            except MemoryError as exc:
                log.error("size %d: out of memory", size)
                report.failures[size] = f"MemoryError: {exc}"
    finally:
        kernels.use_backend(previous)
    return report
