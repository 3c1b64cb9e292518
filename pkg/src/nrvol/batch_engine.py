"""Columnar, data-parallel execution of the Newton-Raphson pipeline.

Quotes are held structure-of-arrays. A batch is cut into contiguous chunks
that are handed to a thread pool. The kernels release the GIL, and every
chunk writes to its own slice of the output. Elements never interact, so the
result is bit-identical for any chunk size and any worker count.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import nr_solver
from .bs_core import OptionType
from .nr_solver import SolverConfig, SolveStatus
from .precision import Precision

__all__ = [
    "QuoteBatch", "BatchOutcome", "solve_batch", "solve_batch_layerwise", "cast_precision",
    "resolve_workers", "WORKERS_ENV", "DEFAULT_CHUNK",
]

log = logging.getLogger(__name__)

WORKERS_ENV = "NRVOL_WORKERS"
# Large enough to amortize dispatch, small enough to balance across threads.
DEFAULT_CHUNK = 1 << 16


def resolve_workers(workers: int | str | None = None) -> int:
    """Explicit value, else ``$NRVOL_WORKERS``, else 1. ``"auto"`` means all CPUs."""
    if workers is None:
        workers = os.environ.get(WORKERS_ENV, 1)
    if isinstance(workers, str):
        if workers.strip().lower() == "auto":
            return os.cpu_count() or 1
        try:
            workers = int(workers)
        except ValueError:
            raise ValueError(f"workers must be a positive integer or 'auto', got {workers!r}") from None
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    return int(workers)


@dataclass
class QuoteBatch:
    """Columns of normalized quotes, one entry per option."""

    k: np.ndarray
    r: np.ndarray
    tau: np.ndarray
    c_mkt: np.ndarray
    is_call: np.ndarray

    def __post_init__(self):
        self.k = np.ascontiguousarray(self.k)
        n = self.k.shape[0] if self.k.ndim == 1 else -1
        if n < 1:
            raise ValueError("a batch needs a 1-d k column with at least one entry")
        for name in ("r", "tau", "c_mkt"):
            col = np.asarray(getattr(self, name))
            if col.ndim == 0:
                col = np.full(n, col, dtype=col.dtype if col.dtype.kind == "f" else np.float64)
            setattr(self, name, np.ascontiguousarray(col))
        call = np.asarray(self.is_call)
        if call.ndim == 0:
            call = np.full(n, bool(call))
        self.is_call = np.ascontiguousarray(call, dtype=np.bool_)
        for name in ("r", "tau", "c_mkt", "is_call"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"column {name!r} has shape {getattr(self, name).shape}, expected ({n},)")

    def __len__(self) -> int:
        return self.k.shape[0]

    @classmethod
    def from_arrays(cls, k, r, tau, c_mkt, option_type=OptionType.CALL) -> "QuoteBatch":
        if isinstance(option_type, (OptionType, str, bool)):
            call = OptionType.parse(option_type).is_call
        else:
            call = np.asarray(option_type)
            if call.dtype != np.bool_:
                call = np.array([OptionType.parse(t).is_call for t in call])
        return cls(np.asarray(k, dtype=np.float64), r, tau, c_mkt, call)

    @classmethod
    def from_dataset(cls, ds) -> "QuoteBatch":
        return cls(np.exp(ds.lnk), ds.spec.r, ds.tau, ds.c_mkt, True)

    def slice(self, start: int, stop: int) -> "QuoteBatch":
        return QuoteBatch(self.k[start:stop], self.r[start:stop], self.tau[start:stop],
                          self.c_mkt[start:stop], self.is_call[start:stop])


@dataclass
class BatchOutcome:
    sigma_pred: np.ndarray
    status: np.ndarray
    residual: np.ndarray
    precision: Precision = Precision.DOUBLE
    trace: np.ndarray | None = None

    def __len__(self) -> int:
        return self.sigma_pred.shape[0]

    def statuses(self) -> list[SolveStatus]:
        return [SolveStatus(int(s)) for s in self.status]

    def status_counts(self) -> dict[str, int]:
        codes, counts = np.unique(self.status, return_counts=True)
        return {SolveStatus(int(c)).label: int(n) for c, n in zip(codes, counts)}


def cast_precision(obj, target: Precision | str):
    """Round a :class:`QuoteBatch` or :class:`BatchOutcome` to ``target``.

    Single gives float32 columns. Double gives float64, which is exact for
    float32 input and a no-op for float64 input.
    """
    target = Precision.parse(target)
    dtype = target.dtype

    def conv(a):
        if a is None:
            return None
        with np.errstate(over="ignore"):
            return np.ascontiguousarray(a, dtype=dtype)

    if isinstance(obj, QuoteBatch):
        return QuoteBatch(conv(obj.k), conv(obj.r), conv(obj.tau), conv(obj.c_mkt), obj.is_call)
    if isinstance(obj, BatchOutcome):
        return BatchOutcome(conv(obj.sigma_pred), obj.status, conv(obj.residual), target,
                            conv(obj.trace))
    raise TypeError(f"cannot cast {type(obj).__name__}")


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _solve(batch: QuoteBatch, cfg: SolverConfig, workers, chunk_size, trace: bool) -> BatchOutcome:
    if cfg.single:
        batch = cast_precision(batch, Precision.SINGLE)
    k, r, tau, c = _f64(batch.k), _f64(batch.r), _f64(batch.tau), _f64(batch.c_mkt)
    call = batch.is_call
    n = len(batch)
    workers = resolve_workers(workers)
    chunk = int(chunk_size) if chunk_size else (n if workers == 1 else min(DEFAULT_CHUNK, -(-n // workers)))
    if chunk < 1:
        raise ValueError("chunk_size must be >= 1")

    sigma = np.empty(n, dtype=np.float64)
    status = np.empty(n, dtype=np.uint8)
    resid = np.empty(n, dtype=np.float64)
    tr = np.empty((cfg.depth + 1, n), dtype=np.float64) if trace else None

    def run(start):
        stop = min(start + chunk, n)
        s, st, rs, t = nr_solver._run(k[start:stop], r[start:stop], tau[start:stop], c[start:stop],
                                      call[start:stop], cfg, trace)
        sigma[start:stop] = s
        status[start:stop] = st
        resid[start:stop] = rs
        if trace:
            tr[:, start:stop] = t

    starts = range(0, n, chunk)
    if workers == 1 or len(starts) == 1:
        for s0 in starts:
            run(s0)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for _ in pool.map(run, starts):
                pass
    return BatchOutcome(sigma, status, resid, cfg.precision, tr)


def solve_batch(batch: QuoteBatch, cfg: SolverConfig | None = None, *,
                workers: int | str | None = None, chunk_size: int | None = None) -> BatchOutcome:
    """Solve every quote in ``batch``; element ``i`` equals ``solve_one`` on quote ``i``.

    In single precision the inputs are first cast to float32. Output columns
    are float64 holding float32-representable values in that case.
    """
    cfg = cfg or SolverConfig()
    return _solve(batch, cfg, workers, chunk_size, cfg.collect_trace)


def solve_batch_layerwise(batch: QuoteBatch, cfg: SolverConfig | None = None, *,
                          workers: int | str | None = None, chunk_size: int | None = None) -> np.ndarray:
    """``(depth + 1, L)`` matrix whose row ``n`` holds sigma after ``n`` layers."""
    cfg = replace(cfg or SolverConfig(), collect_trace=True)
    return _solve(batch, cfg, workers, chunk_size, True).trace
