"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_backends.py --sizes 10000,100000,1000000 --reps 20

Both backends solve the same generated dataset; the scalar reference loop is
included with ``--reference``. Outputs are also compared, so a speedup never
hides a numerical divergence between the two paths.
"""

from __future__ import annotations

import argparse

import numpy as np

from nrvol import kernels
from nrvol.batch_engine import QuoteBatch, solve_batch
from nrvol.bench import run_bench
from nrvol.datagen import GenSpec, generate
from nrvol.nr_solver import SolverConfig


def agreement(n: int, cfg: SolverConfig, seed: int) -> float:
    batch = QuoteBatch.from_dataset(generate(GenSpec(n, seed)))
    out = {}
    for name in kernels.available_backends():
        kernels.use_backend(name)
        out[name] = solve_batch(batch, cfg).sigma_pred
    if len(out) < 2:
        return 0.0
    return float(np.max(np.abs(out["numba"] - out["numpy"])))


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="10000,100000,1000000")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--precision", choices=["single", "double"], default="single")
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--workers", default=None)
    p.add_argument("--reference", action="store_true")
    p.add_argument("--json", action="store_true")
    args = p.parse_args()

    cfg = SolverConfig(depth=args.depth, precision=args.precision)
    sizes = [int(float(s)) for s in args.sizes.split(",")]
    previous = kernels.backend_name()
    rep = run_bench(sizes, args.reps, cfg, workers=args.workers, warmup=args.warmup,
                    backends=list(kernels.available_backends()), reference=args.reference)
    print(rep.to_json() if args.json else rep.to_text())
    for size in sizes:
        a, b = rep.cell(size, "batch[numba]"), rep.cell(size, "batch[numpy]")
        if a and b:
            print(f"size {size}: numba is {b.mean_ms / a.mean_ms:.1f}x faster than numpy")
    print(f"max |numba - numpy| on sigma_pred: {agreement(min(sizes), cfg, 42):.3e}")
    kernels.use_backend(previous)


if __name__ == "__main__":
    main()
