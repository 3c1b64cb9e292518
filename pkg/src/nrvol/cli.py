"""``nrvol`` command-line interface.

Exit codes: 0 success, 1 verification or input failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .batch_engine import WORKERS_ENV, QuoteBatch, resolve_workers, solve_batch
from .bench import run_bench
from .bs_core import InvalidInput, MarketInputs, OptionType, price_bounds
from .datagen import (
    COLUMNS, DatasetFormatError, GenSpec, generate, is_binary, read_dataset, read_table,
    write_dataset,
)
from .metrics import compute_errors, per_layer_mse
from .nr_solver import SolverConfig, SolveStatus, quote_from_sigma, solve_one

log = logging.getLogger("nrvol")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

NORMALIZED = ("k", "r", "tau", "c_mkt")
RAW = ("spot", "strike", "rate", "tau", "price")
TYPE_COLUMNS = ("type", "option_type")


class InputError(Exception):
    """Bad input file; reported with exit code 1."""


# -- argument types ----------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _reps(text: str) -> int:
    value = _positive_int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("must be >= 2 to report a standard deviation")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _seed(text: str) -> int:
    value = _nonneg_int(text)
    if value >= 2**64:
        raise argparse.ArgumentTypeError("must fit in an unsigned 64-bit integer")
    return value


def _workers(text: str) -> int | str:
    try:
        return resolve_workers(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _sizes(text: str) -> list[int]:
    return [_positive_int(part.strip()) for part in text.split(",") if part.strip()]


def _finite(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be finite, got {text!r}")
    return value


def _backends(text: str) -> list[str]:
    names = [b.strip().lower() for b in text.split(",") if b.strip()]
    for b in names:
        if b not in kernels.available_backends():
            raise argparse.ArgumentTypeError(
                f"unknown backend {b!r}; available: {','.join(kernels.available_backends())}")
    return names


# -- parser ------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nrvol", description="Batch implied volatility by fixed-depth Newton-Raphson.")
    p.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--depth", type=_nonneg_int, default=8, help="number of layers (default 8)")
    solver.add_argument("--precision", choices=["single", "double"], default="single")
    solver.add_argument("--backend", choices=list(kernels.available_backends()),
                        help="kernel backend (default: $NRVOL_BACKEND or numba)")

    par = argparse.ArgumentParser(add_help=False)
    par.add_argument("--workers", type=_workers, default=None,
                     help=f"threads, N or 'auto' (default: ${WORKERS_ENV} or 1)")

    g = sub.add_parser("generate", help="write a synthetic dataset")
    g.add_argument("-n", type=_positive_int, required=True, help="number of rows")
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("--r", type=_finite, default=0.0, help="risk-free rate (default 0)")
    g.add_argument("-o", "--output", required=True, type=Path)
    g.add_argument("--format", choices=["csv", "binary"], default=None,
                   help="default: binary for a .bin suffix, else csv")

    s = sub.add_parser("solve", parents=[solver, par], help="solve every quote in a file")
    s.add_argument("-i", "--input", required=True, type=Path)
    s.add_argument("-o", "--output", type=Path, help="results file (default stdout)")
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--layer-mse", type=Path, metavar="CSV",
                   help="also write per-layer MSE against sigma_true")

    t = sub.add_parser("trace", parents=[solver], help="per-layer sigma for one quote")
    t.add_argument("--k", type=_finite, required=True, help="moneyness spot/strike")
    t.add_argument("--tau", type=_finite, required=True)
    t.add_argument("--r", type=_finite, default=0.0)
    what = t.add_mutually_exclusive_group(required=True)
    what.add_argument("--sigma", type=_finite, help="price the quote at this volatility")
    what.add_argument("--c", type=_finite, help="market price per unit spot")
    t.add_argument("--type", choices=["call", "put"], default="call")
    t.add_argument("--format", choices=["text", "json"], default="text")

    b = sub.add_parser("bench", parents=[par], help="time batch paths against the scalar reference")
    b.add_argument("--sizes", type=_sizes, default=[10_000, 100_000, 1_000_000])
    b.add_argument("--reps", type=_reps, default=100,
                   help="timed repetitions per cell (>= 2, for a standard deviation)")
    b.add_argument("--warmup", type=_nonneg_int, default=3)
    b.add_argument("--depth", type=_nonneg_int, default=8)
    b.add_argument("--precision", choices=["single", "double"], default="single")
    b.add_argument("--seed", type=_seed, default=42)
    b.add_argument("--backends", type=_backends, default=None,
                   help="comma-separated batch backends to time (default: active backend)")
    b.add_argument("--no-reference", action="store_true", help="skip the scalar reference loop")
    b.add_argument("--format", choices=["text", "json", "csv"], default="text")
    b.add_argument("-o", "--output", type=Path)

    v = sub.add_parser("verify", help="run the golden-value checks")
    v.add_argument("-n", type=_positive_int, default=1_000_000, help="dataset size for the error-bound checks")
    v.add_argument("--seed", type=_seed, default=2024)
    v.add_argument("--backend", choices=list(kernels.available_backends()))
    return p


# -- solve input -------------------------------------------------------------------------------


def _float_columns(header, rows, names) -> dict[str, np.ndarray]:
    idx = {h: j for j, h in enumerate(header)}
    out = {}
    for name in names:
        j = idx[name]
        if isinstance(rows, np.ndarray):
            out[name] = np.ascontiguousarray(rows[:, j])
            continue
        col = np.empty(len(rows))
        for i, (lineno, row) in enumerate(rows):
            try:
                col[i] = float(row[j])
            except ValueError:
                raise DatasetFormatError(f"not a number: {row[j]!r}", line=lineno, column=name) from None
        out[name] = col
    return out


def _type_column(header, rows, n) -> np.ndarray | bool:
    name = next((t for t in TYPE_COLUMNS if t in header), None)
    if name is None:
        return True
    if isinstance(rows, np.ndarray):
        raise DatasetFormatError("option type must be 'call' or 'put'", column=name)
    j = header.index(name)
    out = np.empty(n, dtype=np.bool_)
    for i, (lineno, row) in enumerate(rows):
        try:
            out[i] = OptionType.parse(row[j]).is_call
        except InvalidInput:
            raise DatasetFormatError(f"option type must be call or put, got {row[j]!r}",
                                     line=lineno, column=name) from None
    return out


def _peek_header(path: Path) -> tuple[str, ...]:
    with open(path, newline="") as f:
        for line in f:
            if line.strip() and not line.startswith("#"):
                return tuple(h.strip() for h in line.split(","))
    return ()


def load_quotes(path: Path) -> tuple[QuoteBatch, np.ndarray | None]:
    """Quotes and optional ground truth from a dataset, normalized or raw quote file."""
    if not path.exists():
        raise InputError(f"{path}: no such file")
    if is_binary(path) or _peek_header(path) == COLUMNS:
        ds = read_dataset(path)
        return QuoteBatch.from_dataset(ds), ds.sigma_true
    _, header, rows, first = read_table(path)
    n = len(rows)
    if n == 0:
        raise InputError(f"{path}: no data rows")
    cols = set(header)
    truth_names = ("sigma_true",) if "sigma_true" in cols else ()
    call = _type_column(header, rows, n)
    if set(NORMALIZED) <= cols:
        c = _float_columns(header, rows, NORMALIZED + truth_names)
        batch = QuoteBatch(c["k"], c["r"], c["tau"], c["c_mkt"], call)
    elif set(RAW) <= cols:
        c = _float_columns(header, rows, RAW + truth_names)
        spot, strike = c["spot"], c["strike"]
        with np.errstate(all="ignore"):
            k = spot / strike
            price = c["price"] / spot
        # Nonpositive spot or strike is an invalid quote, not a parse error.
        bad = (spot <= 0) | (strike <= 0)
        k[bad], price[bad] = 0.0, 0.0
        batch = QuoteBatch(k, c["rate"], c["tau"], price, call)
    else:
        raise DatasetFormatError(
            f"unrecognized header {','.join(header)}; expected {','.join(COLUMNS)}, "
            f"{','.join(NORMALIZED)} or {','.join(RAW)}", line=first - 1)
    return batch, (c["sigma_true"] if truth_names else None)


def _num(x: float) -> float | None:
    return None if math.isnan(x) else float(x)


def _write_results(out, stream, fmt: str, report) -> None:
    labels = [SolveStatus(int(s)).label for s in range(5)]
    if fmt == "json":
        doc = {
            "columns": ["sigma_pred", "status", "residual"],
            "sigma_pred": [_num(x) for x in out.sigma_pred.tolist()],
            "status": [labels[s] for s in out.status.tolist()],
            "residual": [_num(x) for x in out.residual.tolist()],
            "status_counts": out.status_counts(),
            "errors": None if report is None else report.to_dict(),
        }
        json.dump(doc, stream, allow_nan=False)
        stream.write("\n")
        return
    stream.write("sigma_pred,status,residual\n")
    stream.writelines(
        f"{s!r},{labels[st]},{r!r}\n"
        for s, st, r in zip(out.sigma_pred.tolist(), out.status.tolist(), out.residual.tolist()))


# -- commands ----------------------------------------------------------------------------------


def cmd_generate(args) -> int:
    ds = generate(GenSpec(args.n, args.seed, r=args.r))
    write_dataset(args.output, ds, args.format)
    print(f"wrote {len(ds)} rows (seed={args.seed}) to {args.output}")
    return EXIT_OK


def cmd_solve(args) -> int:
    batch, truth = load_quotes(args.input)
    want_layers = args.layer_mse is not None
    if want_layers and truth is None:
        raise InputError("--layer-mse needs a sigma_true column in the input")
    cfg = SolverConfig(depth=args.depth, precision=args.precision, collect_trace=want_layers)
    out = solve_batch(batch, cfg, workers=args.workers)
    report = None
    if truth is not None:
        ok = out.status < SolveStatus.INVALID_PRICE
        if ok.any():
            report = compute_errors(out.sigma_pred[ok], truth[ok], cfg.precision)
            if want_layers:
                report.per_layer_mse = per_layer_mse(out.trace[:, ok], truth[ok])
    if args.output:
        with open(args.output, "w", newline="") as f:
            _write_results(out, f, args.format, report)
        summary = sys.stdout
    else:
        _write_results(out, sys.stdout, args.format, report)
        summary = sys.stderr
    counts = " ".join(f"{k}={v}" for k, v in out.status_counts().items())
    print(f"solved {len(out)} quotes: {counts}", file=summary)
    if report is not None:
        print(report, file=summary)
    if want_layers:
        with open(args.layer_mse, "w", newline="") as f:
            f.write("layer,mse\n")
            f.writelines(f"{n},{v!r}\n" for n, v in enumerate(report.per_layer_mse.tolist()))
    return EXIT_OK


def cmd_trace(args) -> int:
    if not (args.k > 0 and args.tau > 0):
        raise _Usage("--k and --tau must be > 0")
    m = MarketInputs(args.k, args.r, args.tau, args.type)
    if args.sigma is not None:
        if not args.sigma > 0:
            raise _Usage("--sigma must be > 0")
        c = quote_from_sigma(m, args.sigma, args.precision)
    else:
        c = args.c
    cfg = SolverConfig(depth=args.depth, precision=args.precision, collect_trace=True)
    res = solve_one(m, c, cfg)
    if res.status >= SolveStatus.INVALID_PRICE:
        lo, hi = price_bounds(m, args.precision)
        print(f"error: {res.status.label}: c_mkt={c!r} is outside ({lo!r}, {hi!r})"
              if res.status is SolveStatus.INVALID_PRICE else f"error: {res.status.label}",
              file=sys.stderr)
        return EXIT_FAIL
    if args.format == "json":
        json.dump({"k": args.k, "r": args.r, "tau": args.tau, "c_mkt": c, "type": args.type,
                   "precision": args.precision, "trace": res.trace, "sigma_pred": res.sigma_pred,
                   "status": res.status.label, "residual": res.residual}, sys.stdout)
        print()
        return EXIT_OK
    print(f"# k={args.k} r={args.r} tau={args.tau} c_mkt={c!r} precision={args.precision}")
    print("layer  sigma")
    for n, s in enumerate(res.trace):
        print(f"{n:>5}  {s:.14f}")
    print(f"# status={res.status.label} residual={res.residual:.3e}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = SolverConfig(depth=args.depth, precision=args.precision)

    def progress(cell):
        log.info("size=%d %s mean=%.3f ms std=%.3f ms", cell.size, cell.path, cell.mean_ms, cell.std_ms)

    rep = run_bench(args.sizes, args.reps, cfg, workers=args.workers, warmup=args.warmup,
                    seed=args.seed, backends=args.backends, reference=not args.no_reference,
                    progress=progress)
    if args.format == "json":
        text = rep.to_json()
    elif args.format == "csv":
        lines = ["size,path,mean_ms,std_ms,min_ms,repetitions"]
        lines += [f"{c.size},{c.path},{c.mean_ms!r},{c.std_ms!r},{c.min_ms!r},{c.repetitions}"
                  for c in rep.cells]
        text = "\n".join(lines)
    else:
        text = rep.to_text()
    if args.output:
        args.output.write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    checks = run_checks(n=args.n, seed=args.seed, report=lambda c: print(c.line(), flush=True))
    failed = [c.name for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    if failed:
        print("failed: " + "; ".join(failed))
        return EXIT_FAIL
    return EXIT_OK


class _Usage(Exception):
    pass


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "trace": cmd_trace,
            "bench": cmd_bench, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on --help and on usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    backend = getattr(args, "backend", None)
    previous = kernels.backend_name()
    if backend:
        kernels.use_backend(backend)
    try:
        return COMMANDS[args.command](args)
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        print(f"nrvol {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, DatasetFormatError, InvalidInput, OSError) as exc:
        print(f"nrvol {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    finally:
        kernels.use_backend(previous)


if __name__ == "__main__":
    sys.exit(main())
