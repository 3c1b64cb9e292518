"""Synthetic call-option test sets with known implied volatility.

Sampling, per row::

    sigma ~ U[0.01, 0.5)
    tau   ~ U[0.01, 2)
    ln k  ~ U[-sigma^2 tau / 2 - w sigma sqrt(tau), -sigma^2 tau / 2 + w sigma sqrt(tau))    (w = 2)
    c_mkt = Black-Scholes call price per unit spot at (k, r, tau, sigma)

Random numbers come from Philox4x64-10 (numpy's ``Philox`` bit generator)
keyed directly with the 64-bit seed and a zero counter, so the stream does
not depend on numpy's seeding helpers. Row ``i`` consumes raw outputs
``3i, 3i+1, 3i+2`` for sigma, tau and the ln k position; a raw 64-bit word
``x`` becomes ``(x >> 11) * 2**-53`` in [0, 1).

File formats
------------
CSV::

    # seed=<u64> n=<n> r=<r>
    # sigma_range=<lo>:<hi> tau_range=<lo>:<hi> lnk_width=<w> prng=philox4x64-10
    sigma_true,tau,lnk,c_mkt
    <17 significant digits per value>

Binary: a 32-byte header (``b"NRVOLDS1"``, uint64 n, uint64 seed, float64 r)
followed by the four columns, each n little-endian float64, column-major.
The binary header carries only the default sampling ranges.
"""

from __future__ import annotations

import csv
import io
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bs_core
from .bs_core import MarketInputs

__all__ = [
    "GenSpec", "Dataset", "DatasetFormatError", "generate", "write_dataset", "read_dataset",
    "COLUMNS", "BINARY_MAGIC",
]

COLUMNS = ("sigma_true", "tau", "lnk", "c_mkt")
BINARY_MAGIC = b"NRVOLDS1"
_HEADER = struct.Struct("<8sQQd")
_PRNG = "philox4x64-10"


class DatasetFormatError(ValueError):
    """Malformed dataset file; ``line`` and ``column`` locate the problem when known."""

    def __init__(self, message: str, *, line: int | None = None, column: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class GenSpec:
    n: int
    seed: int = 0
    sigma_range: tuple[float, float] = (0.01, 0.5)
    tau_range: tuple[float, float] = (0.01, 2.0)
    r: float = 0.0
    lnk_width_multiplier: float = 2.0

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        for name in ("sigma_range", "tau_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo < hi and np.isfinite(hi)):
                raise ValueError(f"{name} must satisfy 0 < lo < hi, got {(lo, hi)}")
        if not (np.isfinite(self.r) and self.lnk_width_multiplier > 0):
            raise ValueError("r must be finite and lnk_width_multiplier > 0")

    @property
    def is_default_ranges(self) -> bool:
        d = GenSpec(1)
        return (tuple(self.sigma_range), tuple(self.tau_range), self.lnk_width_multiplier) == (
            d.sigma_range, d.tau_range, d.lnk_width_multiplier)


@dataclass
class Dataset:
    sigma_true: np.ndarray
    tau: np.ndarray
    lnk: np.ndarray
    c_mkt: np.ndarray
    spec: GenSpec = field(default_factory=lambda: GenSpec(1))

    def __post_init__(self):
        cols = {name: np.ascontiguousarray(getattr(self, name), dtype=np.float64) for name in COLUMNS}
        n = cols["sigma_true"].shape[0]
        for name, col in cols.items():
            if col.ndim != 1 or col.shape[0] != n:
                raise DatasetFormatError(f"has {col.shape[0] if col.ndim == 1 else col.shape} "
                                         f"entries, expected {n}", column=name)
            setattr(self, name, col)

    def __len__(self) -> int:
        return self.sigma_true.shape[0]

    @property
    def k(self) -> np.ndarray:
        return np.exp(self.lnk)

    def equals(self, other: "Dataset") -> bool:
        """Bit-for-bit equality of all columns and of the generation settings."""
        return self.spec == other.spec and all(
            np.array_equal(getattr(self, c).view(np.uint64), getattr(other, c).view(np.uint64))
            for c in COLUMNS)


def _uniform01(raw: np.ndarray) -> np.ndarray:
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _uniform(lo, hi, u):
    x = lo + (hi - lo) * u
    # a + (b - a) u can round up to b; keep the interval half-open.
    return np.minimum(x, np.nextafter(hi, lo))


def generate(spec: GenSpec) -> Dataset:
    n = int(spec.n)
    bitgen = np.random.Philox(key=int(spec.seed), counter=0)
    raw = bitgen.random_raw(3 * n).reshape(n, 3)
    u = _uniform01(raw)
    sigma = _uniform(spec.sigma_range[0], spec.sigma_range[1], u[:, 0])
    tau = _uniform(spec.tau_range[0], spec.tau_range[1], u[:, 1])
    centre = -0.5 * sigma * sigma * tau
    half = spec.lnk_width_multiplier * sigma * np.sqrt(tau)
    lnk = _uniform(centre - half, centre + half, u[:, 2])
    c = bs_core.price(MarketInputs(np.exp(lnk), spec.r, tau), sigma)
    return Dataset(sigma, tau, lnk, np.atleast_1d(c), spec)


# -- I/O -------------------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def _csv_header(spec: GenSpec) -> str:
    return (f"# seed={int(spec.seed)} n={int(spec.n)} r={_fmt(spec.r)}\n"
            f"# sigma_range={_fmt(spec.sigma_range[0])}:{_fmt(spec.sigma_range[1])} "
            f"tau_range={_fmt(spec.tau_range[0])}:{_fmt(spec.tau_range[1])} "
            f"lnk_width={_fmt(spec.lnk_width_multiplier)} prng={_PRNG}\n"
            + ",".join(COLUMNS) + "\n")


def write_dataset(path, ds: Dataset, format: str | None = None) -> None:
    """Write ``ds`` as CSV (default) or binary (``format="binary"`` or a ``.bin`` suffix)."""
    path = Path(path)
    format = format or ("binary" if path.suffix == ".bin" else "csv")
    if format == "binary":
        with open(path, "wb") as f:
            f.write(_HEADER.pack(BINARY_MAGIC, len(ds), int(ds.spec.seed), float(ds.spec.r)))
            for name in COLUMNS:
                f.write(getattr(ds, name).astype("<f8").tobytes())
        return
    if format != "csv":
        raise ValueError(f"unknown dataset format {format!r}")
    spec = ds.spec if ds.spec.n == len(ds) else GenSpec(len(ds), ds.spec.seed, ds.spec.sigma_range,
                                                        ds.spec.tau_range, ds.spec.r,
                                                        ds.spec.lnk_width_multiplier)
    with open(path, "w", newline="") as f:
        f.write(_csv_header(spec))
        np.savetxt(f, np.column_stack([getattr(ds, c) for c in COLUMNS]), fmt="%.17g", delimiter=",")


def _parse_comments(lines: list[str]) -> dict[str, str]:
    meta = {}
    for line in lines:
        for tok in line.lstrip("#").split():
            if "=" in tok:
                key, _, val = tok.partition("=")
                meta[key] = val
    return meta


def _spec_from_meta(meta: dict[str, str], n: int) -> GenSpec:
    def rng(key, default):
        if key not in meta:
            return default
        lo, _, hi = meta[key].partition(":")
        return (float(lo), float(hi))

    try:
        d = GenSpec(1)
        return GenSpec(n=n, seed=int(meta.get("seed", 0)),
                       sigma_range=rng("sigma_range", d.sigma_range),
                       tau_range=rng("tau_range", d.tau_range),
                       r=float(meta.get("r", 0.0)),
                       lnk_width_multiplier=float(meta.get("lnk_width", d.lnk_width_multiplier)))
    except ValueError as exc:
        raise DatasetFormatError(f"bad header: {exc}", line=1) from None


def read_table(path) -> tuple[dict[str, str], list[str], np.ndarray | list[list[str]], int]:
    """Read a comment-prefixed CSV. Returns ``(meta, header, rows, first_data_line)``.

    Rows come back as a float array when every cell is numeric, otherwise as
    lists of strings. Ragged rows raise :class:`DatasetFormatError`.
    """
    try:
        with open(path, newline="", encoding="utf-8") as f:
            text = f.read()
    except UnicodeDecodeError as exc:
        raise DatasetFormatError(f"not a text file or a known binary layout ({exc.reason})") from None
    lines = text.splitlines()
    comments, i = [], 0
    while i < len(lines) and (lines[i].startswith("#") or not lines[i].strip()):
        if lines[i].startswith("#"):
            comments.append(lines[i])
        i += 1
    if i == len(lines):
        raise DatasetFormatError("missing header line", line=i + 1)
    header = [h.strip() for h in lines[i].split(",")]
    first = i + 2
    body = "\n".join(lines[i + 1:])
    try:
        data = np.loadtxt(io.StringIO(body), delimiter=",", dtype=np.float64, ndmin=2,
                          comments="#")
        if data.shape[0] and data.shape[1] != len(header):
            raise ValueError("column count")
        return _parse_comments(comments), header, data.reshape(-1, len(header)), first
    except ValueError:
        pass
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(body)), start=first):
        if not row or row[0].startswith("#"):
            continue
        if len(row) < len(header):
            raise DatasetFormatError(f"expected {len(header)} fields, found {len(row)}",
                                     line=lineno, column=header[len(row)])
        if len(row) > len(header):
            raise DatasetFormatError(f"expected {len(header)} fields, found {len(row)}",
                                     line=lineno, column=f"<extra field {len(header) + 1}>")
        rows.append((lineno, [x.strip() for x in row]))
    return _parse_comments(comments), header, rows, first


def _read_csv(path) -> Dataset:
    meta, header, rows, first = read_table(path)
    if tuple(header) != COLUMNS:
        raise DatasetFormatError(f"header must be {','.join(COLUMNS)}, got {','.join(header)}",
                                 line=first - 1)
    if isinstance(rows, list):
        data = np.empty((len(rows), len(COLUMNS)))
        for j, (lineno, row) in enumerate(rows):
            for col, cell in enumerate(row):
                try:
                    data[j, col] = float(cell)
                except ValueError:
                    raise DatasetFormatError(f"not a number: {cell!r}", line=lineno,
                                             column=COLUMNS[col]) from None
    else:
        data = rows
    n = data.shape[0]
    if "n" in meta and int(meta["n"]) != n:
        raise DatasetFormatError(f"header declares n={meta['n']} but the file has {n} rows")
    return Dataset(*(data[:, j].copy() for j in range(len(COLUMNS))), spec=_spec_from_meta(meta, max(n, 1)))


def _read_binary(path) -> Dataset:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise DatasetFormatError("truncated binary header")
    magic, n, seed, r = _HEADER.unpack_from(blob)
    if magic != BINARY_MAGIC:
        raise DatasetFormatError(f"bad magic {magic!r}")
    body = memoryview(blob)[_HEADER.size:]
    cols = []
    for j, name in enumerate(COLUMNS):
        chunk = body[j * 8 * n:(j + 1) * 8 * n]
        if len(chunk) != 8 * n:
            raise DatasetFormatError(f"has {len(chunk) // 8} values, header declares n={n}", column=name)
        cols.append(np.frombuffer(chunk, dtype="<f8").astype(np.float64))
    if len(body) != 32 * n:
        raise DatasetFormatError(f"{len(body) - 32 * n} trailing bytes after the last column")
    return Dataset(*cols, spec=_spec_from_meta({"seed": str(seed), "r": repr(r)}, max(n, 1)))


def is_binary(path) -> bool:
    with open(path, "rb") as f:
        return f.read(len(BINARY_MAGIC)) == BINARY_MAGIC


def read_dataset(path) -> Dataset:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return _read_binary(path) if is_binary(path) else _read_csv(path)
