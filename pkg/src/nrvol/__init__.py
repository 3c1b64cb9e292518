"""Batch implied volatility by fixed-depth Newton-Raphson.

Quotes are normalized to unit spot and solved column-wise by a stack of
identical Newton-Raphson layers that starts at the vomma-zero volatility.
The hot loops are numba kernels with a pure-numpy fallback; set
``NRVOL_BACKEND=numpy`` or call :func:`nrvol.kernels.use_backend` to switch.
"""

from . import kernels
from .batch_engine import (
    BatchOutcome,
    QuoteBatch,
    cast_precision,
    solve_batch,
    solve_batch_layerwise,
)
from .bench import BenchReport, run_bench
from .bs_core import (
    MarketInputs,
    OptionType,
    d1_d2,
    norm_cdf,
    norm_pdf,
    normalize_quote,
    price,
    price_bounds,
    vega,
    vomma,
)
from .datagen import Dataset, GenSpec, generate, read_dataset, write_dataset
from .metrics import ErrorReport, compute_errors, per_layer_mse
from .nr_solver import (
    SolveOutcome,
    SolverConfig,
    SolveStatus,
    initial_sigma,
    nru_step,
    quote_from_sigma,
    solve_one,
)
from .precision import Precision
from .reference import reference_solve

__version__ = "0.1.0"

__all__ = [
    "kernels", "Precision",
    "OptionType", "MarketInputs", "norm_cdf", "norm_pdf", "d1_d2", "price", "vega", "vomma",
    "price_bounds", "normalize_quote",
    "SolverConfig", "SolveStatus", "SolveOutcome", "initial_sigma", "nru_step", "solve_one",
    "quote_from_sigma",
    "QuoteBatch", "BatchOutcome", "solve_batch", "solve_batch_layerwise", "cast_precision",
    "GenSpec", "Dataset", "generate", "read_dataset", "write_dataset",
    "ErrorReport", "compute_errors", "per_layer_mse", "reference_solve",
    "BenchReport", "run_bench",
]
