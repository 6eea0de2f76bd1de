"""Variable-order nabla fractional sums and differences with discrete
Mittag-Leffler kernels on isolated time scales."""

from mlgrid.errors import DomainError, NoConvergence
from mlgrid.grid import (
    Grid,
    GridFunction,
    Normalization,
    OrderClass,
    OrderFunction,
    b_of,
    delta,
    nabla,
    reverse,
)
from mlgrid.operators import (
    Family,
    KernelMatrix,
    OperatorSpec,
    Side,
    Variant,
    ab_sum,
    abc_diff,
    abr_diff,
    apply,
    frac_sum,
    gen_integral,
    kernel_matrix,
)
from mlgrid.special import MLParams, SeriesControl, ml, ml_ab, rising

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "Family",
    "Grid",
    "GridFunction",
    "KernelMatrix",
    "MLParams",
    "NoConvergence",
    "Normalization",
    "OperatorSpec",
    "OrderClass",
    "OrderFunction",
    "SeriesControl",
    "Side",
    "Variant",
    "ab_sum",
    "abc_diff",
    "abr_diff",
    "apply",
    "b_of",
    "delta",
    "frac_sum",
    "gen_integral",
    "kernel_matrix",
    "ml",
    "ml_ab",
    "nabla",
    "reverse",
    "rising",
]
