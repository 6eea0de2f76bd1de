"""Variable-order nabla fractional operators on ``N_{a,b}``.

Five families are provided, each with a left and a right version:

* :func:`frac_sum` -- fractional sums with rising-factorial kernels,
* :func:`gen_integral` -- generalized fractional integrals with the
  Mittag-Leffler kernel ``E(-alpha / (1 - alpha), lag)``,
* :func:`ab_sum` -- Atangana-Baleanu fractional sums,
* :func:`abr_diff` and :func:`abc_diff` -- Riemann-Liouville and Caputo type
  AB fractional differences.

The variable order is sampled at the evaluation point (``TYPE_I``), at the
summation index (``TYPE_II``) or at the lag ``|t - s|`` (``CONVOLUTION``).

Output domains: left operators are evaluated on offsets ``1..n`` and right
operators on ``0..n-1``. Generalized integrals additionally report the empty
sum (exactly zero) at offset ``0`` (left) or ``n`` (right), which is what the
differences of the RL type consume at the first interior point.

Every operator can be applied either by direct summation or through its
precomputed :func:`kernel_matrix`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from mlgrid.errors import DomainError
from mlgrid.grid import (
    Grid,
    GridFunction,
    Normalization,
    OrderClass,
    OrderFunction,
    b_of,
    delta,
    nabla,
)
from mlgrid.special import DEFAULT_CONTROL, SeriesControl, ml_ab_table, rising_kernel_table


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


class Family(enum.Enum):
    FRAC_SUM = "frac_sum"
    GEN_INTEGRAL = "gen_integral"
    AB_SUM = "ab_sum"
    ABR_DIFF = "abr_diff"
    ABC_DIFF = "abc_diff"

    @property
    def uses_ml_kernel(self) -> bool:
        return self in (Family.GEN_INTEGRAL, Family.ABR_DIFF, Family.ABC_DIFF)


class Variant(enum.Enum):
    TYPE_I = "I"
    TYPE_II = "II"
    CONVOLUTION = "convolution"


_ALLOWED_CLASSES = {
    Family.FRAC_SUM: (OrderClass.SUM,),
    Family.AB_SUM: (OrderClass.SUM, OrderClass.CLOSED),
    Family.GEN_INTEGRAL: (OrderClass.DIFF,),
    Family.ABR_DIFF: (OrderClass.DIFF,),
    Family.ABC_DIFF: (OrderClass.DIFF,),
}


@dataclass(frozen=True)
class OperatorSpec:
    side: Side
    family: Family
    variant: Variant
    order: OrderFunction
    norm: Normalization = Normalization.UNIT
    ctrl: SeriesControl = DEFAULT_CONTROL
    ml_method: str = "recurrence"

    def __post_init__(self) -> None:
        if self.ml_method not in ("recurrence", "series"):
            raise ValueError(f"unknown Mittag-Leffler method: {self.ml_method!r}")
        allowed = _ALLOWED_CLASSES[self.family]
        if self.order.clazz not in allowed:
            names = " or ".join(c.name for c in allowed)
            raise DomainError(
                f"{self.family.value} needs an order of class {names}, "
                f"got {self.order.clazz.name}"
            )

    @property
    def grid(self) -> Grid:
        return self.order.grid

    def replace(self, **kwargs) -> OperatorSpec:
        fields = {
            "side": self.side,
            "family": self.family,
            "variant": self.variant,
            "order": self.order,
            "norm": self.norm,
            "ctrl": self.ctrl,
            "ml_method": self.ml_method,
        }
        fields.update(kwargs)
        return OperatorSpec(**fields)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Dense ``(n + 1) x (n + 1)`` matrix of an operator, indexed by offsets.

    ``entries[t, s]`` is the weight of ``f(a + s)`` in the output at
    ``a + t``. Rows outside ``out_lo..out_hi`` and columns outside
    ``in_lo..in_hi`` are zero.
    """

    entries: np.ndarray = field(repr=False)
    side: Side
    out_lo: int
    out_hi: int
    in_lo: int
    in_hi: int

    def apply(self, f: GridFunction) -> GridFunction:
        n = f.grid.n
        if self.entries.shape != (n + 1, n + 1):
            raise DomainError("kernel matrix and function live on different grids")
        f.require(self.in_lo, self.in_hi)
        values = self.entries @ f.zero_filled()
        return GridFunction(f.grid, values, self.out_lo, self.out_hi)


# {{{ kernels


def _ml_prefactor(alpha: float, norm: Normalization) -> float:
    return b_of(alpha, norm) / (1.0 - alpha)


def _kernel_value(spec: OperatorSpec, alpha: float, lag: int) -> float:
    """Weight of one summand at the given sampled order and integer lag >= 1."""
    n = spec.grid.n
    if spec.family is Family.FRAC_SUM:
        return float(rising_kernel_table(alpha, n)[lag - 1])
    if spec.family is Family.AB_SUM:
        return alpha / b_of(alpha, spec.norm) * float(rising_kernel_table(alpha, n)[lag - 1])
    table = ml_ab_table(alpha, n, spec.ctrl, spec.ml_method)
    return _ml_prefactor(alpha, spec.norm) * float(table[lag - 1])


def _sampled_order(spec: OperatorSpec, t: int, s: int) -> float:
    if spec.variant is Variant.TYPE_I:
        return spec.order[t]
    if spec.variant is Variant.TYPE_II:
        return spec.order[s]
    return spec.order[abs(t - s)]


def _check_grid(spec: OperatorSpec, f: GridFunction) -> None:
    if f.grid != spec.grid:
        raise DomainError(
            f"function grid {f.grid} differs from the order's grid {spec.grid}"
        )


def _integral_part(spec: OperatorSpec, f: GridFunction) -> np.ndarray:
    """Direct evaluation of the convolution-like sum shared by all families.

    Left: sum over ``s = 1..t`` with lag ``t - s + 1``.
    Right: sum over ``s = t..n-1`` with lag ``s - t + 1``.
    """
    _check_grid(spec, f)
    n = spec.grid.n
    out = np.zeros(n + 1)
    if spec.side is Side.LEFT:
        f.require(1, n)
        for t in range(1, n + 1):
            acc = 0.0
            for s in range(1, t + 1):
                alpha = _sampled_order(spec, t, s)
                acc += _kernel_value(spec, alpha, t - s + 1) * f.values[s]
            out[t] = acc
    else:
        f.require(0, n - 1)
        for t in range(n):
            acc = 0.0
            for s in range(t, n):
                alpha = _sampled_order(spec, t, s)
                acc += _kernel_value(spec, alpha, s - t + 1) * f.values[s]
            out[t] = acc
    return out


def _output_range(spec: OperatorSpec) -> tuple[int, int]:
    n = spec.grid.n
    if spec.family is Family.GEN_INTEGRAL:
        return 0, n
    return (1, n) if spec.side is Side.LEFT else (0, n - 1)


def _require_family(spec: OperatorSpec, family: Family) -> None:
    if spec.family is not family:
        raise DomainError(f"expected a {family.value} spec, got {spec.family.value}")


# }}}


# {{{ direct summation


def frac_sum(spec: OperatorSpec, f: GridFunction) -> GridFunction:
    """Variable-order nabla fractional sum (types I, II or convolution)."""
    _require_family(spec, Family.FRAC_SUM)
    lo, hi = _output_range(spec)
    return GridFunction(spec.grid, _integral_part(spec, f), lo, hi)


def gen_integral(spec: OperatorSpec, f: GridFunction) -> GridFunction:
    """Discrete generalized fractional integral with Mittag-Leffler kernel.

    The result is supported on the whole grid; the value at the empty-sum
    endpoint (offset ``0`` on the left, ``n`` on the right) is exactly zero.
    """
    _require_family(spec, Family.GEN_INTEGRAL)
    return GridFunction(spec.grid, _integral_part(spec, f), 0, spec.grid.n)


def ab_sum(spec: OperatorSpec, f: GridFunction) -> GridFunction:
    """Atangana-Baleanu fractional sum.

    ``(1 - alpha(t)) / B(alpha(t)) * f(t)`` plus the fractional sum of
    ``alpha f / B(alpha)``, with the order in the second part sampled
    according to ``spec.variant``.
    """
    _require_family(spec, Family.AB_SUM)
    integral = _integral_part(spec, f)
    lo, hi = _output_range(spec)
    out = np.full(spec.grid.n + 1, np.nan)
    for t in range(lo, hi + 1):
        alpha = spec.order[t]
        out[t] = (1.0 - alpha) / b_of(alpha, spec.norm) * f.values[t] + integral[t]
    return GridFunction(spec.grid, out, lo, hi)


def abr_diff(spec: OperatorSpec, f: GridFunction) -> GridFunction:
    """Riemann-Liouville type AB difference.

    Left: backward difference of the left generalized integral.
    Right: minus the forward difference of the right generalized integral.
    """
    _require_family(spec, Family.ABR_DIFF)
    integral = gen_integral(spec.replace(family=Family.GEN_INTEGRAL), f)
    if spec.side is Side.LEFT:
        return nabla(integral)
    return -delta(integral)


def abc_diff(spec: OperatorSpec, f: GridFunction) -> GridFunction:
    """Caputo type AB difference.

    Left: left generalized integral of the backward difference.
    Right: minus the right generalized integral of the forward difference.
    """
    _require_family(spec, Family.ABC_DIFF)
    _check_grid(spec, f)
    n = spec.grid.n
    inner = spec.replace(family=Family.GEN_INTEGRAL)
    if spec.side is Side.LEFT:
        return gen_integral(inner, nabla(f)).restrict(1, n)
    return (-gen_integral(inner, delta(f))).restrict(0, n - 1)


_DIRECT = {
    Family.FRAC_SUM: frac_sum,
    Family.GEN_INTEGRAL: gen_integral,
    Family.AB_SUM: ab_sum,
    Family.ABR_DIFF: abr_diff,
    Family.ABC_DIFF: abc_diff,
}


# }}}


# {{{ kernel matrices


def _integral_matrix(spec: OperatorSpec) -> np.ndarray:
    n = spec.grid.n
    alpha = spec.order.alpha
    t, s = np.indices((n + 1, n + 1))

    if spec.side is Side.LEFT:
        mask = (s >= 1) & (s <= t)
        lag = t - s + 1
    else:
        mask = (s >= t) & (s <= n - 1)
        lag = s - t + 1

    if spec.variant is Variant.TYPE_I:
        idx = t
    elif spec.variant is Variant.TYPE_II:
        idx = s
    else:
        idx = np.abs(t - s)

    # row k holds the prefactored kernel for order alpha[k] at lags 1..n
    if spec.family is Family.FRAC_SUM:
        table = np.stack([rising_kernel_table(float(x), n) for x in alpha])
    elif spec.family is Family.AB_SUM:
        table = np.stack(
            [x / b_of(x, spec.norm) * rising_kernel_table(x, n) for x in map(float, alpha)]
        )
    else:
        table = np.stack(
            [
                _ml_prefactor(x, spec.norm) * ml_ab_table(x, n, spec.ctrl, spec.ml_method)
                for x in map(float, alpha)
            ]
        )

    lag = np.clip(lag, 1, n)
    return np.where(mask, table[idx, lag - 1], 0.0)


def kernel_matrix(spec: OperatorSpec) -> KernelMatrix:
    """Assemble the operator as a triangular matrix acting on grid values."""
    n = spec.grid.n
    left = spec.side is Side.LEFT
    out_lo, out_hi = _output_range(spec)
    in_lo, in_hi = (1, n) if left else (0, n - 1)

    # backward / forward difference stencils, rows outside the range are zero
    back = np.eye(n + 1) - np.eye(n + 1, k=-1)
    back[0] = 0.0
    fwd = np.eye(n + 1, k=1) - np.eye(n + 1)
    fwd[n] = 0.0

    if spec.family in (Family.FRAC_SUM, Family.GEN_INTEGRAL):
        entries = _integral_matrix(spec)
    elif spec.family is Family.AB_SUM:
        entries = _integral_matrix(spec)
        local = np.array([(1.0 - x) / b_of(x, spec.norm) for x in map(float, spec.order.alpha)])
        rows = np.arange(out_lo, out_hi + 1)
        entries[rows, rows] += local[rows]
    elif spec.family is Family.ABR_DIFF:
        integral = _integral_matrix(spec)
        entries = back @ integral if left else -(fwd @ integral)
    else:
        integral = _integral_matrix(spec)
        entries = integral @ back if left else -(integral @ fwd)
        in_lo, in_hi = 0, n

    mask = np.zeros(n + 1, dtype=bool)
    mask[out_lo : out_hi + 1] = True
    entries[~mask] = 0.0
    entries.setflags(write=False)
    return KernelMatrix(entries, spec.side, out_lo, out_hi, in_lo, in_hi)


# }}}


def apply(spec: OperatorSpec, f: GridFunction, method: str = "direct") -> GridFunction:
    """Apply the operator described by *spec* to *f*.

    :arg method: ``"direct"`` evaluates the defining sums point by point,
        ``"matrix"`` multiplies by :func:`kernel_matrix`.
    """
    if method == "direct":
        return _DIRECT[spec.family](spec, f)
    if method == "matrix":
        _check_grid(spec, f)
        return kernel_matrix(spec).apply(f)
    raise ValueError(f"unknown method: {method!r}")
