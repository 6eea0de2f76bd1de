"""Isolated time scale ``N_{a,b}``, functions sampled on it, and variable orders.

Points are stored as a real base point ``a`` plus integer offsets
``0..n``, so backward and forward jumps and every kernel lag are exact
integers. A :class:`GridFunction` carries an explicit support interval;
reading outside it raises instead of returning zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mlgrid.errors import DomainError


@dataclass(frozen=True)
class Grid:
    """The set ``{a, a + 1, ..., a + n}``."""

    a: float
    n: int

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"grid needs n >= 2 (one interior point): n={self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "a", float(self.a))

    @property
    def b(self) -> float:
        return self.a + self.n

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(self.n + 1)

    @property
    def points(self) -> np.ndarray:
        return self.a + self.offsets

    def point(self, k: int) -> float:
        if not 0 <= k <= self.n:
            raise DomainError(f"offset {k} outside grid [0, {self.n}]")
        return self.a + k

    def offset(self, t: float) -> int:
        """Offset of the point *t*; fails if *t* is not on the grid."""
        k = t - self.a
        if not float(k).is_integer() or not 0 <= k <= self.n:
            raise DomainError(f"{t} is not a point of N_({self.a}, {self.b})")
        return int(k)

    def rho(self, t: float) -> float:
        return self.point(self.offset(t) - 1)

    def sigma(self, t: float) -> float:
        return self.point(self.offset(t) + 1)

    def truncate(self, n: int) -> Grid:
        """The grid ``N_{a, a+n}`` sharing this base point."""
        return Grid(self.a, n)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real values on the offsets ``lo..hi`` of a grid.

    ``values`` always has length ``n + 1``; entries outside the support are
    NaN and :meth:`at` refuses to read them.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)
    lo: int = 0
    hi: int = -1

    def __post_init__(self) -> None:
        n = self.grid.n
        hi = n if self.hi == -1 else self.hi
        if not 0 <= self.lo <= hi <= n:
            raise DomainError(f"invalid support [{self.lo}, {hi}] on grid of size {n}")

        values = np.array(self.values, dtype=np.float64)
        if values.shape != (n + 1,):
            raise DomainError(f"expected {n + 1} values, got shape {values.shape}")
        values[: self.lo] = np.nan
        values[hi + 1 :] = np.nan
        values.setflags(write=False)

        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_support(
        cls, grid: Grid, values: Sequence[float] | np.ndarray, lo: int = 0
    ) -> GridFunction:
        """Build from the values on ``lo..lo + len(values) - 1`` only."""
        values = np.asarray(values, dtype=np.float64)
        full = np.full(grid.n + 1, np.nan)
        hi = lo + values.size - 1
        if values.size == 0 or lo < 0 or hi > grid.n:
            raise DomainError(f"{values.size} values at offset {lo} do not fit the grid")
        full[lo : hi + 1] = values
        return cls(grid, full, lo, hi)

    @classmethod
    def from_callable(cls, grid: Grid, func, lo: int = 0, hi: int = -1) -> GridFunction:
        hi = grid.n if hi == -1 else hi
        vals = [func(grid.point(k)) for k in range(lo, hi + 1)]
        return cls.from_support(grid, vals, lo)

    @property
    def support(self) -> tuple[int, int]:
        return self.lo, self.hi

    @property
    def defined(self) -> np.ndarray:
        """Values on the support, as a read-only view."""
        return self.values[self.lo : self.hi + 1]

    def covers(self, lo: int, hi: int) -> bool:
        return self.lo <= lo and hi <= self.hi

    def require(self, lo: int, hi: int, what: str = "operator") -> None:
        if not self.covers(lo, hi):
            raise DomainError(
                f"{what} needs values on offsets [{lo}, {hi}], "
                f"function is supported on [{self.lo}, {self.hi}]"
            )

    def at(self, k: int) -> float:
        """Value at offset *k*."""
        if not self.lo <= k <= self.hi:
            raise DomainError(f"offset {k} outside support [{self.lo}, {self.hi}]")
        return float(self.values[k])

    def __call__(self, t: float) -> float:
        return self.at(self.grid.offset(t))

    def zero_filled(self) -> np.ndarray:
        """Copy of the values with zeros outside the support."""
        return np.nan_to_num(self.values, nan=0.0)

    def restrict(self, lo: int, hi: int) -> GridFunction:
        self.require(lo, hi, "restriction")
        return GridFunction.from_support(self.grid, self.values[lo : hi + 1], lo)

    def on_grid(self, grid: Grid) -> GridFunction:
        """Re-home onto another grid with the same base point (shorter or longer)."""
        if grid.a != self.grid.a:
            raise DomainError("grids have different base points")
        hi = min(self.hi, grid.n)
        return GridFunction.from_support(grid, self.values[self.lo : hi + 1], self.lo)

    def __add__(self, other: GridFunction) -> GridFunction:
        return self._combine(other, np.add)

    def __sub__(self, other: GridFunction) -> GridFunction:
        return self._combine(other, np.subtract)

    def __neg__(self) -> GridFunction:
        return GridFunction(self.grid, -self.values, self.lo, self.hi)

    def __mul__(self, c: float) -> GridFunction:
        return GridFunction(self.grid, c * self.values, self.lo, self.hi)

    __rmul__ = __mul__

    def _combine(self, other: GridFunction, op) -> GridFunction:
        if other.grid != self.grid:
            raise DomainError("grid functions live on different grids")
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            raise DomainError("grid functions have disjoint supports")
        return GridFunction(self.grid, op(self.values, other.values), lo, hi)

    def __repr__(self) -> str:
        return (
            f"GridFunction(a={self.grid.a}, n={self.grid.n}, "
            f"support=[{self.lo}, {self.hi}], values={self.defined.tolist()})"
        )


def nabla(f: GridFunction) -> GridFunction:
    """Backward difference ``f(t) - f(t - 1)``; support shrinks on the left."""
    if f.hi - f.lo < 1:
        raise DomainError("backward difference needs two consecutive points")
    out = np.full_like(f.values, np.nan)
    out[f.lo + 1 : f.hi + 1] = np.diff(f.defined)
    return GridFunction(f.grid, out, f.lo + 1, f.hi)


def delta(f: GridFunction) -> GridFunction:
    """Forward difference ``f(t + 1) - f(t)``; support shrinks on the right."""
    if f.hi - f.lo < 1:
        raise DomainError("forward difference needs two consecutive points")
    out = np.full_like(f.values, np.nan)
    out[f.lo : f.hi] = np.diff(f.defined)
    return GridFunction(f.grid, out, f.lo, f.hi - 1)


def reverse(f: GridFunction) -> GridFunction:
    """Time reversal ``t -> a + b - t``."""
    n = f.grid.n
    return GridFunction(f.grid, f.values[::-1], n - f.hi, n - f.lo)


class OrderClass(enum.Enum):
    """Admissible range of a variable order.

    ``SUM`` is ``(0, 1]`` (fractional and AB sums), ``DIFF`` is ``(0, 1/2)``
    (generalized integrals and AB differences). ``CLOSED`` is ``[0, 1]`` and
    is accepted by the AB sums only, where both endpoints have finite limits.
    """

    SUM = "sum"
    DIFF = "diff"
    CLOSED = "closed"

    def contains(self, alpha: np.ndarray) -> np.ndarray:
        if self is OrderClass.SUM:
            return (alpha > 0) & (alpha <= 1)
        if self is OrderClass.DIFF:
            return (alpha > 0) & (alpha < 0.5)
        return (alpha >= 0) & (alpha <= 1)

    @property
    def interval(self) -> str:
        return {"sum": "(0, 1]", "diff": "(0, 1/2)", "closed": "[0, 1]"}[self.value]


@dataclass(frozen=True, eq=False)
class OrderFunction:
    """Variable order ``alpha(t)`` sampled at every grid offset."""

    grid: Grid
    alpha: np.ndarray = field(repr=False)
    clazz: OrderClass = OrderClass.SUM

    def __post_init__(self) -> None:
        alpha = np.array(self.alpha, dtype=np.float64)
        if alpha.shape != (self.grid.n + 1,):
            raise DomainError(
                f"order needs {self.grid.n + 1} values, got shape {alpha.shape}"
            )
        ok = self.clazz.contains(alpha)
        if not np.all(ok):
            k = int(np.argmin(ok))
            raise DomainError(
                f"order alpha={alpha[k]} at offset {k} outside {self.clazz.name} "
                f"range {self.clazz.interval}"
            )
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def constant(cls, grid: Grid, value: float, clazz: OrderClass = OrderClass.SUM):
        return cls(grid, np.full(grid.n + 1, float(value)), clazz)

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.alpha == self.alpha[0]))

    def __getitem__(self, k: int) -> float:
        return float(self.alpha[k])

    def reversed(self) -> OrderFunction:
        return OrderFunction(self.grid, self.alpha[::-1], self.clazz)

    def on_grid(self, grid: Grid) -> OrderFunction:
        """Restrict to a shorter grid with the same base point."""
        if grid.a != self.grid.a or grid.n > self.grid.n:
            raise DomainError("order function does not cover the requested grid")
        return OrderFunction(grid, self.alpha[: grid.n + 1], self.clazz)

    def __repr__(self) -> str:
        return (
            f"OrderFunction(a={self.grid.a}, n={self.grid.n}, "
            f"clazz={self.clazz.name}, alpha={self.alpha.tolist()})"
        )


class Normalization(enum.Enum):
    """Choice of the positive normalization ``B(alpha)`` of the AB operators.

    ``UNIT`` is ``B = 1``; ``AB`` is ``1 - alpha + alpha / Gamma(alpha)``.
    Both satisfy ``B(0) = B(1) = 1``.
    """

    UNIT = "unit"
    AB = "ab"

    def __call__(self, alpha: float) -> float:
        return b_of(alpha, self)


def b_of(alpha: float, norm: Normalization) -> float:
    if not 0 <= alpha <= 1:
        raise DomainError(f"normalization defined on [0, 1]: {alpha}")
    if norm is Normalization.UNIT:
        return 1.0
    # alpha / Gamma(alpha) == alpha**2 / Gamma(alpha + 1), finite at zero
    return 1.0 - alpha + alpha * alpha / math.gamma(alpha + 1.0)
