from __future__ import annotations

import numpy as np
import pytest

from mlgrid.grid import Grid, GridFunction, OrderClass, OrderFunction


def assert_rel_close(actual, expected, rtol: float) -> None:
    """Normwise relative check: ``max|actual - expected| <= rtol * max|expected|``."""
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    assert actual.shape == expected.shape
    scale = float(np.max(np.abs(expected))) if expected.size else 0.0
    err = float(np.max(np.abs(actual - expected))) if expected.size else 0.0
    assert err <= rtol * scale or err == 0.0, f"error {err:.3e} > {rtol:.1e} * {scale:.3e}"


def random_function(rng, grid: Grid) -> GridFunction:
    return GridFunction(grid, rng.uniform(-1.0, 1.0, grid.n + 1))


def random_order(rng, grid: Grid, clazz: OrderClass) -> OrderFunction:
    hi = 0.49 if clazz is OrderClass.DIFF else 0.99
    return OrderFunction(grid, rng.uniform(0.01, hi, grid.n + 1), clazz)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
