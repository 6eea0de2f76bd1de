from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import assert_rel_close, random_function, random_order
from mlgrid.errors import DomainError
from mlgrid.grid import (
    Grid,
    GridFunction,
    Normalization,
    OrderClass,
    OrderFunction,
    reverse,
)
from mlgrid.operators import (
    Family,
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

L, R = Side.LEFT, Side.RIGHT
I, II, CONV = Variant.TYPE_I, Variant.TYPE_II, Variant.CONVOLUTION

SUM_FAMILIES = (Family.FRAC_SUM, Family.AB_SUM)
DIFF_FAMILIES = (Family.GEN_INTEGRAL, Family.ABR_DIFF, Family.ABC_DIFF)
ALL_FAMILIES = SUM_FAMILIES + DIFF_FAMILIES


def clazz_of(family: Family) -> OrderClass:
    return OrderClass.SUM if family in SUM_FAMILIES else OrderClass.DIFF


def full(grid: Grid, func) -> GridFunction:
    return GridFunction.from_callable(grid, func)


# {{{ examples


def test_frac_sum_unit_order_is_running_sum(rng):
    g = Grid(0, 7)
    f = random_function(rng, g)
    spec = OperatorSpec(L, Family.FRAC_SUM, I, OrderFunction.constant(g, 1.0))
    out = frac_sum(spec, f)
    assert out.support == (1, 7)
    assert_rel_close(out.defined, np.cumsum(f.values[1:]), 1e-15)


def test_frac_sum_first_point_is_f(rng):
    g = Grid(2.0, 5)
    f = random_function(rng, g)
    for variant in (I, II, CONV):
        spec = OperatorSpec(L, Family.FRAC_SUM, variant, random_order(rng, g, OrderClass.SUM))
        assert frac_sum(spec, f).at(1) == pytest.approx(f.at(1), rel=1e-14)


def test_frac_sum_oracle_value():
    g = Grid(0, 4)
    f = full(g, float)
    spec = OperatorSpec(L, Family.FRAC_SUM, I, OrderFunction.constant(g, 0.3))
    # mpmath at 40 digits: 3.7949999999999999999...
    assert frac_sum(spec, f).at(3) == pytest.approx(3.795, rel=1e-14)
    ref = oracles.left_frac_sum(f.values, [0.3] * 5, 3)
    assert float(ref) == pytest.approx(3.795, rel=1e-15)


def test_gen_integral_first_point_and_empty_sum(rng):
    g = Grid(0, 6)
    f = random_function(rng, g)
    order = random_order(rng, g, OrderClass.DIFF)
    left = gen_integral(OperatorSpec(L, Family.GEN_INTEGRAL, I, order), f)
    right = gen_integral(OperatorSpec(R, Family.GEN_INTEGRAL, I, order), f)
    assert left.support == right.support == (0, 6)
    assert left.at(0) == 0.0
    assert right.at(6) == 0.0
    assert left.at(1) == pytest.approx(f.at(1), rel=1e-14)
    assert right.at(5) == pytest.approx(f.at(5), rel=1e-14)


def test_gen_integral_of_zero():
    g = Grid(0, 5)
    order = OrderFunction.constant(g, 0.2, OrderClass.DIFF)
    for side, variant in itertools.product((L, R), (I, II, CONV)):
        out = gen_integral(OperatorSpec(side, Family.GEN_INTEGRAL, variant, order), full(g, lambda t: 0.0))
        np.testing.assert_array_equal(out.defined, 0.0)


def test_ab_sum_oracle_value():
    g = Grid(0, 4)
    spec = OperatorSpec(L, Family.AB_SUM, I, OrderFunction.constant(g, 0.5))
    out = ab_sum(spec, full(g, lambda t: 1.0))
    expected = 0.5 + 0.5 * (1 + math.gamma(1.5) / math.gamma(2) / math.gamma(0.5))
    assert expected == 1.25
    assert out.at(2) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("norm", list(Normalization))
@pytest.mark.parametrize("side", [L, R])
@pytest.mark.parametrize("variant", [I, II, CONV])
def test_ab_sum_recovery_limits(rng, norm, side, variant):
    g = Grid(-1.0, 9)
    f = random_function(rng, g)
    zero = OperatorSpec(side, Family.AB_SUM, variant, OrderFunction.constant(g, 0.0, OrderClass.CLOSED), norm)
    out = ab_sum(zero, f)
    np.testing.assert_array_equal(out.defined, f.values[out.lo : out.hi + 1])

    one = OperatorSpec(side, Family.AB_SUM, variant, OrderFunction.constant(g, 1.0), norm)
    out = ab_sum(one, f)
    if side is L:
        expected = np.cumsum(f.values[1:])
    else:
        expected = np.cumsum(f.values[:-1][::-1])[::-1]
    assert_rel_close(out.defined, expected, 1e-14)


def test_abr_left_first_point(rng):
    g = Grid(0, 5)
    f = random_function(rng, g)
    spec = OperatorSpec(L, Family.ABR_DIFF, I, random_order(rng, g, OrderClass.DIFF))
    assert abr_diff(spec, f).at(1) == pytest.approx(f.at(1), rel=1e-14)


def test_abr_oracle_values():
    g = Grid(0, 4)
    f = full(g, lambda t: t * t)
    spec = OperatorSpec(L, Family.ABR_DIFF, I, OrderFunction.constant(g, 0.3, OrderClass.DIFF))
    # composition of the mpmath generalized integral with a backward difference
    assert_rel_close(abr_diff(spec, f).defined, [1.0, 3.91, 8.5896, 14.953351], 1e-13)
    ref = [float(oracles.left_abr(f.values, [0.3] * 5, t)) for t in range(1, 5)]
    assert_rel_close(ref, [1.0, 3.91, 8.5896, 14.953351], 1e-15)


ALPHA_VAR = [0.1, 0.2, 0.35, 0.45, 0.3]


@pytest.mark.parametrize(
    ("variant", "expected"),
    [
        (I, [1.0, 2.8775, 6.28669375, 14.183751]),
        (II, [1.0, 2.96, 6.6926, 13.7314935]),
    ],
)
def test_abc_oracle_values(variant, expected):
    g = Grid(0, 4)
    f = full(g, lambda t: 2.0**t)
    spec = OperatorSpec(L, Family.ABC_DIFF, variant, OrderFunction(g, ALPHA_VAR, OrderClass.DIFF))
    out = abc_diff(spec, f)
    assert out.support == (1, 4)
    assert_rel_close(out.defined, expected, 1e-13)
    typ = "I" if variant is I else "II"
    ref = [float(oracles.left_abc(f.values, ALPHA_VAR, t, typ)) for t in range(1, 5)]
    assert_rel_close(ref, expected, 1e-15)


def test_abc_of_constant_and_first_point(rng):
    g = Grid(0, 6)
    order = random_order(rng, g, OrderClass.DIFF)
    for side, variant in itertools.product((L, R), (I, II, CONV)):
        spec = OperatorSpec(side, Family.ABC_DIFF, variant, order)
        np.testing.assert_array_equal(abc_diff(spec, full(g, lambda t: 4.0)).defined, 0.0)
    f = random_function(rng, g)
    out = abc_diff(OperatorSpec(L, Family.ABC_DIFF, I, order), f)
    assert out.at(1) == pytest.approx(f.at(1) - f.at(0), rel=1e-13)


@pytest.mark.parametrize("variant", [I, II])
def test_gen_integrals_against_oracle(rng, variant):
    g = Grid(0, 7)
    f = random_function(rng, g)
    order = random_order(rng, g, OrderClass.DIFF)
    typ = "I" if variant is I else "II"
    left = gen_integral(OperatorSpec(L, Family.GEN_INTEGRAL, variant, order), f)
    right = gen_integral(OperatorSpec(R, Family.GEN_INTEGRAL, variant, order), f)
    ref_l = [float(oracles.left_gen_integral(f.values, order.alpha, t, typ)) for t in range(8)]
    ref_r = [float(oracles.right_gen_integral(f.values, order.alpha, t, typ)) for t in range(8)]
    assert_rel_close(left.defined, ref_l, 1e-13)
    assert_rel_close(right.defined, ref_r, 1e-13)


def test_convolution_variant_against_oracle(rng):
    g = Grid(0, 6)
    f = random_function(rng, g)
    order = random_order(rng, g, OrderClass.SUM)
    out = frac_sum(OperatorSpec(L, Family.FRAC_SUM, CONV, order), f)
    for t in range(1, 7):
        ref = sum(
            oracles.rising(t - s + 1, order[t - s] - 1) / oracles.mp.gamma(order[t - s]) * f.values[s]
            for s in range(1, t + 1)
        )
        assert out.at(t) == pytest.approx(float(ref), rel=1e-13)

    order = random_order(rng, g, OrderClass.DIFF)
    out = gen_integral(OperatorSpec(R, Family.GEN_INTEGRAL, CONV, order), f)
    for t in range(6):
        ref = sum(
            oracles.ml_ab(order[s - t], s - t + 1) / (1 - order[s - t]) * f.values[s]
            for s in range(t, 6)
        )
        assert out.at(t) == pytest.approx(float(ref), rel=1e-13, abs=1e-15)


def test_ab_normalization_scales_terms():
    g = Grid(0, 3)
    f = full(g, lambda t: 1.0)
    order = OrderFunction.constant(g, 0.3, OrderClass.DIFF)
    unit = gen_integral(OperatorSpec(L, Family.GEN_INTEGRAL, I, order), f)
    ab = gen_integral(OperatorSpec(L, Family.GEN_INTEGRAL, I, order, Normalization.AB), f)
    assert_rel_close(ab.defined, Normalization.AB(0.3) * unit.defined, 1e-15)


# }}}


# {{{ properties


@pytest.mark.parametrize("family", ALL_FAMILIES)
@pytest.mark.parametrize("side", [L, R])
@pytest.mark.parametrize("n", [2, 5, 13, 20])
def test_constant_order_collapse(rng, family, side, n):
    g = Grid(0.5, n)
    f = random_function(rng, g)
    hi = 0.99 if family in SUM_FAMILIES else 0.49
    order = OrderFunction.constant(g, rng.uniform(0.01, hi), clazz_of(family))
    for norm in Normalization:
        outs = [apply(OperatorSpec(side, family, v, order, norm), f).defined for v in (I, II, CONV)]
        assert_rel_close(outs[0], outs[1], 1e-12)
        assert_rel_close(outs[0], outs[2], 1e-12)


@pytest.mark.parametrize("family", [Family.FRAC_SUM, Family.GEN_INTEGRAL, Family.AB_SUM])
@pytest.mark.parametrize("n", [3, 8, 17])
def test_time_reversal_duality(rng, family, n):
    g = Grid(0, n)
    f = random_function(rng, g)
    hi = 0.99 if family in SUM_FAMILIES else 0.49
    order = OrderFunction.constant(g, rng.uniform(0.01, hi), clazz_of(family))
    left = apply(OperatorSpec(L, family, I, order), f)
    right = apply(OperatorSpec(R, family, I, order), reverse(f))
    mirrored = reverse(right)
    assert mirrored.support == left.support
    assert_rel_close(mirrored.defined, left.defined, 1e-12)


def test_variable_order_duality_uses_reversed_order(rng):
    g = Grid(0, 9)
    f = random_function(rng, g)
    order = random_order(rng, g, OrderClass.DIFF)
    for variant in (I, II):
        left = apply(OperatorSpec(L, Family.GEN_INTEGRAL, variant, order), f)
        right = apply(OperatorSpec(R, Family.GEN_INTEGRAL, variant, order.reversed()), reverse(f))
        assert_rel_close(reverse(right).defined, left.defined, 1e-12)


@pytest.mark.parametrize("family", ALL_FAMILIES)
@pytest.mark.parametrize("side", [L, R])
@pytest.mark.parametrize("variant", [I, II, CONV])
def test_matrix_path_equals_direct(rng, family, side, variant):
    for n in (2, 7, 20):
        g = Grid(-3.0, n)
        f = random_function(rng, g)
        order = random_order(rng, g, clazz_of(family))
        for norm in Normalization:
            spec = OperatorSpec(side, family, variant, order, norm)
            direct = apply(spec, f)
            matrix = apply(spec, f, method="matrix")
            assert direct.support == matrix.support
            assert_rel_close(matrix.defined, direct.defined, 1e-12)


def test_kernel_matrix_examples():
    g = Grid(0, 4)
    k = kernel_matrix(OperatorSpec(L, Family.FRAC_SUM, I, OrderFunction.constant(g, 1.0)))
    expected = np.tril(np.ones((5, 5)))
    expected[0] = 0.0
    expected[:, 0] = 0.0
    np.testing.assert_array_equal(k.entries, expected)
    with pytest.raises(ValueError):
        k.entries[1, 1] = 2.0

    zero = OrderFunction.constant(g, 0.0, OrderClass.CLOSED)
    k = kernel_matrix(OperatorSpec(L, Family.AB_SUM, II, zero))
    np.testing.assert_array_equal(k.entries, np.diag([0.0, 1, 1, 1, 1]))
    k = kernel_matrix(OperatorSpec(R, Family.AB_SUM, I, zero))
    np.testing.assert_array_equal(k.entries, np.diag([1.0, 1, 1, 1, 0]))


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    family=st.sampled_from(ALL_FAMILIES),
    side=st.sampled_from([L, R]),
    variant=st.sampled_from([I, II, CONV]),
    c1=st.floats(-10, 10),
    c2=st.floats(-10, 10),
)
def test_linearity(seed, family, side, variant, c1, c2):
    rng = np.random.default_rng(seed)
    g = Grid(0, int(rng.integers(2, 12)))
    f, h = random_function(rng, g), random_function(rng, g)
    spec = OperatorSpec(side, family, variant, random_order(rng, g, clazz_of(family)))
    lhs = apply(spec, c1 * f + c2 * h).defined
    rhs = (c1 * apply(spec, f) + c2 * apply(spec, h)).defined
    scale = max(1.0, abs(c1), abs(c2)) * max(1.0, float(np.max(np.abs(apply(spec, f).defined))),
                                              float(np.max(np.abs(apply(spec, h).defined))))
    assert float(np.max(np.abs(lhs - rhs))) <= 1e-11 * scale


def test_series_and_recurrence_kernels_agree(rng):
    g = Grid(0, 15)
    f = random_function(rng, g)
    order = random_order(rng, g, OrderClass.DIFF)
    spec = OperatorSpec(L, Family.ABC_DIFF, II, order)
    assert_rel_close(
        apply(spec.replace(ml_method="series"), f).defined, apply(spec, f).defined, 1e-10
    )


# }}}


# {{{ errors


@pytest.mark.parametrize("family", DIFF_FAMILIES)
def test_difference_families_reject_sum_orders(family):
    g = Grid(0, 3)
    with pytest.raises(DomainError, match="DIFF"):
        OperatorSpec(L, family, I, OrderFunction.constant(g, 0.7))


def test_frac_sum_rejects_closed_order():
    g = Grid(0, 3)
    with pytest.raises(DomainError):
        OperatorSpec(L, Family.FRAC_SUM, I, OrderFunction.constant(g, 0.0, OrderClass.CLOSED))


def test_support_requirements():
    g = Grid(0, 5)
    order = OrderFunction.constant(g, 0.3)
    right_only = GridFunction.from_support(g, np.ones(5), lo=1)
    left_only = GridFunction.from_support(g, np.ones(5), lo=0)
    frac_sum(OperatorSpec(L, Family.FRAC_SUM, I, order), right_only)
    frac_sum(OperatorSpec(R, Family.FRAC_SUM, I, order), left_only)
    with pytest.raises(DomainError):
        frac_sum(OperatorSpec(R, Family.FRAC_SUM, I, order), right_only)
    with pytest.raises(DomainError):
        frac_sum(OperatorSpec(L, Family.FRAC_SUM, I, order), left_only)
    with pytest.raises(DomainError):
        apply(OperatorSpec(R, Family.FRAC_SUM, I, order), right_only, method="matrix")
    diff = OrderFunction.constant(g, 0.3, OrderClass.DIFF)
    with pytest.raises(DomainError):
        abc_diff(OperatorSpec(L, Family.ABC_DIFF, I, diff), right_only)


def test_grid_mismatch_and_wrong_family():
    g = Grid(0, 5)
    spec = OperatorSpec(L, Family.FRAC_SUM, I, OrderFunction.constant(g, 0.3))
    with pytest.raises(DomainError):
        frac_sum(spec, GridFunction(Grid(0, 4), np.ones(5)))
    with pytest.raises(DomainError):
        apply(spec, GridFunction(Grid(1, 5), np.ones(6)), method="matrix")
    with pytest.raises(DomainError):
        gen_integral(spec, GridFunction(g, np.ones(6)))
    with pytest.raises(ValueError):
        apply(spec, GridFunction(g, np.ones(6)), method="fft")
    with pytest.raises(ValueError):
        spec.replace(ml_method="pade")


# }}}
