"""Numerical verification of the summation-by-parts identities.

Each identity equates two bilinear sums over the interior points
``t = a + 1 .. b - 1``. Both sides are evaluated with the operators from
:mod:`mlgrid.operators` and compared through

.. math::

    r = \\frac{|\\text{lhs} - \\text{rhs}|}{\\max(|\\text{lhs}|, |\\text{rhs}|, 1)}.

Random trials are generated from ``numpy.random.Generator(PCG64)`` seeded
with ``SeedSequence([seed, trial_index])``, so any single trial can be
replayed from the pair ``(seed, trial_index)`` alone.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from mlgrid import operators as ops
from mlgrid.errors import DomainError
from mlgrid.grid import Grid, GridFunction, Normalization, OrderClass, OrderFunction
from mlgrid.operators import Family, OperatorSpec, Side, Variant
from mlgrid.special import DEFAULT_CONTROL, SeriesControl

log = logging.getLogger(__name__)

SUM_IBP = ("SumIBP-1", "SumIBP-2")
AB_SUM_IBP = ("ABSumIBP-1", "ABSumIBP-2")
GIO_IBP = ("GIO-IBP-1", "GIO-IBP-2")
MAIN_IBP = ("Main-1", "Main-2", "Main-3", "Main-4")
IDENTITIES = SUM_IBP + AB_SUM_IBP + GIO_IBP + MAIN_IBP

DEFAULT_THRESHOLD = 1.0e-9

I, II = Variant.TYPE_I, Variant.TYPE_II
L, R = Side.LEFT, Side.RIGHT


@dataclass(frozen=True)
class IdentityReport:
    identity_id: str
    lhs: float
    rhs: float
    abs_residual: float
    rel_residual: float
    trial_seed: int
    grid_size: int
    trial_index: int = -1
    normalization: str = Normalization.UNIT.value
    a: float = 0.0
    alpha: tuple[float, ...] = field(default=(), repr=False)

    def as_row(self) -> dict:
        row = asdict(self)
        row.pop("alpha")
        return row


def _report(identity_id, lhs, rhs, alpha: OrderFunction, norm, seed, trial):
    diff = abs(lhs - rhs)
    return IdentityReport(
        identity_id=identity_id,
        lhs=lhs,
        rhs=rhs,
        abs_residual=diff,
        rel_residual=diff / max(abs(lhs), abs(rhs), 1.0),
        trial_seed=seed,
        grid_size=alpha.grid.n,
        trial_index=trial,
        normalization=norm.value,
        a=alpha.grid.a,
        alpha=tuple(float(x) for x in alpha.alpha),
    )


def _interior_dot(u: GridFunction, v: GridFunction) -> float:
    """``sum_{t=a+1}^{b-1} u(t) v(t)``."""
    n = u.grid.n
    return math.fsum(u.at(t) * v.at(t) for t in range(1, n))


def _spec(family, side, variant, alpha, norm, ctrl, method) -> OperatorSpec:
    return OperatorSpec(side, family, variant, alpha, norm, ctrl, method)


def _check_inputs(f: GridFunction, g: GridFunction, alpha: OrderFunction) -> None:
    if f.grid != alpha.grid or g.grid != alpha.grid:
        raise DomainError("f, g and alpha must share one grid")
    n = alpha.grid.n
    f.require(0, n, "identity check")
    g.require(0, n, "identity check")


# {{{ sides of each identity


def _adjoint_pair(family, left_variant, f, g, alpha, norm, ctrl, method):
    """``sum f * (Left op g)`` against ``sum g * (Right op* f)``."""
    right_variant = II if left_variant is I else I
    op = ops.apply
    lhs = _interior_dot(f, op(_spec(family, L, left_variant, alpha, norm, ctrl, method), g))
    rhs = _interior_dot(g, op(_spec(family, R, right_variant, alpha, norm, ctrl, method), f))
    return lhs, rhs


def _right_adjoint_pair(family, right_variant, f, g, alpha, norm, ctrl, method):
    """``sum f * (Right op g)`` against ``sum g * (Left op* f)``."""
    left_variant = II if right_variant is I else I
    op = ops.apply
    lhs = _interior_dot(f, op(_spec(family, R, right_variant, alpha, norm, ctrl, method), g))
    rhs = _interior_dot(g, op(_spec(family, L, left_variant, alpha, norm, ctrl, method), f))
    return lhs, rhs


def _main_left(abc_variant, f, g, alpha, norm, ctrl, method):
    """ABC on the left, boundary term ``|_a^{b-1}`` and right ABR at ``t - 1``."""
    n = alpha.grid.n
    adj = II if abc_variant is I else I
    abc = ops.apply(_spec(Family.ABC_DIFF, L, abc_variant, alpha, norm, ctrl, method), g)
    lhs = _interior_dot(f, abc)

    gio = ops.apply(_spec(Family.GEN_INTEGRAL, R, adj, alpha, norm, ctrl, method), f)
    abr = ops.apply(_spec(Family.ABR_DIFF, R, adj, alpha, norm, ctrl, method), f)
    boundary = g.at(n - 1) * gio.at(n - 1) - g.at(0) * gio.at(0)
    rhs = boundary + math.fsum(g.at(t - 1) * abr.at(t - 1) for t in range(1, n))
    return lhs, rhs


def _main_right(abc_variant, f, g, alpha, norm, ctrl, method):
    """ABC on the right, boundary term ``-|_{a+1}^b`` and left ABR at ``t + 1``."""
    n = alpha.grid.n
    adj = II if abc_variant is I else I
    abc = ops.apply(_spec(Family.ABC_DIFF, R, abc_variant, alpha, norm, ctrl, method), g)
    lhs = _interior_dot(f, abc)

    gio = ops.apply(_spec(Family.GEN_INTEGRAL, L, adj, alpha, norm, ctrl, method), f)
    abr = ops.apply(_spec(Family.ABR_DIFF, L, adj, alpha, norm, ctrl, method), f)
    boundary = -(g.at(n) * gio.at(n) - g.at(1) * gio.at(1))
    rhs = boundary + math.fsum(g.at(t + 1) * abr.at(t + 1) for t in range(1, n))
    return lhs, rhs


_SIDES: dict[str, Callable] = {
    "SumIBP-1": lambda *a: _adjoint_pair(Family.FRAC_SUM, I, *a),
    "SumIBP-2": lambda *a: _right_adjoint_pair(Family.FRAC_SUM, I, *a),
    "ABSumIBP-1": lambda *a: _adjoint_pair(Family.AB_SUM, I, *a),
    "ABSumIBP-2": lambda *a: _adjoint_pair(Family.AB_SUM, II, *a),
    "GIO-IBP-1": lambda *a: _adjoint_pair(Family.GEN_INTEGRAL, I, *a),
    "GIO-IBP-2": lambda *a: _adjoint_pair(Family.GEN_INTEGRAL, II, *a),
    "Main-1": lambda *a: _main_left(I, *a),
    "Main-2": lambda *a: _main_left(II, *a),
    "Main-3": lambda *a: _main_right(I, *a),
    "Main-4": lambda *a: _main_right(II, *a),
}


def order_class(identity_id: str) -> OrderClass:
    if identity_id in SUM_IBP + AB_SUM_IBP:
        return OrderClass.SUM
    return OrderClass.DIFF


def uses_normalization(identity_id: str) -> bool:
    return identity_id not in SUM_IBP


def evaluate(
    identity_id: str,
    f: GridFunction,
    g: GridFunction,
    alpha: OrderFunction,
    norm: Normalization = Normalization.UNIT,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    seed: int = -1,
    trial: int = -1,
    ml_method: str = "recurrence",
) -> IdentityReport:
    """Evaluate both sides of one identity and report the residual."""
    if identity_id not in _SIDES:
        raise KeyError(f"unknown identity {identity_id!r}; known: {', '.join(IDENTITIES)}")
    _check_inputs(f, g, alpha)
    lhs, rhs = _SIDES[identity_id](f, g, alpha, norm, ctrl, ml_method)
    return _report(identity_id, lhs, rhs, alpha, norm, seed, trial)


# }}}


# {{{ public checks


def check_sum_ibp(f, g, alpha, seed: int = -1) -> tuple[IdentityReport, IdentityReport]:
    """Both adjoint relations between left/right fractional sums of types I/II."""
    return tuple(evaluate(i, f, g, alpha, seed=seed) for i in SUM_IBP)


def check_ab_sum_ibp(
    f, g, alpha, norm=Normalization.UNIT, seed: int = -1
) -> tuple[IdentityReport, IdentityReport]:
    return tuple(evaluate(i, f, g, alpha, norm, seed=seed) for i in AB_SUM_IBP)


def check_gio_ibp(
    f, g, alpha, norm=Normalization.UNIT, ctrl=DEFAULT_CONTROL, seed: int = -1
) -> tuple[IdentityReport, IdentityReport]:
    return tuple(evaluate(i, f, g, alpha, norm, ctrl, seed=seed) for i in GIO_IBP)


def check_main_ibp(
    f, g, alpha, norm=Normalization.UNIT, ctrl=DEFAULT_CONTROL, seed: int = -1
) -> tuple[IdentityReport, ...]:
    """All four summation-by-parts formulas for the Caputo type AB differences."""
    return tuple(evaluate(i, f, g, alpha, norm, ctrl, seed=seed) for i in MAIN_IBP)


# }}}


# {{{ fuzzing


@dataclass(frozen=True)
class Trial:
    f: GridFunction
    g: GridFunction
    alpha: OrderFunction


def default_alpha_range(clazz: OrderClass) -> tuple[float, float]:
    """Class range shrunk by 0.01 on each side."""
    if clazz is OrderClass.DIFF:
        return 0.01, 0.49
    return 0.01, 0.99


def make_trial(
    identity_id: str,
    seed: int,
    trial: int,
    n_range: tuple[int, int] = (3, 12),
    alpha_range: tuple[float, float] | None = None,
    a: float = 0.0,
) -> Trial:
    """Deterministic random ``f``, ``g`` in ``[-1, 1]`` and order for one trial."""
    clazz = order_class(identity_id)
    lo, hi = alpha_range or default_alpha_range(clazz)
    rng = np.random.default_rng([seed, trial])
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    grid = Grid(a, n)
    f = GridFunction(grid, rng.uniform(-1.0, 1.0, n + 1))
    g = GridFunction(grid, rng.uniform(-1.0, 1.0, n + 1))
    alpha = OrderFunction(grid, rng.uniform(lo, hi, n + 1), clazz)
    return Trial(f, g, alpha)


@dataclass
class FuzzResult:
    identity_id: str
    reports: list[IdentityReport]
    threshold: float

    @property
    def max_rel_residual(self) -> float:
        return max(r.rel_residual for r in self.reports)

    @property
    def worst(self) -> IdentityReport:
        return max(self.reports, key=lambda r: r.rel_residual)

    @property
    def failures(self) -> list[IdentityReport]:
        return [r for r in self.reports if not r.rel_residual <= self.threshold]

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> dict:
        worst = self.worst
        return {
            "identity_id": self.identity_id,
            "trials": len({r.trial_index for r in self.reports}),
            "evaluations": len(self.reports),
            "max_rel_residual": self.max_rel_residual,
            "threshold": self.threshold,
            "pass": self.passed,
            "worst_trial": {
                "seed": worst.trial_seed,
                "trial_index": worst.trial_index,
                "normalization": worst.normalization,
                "grid_size": worst.grid_size,
            },
        }


def fuzz(
    identity_id: str,
    trials: int,
    seed: int,
    n_range: tuple[int, int] = (3, 12),
    alpha_range: tuple[float, float] | None = None,
    norms: Sequence[Normalization] = (Normalization.UNIT, Normalization.AB),
    ctrl: SeriesControl = DEFAULT_CONTROL,
    threshold: float = DEFAULT_THRESHOLD,
    ml_method: str = "recurrence",
) -> FuzzResult:
    """Run *trials* seeded random checks of one identity.

    Identities that involve the normalization are evaluated under every
    entry of *norms* for each trial; reports are ordered by trial index.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if identity_id not in _SIDES:
        raise KeyError(f"unknown identity {identity_id!r}")
    if not uses_normalization(identity_id):
        norms = norms[:1]

    reports = []
    for k in range(trials):
        trial = make_trial(identity_id, seed, k, n_range, alpha_range)
        for norm in norms:
            reports.append(
                evaluate(
                    identity_id, trial.f, trial.g, trial.alpha, norm, ctrl, seed, k, ml_method
                )
            )

    result = FuzzResult(identity_id, reports, threshold)
    for bad in result.failures:
        log.warning(
            "%s failed: rel_residual=%.3e seed=%d trial=%d norm=%s alpha=%s",
            identity_id, bad.rel_residual, bad.trial_seed, bad.trial_index,
            bad.normalization, list(bad.alpha),
        )
    return result


def replay(
    report: IdentityReport,
    n_range: tuple[int, int] = (3, 12),
    alpha_range: tuple[float, float] | None = None,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    ml_method: str = "recurrence",
) -> IdentityReport:
    """Re-run the trial that produced *report* from its seed and index."""
    trial = make_trial(
        report.identity_id, report.trial_seed, report.trial_index, n_range, alpha_range,
        report.a,
    )
    if tuple(trial.alpha.alpha.tolist()) != report.alpha:
        raise ValueError("regenerated order differs; n_range/alpha_range do not match")
    return evaluate(
        report.identity_id, trial.f, trial.g, trial.alpha,
        Normalization(report.normalization), ctrl, report.trial_seed, report.trial_index,
        ml_method,
    )


def fuzz_all(
    identity_ids: Iterable[str] = IDENTITIES, **kwargs
) -> list[FuzzResult]:
    return [fuzz(i, **kwargs) for i in identity_ids]


# }}}
