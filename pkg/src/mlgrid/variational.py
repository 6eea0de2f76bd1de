"""Discrete variable-order fractional variational problems.

Minimize

.. math::

    J(f) = \\sum_{t=a+1}^{b-1} L\\big(t, f(t - 1), (D f)(t)\\big)

over ``f : N_{a,b-1} -> R`` with ``f(a) = A`` and ``f(b-1) = B``, where
``D`` is the left Caputo type AB difference (type I or II) built on
``N_{a,b-1}``. The Euler-Lagrange residual

.. math::

    R(t) = L_u(t + 1) + (D^* L_v)(t), \\qquad t = a + 1, \\dots, b - 2,

uses the right Riemann-Liouville type AB difference ``D^*`` of the adjoint
kernel type. Its right-hand generalized integral sums ``s = t .. b - 1``,
i.e. it is the operator on ``N_{a,b}`` applied to ``L_v`` (which lives on
``a + 1 .. b - 1``). With this construction ``R`` is exactly the gradient of
``J`` with respect to the free values ``f(a + 1) .. f(b - 2)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from mlgrid.errors import DomainError
from mlgrid.grid import Grid, GridFunction, Normalization, OrderClass, OrderFunction
from mlgrid.operators import Family, OperatorSpec, Side, Variant, apply, kernel_matrix
from mlgrid.special import DEFAULT_CONTROL, SeriesControl

log = logging.getLogger(__name__)

# accepted steps in a row without any change of J before a descent on the
# finite-difference gradient gives up
_STALL_STEPS = 50

Func3 = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


# {{{ Lagrangians


@dataclass(frozen=True)
class Lagrangian:
    """``L(t, u, v)`` with optional analytic partial derivatives.

    All callables receive numpy arrays and must broadcast. Missing partials
    are replaced by central differences with step ``fd_step``.
    """

    func: Func3
    d_u: Func3 | None = None
    d_v: Func3 | None = None
    fd_step: float = 1.0e-6

    is_quadratic = False

    @property
    def analytic(self) -> bool:
        return self.d_u is not None and self.d_v is not None

    def __call__(self, t, u, v):
        return self.func(t, u, v)

    def partial_u(self, t, u, v):
        if self.d_u is not None:
            return self.d_u(t, u, v)
        h = self.fd_step
        return (self.func(t, u + h, v) - self.func(t, u - h, v)) / (2 * h)

    def partial_v(self, t, u, v):
        if self.d_v is not None:
            return self.d_v(t, u, v)
        h = self.fd_step
        return (self.func(t, u, v + h) - self.func(t, u, v - h)) / (2 * h)


@dataclass(frozen=True, eq=False)
class QuadraticLagrangian:
    """``c1 v^2 + c2 u^2 + c3 u + c4 v``.

    Each coefficient is a scalar or a vector tabulated on the offsets of the
    problem grid (length ``n + 1``); ``a`` is the grid base point used to
    look tabulated values up.
    """

    c1: float | np.ndarray = 0.0
    c2: float | np.ndarray = 0.0
    c3: float | np.ndarray = 0.0
    c4: float | np.ndarray = 0.0
    a: float = 0.0

    is_quadratic = True
    analytic = True

    def coefficients(self, t) -> tuple[np.ndarray, ...]:
        t = np.asarray(t, dtype=np.float64)
        k = np.rint(t - self.a).astype(int)
        out = []
        for c in (self.c1, self.c2, self.c3, self.c4):
            c = np.asarray(c, dtype=np.float64)
            out.append(np.broadcast_to(c, t.shape) if c.ndim == 0 else c[k])
        return tuple(out)

    def __call__(self, t, u, v):
        c1, c2, c3, c4 = self.coefficients(t)
        return c1 * v**2 + c2 * u**2 + c3 * u + c4 * v

    def partial_u(self, t, u, v):
        _, c2, c3, _ = self.coefficients(t)
        return 2 * c2 * u + c3

    def partial_v(self, t, u, v):
        c1, _, _, c4 = self.coefficients(t)
        return 2 * c1 * v + c4


# }}}


# {{{ problem


@dataclass(frozen=True)
class VariationalProblem:
    """Fixed-endpoint problem on ``N_{a,b}``; the unknown lives on ``N_{a,b-1}``."""

    grid: Grid
    order: OrderFunction
    lagrangian: Lagrangian | QuadraticLagrangian
    A: float
    B: float
    variant: Variant = Variant.TYPE_I
    norm: Normalization = Normalization.UNIT
    ctrl: SeriesControl = DEFAULT_CONTROL
    ml_method: str = "recurrence"

    def __post_init__(self) -> None:
        if self.grid.n < 4:
            raise DomainError(f"need b - a >= 4 for two free points, got {self.grid.n}")
        if self.order.grid != self.grid:
            raise DomainError("order function is not on the problem grid")
        if self.order.clazz is not OrderClass.DIFF:
            raise DomainError("the Caputo AB difference needs an order in (0, 1/2)")
        if self.variant not in (Variant.TYPE_I, Variant.TYPE_II):
            raise DomainError("variational problems use type I or type II kernels")

    @property
    def f_grid(self) -> Grid:
        """``N_{a,b-1}``, the domain of the unknown."""
        return self.grid.truncate(self.grid.n - 1)

    @property
    def free(self) -> slice:
        """Offsets of the free values ``a + 1 .. b - 2``."""
        return slice(1, self.grid.n - 1)

    @property
    def caputo_spec(self) -> OperatorSpec:
        return OperatorSpec(
            Side.LEFT, Family.ABC_DIFF, self.variant,
            self.order.on_grid(self.f_grid), self.norm, self.ctrl, self.ml_method,
        )

    @property
    def adjoint_spec(self) -> OperatorSpec:
        adj = Variant.TYPE_II if self.variant is Variant.TYPE_I else Variant.TYPE_I
        return OperatorSpec(
            Side.RIGHT, Family.ABR_DIFF, adj, self.order, self.norm, self.ctrl, self.ml_method
        )

    def as_function(self, f) -> GridFunction:
        if isinstance(f, GridFunction):
            if f.grid != self.f_grid:
                raise DomainError(f"expected a function on {self.f_grid}, got {f.grid}")
            f.require(0, self.f_grid.n, "functional")
            return f
        return GridFunction(self.f_grid, np.asarray(f, dtype=np.float64))

    def initial_guess(self) -> GridFunction:
        return GridFunction(self.f_grid, np.linspace(self.A, self.B, self.grid.n))


def _integrand_args(p: VariationalProblem, f: GridFunction):
    n = p.grid.n
    t = p.grid.a + np.arange(1, n)
    u = f.values[0 : n - 1]
    v = apply(p.caputo_spec, f).defined
    return t, u, v


def evaluate_J(p: VariationalProblem, f) -> float:
    """Value of the functional; boundary values are not enforced here."""
    f = p.as_function(f)
    t, u, v = _integrand_args(p, f)
    return math.fsum(np.asarray(p.lagrangian(t, u, v), dtype=np.float64))


def _check_boundary(p: VariationalProblem, f: GridFunction) -> None:
    n = p.grid.n
    for k, want in ((0, p.A), (n - 1, p.B)):
        if abs(f.at(k) - want) > 1e-12 * max(1.0, abs(want)):
            raise DomainError(
                f"boundary condition violated at offset {k}: f={f.at(k)}, expected {want}"
            )


def el_residual(p: VariationalProblem, f) -> GridFunction:
    """Euler-Lagrange residual on ``a + 1 .. b - 2`` (a function on ``N_{a,b-1}``)."""
    f = p.as_function(f)
    _check_boundary(p, f)
    n = p.grid.n
    t, u, v = _integrand_args(p, f)
    lu = np.broadcast_to(p.lagrangian.partial_u(t, u, v), t.shape)
    lv = np.broadcast_to(p.lagrangian.partial_v(t, u, v), t.shape)

    # L_v on a+1..b-1; the value at a never enters the right operator
    l2 = np.zeros(n + 1)
    l2[1:n] = lv
    abr = apply(p.adjoint_spec, GridFunction(p.grid, l2, 0, n - 1))

    res = np.full(n, np.nan)
    for k in range(1, n - 1):
        res[k] = lu[k] + abr.at(k)  # lu[k] is L_u at offset k + 1
    return GridFunction(p.f_grid, res, 1, n - 2)


def gradient_J(p: VariationalProblem, f) -> np.ndarray:
    """Central-difference gradient of ``J`` in the free coordinates."""
    f = p.as_function(f)
    x = f.zero_filled()
    grad = np.empty(p.grid.n - 2)
    for i, k in enumerate(range(1, p.grid.n - 1)):
        h = 1.0e-6 * max(1.0, abs(x[k]))
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        grad[i] = (evaluate_J(p, xp) - evaluate_J(p, xm)) / (2 * h)
    return grad


# }}}


# {{{ solvers


@dataclass
class Solution:
    f: GridFunction
    J_value: float
    el_residual: GridFunction
    iterations: int
    converged: bool
    gradient_norm: float
    method: str
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def max_abs_residual(self) -> float:
        return float(np.max(np.abs(self.el_residual.defined)))


def quadratic_system(p: VariationalProblem) -> tuple[np.ndarray, np.ndarray]:
    """Hessian and constant part of the gradient of a quadratic ``J``.

    ``grad J(f) = H f + r`` over all ``n`` values of ``f`` on ``N_{a,b-1}``.
    """
    lag = p.lagrangian
    if not getattr(lag, "is_quadratic", False):
        raise DomainError("linear stationarity solve needs a quadratic Lagrangian")

    n = p.grid.n
    t = p.grid.a + np.arange(1, n)
    c1, c2, c3, c4 = (np.asarray(c, dtype=np.float64) for c in lag.coefficients(t))

    # v = M f and u = P f on the summation range a+1..b-1
    M = np.asarray(kernel_matrix(p.caputo_spec).entries)[1:n, :]
    P = np.eye(n - 1, n)

    H = 2.0 * (M.T @ (c1[:, None] * M) + P.T @ (c2[:, None] * P))
    r = P.T @ c3 + M.T @ c4
    return H, r


def solve_linear(p: VariationalProblem) -> GridFunction:
    """Solve the stationarity system of a quadratic problem exactly."""
    H, r = quadratic_system(p)
    n = p.grid.n
    free = np.arange(1, n - 1)
    fixed = np.array([0, n - 1])
    x_fixed = np.array([p.A, p.B])

    rhs = -(r[free] + H[np.ix_(free, fixed)] @ x_fixed)
    x = np.empty(n)
    x[fixed] = x_fixed
    try:
        x[free] = np.linalg.solve(H[np.ix_(free, free)], rhs)
    except np.linalg.LinAlgError as exc:
        raise DomainError("stationarity system is singular") from exc
    return GridFunction(p.f_grid, x)


def _exact_gradient(p: VariationalProblem, x: np.ndarray) -> np.ndarray:
    return el_residual(p, x).defined.copy()


def _descent(p: VariationalProblem, max_iter: int, grad_tol: float, step: str, gradient):
    # With an exact gradient, steps whose change of J is within its rounding
    # error are judged by the gradient at the candidate instead: the slope
    # test g(x - lr g) . g >= -(1 - 2 delta) |g|^2 (delta = 0.1) plus a strict
    # decrease of |g|, which keeps stiff components from being amplified
    # while J cannot see them. With finite differences the gradient is noise
    # there, so a flat J ends the descent.
    exact = gradient is not gradient_J
    x = p.initial_guess().zero_filled()
    free = p.free
    eps = np.finfo(np.float64).eps

    def J(y):
        f = p.as_function(y)
        terms = np.asarray(p.lagrangian(*_integrand_args(p, f)), dtype=np.float64)
        noise = 16 * p.grid.n * eps * max(1.0, math.fsum(np.abs(terms)))
        return math.fsum(terms), noise

    value, noise = J(x)
    history = [value]
    grad = gradient(p, x)
    lr = 1.0e-2
    prev_x = prev_grad = None
    it = flat = 0

    while it < max_iter:
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= grad_tol:
            return x, value, it, True, history
        if not exact and flat >= _STALL_STEPS:
            log.info("no decrease in J for %d steps at |grad| = %.3e", flat, gnorm)
            return x, value, it, False, history

        if step == "bb" and prev_x is not None:
            s = x[free] - prev_x
            y = grad - prev_grad
            sy = float(s @ y)
            lr = float(s @ s) / sy if sy > 0 else lr

        # backtracking; accepted steps raise J by at most its rounding error
        for _ in range(60):
            cand = x.copy()
            cand[free] -= lr * grad
            cand_value, cand_noise = J(cand)
            cand_grad = None
            # in exact mode a decrease only counts if it exceeds the noise
            drop = value - cand_value
            if drop >= 1.0e-4 * lr * gnorm**2 and drop > (noise if exact else 0.0):
                break
            if exact and cand_value <= value + noise:
                cand_grad = gradient(p, cand)
                if (
                    float(cand_grad @ grad) >= -0.8 * gnorm**2
                    and float(np.linalg.norm(cand_grad)) < gnorm
                ):
                    break
            lr *= 0.5
        else:
            log.info("line search stalled at |grad| = %.3e", gnorm)
            return x, value, it, False, history

        flat = flat + 1 if cand_value == value else 0
        prev_x, prev_grad = x[free].copy(), grad
        x, value, noise = cand, cand_value, cand_noise
        history.append(value)
        grad = cand_grad if cand_grad is not None else gradient(p, x)
        it += 1
        if step == "armijo":
            lr *= 2.0

    return x, value, it, bool(np.linalg.norm(grad) <= grad_tol), history


def solve_direct(
    p: VariationalProblem,
    max_iter: int = 20_000,
    grad_tol: float = 1.0e-9,
    step: str = "bb",
    method: str = "auto",
    gradient: str = "auto",
) -> Solution:
    """Minimize ``J`` over the free values with the endpoints held fixed.

    :arg step: ``"bb"`` (Barzilai-Borwein trial steps) or ``"armijo"``
        (step doubling after every accepted iterate); both backtrack until
        the Armijo condition holds or, once changes of ``J`` drown in
        rounding, until the exact gradient shrinks along the step.
    :arg method: ``"linear"`` solves the stationarity system of a quadratic
        Lagrangian, ``"gradient"`` runs the descent, ``"auto"`` picks
        ``"linear"`` when the Lagrangian is quadratic.
    :arg gradient: search direction of the descent. ``"fd"`` uses
        :func:`gradient_J`; ``"exact"`` uses the Euler-Lagrange residual,
        which equals the gradient but carries no finite-difference noise;
        ``"auto"`` picks ``"exact"`` when the partials are analytic.

    The reported ``gradient_norm`` is always the finite-difference one.
    """
    if step not in ("bb", "armijo"):
        raise ValueError(f"unknown step policy {step!r}")
    if gradient == "auto":
        gradient = "exact" if getattr(p.lagrangian, "analytic", False) else "fd"
    if gradient not in ("exact", "fd"):
        raise ValueError(f"unknown gradient {gradient!r}")
    if method == "auto":
        method = "linear" if getattr(p.lagrangian, "is_quadratic", False) else "gradient"

    if method == "linear":
        f = solve_linear(p)
        value, iterations, history = evaluate_J(p, f), 0, []
        grad = gradient_J(p, f)
        converged = True
    elif method == "gradient":
        direction = _exact_gradient if gradient == "exact" else gradient_J
        x, value, iterations, converged, history = _descent(
            p, max_iter, grad_tol, step, direction
        )
        f = GridFunction(p.f_grid, x)
        grad = gradient_J(p, f)
    else:
        raise ValueError(f"unknown method {method!r}")

    if not converged:
        log.warning("descent did not reach |grad| <= %g in %d iterations", grad_tol, iterations)

    return Solution(
        f=f,
        J_value=value,
        el_residual=el_residual(p, f),
        iterations=iterations,
        converged=converged,
        gradient_norm=float(np.linalg.norm(grad)),
        method=method,
        history=history,
    )


# }}}
