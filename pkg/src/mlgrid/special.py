"""Rising factorials and the nabla discrete Mittag-Leffler function.

.. autofunction:: rising
.. autofunction:: ml
.. autofunction:: ml_ab
.. autofunction:: ml_series
.. autofunction:: ml_recurrence
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from mlgrid.errors import DomainError, NoConvergence

# number of series terms evaluated per vectorized block
_BLOCK = 128


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for the Mittag-Leffler series.

    The series is cut at the first index ``K >= k_min`` where the term ratio
    has dropped below one and the current term (scaled by a geometric tail
    estimate when all terms share a sign) is below
    ``rel_tol * |partial sum| + abs_tol``.
    """

    rel_tol: float = 1.0e-14
    abs_tol: float = 1.0e-300
    k_max: int = 10_000
    k_min: int = 8

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive: {self.rel_tol}")
        if self.abs_tol < 0:
            raise DomainError(f"abs_tol must be non-negative: {self.abs_tol}")
        if not self.k_max > self.k_min >= 1:
            raise DomainError(
                f"need k_max > k_min >= 1: k_min={self.k_min}, k_max={self.k_max}"
            )


DEFAULT_CONTROL = SeriesControl()


@dataclass(frozen=True)
class MLParams:
    alpha: float
    lam: float
    z: int
    beta: float = 1.0

    def __post_init__(self) -> None:
        if not abs(self.lam) < 1:
            raise DomainError(f"|lambda| < 1 required for convergence: {self.lam}")
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive: {self.alpha}")
        if not self.beta > 0:
            raise DomainError(f"beta must be positive: {self.beta}")
        if int(self.z) != self.z or self.z < 1:
            raise DomainError(f"z must be a positive integer: {self.z}")


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def rising(t: float, alpha: float) -> float:
    r"""Generalized rising function :math:`t^{\overline{\alpha}}`.

    For a non-negative integer *alpha* this is the finite product
    :math:`t (t + 1) \cdots (t + \alpha - 1)`; otherwise
    :math:`\Gamma(t + \alpha) / \Gamma(t)` evaluated in log space, with the
    convention that it vanishes at :math:`t = 0`.

    :raises DomainError: if *t* is negative, or *t + alpha* is a pole of the
        gamma function.
    """
    if alpha >= 0 and float(alpha).is_integer():
        return math.prod(t + k for k in range(int(alpha)))

    if t == 0:
        return 0.0
    if t < 0:
        raise DomainError(f"rising function not continued to negative t: {t}")

    x = t + alpha
    if _is_nonpositive_integer(x):
        raise DomainError(f"t + alpha = {x} is a pole of the gamma function")

    sign = 1.0
    if x < 0 and math.floor(x) % 2 == 1:
        sign = -1.0

    return sign * math.exp(math.lgamma(x) - math.lgamma(t))


def _log_binomial_table(x: np.ndarray, z_max: int) -> np.ndarray:
    r"""Return ``log(Gamma(z + x) / (Gamma(z) Gamma(x + 1)))`` for ``z = 1..z_max``.

    For integer ``z`` the ratio is :math:`\prod_{j=1}^{z-1} (1 + x / j)`, which
    is accumulated as a sum of ``log1p`` terms. Requires ``x > -1``.
    """
    j = np.arange(1, z_max, dtype=np.float64)
    logs = np.log1p(x[:, None] / j[None, :])
    out = np.zeros((x.size, z_max))
    np.cumsum(logs, axis=1, out=out[:, 1:])
    return out


def ml_series(
    alpha: float,
    beta: float,
    lam: float,
    z_max: int,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the nabla Mittag-Leffler function at every lag ``z = 1..z_max``.

    :returns: a tuple ``(values, terms)`` of arrays of length *z_max*, where
        ``terms[z - 1]`` is the truncation index ``K`` used for lag ``z``.
    :raises NoConvergence: if some lag has not met the stopping rule after
        ``ctrl.k_max`` terms.
    """
    MLParams(alpha=alpha, beta=beta, lam=lam, z=z_max)

    if lam == 0:
        values = np.array(
            [rising(z, beta - 1) / math.gamma(beta) for z in range(1, z_max + 1)]
        )
        return values, np.zeros(z_max, dtype=np.int64)

    log_lam = math.log(abs(lam))
    alternating = lam < 0

    cut = np.full(z_max, -1, dtype=np.int64)
    running = np.zeros(z_max)
    prev_log = np.full(z_max, np.inf)
    chunks: list[np.ndarray] = []

    k0 = 0
    while k0 < ctrl.k_max and np.any(cut < 0):
        k = np.arange(k0, min(k0 + _BLOCK, ctrl.k_max))
        log_mag = k[:, None] * log_lam + _log_binomial_table(k * alpha + beta - 1, z_max)
        sign = np.where(alternating & (k % 2 == 1), -1.0, 1.0)
        terms = sign[:, None] * np.exp(log_mag)
        chunks.append(terms)

        # plain running sums are accurate enough to drive the stopping test
        partial = running + np.cumsum(terms, axis=0)
        ratio = np.exp(np.diff(log_mag, axis=0, prepend=prev_log[None, :]))
        if alternating:
            tail = 1.0
        else:
            with np.errstate(divide="ignore"):
                tail = np.maximum(1.0, ratio / (1.0 - ratio))

        stop = (
            (k >= ctrl.k_min)[:, None]
            & (ratio < 1.0)
            & (np.abs(terms) * tail <= ctrl.rel_tol * np.abs(partial) + ctrl.abs_tol)
        )
        hit = (cut < 0) & stop.any(axis=0)
        cut[hit] = k[np.argmax(stop[:, hit], axis=0)]

        running = partial[-1]
        prev_log = log_mag[-1]
        k0 += _BLOCK

    if np.any(cut < 0):
        bad = int(np.argmax(cut < 0)) + 1
        raise NoConvergence(
            f"Mittag-Leffler series (alpha={alpha}, beta={beta}, lambda={lam}, "
            f"z={bad}) did not converge within k_max={ctrl.k_max} terms",
            terms=ctrl.k_max,
        )

    table = np.concatenate(chunks, axis=0)
    values = np.array(
        [math.fsum(table[: cut[z] + 1, z]) for z in range(z_max)], dtype=np.float64
    )
    return values, cut


def ml_recurrence(alpha: float, beta: float, lam: float, z_max: int) -> np.ndarray:
    r"""Evaluate the nabla Mittag-Leffler function at ``z = 1..z_max`` exactly.

    Summing the series over ``z`` first gives the generating function

    .. math::

        \sum_{z \ge 1} E_{\overline{\alpha, \beta}}(\lambda, z) w^{z - 1}
            = \frac{(1 - w)^{\alpha - \beta}}{(1 - w)^\alpha - \lambda},

    so the values follow from a convolution recurrence between the binomial
    coefficients of :math:`(1 - w)^\alpha` and :math:`(1 - w)^{\alpha - \beta}`.
    No truncation is involved, and for ``0 < alpha < min(1, beta)`` every
    term of the recurrence has the same sign. The series in :func:`ml_series`
    instead loses about ``log10(sum|terms| / |sum|)`` digits to cancellation
    when ``lambda < 0`` and ``z`` grows.
    """
    MLParams(alpha=alpha, beta=beta, lam=lam, z=z_max)
    j = np.arange(1, z_max, dtype=np.float64)
    g = np.ones(z_max)
    h = np.ones(z_max)
    g[1:] = np.cumprod((j - 1.0 - alpha) / j)
    h[1:] = np.cumprod((j - 1.0 - alpha + beta) / j)

    e = np.empty(z_max)
    scale = 1.0 / (1.0 - lam)
    for m in range(z_max):
        e[m] = (h[m] - float(np.dot(g[1 : m + 1], e[m - 1 :: -1] if m else e[:0]))) * scale
    return e


def ml(
    params: MLParams, ctrl: SeriesControl = DEFAULT_CONTROL, method: str = "series"
) -> float:
    r"""Nabla discrete Mittag-Leffler function.

    .. math::

        E_{\overline{\alpha, \beta}}(\lambda, z) =
            \sum_{k = 0}^\infty \lambda^k
            \frac{z^{\overline{k \alpha + \beta - 1}}}{\Gamma(k \alpha + \beta)}

    :arg method: ``"series"`` truncates the sum according to *ctrl*;
        ``"recurrence"`` uses :func:`ml_recurrence` and ignores *ctrl*.
    """
    if params.lam == 0:
        return rising(params.z, params.beta - 1) / math.gamma(params.beta)

    z = int(params.z)
    if method == "series":
        values, _ = ml_series(params.alpha, params.beta, params.lam, z, ctrl)
    elif method == "recurrence":
        values = ml_recurrence(params.alpha, params.beta, params.lam, z)
    else:
        raise ValueError(f"unknown method: {method!r}")
    return float(values[-1])


def ab_lambda(alpha: float) -> float:
    """Mittag-Leffler argument ``-alpha / (1 - alpha)`` used by the AB kernels."""
    return -alpha / (1.0 - alpha)


def ml_ab(
    alpha: float,
    z: int,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    method: str = "recurrence",
) -> float:
    """Kernel of the discrete generalized fractional integral operators.

    Equals :func:`ml` with ``beta = 1`` and ``lambda = -alpha / (1 - alpha)``.
    """
    if not 0 < alpha < 0.5:
        raise DomainError(f"AB kernel order must lie in (0, 1/2): {alpha}")
    return ml(MLParams(alpha=alpha, lam=ab_lambda(alpha), z=z), ctrl, method)


@lru_cache(maxsize=8192)
def ml_ab_table(
    alpha: float,
    z_max: int,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    method: str = "recurrence",
) -> np.ndarray:
    """Read-only array of :func:`ml_ab` at lags ``1..z_max`` (cached)."""
    if not 0 < alpha < 0.5:
        raise DomainError(f"AB kernel order must lie in (0, 1/2): {alpha}")
    if method == "series":
        values, _ = ml_series(alpha, 1.0, ab_lambda(alpha), z_max, ctrl)
    elif method == "recurrence":
        values = ml_recurrence(alpha, 1.0, ab_lambda(alpha), z_max)
    else:
        raise ValueError(f"unknown method: {method!r}")
    values.setflags(write=False)
    return values


@lru_cache(maxsize=8192)
def rising_kernel_table(alpha: float, z_max: int) -> np.ndarray:
    r"""Read-only array of :math:`m^{\overline{\alpha - 1}} / \Gamma(\alpha)` for ``m = 1..z_max``.

    Evaluated as the product :math:`\prod_{j=1}^{m-1} (1 + (\alpha - 1) / j)`,
    which is exact at ``alpha = 1`` and well defined down to ``alpha = 0``.
    """
    if not 0 <= alpha <= 1:
        raise DomainError(f"sum order must lie in [0, 1]: {alpha}")
    j = np.arange(1, z_max, dtype=np.float64)
    values = np.ones(z_max)
    values[1:] = np.cumprod(1.0 + (alpha - 1.0) / j)
    values.setflags(write=False)
    return values
