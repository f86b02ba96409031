"""Energy-split and pulse-budget optimization over the analytic objectives.

Every search starts from an exhaustive grid, because the mean-time curve is
not known to be unimodal and the CDF objective is piecewise constant in
places. Golden-section refinement then runs only between the neighbours of
the best grid point, and a refined point replaces the grid optimum only when
it is strictly better. Ties always go to the smaller argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

from .acqstats import expected_time
from .errors import DomainError, NoFeasiblePointError
from .model import SystemParams

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_BRACKET = (0.05, 0.95)


class Objective(str, Enum):
    MEAN_TIME = "mean_time"
    CDF_AT_T = "cdf_at_t"


@dataclass(frozen=True)
class SweepPoint:
    alpha: float
    n0: int
    objective: float
    p_pulse: float
    p_attempt: float


@dataclass(frozen=True)
class OptResult:
    """Outcome of a search.

    ``argopt`` is the minimizing (mean time) or maximizing (CDF) argument.
    ``grid`` holds the coarse scan; it is empty when a custom objective was
    supplied, since no probabilities are available then.
    """

    argopt: float
    objective_value: float
    grid: tuple[SweepPoint, ...]
    refinement_iterations: int
    maximize: bool = False


def default_alpha_grid(n: int = 200, lo: float = 0.0, hi: float = 1.0) -> list[float]:
    """Cell midpoints ``lo + (i + 1/2)(hi - lo)/n``; stays strictly inside ``(lo, hi)``."""
    if n < 1:
        raise DomainError(f"grid size must be >= 1, got {n!r}")
    step = (hi - lo) / n
    return [lo + (i + 0.5) * step for i in range(n)]


def evaluate(
    params: SystemParams, alpha: float, objective: Objective = Objective.MEAN_TIME, t: float | None = None
) -> SweepPoint:
    """Evaluate one objective value; degenerate cases map to +inf (time) or 0 (CDF)."""
    objective = Objective(objective)
    if objective is Objective.CDF_AT_T and t is None:
        raise DomainError("the CDF objective needs a time t")
    try:
        model = expected_time(params, alpha)
    except DomainError:
        if not 0.0 < float(alpha) < 1.0:
            raise
        # only the paper normalization fails here, at p_N in {0, 1}
        value = math.inf if objective is Objective.MEAN_TIME else 0.0
        return SweepPoint(float(alpha), params.max_pulses, value, math.nan, math.nan)
    if objective is Objective.MEAN_TIME:
        value = model.expected_time
        if math.isnan(value):
            value = math.inf
    else:
        value = model.cdf(t)
    return SweepPoint(float(alpha), params.max_pulses, value, model.p_pulse, model.p_attempt)


def sweep_alpha(
    params: SystemParams,
    alpha_grid: Sequence[float],
    objective: Objective = Objective.MEAN_TIME,
    t: float | None = None,
) -> list[SweepPoint]:
    for a in alpha_grid:
        if not 0.0 < a < 1.0:
            raise DomainError(f"alpha grid values must lie in (0, 1), got {a!r}")
    return [evaluate(params, a, objective, t) for a in alpha_grid]


def golden_section(
    f: Callable[[float], float], a: float, b: float, tol: float
) -> tuple[float, float, int]:
    """Minimize ``f`` on ``[a, b]`` until the bracket is no wider than ``tol``.

    Returns ``(x, f(x), iterations)`` for the best point evaluated; ties keep
    the smaller ``x``.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    best = min((fc, c), (fd, d))
    it = 0
    while b - a > tol:
        it += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
            best = min(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
            best = min(best, (fd, d))
    return best[1], best[0], it


def _grid_then_refine(
    f: Callable[[float], float], grid: Sequence[float], lo: float, hi: float, tol: float
) -> tuple[float, float, int]:
    values = [f(x) for x in grid]
    finite = [i for i, v in enumerate(values) if math.isfinite(v)]
    if not finite:
        raise NoFeasiblePointError("objective is non-finite on the whole grid")
    i = min(finite, key=lambda k: (values[k], grid[k]))
    x_best, f_best = grid[i], values[i]
    left = grid[i - 1] if i > 0 else lo
    right = grid[i + 1] if i + 1 < len(grid) else hi
    it = 0
    if right - left > tol:
        x, fx, it = golden_section(f, left, right, tol)
        if fx < f_best or (fx == f_best and x < x_best):
            x_best, f_best = x, fx
    return x_best, f_best, it


def _check_bracket(bracket: tuple[float, float]) -> tuple[float, float]:
    lo, hi = map(float, bracket)
    if not 0.0 < lo < hi < 1.0:
        raise DomainError(f"bracket must satisfy 0 < lo < hi < 1, got {bracket!r}")
    return lo, hi


def _bracket_grid(lo: float, hi: float, n: int) -> list[float]:
    if n < 2:
        raise DomainError(f"grid size must be >= 2, got {n!r}")
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def optimize_alpha_mean_time(
    params: SystemParams,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    tol: float = 1e-4,
    grid_size: int = 64,
    objective_fn: Callable[[float], float] | None = None,
) -> OptResult:
    """Minimize E[T] over the energy split for a fixed pulse budget.

    Parameters
    ----------
    objective_fn
        Replaces the analytic E[T] (used for testing the search itself).
    """
    lo, hi = _check_bracket(bracket)
    grid = _bracket_grid(lo, hi, grid_size)
    if objective_fn is None:
        points = tuple(sweep_alpha(params, grid))
        f = lambda a: evaluate(params, a).objective  # noqa: E731
    else:
        points = ()
        f = objective_fn
    x, fx, it = _grid_then_refine(f, grid, lo, hi, tol)
    return OptResult(x, fx, points, it)


def optimize_alpha_cdf(
    params: SystemParams,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    tol: float = 1e-4,
    t: float = 12.0,
    grid_size: int = 64,
    objective_fn: Callable[[float], float] | None = None,
) -> OptResult:
    """Maximize P(T <= t) over the energy split.

    Raises ``NoFeasiblePointError`` when the CDF is zero on the whole grid,
    e.g. for ``t`` below the shortest possible acquisition.
    """
    lo, hi = _check_bracket(bracket)
    if not t > 0:
        raise DomainError(f"t must be positive, got {t!r}")
    grid = _bracket_grid(lo, hi, grid_size)
    if objective_fn is None:
        points = tuple(sweep_alpha(params, grid, Objective.CDF_AT_T, t))
        g = lambda a: evaluate(params, a, Objective.CDF_AT_T, t).objective  # noqa: E731
    else:
        points = ()
        g = objective_fn
    if all(not g(a) > 0.0 for a in grid):
        raise NoFeasiblePointError(f"P(T <= {t}) is zero across the bracket")
    x, fx, it = _grid_then_refine(lambda a: -g(a), grid, lo, hi, tol)
    return OptResult(x, -fx, points, it, maximize=True)


def optimize_n0(
    params: SystemParams,
    n_lo: int,
    n_hi: int,
    alpha0: float,
    objective_fn: Callable[[int], float] | None = None,
) -> OptResult:
    """Exhaustive scan of the pulse budget ``N0`` in ``[n_lo, n_hi]`` at fixed ``alpha0``."""
    if not (int(n_lo) == n_lo and int(n_hi) == n_hi and 2 <= n_lo < n_hi):
        raise DomainError(f"need integers 2 <= n_lo < n_hi, got {n_lo!r}, {n_hi!r}")
    ns = range(int(n_lo), int(n_hi) + 1)
    if objective_fn is None:
        points = tuple(evaluate(params.replace(max_pulses=n), alpha0) for n in ns)
        values = [p.objective for p in points]
    else:
        points = ()
        values = [objective_fn(n) for n in ns]
    finite = [k for k, v in enumerate(values) if math.isfinite(v)]
    if not finite:
        raise NoFeasiblePointError("E[T] is infinite for every N0 in the range")
    k = min(finite, key=lambda j: (values[j], j))
    return OptResult(ns[k], values[k], points, 0)


def argmin_alpha_on_grid(points: Sequence[SweepPoint], maximize: bool = False) -> SweepPoint:
    """Best grid point, ties to the smaller alpha."""
    sign = -1.0 if maximize else 1.0
    return min(points, key=lambda p: (sign * p.objective, p.alpha))
