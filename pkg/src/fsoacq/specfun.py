"""Special functions and adaptive quadrature used by the analytic model.

Everything here works on Python floats in double precision. The exponential
integral and the modified Bessel function are summed directly (power series
for moderate arguments, asymptotic series for large ones) so that their
accuracy does not depend on a third-party backend.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Callable

from .errors import ConvergenceError, DomainError

EULER_GAMMA = 0.57721566490153286060651209008240243

# Ei: power series below, asymptotic expansion above.
_EI_SWITCH = 40.0
# I0: power series below, Hankel asymptotic expansion above.
_I0_SWITCH = 50.0

_SQRT2 = math.sqrt(2.0)
_STD_NORMAL = NormalDist()


def _ei_series_remainder(x: float) -> float:
    """Sum_{k>=1} x^k / (k * k!), i.e. Ei(x) - ln(x) - gamma for x > 0."""
    term = 1.0
    total = 0.0
    k = 0
    while True:
        k += 1
        term *= x / k
        contrib = term / k
        total += contrib
        if contrib <= 1e-17 * total:
            return total


def _ei_asymptotic_scaled(x: float) -> float:
    """exp(-x) * Ei(x) from the divergent series (1/x) * sum k!/x^k, x large."""
    total = 1.0
    term = 1.0
    k = 0
    while True:
        k += 1
        nxt = term * k / x
        if nxt >= term:
            break
        term = nxt
        total += term
        if term < 1e-17 * total:
            break
    return total / x


def exp_integral_ei(x: float) -> float:
    """Exponential integral Ei(x) for x > 0.

    Returns ``inf`` once the result exceeds the double range (x > ~716).
    """
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"Ei(x) requires x > 0, got {x!r}")
    if x <= _EI_SWITCH:
        return EULER_GAMMA + math.log(x) + _ei_series_remainder(x)
    try:
        return math.exp(x) * _ei_asymptotic_scaled(x)
    except OverflowError:
        return math.inf


def exp_scaled_ei(x: float) -> float:
    """exp(-x) * Ei(x), finite for every x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"Ei(x) requires x > 0, got {x!r}")
    if x <= _EI_SWITCH:
        return math.exp(-x) * exp_integral_ei(x)
    return _ei_asymptotic_scaled(x)


def ei_log_remainder(x: float) -> float:
    """Ei(x) - ln(x) - gamma, computed without cancellation for small x.

    This quantity is strictly positive for x > 0 and tends to 0 as x -> 0+.
    """
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"Ei(x) requires x > 0, got {x!r}")
    if x <= _EI_SWITCH:
        return _ei_series_remainder(x)
    return exp_integral_ei(x) - math.log(x) - EULER_GAMMA


def _i0_series(x: float) -> float:
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        total += term
        if term <= 1e-17 * total:
            return total


def _i0_asymptotic_scaled(x: float) -> float:
    # e^{-x} I0(x) ~ (2 pi x)^{-1/2} sum_k ((2k-1)!!)^2 / (k! (8x)^k)
    total = 1.0
    term = 1.0
    k = 0
    while True:
        k += 1
        nxt = term * (2 * k - 1) ** 2 / (8.0 * k * x)
        if nxt >= term:
            break
        term = nxt
        total += term
        if term < 1e-17 * total:
            break
    return total / math.sqrt(2.0 * math.pi * x)


def bessel_i0(x: float) -> float:
    """Modified Bessel function of the first kind, order zero."""
    x = abs(float(x))
    if x <= _I0_SWITCH:
        return _i0_series(x)
    try:
        return math.exp(x) * _i0_asymptotic_scaled(x)
    except OverflowError:
        return math.inf


def bessel_i0e(x: float) -> float:
    """Exponentially scaled I0: exp(-|x|) * I0(x)."""
    x = abs(float(x))
    if x <= _I0_SWITCH:
        return math.exp(-x) * _i0_series(x)
    return _i0_asymptotic_scaled(x)


def gaussian_q(x: float) -> float:
    """Gaussian tail probability Q(x) = 1 - Phi(x)."""
    return 0.5 * math.erfc(x / _SQRT2)


def gaussian_q_inv(p: float) -> float:
    """Inverse of :func:`gaussian_q` on (0, 1)."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"Q^-1(p) requires 0 < p < 1, got {p!r}")
    x = -_STD_NORMAL.inv_cdf(p)
    # one Newton step on Q(x) - p; dQ/dx = -phi(x)
    dens = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if dens > 0.0:
        x += (gaussian_q(x) - p) / dens
    return x


@dataclass(frozen=True)
class QuadratureSpec:
    """Stopping rule for :func:`integrate`."""

    abs_tol: float = 1e-13
    rel_tol: float = 1e-11
    max_subdivisions: int = 20000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if int(self.max_subdivisions) < 1:
            raise DomainError("max_subdivisions must be >= 1")


_INITIAL_PANELS = 8


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h * (fa + 4.0 * fm + fb) / 6.0


class _Panel:
    __slots__ = ("a", "b", "fa", "fm", "fb", "whole", "value", "error", "_children")

    def __init__(self, f, a, b, fa, fm, fb, whole):
        self.a, self.b = a, b
        self.fa, self.fm, self.fb = fa, fm, fb
        self.whole = whole
        m = 0.5 * (a + b)
        flm = f(0.5 * (a + m))
        frm = f(0.5 * (m + b))
        left = _simpson(fa, flm, fm, m - a)
        right = _simpson(fm, frm, fb, b - m)
        self.value = left + right + (left + right - whole) / 15.0
        self.error = abs(left + right - whole) / 15.0
        self._children = (flm, frm, left, right)

    def split(self, f):
        flm, frm, left, right = self._children
        m = 0.5 * (self.a + self.b)
        return (
            _Panel(f, self.a, m, self.fa, flm, self.fm, left),
            _Panel(f, m, self.b, self.fm, frm, self.fb, right),
        )

    def __lt__(self, other):
        # heapq is a min-heap; largest error first
        return self.error > other.error


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec | None = None,
) -> float:
    """Globally adaptive Simpson quadrature of ``f`` over ``[a, b]``.

    The interval with the largest local error estimate is bisected until the
    summed estimate satisfies ``error <= max(abs_tol, rel_tol * |result|)``.

    Raises
    ------
    ConvergenceError
        If ``max_subdivisions`` bisections do not reach the tolerance. The
        exception carries the best estimate found.
    """
    spec = spec or QuadratureSpec()
    a = float(a)
    b = float(b)
    if not a <= b:
        raise DomainError(f"integrate requires a <= b, got [{a!r}, {b!r}]")
    if a == b:
        return 0.0

    edges = [a + (b - a) * i / _INITIAL_PANELS for i in range(_INITIAL_PANELS + 1)]
    edges[-1] = b
    fvals = [f(x) for x in edges]
    heap: list[_Panel] = []
    for i in range(_INITIAL_PANELS):
        lo, hi = edges[i], edges[i + 1]
        fm = f(0.5 * (lo + hi))
        whole = _simpson(fvals[i], fm, fvals[i + 1], hi - lo)
        heap.append(_Panel(f, lo, hi, fvals[i], fm, fvals[i + 1], whole))
    heapq.heapify(heap)

    splits = 0
    while True:
        value = math.fsum(p.value for p in heap)
        error = math.fsum(p.error for p in heap)
        if not math.isfinite(value):
            raise ConvergenceError("non-finite integrand", value, error)
        if error <= max(spec.abs_tol, spec.rel_tol * abs(value)):
            return value
        if splits >= spec.max_subdivisions:
            raise ConvergenceError("max_subdivisions exceeded", value, error)
        # bisect a batch of the worst panels before re-summing
        for _ in range(min(len(heap), 16)):
            worst = heapq.heappop(heap)
            left, right = worst.split(f)
            heapq.heappush(heap, left)
            heapq.heappush(heap, right)
            splits += 1
            if splits >= spec.max_subdivisions:
                break
