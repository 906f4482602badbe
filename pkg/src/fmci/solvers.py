"""Bracketed scalar root finding and the four inverse problems behind the
confidence intervals: inverse digamma, inverse p-harmonic, and the inverses
of the two large-deviation rate functions g_-(x) and g_+(x).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import ConvergenceError, DomainError
from .specfun import (
    EULER_GAMMA,
    digamma,
    harmonic_p_all,
    ln_gamma,
    tetragamma,
    trigamma,
)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100
TINY = 1e-300
_EPS = 2.220446049250313e-16
_WIDEN = 8 * _EPS
_LOG_MAX = 709.78

Triple = Callable[[float], tuple]


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise DomainError(f"invalid bracket [{self.lo!r}, {self.hi!r}]")



@dataclass(frozen=True)
class SolveReport:
    root: float
    iterations: int
    method: str  # "halley", "bisection" or "halley_then_bisection"
    residual: float


def _split(lo: float, hi: float) -> float:
    # geometric split when the bracket spans decades
    if lo > 0 and hi > 4.0 * lo:
        return math.sqrt(lo) * math.sqrt(hi)
    return 0.5 * (lo + hi)


def halley_solve(
    fun: Triple,
    bracket: Bracket,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    x0: float | None = None,
    increasing: bool | None = None,
) -> SolveReport:
    """Safeguarded Halley iteration for a monotone function on ``bracket``.

    ``fun(x)`` returns ``(f, f', f'')``. The sign of f at each iterate shrinks a
    maintained bracket; a Halley step that leaves it (or is not finite) is
    replaced by a bisection step. ``increasing`` gives the direction of f; when
    omitted it is read off f' at the start point.
    """
    lo, hi = float(bracket.lo), float(bracket.hi)
    x = _split(lo, hi) if x0 is None else float(x0)
    if not (lo <= x <= hi):
        raise DomainError("start point outside bracket")
    n_halley = n_bisect = 0
    best_x, best_f = x, math.inf

    for it in range(1, max_iter + 1):
        f, d1, d2 = fun(x)
        if not math.isfinite(f):
            raise ConvergenceError(f"non-finite residual at x={x!r}", best=best_x)
        if abs(f) < abs(best_f):
            best_x, best_f = x, f
        if increasing is None:
            increasing = d1 >= 0
        if abs(f) <= tol or f == 0.0:
            return SolveReport(x, it - 1, _method(n_halley, n_bisect), f)
        if (f > 0) == increasing:
            hi = x
        else:
            lo = x

        step = None
        denom = 2.0 * d1 * d1 - f * d2
        if denom != 0.0 and math.isfinite(denom) and math.isfinite(d1):
            step = 2.0 * f * d1 / denom
            x_new = x - step
            if not (math.isfinite(x_new) and lo < x_new < hi):
                step = None
        if step is None:
            x_new = _split(lo, hi)
            step = x - x_new
            n_bisect += 1
        else:
            n_halley += 1
        x = x_new
        scale = max(1.0, abs(x))
        if abs(step) <= tol * scale or hi - lo <= tol * scale:
            f = fun(x)[0]
            return SolveReport(x, it, _method(n_halley, n_bisect), f)

    raise ConvergenceError(f"no convergence in {max_iter} iterations", best=best_x)


def _method(n_halley: int, n_bisect: int) -> str:
    if n_bisect == 0:
        return "halley"
    if n_halley == 0:
        return "bisection"
    return "halley_then_bisection"


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-15,
    max_iter: int = 4000,
) -> float:
    """Plain sign bisection; independent reference for :func:`halley_solve`."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise DomainError("no sign change over bracket")
    for _ in range(max_iter):
        mid = _split(lo, hi)
        if not (lo < mid < hi) or hi - lo <= tol * max(1.0, abs(mid)):
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return _split(lo, hi)


# ---------------------------------------------------------------------------
# brackets: the *_bounds functions return the raw analytic bounds, which may
# coincide in floating point; _widen turns them into a usable Bracket.


def _widen(bounds: tuple[float, float]) -> Bracket:
    lo, hi = bounds
    lo_w = lo - abs(lo) * _WIDEN
    if lo > 0:
        lo_w = max(lo_w, TINY)
    return Bracket(lo_w, hi + abs(hi) * _WIDEN + TINY)


def _finite(y: float, name: str = "y") -> float:
    y = float(y)
    if not math.isfinite(y):
        raise DomainError(f"{name} must be finite, got {y!r}")
    return y


def digamma_bounds(y: float) -> tuple[float, float]:
    """e^y < psi^{-1}(y) < e^y + 1/2, tightened near the pole for y < -gamma."""
    y = _finite(y)
    ey = math.exp(y) if y < _LOG_MAX else math.inf
    lo, hi = ey, ey + 0.5
    if y < -EULER_GAMMA:
        # psi(x) = -1/x - gamma + O(x) near 0 gives 1/(1-gamma-y) < x < 1/(-gamma-y)
        lo = max(lo, 1.0 / (1.0 - EULER_GAMMA - y))
        hi = min(hi, 1.0 / (-EULER_GAMMA - y))
    return max(lo, TINY), hi


def harmonic_p_bounds(p: float, y: float) -> tuple[float, float]:
    """Piecewise bounds on H_p^{-1}(y) for y > 0, lower bound clamped above 0."""
    a = math.exp(y - EULER_GAMMA) if y - EULER_GAMMA < _LOG_MAX else math.inf
    hi = a / p - 0.5
    lo = a - 1.0
    if p < 1.0:
        lp = math.log1p(-p)
        if a > p * (0.5 - 1.0 / ((math.e - 1.0) * lp)):
            lo = max(lo, a / p - math.e + 1.0 / lp)
    return max(lo, TINY), hi


def alpha_minus_bounds(y: float) -> tuple[float, float]:
    if y < 3.0:
        return math.sqrt(y / 50.0), math.pi * math.sqrt(2.0 * y / 3.0)
    return (
        (2.0 / 3.0) * (math.log(y + 0.5) + EULER_GAMMA),
        2.0 * (math.log(4.0 * y / 3.0 + 1.0) + EULER_GAMMA),
    )


def alpha_plus_bounds(y: float) -> tuple[float, float]:
    a = (3.0 - math.pi**2 / 6.0) / 2.0
    b = y / 2.0
    q = b + 1.0 - a
    inner = (-q + math.sqrt(q * q + 4.0 * a)) / (2.0 * a)
    c = math.sqrt(max(0.0, 1.0 - inner))
    lo = max(-math.log1p(-c) - EULER_GAMMA, math.pi**2 * c / 6.0)
    hi = 2.0 * math.sqrt((y + 1.0) ** 2 - 1.0)
    return max(lo, TINY), hi


# ---------------------------------------------------------------------------
# inverse problems


def inv_digamma(y: float, tol: float = DEFAULT_TOL) -> float:
    """x > 0 with psi(x) = y."""
    return inv_digamma_report(y, tol).root


def inv_digamma_report(y: float, tol: float = DEFAULT_TOL) -> SolveReport:
    y = _finite(y)
    bounds = digamma_bounds(y)
    if math.isinf(bounds[1]):
        raise DomainError(f"psi^-1({y}) overflows")
    br = _widen(bounds)

    def fun(x):
        return digamma(x) - y, trigamma(x), tetragamma(x)

    return halley_solve(fun, br, tol, x0=0.5 * (br.lo + br.hi), increasing=True)


def inv_harmonic_p(p: float, y: float, tol: float = DEFAULT_TOL) -> float:
    """x >= 0 with H_p(x) = y; inf when the answer exceeds double range."""
    rep = inv_harmonic_p_report(p, y, tol)
    return rep.root


def inv_harmonic_p_report(p: float, y: float, tol: float = DEFAULT_TOL) -> SolveReport:
    p = float(p)
    y = _finite(y)
    if not (0.0 < p <= 1.0):
        raise DomainError(f"p must lie in (0, 1], got {p!r}")
    if y < 0:
        raise DomainError(f"y must be >= 0, got {y!r}")
    if y == 0.0:
        return SolveReport(0.0, 0, "halley", 0.0)
    lo, hi = harmonic_p_bounds(p, y)
    if math.isinf(lo):
        return SolveReport(math.inf, 0, "halley", 0.0)
    br = _widen((lo, min(hi, 1e308)))

    def fun(x):
        h, d1, d2 = harmonic_p_all(p, x)
        return h - y, d1, d2

    return halley_solve(fun, br, tol, x0=0.5 * (br.lo + br.hi), increasing=True)


def t_minus(x: float) -> float:
    """Maximiser t_-(x) = psi^{-1}(x - gamma) - 1 of (x-gamma) t - lnGamma(1+t)."""
    return inv_digamma(x - EULER_GAMMA) - 1.0


def t_plus(x: float) -> float:
    """Maximiser t_+(x) = 1 - psi^{-1}(-x - gamma) of (x+gamma) t - lnGamma(1-t)."""
    return 1.0 - inv_digamma(-x - EULER_GAMMA)


def g_minus(x: float) -> float:
    """Rate function for the lower tail: max_t (x-gamma) t - lnGamma(1+t)."""
    t = t_minus(x)
    return (x - EULER_GAMMA) * t - ln_gamma(1.0 + t)


def g_plus(x: float) -> float:
    """Rate function for the upper tail: max_t (x+gamma) t - lnGamma(1-t)."""
    s = inv_digamma(-x - EULER_GAMMA)
    return (x + EULER_GAMMA) * (1.0 - s) - ln_gamma(s)


def _minus_triple(y):
    def fun(x):
        t = t_minus(x)
        g = (x - EULER_GAMMA) * t - ln_gamma(1.0 + t)
        return g - y, t, 1.0 / trigamma(1.0 + t)

    return fun


def _plus_triple(y):
    def fun(x):
        s = inv_digamma(-x - EULER_GAMMA)
        t = 1.0 - s
        g = (x + EULER_GAMMA) * t - ln_gamma(s)
        return g - y, t, 1.0 / trigamma(s)

    return fun


def _positive(y: float) -> float:
    y = _finite(y)
    if not (y > 0):
        raise DomainError(f"y must be > 0, got {y!r}")
    return y


def inv_alpha_minus(y: float, tol: float = DEFAULT_TOL) -> float:
    """x > 0 with g_-(x) = y."""
    return inv_alpha_minus_report(y, tol).root


def inv_alpha_minus_report(y: float, tol: float = DEFAULT_TOL) -> SolveReport:
    y = _positive(y)
    br = _widen(alpha_minus_bounds(y))
    return halley_solve(_minus_triple(y), br, tol, increasing=True)


def inv_alpha_plus(y: float, tol: float = DEFAULT_TOL) -> float:
    """x > 0 with g_+(x) = y."""
    return inv_alpha_plus_report(y, tol).root


def inv_alpha_plus_report(y: float, tol: float = DEFAULT_TOL) -> SolveReport:
    y = _positive(y)
    br = _widen(alpha_plus_bounds(y))
    return halley_solve(_plus_triple(y), br, tol, increasing=True)
