"""Confidence intervals for the distinct count F0 from a sketch query.

With a0 = 2^r0 c0 registers and lam = ln 2, the register mean Y satisfies

    P(lam*Y - E > h_d) <= p_plus,   P(E - lam*Y > h_u) <= p_minus,

where E = H_p0(F0) and the tails are explicit exponentials in a0. Inverting
H_p0 turns that into an interval for F0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .sketch import QueryResult, SketchParams
from .solvers import (
    Bracket,
    g_minus,
    g_plus,
    halley_solve,
    inv_alpha_minus,
    inv_alpha_plus,
    inv_harmonic_p,
    t_minus,
    t_plus,
)
from .specfun import LN2, tetragamma, trigamma

PLUS = "plus"
MINUS = "minus"
MODES = ("upper", "lower", "two-sided", "two-sided-minlen")


@dataclass(frozen=True)
class HalfWidths:
    h_d: float | None  # slack below lam*Y, driven by p_plus
    h_u: float | None  # slack above lam*Y, driven by p_minus


@dataclass(frozen=True)
class TailProbs:
    p_plus: float | None
    p_minus: float | None


@dataclass(frozen=True)
class Plan:
    mode: str
    alpha: float
    a0: int
    h_d: float | None
    h_u: float | None
    p_plus: float | None
    p_minus: float | None


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    confidence: float
    plan: Plan
    mean_y: float
    p0: float


def _side(side: str) -> str:
    if side not in (PLUS, MINUS):
        raise DomainError(f"side must be 'plus' or 'minus', got {side!r}")
    return side


def _a0(a0) -> int:
    if int(a0) != a0 or a0 < 1:
        raise DomainError(f"a0 must be a positive integer, got {a0!r}")
    return int(a0)


def tail_from_halfwidth(h: float, a0: int, side: str) -> float:
    """Tail bound exp(-a0 g(h)); ``minus`` bounds undershoot, ``plus`` overshoot."""
    h = float(h)
    if not (h > 0) or not math.isfinite(h):
        raise DomainError(f"half-width must be finite and > 0, got {h!r}")
    a0 = _a0(a0)
    g = g_minus(h) if _side(side) == MINUS else g_plus(h)
    return math.exp(-a0 * g)


def halfwidth_from_tail(p: float, a0: int, side: str) -> float:
    """Inverse of :func:`tail_from_halfwidth` in h."""
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"tail probability must lie in (0, 1), got {p!r}")
    y = -math.log(p) / _a0(a0)
    return inv_alpha_minus(y) if _side(side) == MINUS else inv_alpha_plus(y)


# ---------------------------------------------------------------------------
# shortest two-sided split


def _split_terms(x: float, p: float, a0: int):
    h_d = halfwidth_from_tail(x, a0, PLUS)
    h_u = halfwidth_from_tail(p - x, a0, MINUS)
    return h_d, h_u, t_plus(h_d), t_minus(h_u)


def split_stationarity(x: float, p: float, a0: int) -> tuple[float, float, float]:
    """(f, f', f'') of f(x) = x t_+ - (p - x) t_-, where x is the upper-tail
    share p_plus and t_+ / t_- are evaluated at the matching half-widths.
    f vanishes where d(h_d + h_u)/dx does."""
    _, _, tp, tm = _split_terms(x, p, a0)
    q = p - x
    s1p = trigamma(1.0 - tp)
    s1m = trigamma(1.0 + tm)
    f = x * tp - q * tm
    d1 = tp - 1.0 / (a0 * tp * s1p) + tm - 1.0 / (a0 * tm * s1m)
    dtp = -1.0 / (a0 * x * tp * s1p)
    dtm = 1.0 / (a0 * q * tm * s1m)
    d2 = dtp * (1.0 + (s1p - tp * tetragamma(1.0 - tp)) / (a0 * (tp * s1p) ** 2))
    d2 += dtm * (1.0 + (s1m + tm * tetragamma(1.0 + tm)) / (a0 * (tm * s1m) ** 2))
    return f, d1, d2


def min_log_length(p: float, a0: int, tol: float = 1e-13) -> tuple[float, float, float]:
    """Split p = p_plus + p_minus minimising h_d + h_u; returns (p_plus, h_d, h_u)."""
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    a0 = _a0(a0)
    eps = 1e-14 * p
    rep = halley_solve(
        lambda x: split_stationarity(x, p, a0),
        Bracket(eps, p - eps),
        tol=tol,
        x0=0.5 * p,
        increasing=True,
    )
    x = rep.root
    h_d, h_u, _, _ = _split_terms(x, p, a0)
    return x, h_d, h_u


# ---------------------------------------------------------------------------
# intervals


def plan(alpha: float, a0: int, mode: str = "upper", split: float | None = None) -> Plan:
    """Half-widths and tail budget for confidence ``alpha`` over ``a0`` registers.

    ``split`` is the fraction of 1 - alpha given to p_plus in two-sided mode.
    """
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    a0 = _a0(a0)
    p = 1.0 - alpha
    if mode == "upper":
        return Plan(mode, alpha, a0, None, halfwidth_from_tail(p, a0, MINUS), None, p)
    if mode == "lower":
        return Plan(mode, alpha, a0, halfwidth_from_tail(p, a0, PLUS), None, p, None)
    if mode == "two-sided-minlen":
        x, h_d, h_u = min_log_length(p, a0)
        return Plan(mode, alpha, a0, h_d, h_u, x, p - x)
    share = 0.5 if split is None else float(split)
    if not (0.0 < share < 1.0):
        raise DomainError(f"split must lie in (0, 1), got {split!r}")
    pp = p * share
    pm = p - pp
    return Plan(
        mode,
        alpha,
        a0,
        halfwidth_from_tail(pp, a0, PLUS),
        halfwidth_from_tail(pm, a0, MINUS),
        pp,
        pm,
    )


def interval_from_plan(
    mean_y: float, params: SketchParams, pl: Plan, lower_slack: bool = False
) -> Interval:
    """Apply a plan to an observed register mean.

    The truncated-mantissa bias adds 2^-z0 to the upper endpoint's argument.
    ``lower_slack=True`` also subtracts it from the lower endpoint's argument,
    which makes the lower endpoint robust to that bias as well.
    """
    p0 = params.p0
    slack = 2.0 ** -params.z0
    centre = LN2 * float(mean_y)
    if pl.h_u is None:
        upper = math.inf
    else:
        upper = inv_harmonic_p(p0, centre + pl.h_u + slack)
    if pl.h_d is None:
        lower = 0.0
    else:
        arg = centre - pl.h_d - (slack if lower_slack else 0.0)
        lower = inv_harmonic_p(p0, max(arg, 0.0))
    return Interval(lower, upper, pl.alpha, pl, float(mean_y), p0)


def interval(
    q: QueryResult | float,
    params: SketchParams,
    alpha: float = 0.95,
    mode: str = "upper",
    split: float | None = None,
    lower_slack: bool = False,
) -> Interval:
    """Confidence interval for F0 from a query result (or its mean)."""
    mean_y = q.mean if isinstance(q, QueryResult) else float(q)
    return interval_from_plan(mean_y, params, plan(alpha, params.a0, mode, split), lower_slack)
