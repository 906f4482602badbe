import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmci import ci
from fmci import solvers as so
from fmci.errors import DomainError
from fmci.sketch import QueryResult, Sketch, SketchParams
from oracles import inv_alpha_minus_ref, inv_alpha_plus_ref

G = 0.57721566490153286061
LN2 = math.log(2)


def test_tail_closed_forms():
    # mpmath, 22 digits
    assert ci.tail_from_halfwidth(1.0, 1, "minus") == pytest.approx(0.6552199258161035685581, rel=1e-12)
    assert ci.tail_from_halfwidth(2 * LN2, 1, "plus") == pytest.approx(0.6640551537451625129681, rel=1e-12)
    assert ci.tail_from_halfwidth(1.0, 16, "minus") == pytest.approx(math.exp(-16 * (1 - G)), rel=1e-12)


def test_halfwidth_examples():
    assert ci.halfwidth_from_tail(math.exp(-(1 - G)), 1, "minus") == pytest.approx(1.0, abs=1e-12)
    # mpmath values at a0 = 16
    assert ci.halfwidth_from_tail(0.1, 16, "minus") == pytest.approx(0.62337402259804324, rel=1e-12)
    assert ci.halfwidth_from_tail(0.1, 16, "plus") == pytest.approx(0.76371907803218444, rel=1e-12)
    assert ci.halfwidth_from_tail(0.01, 16, "minus") == pytest.approx(0.84796859690899576, rel=1e-12)
    assert ci.halfwidth_from_tail(0.01, 16, "plus") == pytest.approx(1.12888908566493413, rel=1e-12)


@pytest.mark.parametrize("p", [0.1, 0.01, 0.005])
@pytest.mark.parametrize("a0", [1, 16, 64])
@pytest.mark.parametrize("side", ["plus", "minus"])
def test_tail_roundtrip(p, a0, side):
    h = ci.halfwidth_from_tail(p, a0, side)
    assert ci.tail_from_halfwidth(h, a0, side) == pytest.approx(p, rel=1e-9)


def test_halfwidth_vanishes_as_p_to_one():
    hs = [ci.halfwidth_from_tail(1 - e, 4, "minus") for e in (1e-2, 1e-4, 1e-8)]
    assert hs[0] > hs[1] > hs[2] > 0 and hs[2] < 1e-3


@pytest.mark.parametrize(
    "call",
    [
        lambda: ci.tail_from_halfwidth(0.0, 1, "minus"),
        lambda: ci.tail_from_halfwidth(-1.0, 1, "plus"),
        lambda: ci.tail_from_halfwidth(1.0, 1, "up"),
        lambda: ci.tail_from_halfwidth(1.0, 0, "plus"),
        lambda: ci.halfwidth_from_tail(1.0, 1, "plus"),
        lambda: ci.halfwidth_from_tail(0.0, 1, "plus"),
        lambda: ci.halfwidth_from_tail(0.1, 2.5, "plus"),
        lambda: ci.plan(1.0, 16),
        lambda: ci.plan(0.9, 16, "sideways"),
        lambda: ci.plan(0.9, 16, "two-sided", split=1.0),
        lambda: ci.min_log_length(0.0, 16),
    ],
)
def test_domain_errors(call):
    with pytest.raises(DomainError):
        call()


def test_tail_decreasing_in_h():
    hs = np.logspace(-3, 1.5, 300)
    for side, g in (("plus", so.g_plus), ("minus", so.g_minus)):
        expo = [g(h) for h in hs]
        assert all(0 < a < b for a, b in zip(expo, expo[1:]))
        v = [ci.tail_from_halfwidth(h, 4, side) for h in hs]
        assert all(a >= b for a, b in zip(v, v[1:]))
        # the minus tail underflows to 0.0 once 4 g_-(h) passes ~745 (h ~ 6)
        assert all(0 <= x < 1 for x in v)
    assert ci.tail_from_halfwidth(5.0, 4, "minus") > 0


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-4, 0.999), st.integers(1, 4096))
def test_width_shrinks_with_a0(p, a0):
    for side in ("plus", "minus"):
        assert ci.halfwidth_from_tail(p, 2 * a0, side) < ci.halfwidth_from_tail(p, a0, side)


# --- intervals --------------------------------------------------------------


def test_fresh_sketch_upper():
    params = SketchParams(0, 16, 4)
    iv = ci.interval(Sketch(params).query(), params, 0.9, "upper")
    assert iv.lower == 0.0
    # end-to-end value, mpmath
    assert iv.upper == pytest.approx(0.57991034829635201757, rel=1e-10)
    h_u = ci.halfwidth_from_tail(0.1, 16, "minus")
    assert iv.upper == pytest.approx(so.inv_harmonic_p(1.0, h_u + 2**-4), rel=1e-14)
    assert iv.plan.h_u == pytest.approx(h_u, rel=1e-14) and iv.plan.p_minus == pytest.approx(0.1)


def test_classical_degeneration():
    params = SketchParams(0, 1, 0)
    iv = ci.interval(3.0, params, 0.95, "upper")
    h_u = ci.halfwidth_from_tail(0.05, 1, "minus")
    assert iv.upper == pytest.approx(so.inv_harmonic_p(1.0, 3 * LN2 + h_u + 1.0), rel=1e-14)


def test_lower_mode_and_clamp():
    params = SketchParams(2, 4, 4)
    iv = ci.interval(0.0, params, 0.9, "lower")
    assert iv.lower == 0.0 and iv.upper == math.inf
    iv = ci.interval(8.0, params, 0.9, "lower")
    h_d = ci.halfwidth_from_tail(0.1, 16, "plus")
    assert iv.lower == pytest.approx(so.inv_harmonic_p(0.25, 8 * LN2 - h_d), rel=1e-14)


def test_lower_slack_option():
    params = SketchParams(2, 4, 4)
    a = ci.interval(8.0, params, 0.9, "two-sided")
    b = ci.interval(8.0, params, 0.9, "two-sided", lower_slack=True)
    assert b.lower < a.lower and b.upper == a.upper
    h_d = a.plan.h_d
    assert b.lower == pytest.approx(so.inv_harmonic_p(0.25, 8 * LN2 - h_d - 2**-4), rel=1e-14)


def test_interval_accepts_query_result():
    params = SketchParams(1, 2, 4)
    q = QueryResult(Y=np.full((2, 2), 5.0), mean=5.0, touched=4)
    assert ci.interval(q, params, 0.9, "two-sided") == ci.interval(5.0, params, 0.9, "two-sided")


def test_two_sided_split_budget():
    pl = ci.plan(0.9, 16, "two-sided", split=0.3)
    assert pl.p_plus == pytest.approx(0.03) and pl.p_minus == pytest.approx(0.07)
    assert ci.tail_from_halfwidth(pl.h_d, 16, "plus") + ci.tail_from_halfwidth(pl.h_u, 16, "minus") == pytest.approx(0.1, rel=1e-9)
    eq = ci.plan(0.9, 16, "two-sided")
    assert eq.p_plus == eq.p_minus == pytest.approx(0.05)


@pytest.mark.parametrize("mode", ci.MODES)
def test_nesting(mode):
    params = SketchParams(3, 2, 4)
    for y in (0.0, 2.0, 7.5):
        prev = None
        for alpha in (0.5, 0.8, 0.9, 0.95, 0.99, 0.999):
            iv = ci.interval(y, params, alpha, mode)
            assert iv.lower <= iv.upper
            if prev is not None:
                assert iv.lower <= prev.lower and iv.upper >= prev.upper
            prev = iv


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 30), st.floats(0, 30), st.sampled_from(ci.MODES))
def test_monotone_in_data(y1, y2, mode):
    params = SketchParams(2, 3, 4)
    a = ci.interval(min(y1, y2), params, 0.9, mode)
    b = ci.interval(max(y1, y2), params, 0.9, mode)
    assert a.lower <= b.lower and a.upper <= b.upper


# --- shortest split ---------------------------------------------------------


def _grid_lengths(p, a0, n=10_000):
    x = p * (np.arange(1, n + 1) / (n + 1))
    return inv_alpha_plus_ref(-np.log(x) / a0) + inv_alpha_minus_ref(-np.log(p - x) / a0)


@pytest.mark.parametrize("p", [0.1, 0.05, 0.01])
@pytest.mark.parametrize("a0", [1, 16, 64])
def test_min_log_length_optimal(p, a0):
    x, h_d, h_u = ci.min_log_length(p, a0)
    assert 0 < x < p
    assert abs(ci.split_stationarity(x, p, a0)[0]) <= 1e-10
    assert h_d + h_u <= _grid_lengths(p, a0).min() + 1e-6
    eq = ci.plan(1 - p, a0, "two-sided")
    assert h_d + h_u <= eq.h_d + eq.h_u + 1e-12


@pytest.mark.parametrize("x_frac", [0.1, 0.35, 0.5, 0.8])
def test_stationarity_derivatives(x_frac):
    p, a0 = 0.1, 16
    x = x_frac * p
    e = 1e-6 * p
    f = lambda v: ci.split_stationarity(v, p, a0)  # noqa: E731
    _, d1, d2 = f(x)
    assert d1 == pytest.approx((f(x + e)[0] - f(x - e)[0]) / (2 * e), rel=1e-5)
    assert d2 == pytest.approx((f(x + e)[1] - f(x - e)[1]) / (2 * e), rel=1e-4)
    # f is proportional to the derivative of the total length h_d + h_u
    L = lambda v: ci.halfwidth_from_tail(v, a0, "plus") + ci.halfwidth_from_tail(p - v, a0, "minus")  # noqa: E731
    dL = (L(x + e) - L(x - e)) / (2 * e)
    assert np.sign(dL) == np.sign(f(x)[0]) or abs(f(x)[0]) < 1e-12


def test_minlen_plan():
    pl = ci.plan(0.95, 64, "two-sided-minlen")
    assert pl.p_plus + pl.p_minus == pytest.approx(0.05, rel=1e-14)
    assert ci.tail_from_halfwidth(pl.h_d, 64, "plus") == pytest.approx(pl.p_plus, rel=1e-9)
    assert ci.tail_from_halfwidth(pl.h_u, 64, "minus") == pytest.approx(pl.p_minus, rel=1e-9)
