"""Special functions: log-gamma, polygamma (orders 0-2), Lerch transcendent,
harmonic numbers and their p-modification.

Scalar cores are plain ``math`` code so numba can compile them; the ``_py``
variants stay importable for the numpy fallback path and for parity tests.
"""
import math

import numpy as np

from . import _accel
from .errors import DomainError

EULER_GAMMA = 0.5772156649015329
LN2 = math.log(2.0)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# B_2 .. B_16
_BERNOULLI = np.array(
    [1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510]
)
_SHIFT_TO = 8.0
_LERCH_QUAD_Z = 0.999
_LERCH_RTOL = 1e-14


def _zeta_minus_one(kmax=48):
    """zeta(k) - 1 for k = 0..kmax (entries 0, 1 unused), Euler-Maclaurin with N = 50."""
    out = np.zeros(kmax + 1)
    N = 50
    for k in range(2, kmax + 1):
        head = math.fsum(n ** -float(k) for n in range(2, N))
        tail = (
            N ** (1.0 - k) / (k - 1)
            + 0.5 * N ** -float(k)
            + k * N ** (-k - 1.0) / 12
            - k * (k + 1) * (k + 2) * N ** (-k - 3.0) / 720
            + k * (k + 1) * (k + 2) * (k + 3) * (k + 4) * N ** (-k - 5.0) / 30240
            - math.prod(range(k, k + 7)) * N ** (-k - 7.0) / 1209600
        )
        out[k] = head + tail
    return out


_ZETA_M1 = _zeta_minus_one()


# ---------------------------------------------------------------------------
# scalar cores


def _lgamma1p_series(eps):
    # ln Gamma(1 + eps) for |eps| <= 0.5
    acc = 0.0
    p = -eps
    for k in range(2, _ZETA_M1.shape[0]):
        p = -p * eps
        term = _ZETA_M1[k] * p / k
        acc += term
        if abs(term) < 1e-18 * (abs(acc) + 1e-300):
            break
    return -math.log1p(eps) + eps * (1.0 - EULER_GAMMA) + acc


def _stirling(x):
    inv = 1.0 / x
    inv2 = inv * inv
    s = 0.0
    p = inv
    for k in range(_BERNOULLI.shape[0]):
        s += _BERNOULLI[k] / ((2 * k + 2) * (2 * k + 1)) * p
        p *= inv2
    return (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI + s


def _make_ln_gamma(series, stirling):
    def ln_gamma(x):
        if x < 0.5:
            return series(x) - math.log(x)
        if x < 1.5:
            return series(x - 1.0)
        if x <= 2.5:
            e = x - 2.0
            return math.log1p(e) + series(e)
        if x >= _SHIFT_TO:
            return stirling(x)
        prod = 1.0
        while x < _SHIFT_TO:
            prod *= x
            x += 1.0
        return stirling(x) - math.log(prod)

    return ln_gamma


_ln_gamma_py = _make_ln_gamma(_lgamma1p_series, _stirling)


def _digamma_py(x):
    acc = 0.0
    while x < _SHIFT_TO:
        acc -= 1.0 / x
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    s = 0.0
    p = inv2
    for k in range(_BERNOULLI.shape[0]):
        s += _BERNOULLI[k] / (2 * k + 2) * p
        p *= inv2
    return acc + math.log(x) - 0.5 * inv - s


def _trigamma_py(x):
    acc = 0.0
    while x < _SHIFT_TO:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    s = 0.0
    p = inv2 * inv
    for k in range(_BERNOULLI.shape[0]):
        s += _BERNOULLI[k] * p
        p *= inv2
    return acc + inv + 0.5 * inv2 + s


def _tetragamma_py(x):
    acc = 0.0
    while x < _SHIFT_TO:
        acc -= 2.0 / (x * x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    s = 0.0
    p = inv2 * inv2
    for k in range(_BERNOULLI.shape[0]):
        s += (2 * k + 3) * _BERNOULLI[k] * p
        p *= inv2
    return acc - inv2 - inv2 * inv - s


def _lerch_certificate(lnz, a, n):
    # bound on sum_{k >= n} z^k / (a + k)^s for s >= 1, a + k >= 1
    w = (a + n - 1.0) * lnz
    return math.exp((n - 1.0) * lnz) * math.log(1.0 - 1.0 / w)


def _make_lerch_series(certificate):
    def lerch_series(z, s, a, rtol):
        if z == 0.0:
            return a ** -float(s), 1
        lnz = math.log(z)
        total = 0.0
        comp = 0.0
        n = 0
        while True:
            term = math.exp(n * lnz - s * math.log(a + n))
            t = total + term
            if abs(total) >= abs(term):
                comp += (total - t) + term
            else:
                comp += (term - t) + total
            total = t
            n += 1
            if n % 8 == 0:
                if certificate(lnz, a, n) <= rtol * abs(total + comp):
                    break
        return total + comp, n

    return lerch_series


_lerch_series_py = _make_lerch_series(_lerch_certificate)


# numba-compiled twins; compiled lazily on first call
_lgamma1p_series_nb = _accel.njit_always(_lgamma1p_series)
_stirling_nb = _accel.njit_always(_stirling)


_ln_gamma_nb = _accel.njit_always(_make_ln_gamma(_lgamma1p_series_nb, _stirling_nb))
_digamma_nb = _accel.njit_always(_digamma_py)
_trigamma_nb = _accel.njit_always(_trigamma_py)
_tetragamma_nb = _accel.njit_always(_tetragamma_py)
_lerch_certificate_nb = _accel.njit_always(_lerch_certificate)


_lerch_series_nb = _accel.njit_always(_make_lerch_series(_lerch_certificate_nb))


def _lerch_series_numpy(z, s, a, rtol, block=2048):
    """Block-vectorised twin of the series kernel (numpy fallback path)."""
    if z == 0.0:
        return a ** -float(s), 1
    lnz = math.log(z)
    parts = []
    start = 0
    while True:
        n = np.arange(start, start + block, dtype=np.float64)
        parts.append(math.fsum(np.exp(n * lnz - s * np.log(a + n))))
        start += block
        total = math.fsum(parts)
        if _lerch_certificate(lnz, a, start) <= rtol * abs(total):
            return total, start


if _accel.USE_NUMBA:
    _ln_gamma = _ln_gamma_nb
    _digamma = _digamma_nb
    _trigamma = _trigamma_nb
    _tetragamma = _tetragamma_nb
    _lerch_series = _lerch_series_nb
else:
    _ln_gamma = _ln_gamma_py
    _digamma = _digamma_py
    _trigamma = _trigamma_py
    _tetragamma = _tetragamma_py
    _lerch_series = _lerch_series_numpy


# ---------------------------------------------------------------------------
# public API


def _check_positive(x, name="x"):
    x = float(x)
    if not (x > 0.0) or not math.isfinite(x):
        raise DomainError(f"{name} must be finite and > 0, got {x!r}")
    return x


def ln_gamma(x):
    """Natural log of the Gamma function for x > 0."""
    return float(_ln_gamma(_check_positive(x)))


def digamma(x):
    """psi(x) = d/dx ln Gamma(x), x > 0."""
    return float(_digamma(_check_positive(x)))


def trigamma(x):
    return float(_trigamma(_check_positive(x)))


def tetragamma(x):
    return float(_tetragamma(_check_positive(x)))


def ln_gamma_array(x):
    """Vectorised ln Gamma for arrays with all entries > 0 (numpy path)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    small = x < 0.5
    xs = np.where(small, x + 1.0, x)
    near1 = xs < 1.5
    near2 = (xs >= 1.5) & (xs <= 2.5)
    mid = (xs > 2.5) & (xs < _SHIFT_TO)
    big = xs >= _SHIFT_TO

    def series(eps):
        acc = np.zeros_like(eps)
        p = -eps
        for k in range(2, _ZETA_M1.shape[0]):
            p = -p * eps
            acc += _ZETA_M1[k] * p / k
        return -np.log1p(eps) + eps * (1.0 - EULER_GAMMA) + acc

    def stirling(v):
        inv = 1.0 / v
        inv2 = inv * inv
        s = np.zeros_like(v)
        p = inv.copy()
        for k in range(_BERNOULLI.shape[0]):
            s += _BERNOULLI[k] / ((2 * k + 2) * (2 * k + 1)) * p
            p = p * inv2
        return (v - 0.5) * np.log(v) - v + _HALF_LOG_2PI + s

    if near1.any():
        out[near1] = series(xs[near1] - 1.0)
    if near2.any():
        e = xs[near2] - 2.0
        out[near2] = np.log1p(e) + series(e)
    if big.any():
        out[big] = stirling(xs[big])
    if mid.any():
        v = xs[mid].copy()
        prod = np.ones_like(v)
        for _ in range(int(_SHIFT_TO)):
            need = v < _SHIFT_TO
            prod = np.where(need, prod * v, prod)
            v = np.where(need, v + 1.0, v)
        out[mid] = stirling(v) - np.log(prod)
    out[small] -= np.log(x[small])
    return out


def lerch_tail_bound(z, x):
    """Upper bound on sum_{j>=0} z^(x+j+1) / (x+j+1) from the E1 inequality."""
    z = float(z)
    x = _check_positive(x)
    if not (0.0 < z < 1.0):
        raise DomainError(f"z must lie in (0, 1), got {z!r}")
    w = x * math.log(z)
    return math.exp(w) * math.log(1.0 - 1.0 / w)


def _lerch_quad(z, s, a):
    import warnings

    from scipy.integrate import IntegrationWarning, quad

    # Phi(z, s, a) = 1/Gamma(s) int_0^inf t^(s-1) e^(-a t) / (1 - z e^(-t)) dt
    def f(t):
        return t ** (s - 1) * math.exp(-a * t) / (-math.expm1(-t) + (1.0 - z) * math.exp(-t))

    w = 1.0 - z
    cut = min(50.0 * w, 40.0 / a)
    pts = [p for p in (w, 5.0 * w, 20.0 * w) if p < cut]
    head, _ = quad(f, 0.0, cut, points=pts or None, epsabs=0.0, epsrel=1e-13, limit=400)
    with warnings.catch_warnings():
        # the tail is often below roundoff of the head; quad complains harmlessly
        warnings.simplefilter("ignore", IntegrationWarning)
        tail, _ = quad(f, cut, math.inf, epsabs=1e-17 * abs(head), epsrel=1e-13, limit=400)
    return (head + tail) / math.gamma(s)


def lerch_phi(z, s, a):
    """Lerch transcendent sum_{n>=0} z^n / (a+n)^s for z in [0,1), s in {1,2,3}, a >= 1."""
    z = float(z)
    a = float(a)
    if s not in (1, 2, 3):
        raise DomainError(f"s must be 1, 2 or 3, got {s!r}")
    if not (0.0 <= z < 1.0):
        raise DomainError(f"z must lie in [0, 1), got {z!r}")
    if not (a >= 1.0) or not math.isfinite(a):
        raise DomainError(f"a must be finite and >= 1, got {a!r}")
    if z > _LERCH_QUAD_Z:
        return _lerch_quad(z, s, a)
    value, _ = _lerch_series(z, s, a, _LERCH_RTOL)
    return float(value)


def harmonic(m):
    """m-th harmonic number, compensated summation; harmonic(0) == 0."""
    m = int(m)
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    return math.fsum(1.0 / j for j in range(1, m + 1))


def _check_p(p, lo_open=False):
    p = float(p)
    ok = (0.0 < p <= 1.0) if lo_open else (0.0 <= p <= 1.0)
    if not ok:
        raise DomainError(f"p out of range: {p!r}")
    return p


def _check_x(x):
    x = float(x)
    if not (x >= 0.0) or not math.isfinite(x):
        raise DomainError(f"x must be finite and >= 0, got {x!r}")
    return x


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_GL_U = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


def _harmonic_p_small(p, x):
    # H_p(x) = int_0^1 (1 - (1-pu)^x) / u du. For p <= 1/2 and p (x+1) modest the
    # integrand is analytic well past [0, 1], so a fixed Gauss-Legendre rule is
    # exact to rounding and avoids the cancellation of the closed form.
    # Returns (H, H', H'').
    L = np.log1p(-p * _GL_U)
    e = np.exp(x * L)
    w = _GL_W / _GL_U
    h = -np.dot(w, np.expm1(x * L))
    d1 = -np.dot(w, L * e)
    d2 = -np.dot(w, L * L * e)
    return float(h), float(d1), float(d2)


def _small_p(p, x):
    return p <= 0.5 and p * (x + 1.0) <= 4.0


_SMALL_X = 0.5


def _psi1p_plus_gamma(x):
    # psi(1+x) + gamma = x/(1+x) + sum_k (-1)^(k+1) (zeta(k+1) - 1) x^k, |x| <= 1/2;
    # the terms shrink like (x/2)^k and no cancellation happens near x = 0
    acc = [x / (1.0 + x)]
    xk = 1.0
    for k in range(1, _ZETA_M1.shape[0] - 1):
        xk *= -x
        term = -_ZETA_M1[k + 1] * xk
        acc.append(term)
        if abs(term) < 1e-18 * acc[0]:
            break
    return math.fsum(acc)


def _harmonic_p_small_x(p, x):
    # For x <= 1/2 and q = 1 - p < 1/2:
    #   H_p(x) = psi(1+x) + gamma - sum_n q^n (x + n (1 - q^x)) / (n (n+x)),
    # from expanding 1/(e^w - 1) in int_0^{-ln q} (1 - e^{-xw}) / (e^w - 1) dw.
    # Every summand is positive and the sum is geometric. Returns (H, H', H'').
    h = _psi1p_plus_gamma(x)
    d1 = _trigamma(x + 1.0)
    d2 = _tetragamma(x + 1.0)
    q = 1.0 - p
    if q <= 0.0:
        return h, d1, d2
    L = math.log(q)
    n = np.arange(1.0, int(-41.5 / L) + 3.0)
    m = n + x
    qn = np.exp(n * L)
    qm = np.exp(m * L)
    b0 = math.fsum(qn * (x - n * math.expm1(x * L)) / (n * m))
    b1 = math.fsum(qm * (1.0 - m * L) / (m * m))
    b2 = math.fsum(qm * ((m * L) ** 2 - 2.0 * m * L + 2.0) / m**3)
    return h - b0, d1 - b1, d2 + b2


def harmonic_p(p, x):
    """p-modified harmonic number H_p(x) = int_0^1 (1 - (1-p+pt)^x) / (1-t) dt."""
    p = _check_p(p)
    x = _check_x(x)
    if p == 0.0 or x == 0.0:
        return 0.0
    if _small_p(p, x):
        return _harmonic_p_small(p, x)[0]
    if x <= _SMALL_X:
        return _harmonic_p_small_x(p, x)[0]
    base = _digamma(x + 1.0) + EULER_GAMMA
    if p == 1.0:
        return float(base)
    z = 1.0 - p
    scale = math.exp((x + 1.0) * math.log(z))
    if scale == 0.0:
        return float(base + math.log(p))
    return float(base + math.log(p) + scale * lerch_phi(z, 1, x + 1.0))


def _lerch_triplet(p, x):
    z = 1.0 - p
    a = x + 1.0
    scale = math.exp(a * math.log(z))
    if scale == 0.0:
        return 0.0, math.log(z), 0.0, 0.0, 0.0
    return scale, math.log(z), lerch_phi(z, 1, a), lerch_phi(z, 2, a), lerch_phi(z, 3, a)


def harmonic_p_d1(p, x):
    """d/dx H_p(x)."""
    p = _check_p(p, lo_open=True)
    x = _check_x(x)
    if _small_p(p, x):
        return _harmonic_p_small(p, x)[1]
    if x <= _SMALL_X:
        return _harmonic_p_small_x(p, x)[1]
    base = _trigamma(x + 1.0)
    if p == 1.0:
        return float(base)
    scale, lz, f1, f2, _ = _lerch_triplet(p, x)
    return float(base + scale * (lz * f1 - f2))


def harmonic_p_d2(p, x):
    """d^2/dx^2 H_p(x)."""
    p = _check_p(p, lo_open=True)
    x = _check_x(x)
    if _small_p(p, x):
        return _harmonic_p_small(p, x)[2]
    if x <= _SMALL_X:
        return _harmonic_p_small_x(p, x)[2]
    base = _tetragamma(x + 1.0)
    if p == 1.0:
        return float(base)
    scale, lz, f1, f2, f3 = _lerch_triplet(p, x)
    return float(base + scale * (lz * lz * f1 - 2.0 * lz * f2 + 2.0 * f3))


def harmonic_p_all(p, x):
    """(H_p, H_p', H_p'') sharing one set of Lerch evaluations."""
    p = _check_p(p, lo_open=True)
    x = _check_x(x)
    if _small_p(p, x):
        return _harmonic_p_small(p, x)
    if x <= _SMALL_X:
        return _harmonic_p_small_x(p, x)
    h = _digamma(x + 1.0) + EULER_GAMMA
    d1 = _trigamma(x + 1.0)
    d2 = _tetragamma(x + 1.0)
    if p == 1.0:
        return float(h), float(d1), float(d2)
    scale, lz, f1, f2, f3 = _lerch_triplet(p, x)
    h = h + math.log(p) + scale * f1
    d1 += scale * (lz * f1 - f2)
    d2 += scale * (lz * lz * f1 - 2.0 * lz * f2 + 2.0 * f3)
    return float(h), float(d1), float(d2)
