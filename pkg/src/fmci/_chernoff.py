"""Exact finite-product Chernoff minimisation, batched over samples.

For one register holding m balls the log moment term is

    plus:  l_m(t) = sum_{j<=m} -t/j - log(1 - t/j),   0 < t < 1
    minus: l_m(t) = sum_{j<=m}  t/j - log(1 + t/j),   t > 0

Both increase to the Gamma forms lnGamma(1-t) - gamma t and
lnGamma(1+t) + gamma t as m grows. For m > SMALL_M we write
l_m = Gamma form - delta(m+1, -+t) with delta(z, s) = lnGamma(z+s) - lnGamma(z)
- s psi(z) >= 0 evaluated from the Stirling series.
"""
import math

import numpy as np

from . import _accel
from .specfun import EULER_GAMMA, _ln_gamma_nb, ln_gamma_array

SMALL_M = 64
GOLDEN_ITERS = 90
WINDOWS = {"plus": (1e-12, 1.0 - 1e-12), "minus": (1e-8, 50.0)}
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
# B_{2k} / (2k (2k-1)) and B_{2k} / (2k), k = 1..4
_S_COEF = np.array([1 / 12, -1 / 360, 1 / 1260, -1 / 1680])
_P_COEF = np.array([1 / 12, -1 / 120, 1 / 252, -1 / 240])


def _phi(u):
    # (1+u) log1p(u) - u, series near 0 to keep relative accuracy
    if abs(u) < 1e-2:
        s = 0.0
        p = u * u
        for k in range(2, 12):
            s += p / (k * (k - 1)) if k % 2 == 0 else -p / (k * (k - 1))
            p *= u
        return s
    return (1.0 + u) * math.log1p(u) - u


def _log1p_minus(u):
    # log1p(u) - u
    if abs(u) < 1e-2:
        s = 0.0
        p = u * u
        for k in range(2, 14):
            s += -p / k if k % 2 == 0 else p / k
            p *= u
        return s
    return math.log1p(u) - u


def _prepare(m_row):
    counts = np.zeros(SMALL_M + 1, np.int64)
    nbig = 0
    for v in m_row:
        if v > SMALL_M:
            nbig += 1
        else:
            counts[v] += 1
    # counts_ge[j] = number of registers with m >= j
    ge = np.zeros(SMALL_M + 1, np.int64)
    acc = nbig
    for j in range(SMALL_M, 0, -1):
        acc += counts[j]
        ge[j] = acc
    big = np.empty(nbig, np.float64)
    k = 0
    for v in m_row:
        if v > SMALL_M:
            big[k] = v
            k += 1
    return ge, big


def _make_batch(ln_gamma, prepare, log_obj):
    def batch(M, x, a0, sgn, lo, hi, iters, tstar):
        n = M.shape[0]
        out_v = np.empty(n)
        out_t = np.empty(n)
        flag = np.zeros(n, np.bool_)
        for s in range(n):
            ge, big = prepare(M[s])

            def f(t):
                g = ln_gamma(1.0 + sgn * t) + sgn * EULER_GAMMA * t
                return log_obj(t, x, a0, sgn, ge, big, g)

            a, b = lo, hi
            c = b - _INV_PHI * (b - a)
            d = a + _INV_PHI * (b - a)
            fc = f(c)
            fd = f(d)
            for _ in range(iters):
                if fc < fd:
                    b, d, fd = d, c, fc
                    c = b - _INV_PHI * (b - a)
                    fc = f(c)
                else:
                    a, c, fc = c, d, fd
                    d = a + _INV_PHI * (b - a)
                    fd = f(d)
            if fc < fd:
                tb, vb = c, fc
            else:
                tb, vb = d, fd
            for te in (lo, hi):
                fe = f(te)
                if fe <= vb:
                    tb, vb = te, fe
            if lo < tstar < hi:
                fs = f(tstar)
                if fs < vb:
                    tb, vb = tstar, fs
            out_v[s] = vb
            out_t[s] = tb
            span = hi - lo
            flag[s] = (tb - lo) < 1e-9 * span or (hi - tb) < 1e-9 * span
        return out_v, out_t, flag

    return batch


_phi_nb = _accel.njit_always(_phi)
_log1p_minus_nb = _accel.njit_always(_log1p_minus)


def _make_delta(phi, l1m):
    def delta(z, s):
        u = s / z
        d = z * phi(u) - 0.5 * l1m(u)
        zs = z + s
        iz = 1.0 / z
        izs = 1.0 / zs
        pz = iz
        pzs = izs
        pp = iz * iz
        for k in range(_S_COEF.shape[0]):
            d += _S_COEF[k] * (pzs - pz) + s * _P_COEF[k] * pp
            pz *= iz * iz
            pzs *= izs * izs
            pp *= iz * iz
        return d if d > 0.0 else 0.0

    return delta


def _make_log_obj(delta):
    def log_obj(t, x, a0, sgn, ge, big, gform):
        val = -t * x * a0
        head = 0.0
        for j in range(1, SMALL_M + 1):
            r = t / j
            term = sgn * r - math.log1p(sgn * r)
            head += term
            if ge[j] > 0:
                val += ge[j] * term
        # registers above SMALL_M: replace their SMALL_M-term head with the full value
        for i in range(big.shape[0]):
            val += gform - delta(big[i] + 1.0, sgn * t) - head
        return val

    return log_obj


_delta_py = _make_delta(_phi, _log1p_minus)
_delta_nb = _accel.njit_always(_make_delta(_phi_nb, _log1p_minus_nb))
_log_obj_nb = _accel.njit_always(_make_log_obj(_delta_nb))
_prepare_nb = _accel.njit_always(_prepare)
chernoff_batch_numba = _accel.njit_always(_make_batch(_ln_gamma_nb, _prepare_nb, _log_obj_nb))


# --- numpy path: golden section vectorised across samples ---------------------


def _phi_vec(u):
    out = (1.0 + u) * np.log1p(u) - u
    small = np.abs(u) < 1e-2
    if small.any():
        us = u[small]
        s = np.zeros_like(us)
        p = us * us
        for k in range(2, 12):
            s += (p if k % 2 == 0 else -p) / (k * (k - 1))
            p = p * us
        out[small] = s
    return out


def _log1p_minus_vec(u):
    out = np.log1p(u) - u
    small = np.abs(u) < 1e-2
    if small.any():
        us = u[small]
        s = np.zeros_like(us)
        p = us * us
        for k in range(2, 14):
            s += (-p if k % 2 == 0 else p) / k
            p = p * us
        out[small] = s
    return out


def delta_vec(z, s):
    z = np.asarray(z, np.float64)
    s = np.broadcast_to(np.asarray(s, np.float64), z.shape)
    u = s / z
    d = z * _phi_vec(u) - 0.5 * _log1p_minus_vec(u)
    iz = 1.0 / z
    izs = 1.0 / (z + s)
    pz, pzs, pp = iz, izs, iz * iz
    for k in range(_S_COEF.shape[0]):
        d = d + _S_COEF[k] * (pzs - pz) + s * _P_COEF[k] * pp
        pz = pz * iz * iz
        pzs = pzs * izs * izs
        pp = pp * iz * iz
    return np.maximum(d, 0.0)


def _log_obj_vec(t, x, a0, sgn, ge, bigm):
    # t: (n,), ge: (n, SMALL_M+1), bigm: (n, a0) with 0 where not big
    j = np.arange(1, SMALL_M + 1, dtype=np.float64)
    r = t[:, None] / j[None, :]
    terms = sgn * r - np.log1p(sgn * r)
    val = -t * x * a0 + np.einsum("ij,ij->i", ge[:, 1:].astype(np.float64), terms)
    if bigm.any():
        head = terms.sum(axis=1)
        g = ln_gamma_array(1.0 + sgn * t) + sgn * EULER_GAMMA * t
        mask = bigm > 0
        tt = np.broadcast_to(t[:, None], bigm.shape)[mask]
        d = delta_vec(bigm[mask] + 1.0, sgn * tt)
        rows = np.nonzero(mask)[0]
        corr = np.bincount(rows, weights=-d, minlength=t.shape[0])
        val = val + mask.sum(axis=1) * (g - head) + corr
    return val


def chernoff_batch_numpy(M, x, a0, sgn, lo, hi, iters, tstar):
    M = np.asarray(M, np.int64)
    n = M.shape[0]
    ge = np.empty((n, SMALL_M + 1), np.int64)
    for j in range(SMALL_M + 1):
        ge[:, j] = (M >= j).sum(axis=1)
    bigm = np.where(M > SMALL_M, M, 0).astype(np.float64)

    def f(t):
        return _log_obj_vec(t, x, a0, sgn, ge, bigm)

    a = np.full(n, lo)
    b = np.full(n, hi)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - _INV_PHI * (b - a)
        new_d = a + _INV_PHI * (b - a)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        fc_keep, fd_keep = np.where(left, 0.0, fd), np.where(left, fc, 0.0)
        probe = np.where(left, c_next, d_next)
        fp = f(probe)
        fc = np.where(left, fp, fc_keep)
        fd = np.where(left, fd_keep, fp)
        c, d = c_next, d_next
    tb = np.where(fc < fd, c, d)
    vb = np.minimum(fc, fd)
    cands = [np.full(n, lo), np.full(n, hi)]
    if lo < tstar < hi:
        cands.append(np.full(n, tstar))
    for te in cands:
        fe = f(te)
        better = fe <= vb if te[0] in (lo, hi) else fe < vb
        tb = np.where(better, te, tb)
        vb = np.where(better, fe, vb)
    span = hi - lo
    flag = ((tb - lo) < 1e-9 * span) | ((hi - tb) < 1e-9 * span)
    return vb, tb, flag


chernoff_batch = chernoff_batch_numba if _accel.USE_NUMBA else chernoff_batch_numpy
