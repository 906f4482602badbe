"""Monte Carlo checks: exact Chernoff minima against their Gamma-form bounds,
end-to-end interval coverage, the truncation bias of Z, and the Gumbel limit
of centred register maxima.

Every sample draws from its own Philox stream keyed by (seed, sample index),
so results replay bit-for-bit and do not depend on evaluation order.
"""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field, fields

import numpy as np

from . import _chernoff, _kernels
from .ci import MINUS, PLUS, halfwidth_from_tail, interval_from_plan, plan
from .errors import DomainError
from .hashing import column_fields, fraction_bits, leading_words
from .sketch import Sketch, SketchParams
from .solvers import t_minus, t_plus
from .specfun import EULER_GAMMA, LN2, harmonic, ln_gamma

DEFAULT_PVALUE_SAMPLES = 10_000
DEFAULT_COVERAGE_SAMPLES = 2000


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream for one sample."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class McConfig:
    r0: int = 4
    c0: int = 1
    z0: int = 4
    F0: int = 500
    p_plus: float | None = None
    p_minus: float | None = None
    alpha: float | None = None
    mode: str = "upper"
    samples: int = DEFAULT_PVALUE_SAMPLES
    seed: int = 0

    def __post_init__(self):
        SketchParams(self.r0, self.c0, self.z0)
        if self.samples < 1:
            raise DomainError("samples must be >= 1")
        if self.F0 < 0:
            raise DomainError("F0 must be >= 0")


@dataclass
class McReport:
    label: str
    mean: float
    stddev: float
    ci3sigma_lo: float
    ci3sigma_hi: float
    analytic_value: float
    samples: int
    seed: int
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, label, values, analytic, seed, **extra) -> "McReport":
        v = np.asarray(values, dtype=np.float64)
        n = v.size
        mean = math.fsum(v) / n
        var = math.fsum((v - mean) ** 2) / (n - 1) if n > 1 else 0.0
        sd = math.sqrt(var)
        half = 3.0 * sd / math.sqrt(n)
        return cls(label, mean, sd, mean - half, mean + half, analytic, n, seed, extra)

    @property
    def imprecision(self) -> float:
        """How far the 3-sigma lower end sits below the analytic value."""
        return self.analytic_value - self.ci3sigma_lo

    def row(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "extra"}
        out.update(self.extra)
        return out


# ---------------------------------------------------------------------------
# exact Chernoff minima


def exact_chernoff_min_batch(
    M: np.ndarray, x: float, side: str, tstar: float | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Log of the exact finite-product Chernoff minimum for each occupancy row.

    ``M`` is (samples, registers). Returns (log value, argmin t, boundary flag).
    """
    M = np.ascontiguousarray(np.atleast_2d(M), dtype=np.int64)
    a0 = M.shape[1]
    if not (x > 0):
        raise DomainError("x must be > 0")
    lo, hi = _chernoff.WINDOWS[side]
    sgn = -1.0 if side == PLUS else 1.0
    if tstar is None:
        tstar = t_plus(x) if side == PLUS else t_minus(x)
    return _chernoff.chernoff_batch(M, float(x), float(a0), sgn, lo, hi, _chernoff.GOLDEN_ITERS, float(tstar))


def exact_chernoff_min(m, x: float, side: str) -> tuple[float, bool]:
    """min over t of prod_{r,c} e^{-tx} prod_{j<=m_rc} e^{-+t/j} / (1 -+ t/j).

    Returns (value, hit_window_boundary).
    """
    m = np.asarray(m, dtype=np.int64).reshape(1, -1)
    v, _, flag = exact_chernoff_min_batch(m, x, side)
    return float(np.exp(v[0])), bool(flag[0])


def gamma_form_bound(x: float, a0: int, side: str) -> float:
    """The m -> infinity limit of the Chernoff minimum: exp(-a0 g(x))."""
    if side == PLUS:
        t = t_plus(x)
        g = (x + EULER_GAMMA) * t - ln_gamma(1.0 - t)
    else:
        t = t_minus(x)
        g = (x - EULER_GAMMA) * t - ln_gamma(1.0 + t)
    return math.exp(-a0 * g)


def occupancy(rng: np.random.Generator, F0: int, r0: int, c0: int) -> np.ndarray:
    """F0 balls into 2^r0 equiprobable bins, independently for each of c0 columns."""
    bins = 1 << r0
    return rng.multinomial(F0, np.full(bins, 1.0 / bins), size=c0).T.reshape(-1)


def simulate_pvalues(cfg: McConfig) -> tuple[McReport, McReport]:
    """Exact Chernoff minima over random occupancies for both tails.

    Targets default to alpha's complement when p_plus / p_minus are unset.
    """
    a0 = (1 << cfg.r0) * cfg.c0
    default = 1.0 - cfg.alpha if cfg.alpha is not None else 0.1
    pp = cfg.p_plus if cfg.p_plus is not None else default
    pm = cfg.p_minus if cfg.p_minus is not None else default
    x_d = halfwidth_from_tail(pp, a0, PLUS)
    x_u = halfwidth_from_tail(pm, a0, MINUS)
    M = np.stack([occupancy(sample_rng(cfg.seed, i), cfg.F0, cfg.r0, cfg.c0) for i in range(cfg.samples)])
    out = []
    for side, x, target in ((PLUS, x_d, pp), (MINUS, x_u, pm)):
        logv, _, flags = exact_chernoff_min_batch(M, x, side)
        vals = np.exp(logv)
        analytic = gamma_form_bound(x, a0, side)
        out.append(
            McReport.from_values(
                f"P_{side}",
                vals,
                analytic,
                cfg.seed,
                side=side,
                r0=cfg.r0,
                c0=cfg.c0,
                F0=cfg.F0,
                target=target,
                halfwidth=x,
                max_value=float(vals.max()),
                boundary_hits=int(flags.sum()),
                dominated=bool((vals <= analytic * (1 + 1e-12)).all()),
            )
        )
    return out[0], out[1]


# ---------------------------------------------------------------------------
# coverage


def _objects(seed: int, run: int, n: int) -> list[bytes]:
    return [struct.pack("<QQQ", seed & 0xFFFFFFFFFFFFFFFF, run, i) for i in range(n)]


def sketch_from_words(objects, words: np.ndarray, params: SketchParams) -> Sketch:
    """Build a sketch from precomputed leading words (objects, >= c0 columns)."""
    sk = Sketch(params)
    c0 = params.c0
    w = np.ascontiguousarray(words[:, :c0]).reshape(-1)
    R, Z, X = _kernels.fields_from_words(w, params.r0, params.z0)
    cols = np.tile(np.arange(c0, dtype=np.int64), len(objects))
    for i in np.flatnonzero(X == 0):
        f = column_fields(objects[i // c0], int(cols[i]) + 1, params.r0, params.z0)
        R[i], Z[i], X[i] = f.R, f.Z, f.X
    sk._apply(R - 1, cols, X, Z)
    return sk


def coverage_experiment(
    F0: int,
    grid: list[tuple[int, int]],
    alphas: list[float],
    modes: list[str] = ("upper",),
    z0: int = 4,
    samples: int = DEFAULT_COVERAGE_SAMPLES,
    seed: int = 0,
    lower_slack: bool = False,
) -> list[McReport]:
    """Share of runs whose interval contains F0, for every (r0, c0), alpha, mode.

    Each run hashes F0 fresh distinct objects once; every configuration reads
    its registers from those same hashes.
    """
    c_max = max(c for _, c in grid)
    plans = {}
    for r0, c0 in grid:
        params = SketchParams(r0, c0, z0)
        for a in alphas:
            for mode in modes:
                plans[(r0, c0, a, mode)] = (params, plan(a, params.a0, mode))
    hits = {k: np.zeros(samples, dtype=np.float64) for k in plans}
    for run in range(samples):
        objs = _objects(seed, run, F0)
        words = leading_words(objs, c_max) if F0 else np.zeros((0, c_max), np.uint64)
        means = {}
        for r0, c0 in grid:
            sk = sketch_from_words(objs, words, SketchParams(r0, c0, z0))
            means[(r0, c0)] = sk.query().mean
        for key, (params, pl) in plans.items():
            iv = interval_from_plan(means[key[:2]], params, pl, lower_slack)
            hits[key][run] = float(iv.lower <= F0 <= iv.upper)
    reports = []
    for (r0, c0, a, mode), h in hits.items():
        reports.append(
            McReport.from_values(
                "coverage", h, a, seed, r0=r0, c0=c0, z0=z0, F0=F0, alpha=a, mode=mode
            )
        )
    return reports


# ---------------------------------------------------------------------------
# truncation bias of Z


def bias_check(
    n_objects: int, r0: int, c0: int, z0: int, seed: int = 0
) -> dict:
    """Compare the stored Y with its untruncated counterpart Ybar per register.

    Ybar uses the Z bits followed by the stream bits after X's terminating 1
    as the mantissa. Returns the extreme differences in base-2 units and in
    natural-log units (times ln 2).
    """
    params = SketchParams(r0, c0, z0)
    objs = _objects(seed, 1 << 40, n_objects)
    sk = Sketch(params)
    sk.update(objs)
    Y = sk.query().Y
    best_x = np.zeros((params.rows, c0), np.int64)
    best_u = np.ones((params.rows, c0))
    for obj in objs:
        for c in range(c0):
            f = column_fields(obj, c + 1, r0, z0)
            X, u = fraction_bits(obj, c + 1, r0, z0)
            r = f.R - 1
            if X > best_x[r, c] or (X == best_x[r, c] and u < best_u[r, c]):
                best_x[r, c] = X
                best_u[r, c] = u
    touched = sk.X > 0
    ybar = best_x - np.log2(1.0 + best_u)
    diff = (Y - ybar)[touched]
    return {
        "touched": int(touched.sum()),
        "min_diff": float(diff.min()),
        "max_diff": float(diff.max()),
        "max_diff_nat": float(LN2 * diff.max()),
        "bound": 2.0**-z0,
        "x_agree": bool(np.array_equal(best_x, sk.X.astype(np.int64))),
    }


# ---------------------------------------------------------------------------
# Gumbel limit


def gumbel_mgf_check(
    F0_grid=(100, 10_000, 1_000_000),
    t_values=(0.0, 0.1, 0.2, 0.3, 0.4),
    samples: int = 200_000,
    seed: int = 0,
) -> list[McReport]:
    """Empirical MGF of the centred register maximum Ybar - H(F0)/ln 2 at
    s = t ln 2, for each F0 and t.

    ln 2 * Ybar is the maximum of F0 unit exponentials, so the MGF equals
    prod_{j<=F0} e^{-t/j}/(1-t/j), which increases in F0 towards the Gumbel
    value Gamma(1-t) e^{-gamma t}. One set of uniforms is reused across F0
    (common random numbers) so the trend in F0 is not swamped by noise.
    """
    u = sample_rng(seed, 0).random(samples)
    log_u = np.log(u)
    out = []
    for F0 in F0_grid:
        # inverse CDF of the max of F0 unit exponentials, (1 - e^{-y})^F0
        y = -np.log(-np.expm1(log_u / F0))
        h = harmonic(F0)
        for t in t_values:
            vals = np.exp(t * (y - h))
            exact = _finite_mgf(F0, t)
            limit = math.exp(ln_gamma(1.0 - t) - EULER_GAMMA * t) if t > 0 else 1.0
            out.append(
                McReport.from_values(
                    "gumbel_mgf", vals, limit, seed, F0=F0, s=t * LN2, t=t, exact_finite=exact
                )
            )
    return out


def _finite_mgf(F0: int, t: float) -> float:
    if t == 0:
        return 1.0
    # log E e^{t(max - H)} = sum_{j<=F0} -t/j - log(1 - t/j)
    if F0 <= _chernoff.SMALL_M:
        j = np.arange(1, F0 + 1)
        return math.exp(math.fsum(-t / j - np.log1p(-t / j)))
    d = _chernoff.delta_vec(np.array([F0 + 1.0]), -t)[0]
    return math.exp(ln_gamma(1.0 - t) - EULER_GAMMA * t - d)


# ---------------------------------------------------------------------------
# CSV


def write_csv(reports: list[McReport], path_or_file) -> None:
    """One row per report; McReport fields first, then configuration columns."""
    rows = [r.row() for r in reports]
    keys: list[str] = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    given = hasattr(path_or_file, "write")
    fh = path_or_file if given else open(path_or_file, "w", newline="")
    try:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in keys})
    finally:
        if not given:
            fh.close()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


__all__ = [
    "McConfig",
    "McReport",
    "bias_check",
    "coverage_experiment",
    "exact_chernoff_min",
    "exact_chernoff_min_batch",
    "gamma_form_bound",
    "gumbel_mgf_check",
    "occupancy",
    "sample_rng",
    "simulate_pvalues",
    "write_csv",
]
