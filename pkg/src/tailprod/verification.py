"""Finite-threshold checks of the tail asymptotics.

Three independent routes:

* :func:`estimate_ratio` - seeded naive Monte Carlo of the exceedance
  probability, divided by the normalizer ``prod_{kappa_j>0} P(X_j > x**kappa_j)``.
* :func:`exact_prob` - the same probability by integrating the product of
  exponential densities of ``Y_j = log X_j`` over the polyhedron
  ``{sum_j a_ij y_j > log(c_i x), y >= 0}``.
* :func:`slope_fit` - log-log slope of a probability curve, to compare with
  the regular-variation index.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .analysis import ProblemSpec, TailReport
from .marginals import Constant, Pareto

__all__ = [
    "OracleCurve",
    "OracleValue",
    "PRNG_NAME",
    "SimulationConfig",
    "SimulationPoint",
    "SimulationResult",
    "SlopeFit",
    "chunk_seed",
    "estimate_ratio",
    "exact_prob",
    "oracle_curve",
    "slope_fit",
    "splitmix64",
]

PRNG_NAME = "PCG64 (numpy.random.Generator); chunk seeds SplitMix64(seed ^ chunk_index)"
_MASK64 = (1 << 64) - 1
_BLOCK_ROWS = 1 << 18


def splitmix64(state: int) -> int:
    """One output of the SplitMix64 generator seeded at ``state``."""
    z = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def chunk_seed(seed: int, chunk_index: int) -> int:
    return splitmix64((seed ^ chunk_index) & _MASK64)


# --------------------------------------------------------------------------
# Monte Carlo
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SimulationConfig:
    x_grid: tuple[float, ...]
    samples_per_x: int
    seed: int = 0
    chunks: int = 1

    def __post_init__(self):
        grid = tuple(float(x) for x in self.x_grid)
        object.__setattr__(self, "x_grid", grid)
        if not grid:
            raise ValueError("x_grid is empty")
        if any(not math.isfinite(x) or x <= 1 for x in grid):
            raise ValueError("every threshold in x_grid must be finite and > 1")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("x_grid must be strictly increasing")
        if int(self.samples_per_x) != self.samples_per_x or self.samples_per_x < 1:
            raise ValueError("samples_per_x must be a positive integer")
        if int(self.chunks) != self.chunks or self.chunks < 1:
            raise ValueError("chunks must be a positive integer")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SimulationPoint:
    x: float
    hits: int
    n: int
    p_hat: float
    normalizer: float
    ratio: float
    stderr: float


@dataclass(frozen=True)
class SimulationResult:
    points: tuple[SimulationPoint, ...]
    seed: int
    chunks: int
    prng: str = PRNG_NAME

    @property
    def xs(self) -> np.ndarray:
        return np.array([p.x for p in self.points])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p.p_hat for p in self.points])

    @property
    def prob_stderr(self) -> np.ndarray:
        return np.array([math.sqrt(p.p_hat * (1 - p.p_hat) / p.n) for p in self.points])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "hits", "N", "p_hat", "normalizer", "ratio", "stderr"])
        for p in self.points:
            w.writerow([repr(p.x), p.hits, p.n, repr(p.p_hat), repr(p.normalizer), repr(p.ratio), repr(p.stderr)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "metadata": {"seed": self.seed, "chunks": self.chunks, "prng": self.prng},
            "points": [asdict(p) for p in self.points],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _log_thresholds(spec: ProblemSpec, x: float) -> np.ndarray:
    return np.array([math.log(float(c)) + math.log(x) for c in spec.c])


def _count_hits(spec: ProblemSpec, x: float, n: int, seed: int) -> int:
    rng = np.random.Generator(np.random.PCG64(seed))
    A = np.array([[float(v) for v in row] for row in spec.A.entries])
    thr = _log_thresholds(spec, x)
    m = spec.m
    hits = 0
    left = n
    while left > 0:
        b = min(left, _BLOCK_ROWS)
        # 1 - U lies in (0, 1]: never log(0)
        u = 1.0 - rng.random((b, m))
        logs = np.empty((b, m))
        for j, mod in enumerate(spec.marginals):
            logs[:, j] = mod.log_sample(u[:, j])
        s = logs @ A.T
        hits += int(np.count_nonzero(np.all(s > thr, axis=1)))
        left -= b
    return hits


def estimate_ratio(
    spec: ProblemSpec,
    report: TailReport,
    cfg: SimulationConfig,
    *,
    workers: int | None = None,
) -> SimulationResult:
    """Monte Carlo estimate of P(joint exceedance) / normalizer at each x.

    The work for grid point g is split into ``cfg.chunks`` chunks; chunk k
    draws from its own PCG64 stream seeded with
    ``SplitMix64(seed ^ (g * chunks + k))``.  Counts are summed, so the
    result does not depend on how the chunks are scheduled.
    """
    if not report.is_finite:
        raise ValueError("limit constant is infinite; nothing to verify")
    tasks = []
    for g, x in enumerate(cfg.x_grid):
        base, extra = divmod(cfg.samples_per_x, cfg.chunks)
        for k in range(cfg.chunks):
            n_k = base + (1 if k < extra else 0)
            if n_k:
                tasks.append((g, x, n_k, chunk_seed(cfg.seed, g * cfg.chunks + k)))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda t: _count_hits(spec, t[1], t[2], t[3]), tasks))
    else:
        counts = [_count_hits(spec, x, n, s) for _, x, n, s in tasks]
    hits = [0] * len(cfg.x_grid)
    for (g, *_), h in zip(tasks, counts):
        hits[g] += h
    points = []
    N = cfg.samples_per_x
    for g, x in enumerate(cfg.x_grid):
        p = hits[g] / N
        norm = report.normalizer(x)
        points.append(
            SimulationPoint(
                x=x,
                hits=hits[g],
                n=N,
                p_hat=p,
                normalizer=norm,
                ratio=p / norm,
                stderr=math.sqrt(p * (1 - p) / N) / norm,
            )
        )
    return SimulationResult(tuple(points), seed=cfg.seed, chunks=cfg.chunks)


# --------------------------------------------------------------------------
# quadrature oracle
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleValue:
    value: float
    error: float
    truncation: float
    y_max: float


class _Polyhedron:
    """Integrates prod_k rate_k exp(-rate_k y_k) over {G y > L, 0 <= y <= ymax}.

    Variables are ordered outermost first.  The last two levels are done in
    closed form on the pieces between projected vertices; the remaining
    levels use adaptive Gauss-Kronrod on the same pieces.
    """

    def __init__(self, G: np.ndarray, rates: np.ndarray, ymax: float, tol: float, analytic_levels: int):
        self.G = G
        self.rates = rates
        self.ymax = ymax
        self.tol = tol
        self.d = G.shape[1]
        self.analytic = min(analytic_levels, self.d)
        self.abserr = 0.0
        self._combos = [self._vertex_systems(k) for k in range(self.d)]

    def _vertex_systems(self, level: int):
        """Pre-inverted constraint subsets for vertex enumeration of levels >= level."""
        n = self.G.shape[0]
        d = self.d - level
        # constraint rows over remaining vars: G rows, y_k >= 0, y_k <= ymax
        rows = [self.G[i, level:] for i in range(n)]
        kinds = [("row", i) for i in range(n)]
        for k in range(d):
            e = np.zeros(d)
            e[k] = 1.0
            rows.append(e)
            kinds.append(("lo", k))
            rows.append(e.copy())
            kinds.append(("hi", k))
        rows = np.array(rows)
        systems = []
        for sub in itertools.combinations(range(len(rows)), d):
            M = rows[list(sub)]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            systems.append((np.linalg.inv(M), [kinds[s] for s in sub]))
        if not systems:
            return None
        invs = np.array([s[0] for s in systems])
        return invs, [s[1] for s in systems]

    def _breakpoints(self, level: int, L: np.ndarray) -> np.ndarray:
        invs, kinds = self._combos[level]
        rhs = np.array([[L[i] if k == "row" else (0.0 if k == "lo" else self.ymax) for k, i in ks] for ks in kinds])
        verts = np.einsum("sij,sj->si", invs, rhs)
        G = self.G[:, level:]
        scale = 1e-9 * (1.0 + np.abs(L).max(initial=0.0) + self.ymax)
        ok = (
            np.all(verts @ G.T >= L - scale, axis=1)
            & np.all(verts >= -scale, axis=1)
            & np.all(verts <= self.ymax + scale, axis=1)
        )
        pts = np.clip(verts[ok, 0], 0.0, self.ymax)
        pts = np.unique(np.concatenate([pts, [0.0, self.ymax]]))
        return pts

    def _interval(self, col: np.ndarray, L: np.ndarray):
        """Feasible open interval of a single variable with coefficients col."""
        lo, hi = 0.0, self.ymax
        for a, l in zip(col, L):
            if a > 0:
                lo = max(lo, l / a)
            elif a < 0:
                hi = min(hi, l / a)
            elif l >= 0:
                return None
        return (lo, hi) if hi > lo else None

    def _last(self, L: np.ndarray) -> float:
        iv = self._interval(self.G[:, -1], L)
        if iv is None:
            return 0.0
        r = self.rates[-1]
        lo, hi = iv
        return math.exp(-r * lo) * -math.expm1(-r * (hi - lo))

    def _last_two(self, L: np.ndarray) -> float:
        lvl = self.d - 2
        a_out = self.G[:, lvl]
        a_in = self.G[:, lvl + 1]
        r_out, r_in = self.rates[lvl], self.rates[lvl + 1]
        pts = self._breakpoints(lvl, L)
        total = 0.0
        for t0, t1 in zip(pts[:-1], pts[1:]):
            if t1 - t0 <= 0:
                continue
            mid = 0.5 * (t0 + t1)
            Lm = L - a_out * mid
            # active bounds at the midpoint stay active on the whole piece
            lo_i, hi_i = None, None
            lo, hi = 0.0, self.ymax
            feasible = True
            for i, (a, l) in enumerate(zip(a_in, Lm)):
                if a > 0 and l / a > lo:
                    lo, lo_i = l / a, i
                elif a < 0 and l / a < hi:
                    hi, hi_i = l / a, i
                elif a == 0 and l >= 0:
                    feasible = False
            if not feasible or hi <= lo:
                continue
            total += self._exp_term(r_out, r_in, L, a_out, a_in, lo_i, t0, t1, upper=False)
            total -= self._exp_term(r_out, r_in, L, a_out, a_in, hi_i, t0, t1, upper=True)
        return total

    def _exp_term(self, r_out, r_in, L, a_out, a_in, idx, t0, t1, upper):
        """int_{t0}^{t1} r_out e^{-r_out t} e^{-r_in b(t)} dt, b the active bound."""
        if idx is None:
            # constant bound: 0 for the lower one, ymax for the upper one
            c0 = self.ymax if upper else 0.0
            slope = 0.0
        else:
            c0 = L[idx] / a_in[idx]
            slope = -a_out[idx] / a_in[idx]
        rate = r_out + r_in * slope
        width = t1 - t0
        log_front = -r_in * c0 - rate * t0
        if abs(rate * width) < 1e-300:
            integral = width
        else:
            integral = -math.expm1(-rate * width) / rate
        return r_out * math.exp(log_front) * integral

    def integrate(self, level: int, L: np.ndarray) -> float:
        remaining = self.d - level
        if remaining == 0:
            return 1.0 if np.all(L < 0) else 0.0
        if remaining == 1:
            return self._last(L)
        if remaining == 2 and self.analytic >= 2:
            return self._last_two(L)
        col = self.G[:, level]
        r = self.rates[level]
        pts = self._breakpoints(level, L)

        def f(t):
            return r * math.exp(-r * t) * self.integrate(level + 1, L - col * t)

        total = 0.0
        for t0, t1 in zip(pts[:-1], pts[1:]):
            if t1 - t0 <= 1e-14 * max(1.0, self.ymax):
                continue
            val, err = integrate.quad(f, t0, t1, epsabs=0.0, epsrel=self.tol, limit=200)
            total += val
            if level == 0:
                self.abserr += err
        return total


def exact_prob(spec: ProblemSpec, x: float, tol: float = 1e-8, *, analytic_levels: int = 2) -> OracleValue:
    """P(prod_j X_j**a_ij > c_i x for all i) by integration in log coordinates.

    The domain is truncated at ``y_max`` and the probability mass beyond
    it, at most ``sum_j exp(-alpha_j y_max)``, is added to the error.
    ``y_max`` is enlarged until that bound is below ``tol`` times the value.
    """
    if spec.m > 4:
        raise ValueError(f"quadrature oracle supports at most 4 factors, got {spec.m}")
    if not x > 0:
        raise ValueError("x must be positive")
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    A = np.array([[float(v) for v in row] for row in spec.A.entries])
    L = _log_thresholds(spec, float(x))
    free, rates = [], []
    for j, mod in enumerate(spec.marginals):
        if isinstance(mod, Constant):
            L = L - A[:, j] * math.log(mod.value)
        else:
            free.append(j)
            rates.append(float(mod.alpha))
    G = A[:, free]
    # rows without free variables are fixed events
    keep = np.any(G != 0, axis=1) if free else np.zeros(len(L), dtype=bool)
    if np.any(~keep & (L >= 0)):
        return OracleValue(0.0, 0.0, 0.0, 0.0)
    G, L = G[keep], L[keep]
    if not free or G.shape[0] == 0:
        return OracleValue(1.0, 0.0, 0.0, 0.0)
    # innermost: the variable whose coefficients spread most
    spread = G.max(axis=0) - G.min(axis=0)
    order = sorted(range(len(free)), key=lambda k: (spread[k], -k))
    G = G[:, order]
    rates = np.array(rates)[order]
    rmin = rates.min()
    ymax = (max(math.log(float(c) * x) for c in spec.c) + 40.0) / rmin
    for _ in range(8):
        poly = _Polyhedron(G, rates, ymax, tol, analytic_levels)
        value = poly.integrate(0, L)
        trunc = float(np.sum(np.exp(-rates * ymax)))
        if value <= 0 or trunc <= 0.5 * tol * value:
            break
        ymax = max(2 * ymax, math.log(2 * len(rates) / (tol * value)) / rmin)
    error = poly.abserr + trunc
    if value > 0 and error > tol * value:
        warnings.warn(f"oracle error {error:.3g} exceeds requested relative tolerance {tol:g}")
    return OracleValue(value, error, trunc, ymax)


@dataclass(frozen=True)
class OracleCurve:
    xs: tuple[float, ...]
    values: tuple[float, ...]
    errors: tuple[float, ...]
    normalizers: tuple[float, ...] = ()

    @property
    def ratios(self) -> tuple[float, ...]:
        if len(self.normalizers) != len(self.values):
            raise ValueError("curve was built without a report; no normalizers to divide by")
        return tuple(v / n for v, n in zip(self.values, self.normalizers))


def oracle_curve(spec: ProblemSpec, xs: Sequence[float], report: TailReport | None = None, tol: float = 1e-8) -> OracleCurve:
    vals = [exact_prob(spec, x, tol) for x in xs]
    norms = tuple(report.normalizer(x) for x in xs) if report is not None else ()
    return OracleCurve(tuple(float(x) for x in xs), tuple(v.value for v in vals), tuple(v.error for v in vals), norms)


# --------------------------------------------------------------------------
# log-log slope
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    n_points: int
    dropped: tuple[float, ...] = field(default=())

    def contains(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


def _lsq(lx: np.ndarray, lp: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(lx, lp, 1)
    return float(slope), float(intercept)


def slope_fit(data, probs=None, errors=None, *, n_boot: int = 2000, level: float = 0.95, seed: int = 0) -> SlopeFit:
    """Least-squares slope of log p against log x with a bootstrap interval.

    ``data`` is a :class:`SimulationResult`, an :class:`OracleCurve`, or a
    sequence of thresholds (then pass ``probs`` and optionally ``errors``).
    With errors the bootstrap perturbs each log p by its own standard
    error; without, it resamples residuals.
    """
    if isinstance(data, SimulationResult):
        xs, ps, es = data.xs, data.probabilities, data.prob_stderr
    elif isinstance(data, OracleCurve):
        xs, ps, es = np.array(data.xs), np.array(data.values), np.array(data.errors)
    else:
        if probs is None:
            raise TypeError("pass probabilities alongside the thresholds")
        xs = np.asarray(data, dtype=float)
        ps = np.asarray(probs, dtype=float)
        es = None if errors is None else np.asarray(errors, dtype=float)
    if len(xs) != len(ps):
        raise ValueError("thresholds and probabilities differ in length")
    keep = ps > 0
    dropped = tuple(float(x) for x in xs[~keep])
    if dropped:
        warnings.warn(f"dropping thresholds with zero probability estimate: {dropped}")
    xs, ps = xs[keep], ps[keep]
    es = es[keep] if es is not None else None
    if len(xs) < 3:
        raise ValueError(f"need at least 3 usable points, got {len(xs)}")
    lx, lp = np.log(xs), np.log(ps)
    slope, intercept = _lsq(lx, lp)
    rng = np.random.default_rng(seed)
    if es is not None and np.any(es > 0):
        sd = es / ps
        boot = rng.normal(lp, sd, size=(n_boot, len(lp)))
    else:
        resid = lp - (slope * lx + intercept)
        boot = slope * lx + intercept + rng.choice(resid, size=(n_boot, len(lp)), replace=True)
    # vectorized least squares for every bootstrap replicate
    xc = lx - lx.mean()
    slopes = (boot - boot.mean(axis=1, keepdims=True)) @ xc / (xc @ xc)
    a = (1 - level) / 2
    lo, hi = np.quantile(slopes, [a, 1 - a])
    return SlopeFit(slope, intercept, float(min(lo, slope)), float(max(hi, slope)), len(xs), dropped)
