"""Monte Carlo experiments that check the asymptotic claims at finite n.

Replication ``r`` draws from ``RngStream(seed, r)`` and writes into slot
``r`` of a preallocated array, so reports are identical for any number of
worker threads. Reports serialise to JSON with sorted keys; wall-clock time
is kept on the object but left out of the serialised form unless asked
for, so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .errors import TieError
from .evt_core import KSequence, TailGrid, TailModel
from .functionals import GridMeasure
from .limit_gaussian import (
    CovarianceKernel,
    modulus_constants,
    modulus_sup_ratio,
    simulate_limit_matrix,
)
from .pickands import log_spacing_ratio, tail_ranks
from .samplers import RngStream, sample_sorted, sample_upper_order_statistics, uniform_tail_stat

SCHEMA_VERSION = 1
FULL = "full"
SPACINGS = "spacings"

# finite-n tolerances at desk scale (n = 1e5, k = 1e3); exposed for callers
VARIANCE_RTOL = 0.20
FROBENIUS_RTOL = 0.25
MAX_EXCLUDED_FRACTION = 0.01
LOW_POWER_REPS = 100


# --- Kolmogorov-Smirnov ----------------------------------------------------


def kolmogorov_sf(x: float, tol: float = 1e-10, max_terms: int = 100_000) -> float:
    """``P(K > x) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2)``, truncated once terms drop below ``tol``."""
    if x <= 0:
        return 1.0
    total = 0.0
    for j in range(1, max_terms + 1):
        term = math.exp(-2.0 * j * j * x * x)
        total += term if j % 2 else -term
        if term < tol:
            break
    return min(1.0, max(0.0, 2.0 * total))


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float


def ks_test(values, reference_cdf: Callable) -> KSResult:
    """Two-sided one-sample KS test with the asymptotic Kolmogorov p-value."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n < 8:
        raise ValueError("KS test needs at least 8 values")
    F = np.asarray(reference_cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    return KSResult(d, kolmogorov_sf(d * math.sqrt(n)))


def normal_cdf(x):
    return special.ndtr(x)


# --- report ----------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class McReport:
    """Aggregated experiment output.

    ``points`` holds one record per grid point (mean, variance, KS statistic
    and p-value where applicable); ``summary`` holds experiment-level
    figures and flags.
    """

    experiment: str
    config: dict
    points: list = field(default_factory=list)
    covariance: list | None = None
    summary: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "schema": SCHEMA_VERSION,
            "experiment": self.experiment,
            "config": self.config,
            "points": self.points,
            "covariance": self.covariance,
            "summary": self.summary,
        }
        if timing:
            d["elapsed_seconds"] = self.elapsed
        return _clean(d)

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True, indent=2)

    def write_points_csv(self, path) -> None:
        if not self.points:
            return
        cols = sorted({c for p in self.points for c in p})
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for p in self.points:
                w.writerow({c: _clean(p.get(c)) for c in cols})


# --- replication engine ----------------------------------------------------


def replicate(task: Callable[[RngStream], np.ndarray], reps: int, width: int, seed: int,
              workers: int = 1) -> np.ndarray:
    """Run ``task(RngStream(seed, r))`` for ``r < reps`` into row ``r`` of a ``(reps, width)`` array.

    A task raising :class:`TieError` leaves its row as NaN.
    """
    reps = int(reps)
    out = np.full((reps, width), np.nan)

    def fill(lo, hi):
        for r in range(lo, hi):
            try:
                out[r] = task(RngStream(seed, r))
            except TieError:
                pass

    workers = max(1, int(workers))
    if workers == 1 or reps < 2:
        fill(0, reps)
    else:
        bounds = np.linspace(0, reps, min(reps, workers * 8) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(lambda ab: fill(*ab), zip(bounds[:-1], bounds[1:])))
    return out


def _resolve_k(k, n: int) -> int:
    if isinstance(k, KSequence):
        return k(n)
    if callable(k):
        return KSequence(k)(n)
    k = int(k)
    if not 1 <= k <= n:
        raise ValueError("k must lie in 1..n")
    return k


class _LevelPlan:
    """Upper ranks needed to evaluate ``P_n`` on a grid, and how to read them back."""

    def __init__(self, n: int, k: int, points):
        s = np.asarray(points, dtype=float)
        if np.any(s * s < k / n):
            raise ValueError(f"grid points below sqrt(k/n) = {math.sqrt(k / n):.4g} sit in the zero region")
        j1, j2 = tail_ranks(k, s)
        if np.any(j1 == k) or np.any(j1 == j2):
            bad = s[(j1 == k) | (j1 == j2)]
            raise TieError(f"rank floors collide at s = {bad.tolist()}")
        self.s = s
        self.ranks = np.unique(np.concatenate([[k], j1, j2]))
        self.i0 = int(np.searchsorted(self.ranks, k))
        self.i1 = np.searchsorted(self.ranks, j1)
        self.i2 = np.searchsorted(self.ranks, j2)

    def draw(self, model: TailModel, n: int, stream: RngStream, method: str) -> np.ndarray:
        if method == FULL:
            return sample_sorted(model, n, stream).upper(self.ranks)
        if method == SPACINGS:
            return sample_upper_order_statistics(model, n, self.ranks, stream)
        raise ValueError(f"unknown method {method!r}")

    def pickands(self, X: np.ndarray) -> np.ndarray:
        """``P_n`` for every row of upper order statistics ``X`` (NaN on ties)."""
        return log_spacing_ratio(X[:, [self.i0]], X[:, self.i1], X[:, self.i2], self.s)


def simulate_pickands(model: TailModel, n: int, k: int, points, reps: int, seed: int,
                      workers: int = 1, method: str = SPACINGS) -> np.ndarray:
    """``(reps, m)`` array of ``P_n(s_j)``, NaN rows for excluded replications."""
    plan = _LevelPlan(n, k, points)
    X = replicate(lambda st: plan.draw(model, n, st, method), reps, plan.ranks.size, seed, workers)
    return plan.pickands(X)


def _config(**kw) -> dict:
    return _clean(kw)


def _exclusions(P: np.ndarray):
    bad = np.any(~np.isfinite(P), axis=1)
    return P[~bad], int(bad.sum())


def _point_stats(values: np.ndarray, cdf=None) -> dict:
    rec = {"mean": float(np.mean(values)) if values.size else math.nan,
           "variance": float(np.var(values, ddof=1)) if values.size > 1 else math.nan}
    if cdf is not None and values.size >= 8:
        ks = ks_test(values, cdf)
        rec.update(ks_statistic=ks.statistic, ks_pvalue=ks.p_value)
    else:
        rec.update(ks_statistic=None, ks_pvalue=None)
    return rec


def _flags(reps: int, excluded: int) -> dict:
    return {
        "excluded": excluded,
        "included": reps - excluded,
        "excluded_flag": excluded > MAX_EXCLUDED_FRACTION * reps,
        "low_power": reps < LOW_POWER_REPS,
    }


def run_normality_experiment(model: TailModel, k, n: int, grid: TailGrid, reps: int, seed: int = 0,
                             workers: int = 1, method: str = SPACINGS,
                             measure: GridMeasure | None = None) -> McReport:
    """KS check of ``kappa*_n(s) / sqrt(Gamma(s, s))`` against N(0, 1) at each grid point.

    With ``measure`` (unit mass) it also tests
    ``z = sqrt(k) (I_n - K) / sigma_m`` for the integral estimator.
    """
    t0 = time.perf_counter()
    n = int(n)
    k = _resolve_k(k, n)
    K = model.K
    kernel = CovarianceKernel(K)
    P = simulate_pickands(model, n, k, grid.s, reps, seed, workers, method)
    P, excluded = _exclusions(P)
    kstar = math.sqrt(k) * (P - K)
    diag = np.array([kernel(s, s) for s in grid.s])
    points = []
    for j, s in enumerate(grid.s):
        rec = {"s": float(s), "gamma_ss": float(diag[j])}
        raw = _point_stats(kstar[:, j])
        norm = _point_stats(kstar[:, j] / math.sqrt(diag[j]), normal_cdf)
        rec.update(mean=raw["mean"], variance=raw["variance"],
                   variance_ratio=raw["variance"] / diag[j],
                   pickands_mean=float(np.mean(P[:, j])) if P.size else None,
                   ks_statistic=norm["ks_statistic"], ks_pvalue=norm["ks_pvalue"])
        points.append(rec)
    summary = _flags(int(reps), excluded)
    if measure is not None:
        if abs(measure.total_mass - 1.0) > 1e-12:
            raise ValueError("measure must have unit mass")
        idx = np.searchsorted(grid.s, measure.support)
        if np.any(idx >= len(grid)) or not np.allclose(grid.s[np.minimum(idx, len(grid) - 1)], measure.support):
            raise ValueError("measure support must be a subset of the grid")
        w = measure.weights
        var = float(w @ kernel.matrix(measure.support) @ w)
        est = P[:, idx] @ w
        z = math.sqrt(k) * (est - K) / math.sqrt(var)
        st = _point_stats(z, normal_cdf)
        summary["integral"] = {"sigma2": var, "estimate_mean": float(np.mean(est)) if est.size else None,
                               "z_mean": st["mean"], "z_variance": st["variance"],
                               "ks_statistic": st["ks_statistic"], "ks_pvalue": st["ks_pvalue"],
                               "support": measure.support.tolist(), "weights": w.tolist()}
    cfg = _config(model=model.name, n=n, k=k, grid=list(grid.points), reps=int(reps), seed=int(seed),
                  method=method, K=K)
    return McReport("normality", cfg, points, None, summary, time.perf_counter() - t0)


def run_covariance_experiment(model: TailModel, n: int, k, grid: TailGrid, reps: int, seed: int = 0,
                              workers: int = 1, method: str = SPACINGS) -> McReport:
    """Empirical covariance of ``kappa*_n`` on the grid vs the constructive kernel matrix."""
    t0 = time.perf_counter()
    n = int(n)
    k = _resolve_k(k, n)
    K = model.K
    P = simulate_pickands(model, n, k, grid.s, reps, seed, workers, method)
    P, excluded = _exclusions(P)
    kstar = math.sqrt(k) * (P - K)
    target = CovarianceKernel(K).matrix(grid.s)
    if kstar.shape[0] > 1:
        C = np.cov(kstar, rowvar=False, ddof=1).reshape(len(grid), len(grid))
        C = 0.5 * (C + C.T)
        frob = float(np.linalg.norm(C - target) / np.linalg.norm(target))
    else:
        C, frob = np.full_like(target, np.nan), math.nan
    points = [{"s": float(s), "mean": float(np.mean(kstar[:, j])) if kstar.size else None,
               "variance": float(C[j, j]), "gamma_ss": float(target[j, j])}
              for j, s in enumerate(grid.s)]
    summary = _flags(int(reps), excluded)
    summary.update(frobenius_rel_error=frob, kernel_matrix=target.tolist(),
                   frobenius_tolerance=FROBENIUS_RTOL)
    cfg = _config(model=model.name, n=n, k=k, grid=list(grid.points), reps=int(reps), seed=int(seed),
                  method=method, K=K)
    return McReport("covariance", cfg, points, C.tolist(), summary, time.perf_counter() - t0)


def run_lemma1_experiment(n: int, k: int, s_values, reps: int, seed: int = 0, workers: int = 1,
                          method: str = SPACINGS) -> McReport:
    """Moments of ``sqrt(k)((n/j) U_{j,n} - 1)``, ``j = floor(k/s)``, vs the ``min(s, t)`` kernel."""
    t0 = time.perf_counter()
    s = np.asarray(s_values.s if isinstance(s_values, TailGrid) else s_values, dtype=float)
    n, k = int(n), int(k)
    stats = replicate(lambda st: uniform_tail_stat(n, k, s, st, method), reps, s.size, seed, workers)
    stats, excluded = _exclusions(stats)
    C = np.cov(stats, rowvar=False, ddof=1).reshape(s.size, s.size) if stats.shape[0] > 1 \
        else np.full((s.size, s.size), np.nan)
    target = np.minimum.outer(s, s)
    points = [{"s": float(v), "mean": float(np.mean(stats[:, j])), "variance": float(C[j, j]),
               "target_variance": float(v), "variance_rel_error": float(abs(C[j, j] - v) / v)}
              for j, v in enumerate(s)]
    rel = np.abs(C - target) / target
    summary = _flags(int(reps), excluded)
    summary.update(target_covariance=target.tolist(), covariance_rel_error=rel.tolist())
    cfg = _config(n=n, k=k, s=s.tolist(), reps=int(reps), seed=int(seed), method=method)
    return McReport("lemma1", cfg, points, C.tolist(), summary, time.perf_counter() - t0)


def run_modulus_experiment(K: float, grid: TailGrid, n_paths: int, h_values, seed: int = 0,
                           workers: int = 1) -> McReport:
    """Sup of ``|G(s) - G(t)| / w(h)`` over grid pairs ``|s - t| <= h`` on simulated limit paths."""
    t0 = time.perf_counter()
    paths = simulate_limit_matrix(K, grid, n_paths, RngStream(seed, 0), workers)
    const = modulus_constants(K, grid.b)
    points = []
    for h in h_values:
        ratios = modulus_sup_ratio(paths, grid.s, float(h))
        finite = ratios[np.isfinite(ratios)]
        sup = float(np.max(finite)) if finite.size else math.nan
        points.append({"h": float(h), "sup_ratio": sup,
                       "mean_path_sup_ratio": float(np.mean(finite)) if finite.size else math.nan,
                       "L": const.L, "within_2L": bool(sup <= 2 * const.L) if finite.size else None})
    summary = {"L": const.L, "b": grid.b, "K": float(K)}
    cfg = _config(K=float(K), grid=[grid.a, grid.b, len(grid)], n_paths=int(n_paths),
                  h=[float(h) for h in h_values], seed=int(seed))
    return McReport("modulus", cfg, points, None, summary, time.perf_counter() - t0)
