"""Gaussian limit of the centred Pickands process.

The three Gaussian processes behind the limit are rescaled pieces of one
Wiener process ``W``. With ``tau = k/n``::

    W1(s) = s tau^{-1/2} W(tau/s)        (level k/s)
    W2    =   tau^{-1/2} W(tau)          (level k)
    W3(s) = s^2 tau^{-1/2} W(tau/s^2)    (level k/s^2)

Writing ``B(x) = x tau^{-1/2} W(tau/x)``, time inversion makes ``B`` a
standard Wiener process in ``x``, and ``W1(s) = B(s)``, ``W2 = B(1)``,
``W3(s) = B(s^2)``. Every cross-covariance is therefore ``min`` of the two
levels: ``Cov(W1(s), W3(t)) = min(s, t^2)`` and so on.

The limit is ``G(s) = g(s) h(s)`` with::

    g(s) = K / ((s^{-K} - 1) log s)        (-1/(log s)^2 at K = 0)
    h(s) = s^{-K} W2 - (s^{-K} + 1) W1(s) + W3(s)

``h`` is the first-order expansion of the log-ratio of the two
order-statistic spacings: a relative perturbation ``e_j`` of the level-``j``
order statistic moves ``X`` by ``-K e_j`` in relative terms, and the
combination above is what survives in
``log(top - mid) - log(mid - low)``. Its coefficients sum to zero, which
is the scale invariance of the estimator (a common relative shift of all
three order statistics leaves ``P_n`` unchanged).

The alternative combination ``(s^{-K} - 1) W1(s) + s^{-K} W2 - W3(s)``
(kernel form ``"printed"``) is kept only so it can be compared against the
displayed closed-form covariance; its coefficients do not sum to zero and
its variance disagrees with simulation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import KernelNotPSDError
from .evt_core import TailGrid
from .pickands import GAUSSIAN_LIMIT, ProcessPath
from .samplers import RngStream

CONSTRUCTIVE = "constructive"
CLOSED = "closed"
PRINTED = "printed"
FORMS = (CONSTRUCTIVE, CLOSED, PRINTED)

JITTER_LADDER = (1e-12, 1e-10, 1e-8)


def wiener_levels(s):
    """Levels of ``(W1(s), W2, W3(s))`` on the common Wiener process ``B``."""
    s = np.asarray(s, dtype=float)
    return (s, np.ones_like(s), s * s)


def wiener_triple_cov(s: float, t: float) -> np.ndarray:
    """3x3 table ``Cov(W_i(s), W_j(t))`` for ``i, j`` in (W1, W2, W3)."""
    ls, lt = wiener_levels(s), wiener_levels(t)
    return np.array([[min(float(a), float(b)) for b in lt] for a in ls])


def _check_K(K) -> float:
    K = float(K)
    if not math.isfinite(K):
        raise ValueError("kernel needs a finite K; map gamma=+inf to K=0 first")
    return K


def k_limit_g_factor(s, K: float):
    """``g(s) = K / ((s^{-K} - 1) log s)``; ``-1/(log s)^2`` at ``K = 0``."""
    K = _check_K(K)
    s = np.asarray(s, dtype=float)
    if np.any((s <= 0) | (s >= 1)):
        raise ValueError("s must lie in (0, 1)")
    ls = np.log(s)
    if K == 0.0:
        out = -1.0 / ls**2
    else:
        out = K / (np.expm1(-K * ls) * ls)
    return float(out) if out.ndim == 0 else out


def h_coefficients(s, K: float):
    """Coefficients of ``(W1(s), W2, W3(s))`` in ``h(s)``."""
    r = np.exp(-_check_K(K) * np.log(np.asarray(s, dtype=float)))
    return (-(r + 1.0), r, np.ones_like(r))


def printed_h_coefficients(s, K: float):
    """Coefficients of the ``"printed"`` combination ``(s^{-K}-1) W1 + s^{-K} W2 - W3``."""
    r = np.exp(-_check_K(K) * np.log(np.asarray(s, dtype=float)))
    return (r - 1.0, r, -np.ones_like(r))


def _bilinear(cs, ct, ls, lt):
    total = 0.0
    for ci, li in zip(cs, ls):
        for cj, lj in zip(ct, lt):
            total = total + ci * cj * np.minimum(li, lj)
    return total


def _combination_kernel(s, t, K, coef_fn):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    # order the arguments so the value is exactly symmetric
    lo, hi = np.minimum(s, t), np.maximum(s, t)
    g = k_limit_g_factor(lo, K) * k_limit_g_factor(hi, K)
    out = g * _bilinear(coef_fn(lo, K), coef_fn(hi, K), wiener_levels(lo), wiener_levels(hi))
    return float(out) if np.ndim(out) == 0 else out


def gamma_constructive(s, t, K: float):
    """Covariance ``g(s) g(t) E[h(s) h(t)]`` of the limit process."""
    return _combination_kernel(s, t, K, h_coefficients)


def gamma_printed(s, t, K: float):
    """Covariance implied by the ``"printed"`` combination; diagnostic only."""
    return _combination_kernel(s, t, K, printed_h_coefficients)


def gamma_closed_form(s, t, K: float):
    """The displayed closed-form covariance, evaluated with the larger argument first.

    The display is not symmetric in its arguments; it is evaluated at
    ``(max(s, t), min(s, t))``. At ``K = 0`` it reads
    ``(1 - max(s, t)^2) / ((log s)^2 (log t)^2)``.
    """
    K = _check_K(K)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any((s <= 0) | (s >= 1) | (t <= 0) | (t >= 1)):
        raise ValueError("s, t must lie in (0, 1)")
    u, v = np.maximum(s, t), np.minimum(s, t)
    lu, lv = np.log(u), np.log(v)
    if K == 0.0:
        out = (1.0 - u * u) / (lu**2 * lv**2)
    else:
        uk, vk = u**-K, v**-K
        U, V = uk - 1.0, vk - 1.0
        num = (
            U * (v * V + vk * K * u - K * v * v - K * K * v * v)
            + V * (K * (uk * v - u * u))
            + K * K * vk * (uk - u * u)
        )
        out = num / (U * V * lu * lv)
    return float(out) if np.ndim(out) == 0 else out


_FORM_FN = {CONSTRUCTIVE: gamma_constructive, CLOSED: gamma_closed_form, PRINTED: gamma_printed}


@dataclass(frozen=True)
class CovarianceKernel:
    """Covariance ``Gamma(s, t)`` for a given ``K``; ``form`` picks the formula."""

    K: float
    form: str = CONSTRUCTIVE

    def __post_init__(self):
        object.__setattr__(self, "K", _check_K(self.K))
        if self.form not in FORMS:
            raise ValueError(f"unknown kernel form {self.form!r}; expected one of {FORMS}")

    def eval(self, s, t):
        return _FORM_FN[self.form](s, t, self.K)

    __call__ = eval

    def matrix(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return np.asarray(self.eval(p[:, None], p[None, :]), dtype=float).reshape(p.size, p.size)


@dataclass(frozen=True)
class KernelDiscrepancy:
    """Result of comparing two kernel forms on a grid of points and K values."""

    reference: str
    candidate: str
    tolerance: float
    agrees: bool
    max_abs_deviation: float
    argmax: dict
    max_abs_deviation_by_K: dict
    grid: list
    K_values: list

    def to_dict(self) -> dict:
        return asdict(self)


def compare_kernels(points, K_values, tol: float = 1e-10,
                    reference: str = CONSTRUCTIVE, candidate: str = CLOSED) -> KernelDiscrepancy:
    """Largest absolute difference between two kernel forms and where it occurs."""
    pts = np.asarray(points, dtype=float)
    worst, where, by_K = -1.0, {}, {}
    for K in K_values:
        A = CovarianceKernel(K, reference).matrix(pts)
        B = CovarianceKernel(K, candidate).matrix(pts)
        diff = np.abs(A - B)
        i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
        by_K[repr(float(K))] = float(diff[i, j])
        if diff[i, j] > worst:
            worst = float(diff[i, j])
            where = {"s": float(pts[i]), "t": float(pts[j]), "K": float(K),
                     reference: float(A[i, j]), candidate: float(B[i, j])}
    return KernelDiscrepancy(reference, candidate, tol, worst <= tol, worst, where, by_K,
                             [float(p) for p in pts], [float(K) for K in K_values])


def factorize(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, escalating diagonal jitter ``1e-12 -> 1e-10 -> 1e-8``.

    Jitter is relative to the mean diagonal entry so it is scale-free.
    """
    cov = np.asarray(cov, dtype=float)
    scale = max(float(np.mean(np.diag(cov))), np.finfo(float).tiny)
    eye = np.eye(cov.shape[0])
    for jit in JITTER_LADDER:
        try:
            return np.linalg.cholesky(cov + jit * scale * eye)
        except np.linalg.LinAlgError:
            continue
    raise KernelNotPSDError("kernel not PSD on grid")


def simulate_limit_matrix(K: float, grid: TailGrid, n_paths: int, rng: RngStream,
                          workers: int = 1, form: str = CONSTRUCTIVE) -> np.ndarray:
    """``(n_paths, m)`` array of limit-process values; path ``i`` uses substream ``i``."""
    m = len(grid)
    if m > 500:
        raise ValueError("grid is limited to 500 points")
    n_paths = int(n_paths)
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    L = factorize(CovarianceKernel(K, form).matrix(grid.s))
    Z = np.empty((n_paths, m))

    def fill(lo, hi):
        for i in range(lo, hi):
            Z[i] = rng.substream(i).standard_normal(m)

    _run_chunked(fill, n_paths, workers)
    return Z @ L.T


def simulate_limit_paths(K: float, grid: TailGrid, n_paths: int, rng: RngStream,
                         workers: int = 1) -> list:
    paths = simulate_limit_matrix(K, grid, n_paths, rng, workers)
    meta = {"kind": GAUSSIAN_LIMIT, "K": float(K)}
    return [ProcessPath(grid, row, dict(meta, path=i)) for i, row in enumerate(paths)]


def _run_chunked(fill, total: int, workers: int) -> None:
    workers = max(1, int(workers))
    if workers == 1 or total < 2:
        fill(0, total)
        return
    bounds = np.linspace(0, total, min(workers * 4, total) + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        list(ex.map(lambda ab: fill(*ab), zip(bounds[:-1], bounds[1:])))


# --- continuity modulus ----------------------------------------------------


def modulus_w(h):
    """``w(h) = sqrt(2 h log(1/h))`` for ``0 < h < 1``."""
    h = np.asarray(h, dtype=float)
    if np.any((h <= 0) | (h >= 1)):
        raise ValueError("h must lie in (0, 1)")
    out = np.sqrt(2.0 * h * np.log(1.0 / h))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ModulusConstants:
    L: float
    K: float
    b: float

    @staticmethod
    def w(h):
        return modulus_w(h)


def modulus_constants(K: float, b: float) -> ModulusConstants:
    """``L = |K|/|log b| + |K|/(|b^{-K} - 1| |log b|)``, or ``1/(log b)^2`` at ``K = 0``."""
    K = _check_K(K)
    b = float(b)
    if not 0.0 < b < 1.0:
        raise ValueError("b must lie in (0, 1)")
    lb = abs(math.log(b))
    if K == 0.0:
        L = 1.0 / lb**2
    else:
        L = abs(K) / lb + abs(K) / (abs(math.expm1(-K * math.log(b))) * lb)
    return ModulusConstants(L, K, b)


def modulus_sup_ratio(paths: np.ndarray, points, h: float) -> np.ndarray:
    """Per path, ``max |G(s) - G(t)| / w(h)`` over grid pairs with ``0 < |s - t| <= h``.

    Returns NaN for paths when no pair is close enough.
    """
    X = np.atleast_2d(np.asarray(paths, dtype=float))
    p = np.asarray(points, dtype=float)
    best = np.full(X.shape[0], -np.inf)
    for lag in range(1, p.size):
        close = (p[lag:] - p[:-lag]) <= h * (1 + 1e-12)
        if not np.any(close):
            break
        inc = np.abs(X[:, lag:] - X[:, :-lag])[:, close]
        best = np.maximum(best, inc.max(axis=1))
    best = np.where(np.isfinite(best), best, np.nan)
    return best / modulus_w(h)
