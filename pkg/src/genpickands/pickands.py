"""The generalized Pickands process and its centred versions.

For a sorted sample and rank ``k`` the process at ``s in (0, 1)`` is::

    P_n(s) = log[(X_{n-k+1,n} - X_{n-j1+1,n}) / (X_{n-j1+1,n} - X_{n-j2+1,n})] / log(1/s)

with ``j1 = floor(k/s)`` and ``j2 = floor(k/s^2)``, and ``P_n(s) = 0`` when
``s^2 < k/n``. ``s = 1/2`` gives the classical Pickands estimator.

The deterministic counterpart ``p_n(s)`` replaces order statistics by tail
quantiles ``Q(j/n)``; equivalently ``p_n(s) = log c_n(s) / log(1/s)`` where
``c_n`` is the quantile spacing ratio. ``kappa_n = sqrt(k) (P_n - p_n)``
and ``kappa*_n = sqrt(k) (P_n - K(gamma))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TieError
from .evt_core import ExtremeIndex, SortedSample, TailGrid, TailModel

P_N = "P_n"
SMALL_P_N = "p_n"
KAPPA = "kappa_n"
KAPPA_STAR = "kappa_star"
GAUSSIAN_LIMIT = "gaussian_limit"


@dataclass(frozen=True, eq=False)
class ProcessPath:
    """Values of a process on a grid.

    ``meta`` holds ``n``, ``k`` and ``kind``; points where evaluation failed
    carry NaN and an entry in ``meta["errors"]`` keyed by grid index.
    """

    grid: TailGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.grid),):
            raise ValueError("path length must match the grid")
        object.__setattr__(self, "values", v)

    @property
    def errors(self) -> dict:
        return self.meta.get("errors", {})


def tail_ranks(k: int, s):
    """``(floor(k/s), floor(k/s^2))``; vectorised over ``s``.

    A tiny upward nudge keeps exact integers such as ``1000/0.5`` from being
    floored one short by rounding.
    """
    s = np.asarray(s, dtype=float)
    j1 = np.floor(k / s + 1e-9).astype(np.int64)
    j2 = np.floor(k / (s * s) + 1e-9).astype(np.int64)
    if j1.ndim == 0:
        return int(j1), int(j2)
    return j1, j2


def log_spacing_ratio(top, mid, low, s):
    """``log(|top - mid| / |mid - low|) / log(1/s)``, NaN where the spacings tie.

    Both spacings must be non-zero and share a sign; this accepts either
    orientation of the quantile differences.
    """
    num = np.asarray(top, dtype=float) - np.asarray(mid, dtype=float)
    den = np.asarray(mid, dtype=float) - np.asarray(low, dtype=float)
    ok = (num * den) > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(np.abs(num) / np.abs(den)) / np.log(1.0 / np.asarray(s, dtype=float))
    return np.where(ok, out, np.nan)


def _check_s(s: float) -> float:
    s = float(s)
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    return s


def pickands_point(sample: SortedSample, k: int, s: float) -> float:
    k, s, n = int(k), _check_s(s), sample.n
    if k < 1:
        raise ValueError("k must be >= 1")
    if s * s < k / n:
        return 0.0
    j1, j2 = tail_ranks(k, s)
    if j2 > n:
        raise ValueError(f"floor(k/s^2) = {j2} exceeds n = {n}")
    if j1 == k or j1 == j2:
        raise TieError(f"rank floors collide at s={s:g}: k={k}, floor(k/s)={j1}, floor(k/s^2)={j2}")
    x = sample.upper(np.array([k, j1, j2]))
    val = float(log_spacing_ratio(x[0], x[1], x[2], s))
    if math.isnan(val):
        raise TieError(f"tied or sign-mixed order-statistic spacings at s={s:g}")
    return val


def _path(fn, grid: TailGrid, meta: dict) -> ProcessPath:
    values = np.empty(len(grid))
    errors = {}
    for i, s in enumerate(grid.points):
        try:
            values[i] = fn(s)
        except (TieError, ValueError) as exc:
            values[i] = np.nan
            errors[i] = f"{type(exc).__name__}: {exc}"
    meta = dict(meta)
    if errors:
        meta["errors"] = errors
    return ProcessPath(grid, values, meta)


def pickands_path(sample: SortedSample, k: int, grid: TailGrid) -> ProcessPath:
    return _path(lambda s: pickands_point(sample, k, s), grid, {"n": sample.n, "k": int(k), "kind": P_N})


def theoretical_pickands(model: TailModel, n: int, k: int, s: float) -> float:
    """``p_n(s)`` from tail quantiles at ``k/n``, ``floor(k/s)/n``, ``floor(k/s^2)/n``."""
    n, k, s = int(n), int(k), _check_s(s)
    j1, j2 = tail_ranks(k, s)
    if j2 > n:
        raise ValueError(f"floor(k/s^2) = {j2} exceeds n = {n}")
    if j1 == k or j1 == j2:
        raise TieError(f"rank floors collide at s={s:g}: k={k}, floor(k/s)={j1}, floor(k/s^2)={j2}")
    q = model.tail_quantile(np.array([k, j1, j2], dtype=float) / n)
    val = float(log_spacing_ratio(q[0], q[1], q[2], s))
    if math.isnan(val):
        raise TieError(f"tail quantile differences vanish at s={s:g}")
    return val


def kappa_path(sample: SortedSample, model: TailModel, k: int, grid: TailGrid) -> ProcessPath:
    """``sqrt(k) (P_n(s) - p_n(s))`` on the grid."""
    root_k = math.sqrt(k)

    def point(s):
        return root_k * (pickands_point(sample, k, s) - theoretical_pickands(model, sample.n, k, s))

    return _path(point, grid, {"n": sample.n, "k": int(k), "kind": KAPPA})


def kappa_star_path(sample: SortedSample, gamma, k: int, grid: TailGrid) -> ProcessPath:
    """``sqrt(k) (P_n(s) - K(gamma))`` on the grid."""
    K = ExtremeIndex.coerce(gamma).k_of_gamma
    root_k = math.sqrt(k)
    return _path(
        lambda s: root_k * (pickands_point(sample, k, s) - K),
        grid,
        {"n": sample.n, "k": int(k), "kind": KAPPA_STAR},
    )
