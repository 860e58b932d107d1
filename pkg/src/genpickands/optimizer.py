"""Variance-minimising measures on a fixed support grid.

Minimise ``w' G w`` subject to ``sum(w) = 1`` (optionally ``w >= 0``), where
``G`` is the kernel matrix on the support. Unit mass keeps the integral
estimator consistent for ``K``; sign constraints are a modelling choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularSystemError
from .evt_core import TailGrid
from .functionals import GridMeasure
from .limit_gaussian import CovarianceKernel

UNIT_MASS = "unit_mass"
NONNEGATIVE = "nonnegative"


@dataclass(frozen=True, eq=False)
class OptimizationProblem:
    kernel_matrix: np.ndarray
    nonnegative: bool = False
    ridge: float = 1e-10

    def __post_init__(self):
        G = np.asarray(self.kernel_matrix, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] == 0:
            raise ValueError("kernel matrix must be square and non-empty")
        scale = max(1.0, float(np.max(np.abs(G))))
        if np.max(np.abs(G - G.T)) > 1e-12 * scale:
            raise ValueError("kernel matrix is not symmetric")
        if np.linalg.eigvalsh(G)[0] < -1e-8 * scale:
            raise ValueError("kernel matrix is not positive semidefinite")
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")
        object.__setattr__(self, "kernel_matrix", G)

    @classmethod
    def from_kernel(cls, kernel: CovarianceKernel, grid: TailGrid, nonnegative: bool = False,
                    ridge: float = 1e-10) -> "OptimizationProblem":
        return cls(kernel.matrix(grid.s), nonnegative, ridge)

    @property
    def constraint(self) -> str:
        return NONNEGATIVE if self.nonnegative else UNIT_MASS


@dataclass(frozen=True)
class OptimizationResult:
    measure: GridMeasure
    sigma2: float
    kkt_residual: float
    constraint: str
    iterations: int

    @property
    def signed(self) -> bool:
        return self.measure.is_signed

    def to_dict(self) -> dict:
        d = self.measure.to_dict()
        d.update(sigma2=self.sigma2, kkt_residual=self.kkt_residual, constraint=self.constraint,
                 iterations=self.iterations, signed=self.signed)
        return d


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{w >= 0, sum(w) = 1}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def kkt_unit_mass(G: np.ndarray, w: np.ndarray) -> float:
    """Relative spread of ``G w`` around its multiplier ``w' G w`` (stationarity)."""
    g = G @ w
    mu = float(w @ g)
    return float(np.max(np.abs(g - mu)) / max(abs(mu), np.finfo(float).tiny))


def kkt_simplex(G: np.ndarray, w: np.ndarray, support_tol: float = 1e-12) -> float:
    """Relative KKT violation on the simplex: equal gradients on the support, no smaller ones off it."""
    g = G @ w
    mu = float(w @ g)
    on = w > support_tol
    viol = 0.0
    if np.any(on):
        viol = float(np.max(np.abs(g[on] - mu)))
    viol = max(viol, float(np.max(np.maximum(mu - g, 0.0))))
    return viol / max(abs(mu), np.finfo(float).tiny)


def _solve_unit_mass(G: np.ndarray, ridge: float) -> np.ndarray:
    m = G.shape[0]
    ones = np.ones(m)
    r = ridge
    for _ in range(4):
        try:
            y = np.linalg.solve(G + r * np.eye(m), ones)
        except np.linalg.LinAlgError:
            y = None
        if y is not None and np.all(np.isfinite(y)) and abs(y.sum()) > 0:
            w = y / y.sum()
            # one step of iterative refinement against the unregularised system
            A = G + r * np.eye(m)
            resid = ones * float(w @ G @ w) - G @ w
            corr = np.linalg.solve(A, resid)
            corr -= corr.sum() / m
            w2 = w + corr
            w2 /= w2.sum()
            if np.all(np.isfinite(w2)) and kkt_unit_mass(G, w2) <= kkt_unit_mass(G, w):
                w = w2
            return w
        r = max(r * 100.0, 1e-12)
    raise SingularSystemError("unit-mass system is singular even after ridge escalation")


def _projected_gradient(G: np.ndarray, tol: float, max_iter: int):
    m = G.shape[0]
    lam_max = float(np.linalg.eigvalsh(G)[-1])
    step = 1.0 / (2.0 * max(lam_max, np.finfo(float).tiny))
    w = np.full(m, 1.0 / m)
    it = 0
    for it in range(1, max_iter + 1):
        w = project_simplex(w - step * 2.0 * (G @ w))
        if kkt_simplex(G, w) < tol:
            break
    return w, it


def optimize_measure(problem: OptimizationProblem, support: TailGrid,
                     tol: float = 1e-8, max_iter: int = 100_000) -> OptimizationResult:
    """Minimum-variance grid measure.

    Unit-mass mode solves ``(G + ridge I) w = 1`` and normalises. Nonnegative
    mode also runs projected gradient on the simplex from the uniform start
    with step ``1/(2 lambda_max)`` and keeps whichever feasible point has the
    smaller objective.
    """
    G = problem.kernel_matrix
    if G.shape[0] != len(support):
        raise ValueError("support size does not match the kernel matrix")
    w_lin = _solve_unit_mass(G, problem.ridge)
    if not problem.nonnegative:
        w, iters, kkt = w_lin, 0, kkt_unit_mass(G, w_lin)
    else:
        candidates = []
        if np.all(w_lin >= 0):
            candidates.append((w_lin, 0))
        candidates.append(_projected_gradient(G, tol, max_iter))
        w, iters = min(candidates, key=lambda c: float(c[0] @ G @ c[0]))
        kkt = kkt_simplex(G, w)
    measure = GridMeasure(support.s, w)
    return OptimizationResult(measure, float(w @ G @ w), kkt, problem.constraint, iters)
