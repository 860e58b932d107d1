"""Integral estimators ``I_n(m) = sum_i w_i P_n(s_i)`` over finitely supported measures."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .evt_core import SortedSample
from .limit_gaussian import CovarianceKernel
from .pickands import pickands_point


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Weights on strictly increasing support points in (0, 1). Signed weights are allowed."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.support, dtype=float)).copy()
        w = np.atleast_1d(np.asarray(self.weights, dtype=float)).copy()
        if s.ndim != 1 or s.shape != w.shape or s.size == 0:
            raise ValueError("support and weights must be non-empty and of equal length")
        if np.any(np.diff(s) <= 0):
            raise ValueError("support points must be distinct and strictly increasing")
        if s[0] <= 0 or s[-1] >= 1:
            raise ValueError("support must lie inside (0, 1)")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        s.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "weights", w)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    @property
    def is_signed(self) -> bool:
        return bool(np.any(self.weights < 0))

    @classmethod
    def dirac(cls, s: float) -> "GridMeasure":
        return cls(np.array([s]), np.array([1.0]))

    @classmethod
    def uniform(cls, points) -> "GridMeasure":
        p = np.asarray(points, dtype=float)
        return cls(p, np.full(p.size, 1.0 / p.size))

    @classmethod
    def midpoint(cls, density: Callable, a: float, b: float, m: int) -> "GridMeasure":
        """Midpoint-rule discretisation of ``density(s) ds`` on ``[a, b]`` with ``m`` cells."""
        edges = np.linspace(a, b, int(m) + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        return cls(mid, np.asarray(density(mid), dtype=float) * np.diff(edges))

    def scaled(self, c: float) -> "GridMeasure":
        return GridMeasure(self.support, c * self.weights)

    def __add__(self, other: "GridMeasure") -> "GridMeasure":
        if np.intersect1d(self.support, other.support).size:
            raise ValueError("only measures with disjoint supports can be added")
        s = np.concatenate([self.support, other.support])
        w = np.concatenate([self.weights, other.weights])
        order = np.argsort(s)
        return GridMeasure(s[order], w[order])

    def to_dict(self) -> dict:
        return {"support": [float(x) for x in self.support], "weights": [float(x) for x in self.weights]}

    @classmethod
    def from_dict(cls, d: dict) -> "GridMeasure":
        return cls(np.asarray(d["support"], dtype=float), np.asarray(d["weights"], dtype=float))

    @classmethod
    def load(cls, path) -> "GridMeasure":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _check_support(measure: GridMeasure, n: int, k: int) -> None:
    bad = measure.support[measure.support**2 < k / n]
    if bad.size:
        raise ValueError(
            f"support points {bad.tolist()} fall where s^2 < k/n = {k / n:g}; "
            "the zero convention would bias the estimator"
        )


def integral_estimator(sample: SortedSample, k: int, measure: GridMeasure) -> float:
    _check_support(measure, sample.n, int(k))
    vals = np.array([pickands_point(sample, k, s) for s in measure.support])
    return float(np.dot(measure.weights, vals))


def sigma2(measure: GridMeasure, kernel: CovarianceKernel) -> float:
    """``sum_ij w_i w_j Gamma(s_i, s_j)``."""
    w = measure.weights
    return float(w @ kernel.matrix(measure.support) @ w)


@dataclass(frozen=True)
class NormalizedEstimate:
    estimate: float
    std_error: float
    z: float | None = None

    def to_dict(self) -> dict:
        d = {"estimate": self.estimate, "std_error": self.std_error}
        if self.z is not None:
            d["z"] = self.z
        return d


def normalized_estimate(sample: SortedSample, k: int, measure: GridMeasure,
                        kernel: CovarianceKernel, reference: float | None = None) -> NormalizedEstimate:
    """Estimate with its asymptotic standard error ``sqrt(sigma_m^2 / k)``.

    ``z = sqrt(k) (I_n - K) / sigma_m`` is filled in when a reference ``K``
    is given.
    """
    if abs(measure.total_mass - 1.0) > 1e-12:
        raise ValueError(f"measure must have unit mass, got {measure.total_mass!r}")
    est = integral_estimator(sample, k, measure)
    var = sigma2(measure, kernel)
    se = math.sqrt(max(var, 0.0) / k)
    z = None
    if reference is not None:
        z = (est - float(reference)) / se if se > 0 else math.nan
    return NormalizedEstimate(est, se, z)
