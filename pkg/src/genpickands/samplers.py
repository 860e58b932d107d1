"""Seedable inverse-transform sampling and uniform order statistics.

Every random quantity is drawn from an :class:`RngStream`, a
``(seed, stream_id)`` pair mapped to a Philox counter-based generator
through ``numpy.random.SeedSequence``. Monte Carlo replication ``r`` uses
``stream_id = r``, so results do not depend on how replications are
scheduled across workers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evt_core import SortedSample, TailModel

_U_LO = np.nextafter(0.0, 1.0)
_U_HI = np.nextafter(1.0, 0.0)
_MAX64 = 2**64


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = int(getattr(self, name))
            if not 0 <= v < _MAX64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")
            object.__setattr__(self, name, v)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, index: int) -> np.random.Generator:
        """Generator for the ``index``-th child of this stream (e.g. one per simulated path)."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, int(index)))
        return np.random.Generator(np.random.Philox(ss))


def clamped_uniforms(gen: np.random.Generator, size) -> np.ndarray:
    """Uniform draws nudged off {0, 1} so tail quantiles stay finite."""
    return np.clip(gen.random(size), _U_LO, _U_HI)


def sample_sorted(model: TailModel, n: int, rng: RngStream) -> SortedSample:
    """``n`` i.i.d. draws ``F^{-1}(U_i)`` sorted ascending.

    Uses ``Q(U) = F^{-1}(1 - U)``, which has the same law since ``1 - U`` is
    uniform.
    """
    n = int(n)
    if n < 4:
        raise ValueError("n must be >= 4")
    u = clamped_uniforms(rng.generator(), n)
    return SortedSample(np.sort(model.tail_quantile(u)))


def uniform_order_statistics(n: int, ranks, gen: np.random.Generator) -> np.ndarray:
    """Exact joint draw of ``U_{j,n}`` for the given ascending ranks.

    With ``E_1, ..., E_{n+1}`` i.i.d. standard exponential and partial sums
    ``S_j``, ``(S_1/S_{n+1}, ..., S_n/S_{n+1})`` has the law of the uniform
    order statistics. Only the gaps between requested ranks are needed,
    each a Gamma variate, so the cost is independent of ``n``.
    """
    r = np.asarray(ranks, dtype=np.int64)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("ranks must be a non-empty 1-d sequence")
    if np.any(np.diff(r) <= 0) or r[0] < 1 or r[-1] > n:
        raise ValueError(f"ranks must be strictly increasing within 1..{n}")
    shapes = np.empty(r.size + 1)
    shapes[0] = r[0]
    shapes[1:-1] = np.diff(r)
    shapes[-1] = n + 1 - r[-1]
    g = gen.standard_gamma(shapes)
    partial = np.cumsum(g)
    return np.clip(partial[:-1] / partial[-1], _U_LO, _U_HI)


def sample_upper_order_statistics(model: TailModel, n: int, ranks, rng: RngStream) -> np.ndarray:
    """``X_{n-j+1,n}`` for ascending upper ranks ``j``, drawn without the full sample.

    ``X_{n-j+1,n} = Q(U_{j,n})`` because ``Q`` is non-increasing. The result
    has exactly the joint law of the corresponding entries of
    :func:`sample_sorted`, though not the same values for a given stream.
    """
    u = uniform_order_statistics(int(n), ranks, rng.generator())
    return model.tail_quantile(u)


def _tail_index(k: int, s) -> np.ndarray:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s <= 0) or np.any(s > 1):
        raise ValueError("s must lie in (0, 1]")
    return np.floor(k / s + 1e-9).astype(np.int64)


def uniform_tail_stat(n: int, k: int, s, rng: RngStream, method: str = "full"):
    """``sqrt(k) * ((n / j) U_{j,n} - 1)`` with ``j = floor(k/s)``, from one fresh uniform sample.

    ``s`` may be a scalar or an array; array input evaluates every level on
    the same sample, which is what covariance checks need. ``method="full"``
    sorts ``n`` uniforms; ``"spacings"`` draws only the needed order
    statistics (same law, much cheaper).
    """
    n, k = int(n), int(k)
    scalar = np.ndim(s) == 0
    j = _tail_index(k, s)
    if np.any(j < 1) or np.any(j > n):
        raise ValueError(f"index floor(k/s) out of range 1..{n}")
    gen = rng.generator()
    if method == "full":
        u = np.sort(gen.random(n))
        uj = u[j - 1]
    elif method == "spacings":
        uniq, inv = np.unique(j, return_inverse=True)
        uj = uniform_order_statistics(n, uniq, gen)[inv]
    else:
        raise ValueError(f"unknown method {method!r}")
    stat = math.sqrt(k) * (n / j * uj - 1.0)
    return float(stat[0]) if scalar else stat


def write_sample_csv(sample, path, header: bool = True) -> None:
    """Single-column CSV of raw observations."""
    values = sample.values if isinstance(sample, SortedSample) else np.asarray(sample, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(["x"])
        for v in values:
            w.writerow([repr(float(v))])


def read_sample_csv(path) -> SortedSample:
    """Read a single-column CSV (header optional) and sort it."""
    vals = []
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
                continue
            try:
                vals.append(float(row[0]))
            except ValueError:
                if vals:
                    raise ValueError(f"non-numeric value {row[0]!r} in {path}") from None
                # first non-numeric line is a header
    return SortedSample.from_values(vals)
