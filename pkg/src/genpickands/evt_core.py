"""Domain types: extreme-value index, tail models, samples, grids, rank sequences.

Tail models are described through their tail quantile function
``Q(u) = F^{-1}(1 - u)`` written in one of the three canonical forms:

* Frechet (``gamma > 0``)::

      Q(u) = c (1 + p(u)) u^{-K} exp(int_u^1 b(t)/t dt)

* Weibull (``gamma < 0``, finite right endpoint ``x0``)::

      x0 - Q(u) = c (1 + p(u)) u^{-K} exp(int_u^1 b(t)/t dt)

  With ``K = gamma < 0`` the power ``u^{-K} = u^{|gamma|}`` vanishes at
  ``u -> 0``, so ``Q(u) -> x0`` as it must.

* Gumbel (``gamma = +inf``, ``K = 0``)::

      Q(u) = d - s(u) + int_u^1 s(t)/t dt,
      s(u) = c (1 + p(u)) exp(int_u^1 b(t)/t dt)

``p`` and ``b`` are the auxiliary functions; both tend to zero at zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

FRECHET = "frechet"
WEIBULL = "weibull"
GUMBEL = "gumbel"
CASES = (FRECHET, WEIBULL, GUMBEL)


def zero_aux(u):
    """Auxiliary function identically equal to zero."""
    return np.zeros_like(np.asarray(u, dtype=float))


@dataclass(frozen=True)
class ExtremeIndex:
    """Extreme-value index ``gamma`` (``+inf`` allowed for the Gumbel case)."""

    gamma: float

    def __post_init__(self):
        g = float(self.gamma)
        if math.isnan(g) or g == -math.inf:
            raise ValueError(f"invalid extreme-value index {self.gamma!r}")
        object.__setattr__(self, "gamma", g)

    @property
    def k_of_gamma(self) -> float:
        """Working exponent ``K(gamma) = gamma * 1{gamma != +inf}``."""
        return 0.0 if self.gamma == math.inf else self.gamma

    @property
    def K(self) -> float:
        return self.k_of_gamma

    @classmethod
    def coerce(cls, value) -> "ExtremeIndex":
        if isinstance(value, ExtremeIndex):
            return value
        return cls(float(value))


class PiecewiseLinear:
    """Piecewise-linear function on (0, 1) given by knots, constant beyond them.

    Besides evaluation it integrates ``f(t)/t`` over ``[u, 1]`` exactly,
    which is what the Karamata factor ``exp(int_u^1 b(t)/t dt)`` needs.
    """

    def __init__(self, knots: Sequence[float], values: Sequence[float]):
        x = np.asarray(knots, dtype=float)
        y = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size == 0:
            raise ValueError("table needs matching, non-empty knot and value lists")
        if np.any(np.diff(x) <= 0) or x[0] <= 0 or x[-1] >= 1:
            raise ValueError("table knots must be strictly increasing inside (0, 1)")
        if not np.all(np.isfinite(y)):
            raise ValueError("table values must be finite")
        self.knots = x
        self.values = y

    @classmethod
    def from_pairs(cls, pairs) -> "PiecewiseLinear":
        arr = np.asarray(pairs, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("table must be a list of [u, value] pairs")
        return cls(arr[:, 0], arr[:, 1])

    def __call__(self, u):
        return np.interp(u, self.knots, self.values)

    def _cumulative(self) -> np.ndarray:
        """``C[i] = int_{x_i}^1 f(t)/t dt`` for every knot ``x_i``."""
        x, y = self.knots, self.values
        seg = np.zeros(x.size)
        if x.size > 1:
            slope = np.diff(y) / np.diff(x)
            seg[:-1] = (y[:-1] - slope * x[:-1]) * np.log(x[1:] / x[:-1]) + slope * np.diff(x)
        seg[-1] = y[-1] * math.log(1.0 / x[-1])
        return np.cumsum(seg[::-1])[::-1]

    def log_integral(self, u):
        """``int_u^1 f(t)/t dt``, exact for the piecewise-linear ``f``; vectorised over ``u``."""
        u = np.asarray(u, dtype=float)
        x, y = self.knots, self.values
        cum = self._cumulative()
        i = np.searchsorted(x, u, side="right")  # u lies in [x_{i-1}, x_i)
        out = np.empty(u.shape)
        below = i == 0
        above = i == x.size
        mid = ~below & ~above
        out[below] = y[0] * np.log(x[0] / u[below]) + cum[0]
        out[above] = y[-1] * np.log(1.0 / u[above])
        if np.any(mid):
            j = i[mid]
            lo, hi = x[j - 1], x[j]
            slope = (y[j] - y[j - 1]) / (hi - lo)
            um = u[mid]
            out[mid] = (y[j - 1] - slope * lo) * np.log(hi / um) + slope * (hi - um) + cum[j]
        return float(out) if out.ndim == 0 else out


def _quad_log_integral(b: Callable, u: float) -> float:
    val, _ = integrate.quad(lambda t: float(b(t)) / t, u, 1.0, limit=200)
    return val


@dataclass(frozen=True)
class TailModel:
    """Distribution given by its tail quantile representation.

    ``tail_quantile`` evaluates the representation unless a closed form is
    supplied through ``exact_quantile`` (built-in families do this; tests
    check both agree).
    """

    case: str
    gamma: ExtremeIndex
    c: float = 1.0
    p_aux: Callable = zero_aux
    b_aux: Callable = zero_aux
    x0: float | None = None
    d: float = 0.0
    name: str = "custom"
    b_log_integral: Callable | None = field(default=None, repr=False)
    exact_quantile: Callable | None = field(default=None, repr=False)
    exact_cdf: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "gamma", ExtremeIndex.coerce(self.gamma))
        g = self.gamma.gamma
        if self.case not in CASES:
            raise ValueError(f"unknown domain case {self.case!r}; expected one of {CASES}")
        if self.case == FRECHET and not (0 < g < math.inf):
            raise ValueError("Frechet case needs 0 < gamma < inf")
        if self.case == WEIBULL:
            if not g < 0:
                raise ValueError("Weibull case needs gamma < 0")
            if self.x0 is None or not math.isfinite(self.x0):
                raise ValueError("Weibull case needs a finite right endpoint x0")
        if self.case == GUMBEL and g != math.inf:
            raise ValueError("Gumbel case needs gamma = +inf")
        if not self.c > 0:
            raise ValueError("c must be positive")

    @property
    def K(self) -> float:
        return self.gamma.k_of_gamma

    @property
    def has_zero_aux(self) -> bool:
        return self.p_aux is zero_aux and self.b_aux is zero_aux

    # --- representation -------------------------------------------------

    def _b_integral(self, u):
        u = np.asarray(u, dtype=float)
        if self.b_aux is zero_aux:
            return np.zeros_like(u)
        if self.b_log_integral is not None:
            return np.asarray(self.b_log_integral(u), dtype=float)
        flat = np.array([_quad_log_integral(self.b_aux, float(v)) for v in u.ravel()])
        return flat.reshape(u.shape)

    def _knots(self) -> np.ndarray:
        pts = [f.knots for f in (self.p_aux, self.b_aux) if isinstance(f, PiecewiseLinear)]
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)

    def slowly_varying(self, u):
        """``s(u) = c (1 + p(u)) exp(int_u^1 b(t)/t dt)`` (Gumbel case)."""
        u = np.asarray(u, dtype=float)
        return self.c * (1.0 + self.p_aux(u)) * np.exp(self._b_integral(u))

    def tail_scale(self, u):
        """``a(u)``: ``Q(u)`` for Frechet, ``x0 - Q(u)`` for Weibull, per the representation."""
        if self.case == GUMBEL:
            raise ValueError("a(u) is defined through a power representation only")
        u = np.asarray(u, dtype=float)
        return self.slowly_varying(u) * u ** (-self.K)

    def representation_quantile(self, u):
        u = np.asarray(u, dtype=float)
        if self.case == FRECHET:
            return self.tail_scale(u)
        if self.case == WEIBULL:
            return self.x0 - self.tail_scale(u)
        s = self.slowly_varying(u)
        if self.has_zero_aux:
            tail = self.c * np.log(1.0 / u)
        else:
            # substitute t = e^x and split at table knots so kinks are resolved
            knots = np.log(self._knots())
            flat = []
            for v in u.ravel():
                lo = math.log(float(v))
                brk = knots[(knots > lo) & (knots < 0.0)]
                f = lambda x: float(self.slowly_varying(math.exp(x)))
                flat.append(integrate.quad(f, lo, 0.0, points=brk if brk.size else None, limit=200)[0])
            tail = np.array(flat).reshape(u.shape)
        return self.d - s + tail

    def tail_quantile(self, u):
        """``F^{-1}(1 - u)``; vectorised, no domain checks."""
        if self.exact_quantile is not None:
            return self.exact_quantile(np.asarray(u, dtype=float))
        return self.representation_quantile(u)

    def cdf(self, x):
        """Distribution function, numerically inverting the tail quantile when no closed form exists."""
        if self.exact_cdf is not None:
            return self.exact_cdf(np.asarray(x, dtype=float))
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape)
        lo_u, hi_u = 1e-300, 1.0 - 1e-16
        q_top, q_bottom = float(self.tail_quantile(lo_u)), float(self.tail_quantile(hi_u))
        for i, xv in enumerate(x.ravel()):
            if xv >= q_top:
                out.flat[i] = 1.0
            elif xv <= q_bottom:
                out.flat[i] = 0.0
            else:
                # Q is non-increasing in u; solve on log u for dynamic range.
                root = optimize.brentq(
                    lambda lu: float(self.tail_quantile(math.exp(lu))) - xv,
                    math.log(lo_u),
                    math.log(hi_u),
                    xtol=1e-14,
                )
                out.flat[i] = 1.0 - math.exp(root)
        return out if x.ndim else float(out)

    def describe(self) -> dict:
        return {"name": self.name, "case": self.case, "gamma": self.gamma.gamma, "K": self.K}


# --- built-in families ----------------------------------------------------


def pareto(gamma: float = 1.0) -> TailModel:
    """Exact Pareto tail ``Q(u) = u^{-gamma}`` on ``[1, inf)``."""
    g = float(gamma)
    if not 0 < g < math.inf:
        raise ValueError("pareto needs 0 < gamma < inf")
    return TailModel(
        FRECHET,
        ExtremeIndex(g),
        name=f"pareto:{g:g}",
        exact_quantile=lambda u: u ** (-g),
        exact_cdf=lambda x: np.where(x <= 1.0, 0.0, 1.0 - np.maximum(x, 1.0) ** (-1.0 / g)),
    )


def weibull(gamma: float = -1.0) -> TailModel:
    """Bounded tail ``Q(u) = 1 - u^{-gamma}`` (``gamma < 0``) with endpoint 1."""
    g = float(gamma)
    if not g < 0:
        raise ValueError("weibull needs gamma < 0")

    def cdf(x):
        y = np.clip(1.0 - x, 0.0, 1.0)
        return 1.0 - y ** (-1.0 / g)

    name = "uniform" if g == -1.0 else f"weibull:{g:g}"
    return TailModel(
        WEIBULL,
        ExtremeIndex(g),
        x0=1.0,
        name=name,
        exact_quantile=lambda u: 1.0 - u ** (-g),
        exact_cdf=cdf,
    )


def uniform() -> TailModel:
    """Uniform(0, 1): ``x0 = 1``, ``x0 - Q(u) = u``, ``gamma = -1``."""
    return weibull(-1.0)


def exponential() -> TailModel:
    """Standard exponential, ``Q(u) = log(1/u)``; Gumbel case with ``c = d = 1``."""
    return TailModel(
        GUMBEL,
        ExtremeIndex(math.inf),
        c=1.0,
        d=1.0,
        name="exponential",
        exact_quantile=lambda u: -np.log(u),
        exact_cdf=lambda x: np.where(x <= 0, 0.0, -np.expm1(-np.maximum(x, 0.0))),
    )


def model_from_dict(desc: dict) -> TailModel:
    """Build a model from ``{case, gamma, x0, c, p_table, b_table[, d]}``.

    Tables are lists of ``[u, value]`` pairs interpolated linearly and held
    constant outside the knot range.
    """
    case = str(desc["case"]).lower()
    raw_gamma = desc.get("gamma")
    if raw_gamma is None or (isinstance(raw_gamma, str) and raw_gamma.lower() in ("inf", "+inf")):
        gamma = math.inf
    else:
        gamma = float(raw_gamma)
    kwargs = {
        "c": float(desc.get("c", 1.0)),
        "d": float(desc.get("d", 0.0)),
        "x0": None if desc.get("x0") is None else float(desc["x0"]),
        "name": str(desc.get("name", "custom")),
    }
    if desc.get("p_table"):
        kwargs["p_aux"] = PiecewiseLinear.from_pairs(desc["p_table"])
    if desc.get("b_table"):
        b = PiecewiseLinear.from_pairs(desc["b_table"])
        kwargs["b_aux"] = b
        kwargs["b_log_integral"] = b.log_integral
    return TailModel(case, ExtremeIndex(gamma), **kwargs)


def model_from_id(model_id: str) -> TailModel:
    """Resolve ``pareto:<gamma>``, ``weibull:<gamma>``, ``uniform``, ``exponential`` or a JSON path."""
    key = model_id.strip()
    low = key.lower()
    if low == "uniform":
        return uniform()
    if low == "exponential":
        return exponential()
    if low.startswith("pareto:"):
        return pareto(float(key.split(":", 1)[1]))
    if low == "pareto":
        return pareto(1.0)
    if low.startswith("weibull:"):
        return weibull(float(key.split(":", 1)[1]))
    path = Path(key)
    if path.suffix == ".json" and path.exists():
        return model_from_dict(json.loads(path.read_text()))
    raise ValueError(f"unknown model id {model_id!r}")


def tail_quantile_eval(model: TailModel, u: float) -> float:
    """``F^{-1}(1 - u)`` for a single ``u`` in (0, 1)."""
    u = float(u)
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u}")
    return float(model.tail_quantile(u))


# --- samples and grids ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class SortedSample:
    """Ascending order statistics ``X_{1,n} <= ... <= X_{n,n}``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 4:
            raise ValueError("a sample needs at least 4 observations")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample contains non-finite values")
        if np.any(np.diff(v) < 0):
            raise ValueError("values are not sorted ascending; use SortedSample.from_values")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_values(cls, values) -> "SortedSample":
        return cls(np.sort(np.asarray(values, dtype=float)))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def upper(self, j):
        """``X_{n-j+1,n}``, the ``j``-th largest observation (``j`` may be an array)."""
        j = np.asarray(j)
        if np.any(j < 1) or np.any(j > self.n):
            raise ValueError(f"upper rank out of range 1..{self.n}")
        return self.values[self.n - j]


@dataclass(frozen=True)
class TailGrid:
    """Strictly increasing evaluation points inside ``[a, b]`` with ``0 < a < b < 1``."""

    a: float
    b: float
    points: tuple

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not 0.0 < a < b < 1.0:
            raise ValueError(f"grid bounds must satisfy 0 < a < b < 1, got a={a}, b={b}")
        pts = tuple(float(p) for p in self.points)
        if not pts:
            raise ValueError("grid needs at least one point")
        if any(q <= p for p, q in zip(pts, pts[1:])):
            raise ValueError("grid points must be strictly increasing")
        if pts[0] < a or pts[-1] > b:
            raise ValueError("grid points must lie in [a, b]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "points", pts)

    @classmethod
    def linspace(cls, a: float, b: float, m: int) -> "TailGrid":
        m = int(m)
        if m < 1:
            raise ValueError("m must be >= 1")
        # rounding keeps nominal points such as 0.5 exact
        pts = np.round(np.linspace(a, b, m), 12) if m > 1 else np.array([0.5 * (a + b)])
        return cls(a, b, tuple(pts))

    @classmethod
    def parse(cls, text: str) -> "TailGrid":
        """Parse ``"a,b,m"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"grid must look like 'a,b,m', got {text!r}")
        return cls.linspace(float(parts[0]), float(parts[1]), int(parts[2]))

    @classmethod
    def of(cls, points, a: float | None = None, b: float | None = None) -> "TailGrid":
        """Grid on the given points; bounds default to their hull (widened by one ulp for a single point)."""
        pts = [float(p) for p in points]
        lo = min(pts) if a is None else a
        hi = max(pts) if b is None else b
        if a is None and b is None and lo == hi:
            lo, hi = float(np.nextafter(lo, 0.0)), float(np.nextafter(hi, 1.0))
        return cls(lo, hi, tuple(pts))

    @property
    def s(self) -> np.ndarray:
        return np.asarray(self.points)

    def __len__(self):
        return len(self.points)


# --- intermediate sequences and regularity checks -------------------------


@dataclass(frozen=True)
class KSequence:
    """Intermediate rank sequence ``n -> k(n)``."""

    k_fn: Callable[[int], int]
    name: str = "custom"

    def __call__(self, n: int) -> int:
        k = int(self.k_fn(int(n)))
        if not 1 <= k <= n:
            raise ValueError(f"k({n}) = {k} is outside 1..n")
        return k

    @classmethod
    def from_rule(cls, rule: str) -> "KSequence":
        """Named rules: ``sqrt``, ``log``, ``n``, ``n/log``, ``pow:<e>``, ``const:<k>``."""
        r = rule.strip().lower()
        if r == "sqrt":
            return cls(lambda n: math.ceil(math.sqrt(n)), "sqrt")
        if r == "log":
            return cls(lambda n: math.ceil(math.log(n)), "log")
        if r == "n":
            return cls(lambda n: n, "n")
        if r == "n/log":
            return cls(lambda n: math.ceil(n / math.log(n)), "n/log")
        if r.startswith("pow:"):
            e = float(r[4:])
            # round before ceil so that e.g. (10**3)**(1/3) maps to 10, not 11
            return cls(lambda n: math.ceil(round(n**e, 9)), r)
        if r.startswith("const:"):
            kc = int(r[6:])
            return cls(lambda n: kc, r)
        raise ValueError(f"unknown k rule {rule!r}")


def _nondecreasing(seq) -> bool:
    return all(y >= x for x, y in zip(seq, seq[1:]))


def _nonincreasing(seq) -> bool:
    return all(y <= x for x, y in zip(seq, seq[1:]))


@dataclass(frozen=True)
class ConditionKVerdict:
    n_values: list
    k_values: list
    k_over_n: list
    loglogn_over_k: list
    k_to_infinity: bool
    k_over_n_to_zero: bool
    loglogn_over_k_to_zero: bool
    accepted: bool

    def to_dict(self) -> dict:
        return asdict(self)


def check_condition_k(kseq: KSequence, n_values, improvement: float = 2.0) -> ConditionKVerdict:
    """Finite-sample proxy for ``k -> inf``, ``k/n -> 0``, ``log log n / k -> 0``.

    Each flag requires the sequence to move monotonically in the right
    direction over ``n_values`` and its last value to beat the first by
    at least ``improvement``.
    """
    ns = [int(n) for n in n_values]
    if len(ns) < 3:
        raise ValueError("need at least 3 values of n")
    if any(n < 16 for n in ns):
        raise ValueError("every n must be >= 16")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n values must be strictly increasing")
    ks = [kseq(n) for n in ns]
    kn = [k / n for k, n in zip(ks, ns)]
    ll = [math.log(math.log(n)) / k for k, n in zip(ks, ns)]
    up = _nondecreasing(ks) and ks[-1] >= improvement * ks[0]
    kn_down = _nonincreasing(kn) and kn[-1] * improvement <= kn[0]
    ll_down = _nonincreasing(ll) and ll[-1] * improvement <= ll[0]
    return ConditionKVerdict(ns, ks, kn, ll, up, kn_down, ll_down, up and kn_down and ll_down)


@dataclass(frozen=True)
class RCVerdict:
    n_values: list
    rc1_values: list
    rc2_values: list
    rc1_trend_to_zero: bool
    rc2_trend_to_zero: bool

    def to_dict(self) -> dict:
        return asdict(self)


def check_rc(
    model: TailModel,
    kseq: KSequence,
    lam: float = 2.0,
    a: float = 0.5,
    n_values=(10**3, 10**5, 10**7),
    shrink: float = 0.1,
    grid_points: int = 2000,
) -> RCVerdict:
    """Evaluate ``sqrt(k) * sup_{0 < t <= lam k_{a^2}/n} |p(t)|`` and the same for ``b``.

    ``k_{a^2} = floor(a^{-2}) k``. The supremum is taken on a geometric grid
    spanning twelve decades below the right endpoint. A trend flag is set
    when the sequence is non-increasing and its last value is at most
    ``shrink`` times its first.
    """
    if not lam > 1:
        raise ValueError("lambda must exceed 1")
    if not 0 < a < 1:
        raise ValueError("a must lie in (0, 1)")
    ns = [int(n) for n in n_values]
    rc1, rc2 = [], []
    for n in ns:
        k = kseq(n)
        t_max = lam * math.floor(a**-2) * k / n
        if t_max >= 1:
            raise ValueError(f"lambda * k_a2 / n = {t_max:g} leaves (0, 1) at n={n}")
        ts = np.geomspace(t_max * 1e-12, t_max, grid_points)
        root_k = math.sqrt(k)
        rc1.append(root_k * float(np.max(np.abs(model.p_aux(ts)))))
        rc2.append(root_k * float(np.max(np.abs(model.b_aux(ts)))))

    def trend(seq):
        return _nonincreasing(seq) and seq[-1] <= shrink * seq[0]

    return RCVerdict(ns, rc1, rc2, trend(rc1), trend(rc2))
