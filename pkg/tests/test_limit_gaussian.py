import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genpickands.errors import KernelNotPSDError
from genpickands.evt_core import TailGrid, exponential
from genpickands.limit_gaussian import (
    CovarianceKernel,
    compare_kernels,
    factorize,
    gamma_closed_form,
    gamma_constructive,
    k_limit_g_factor,
    modulus_constants,
    modulus_sup_ratio,
    modulus_w,
    simulate_limit_matrix,
    simulate_limit_paths,
    wiener_triple_cov,
)
from genpickands.mc_harness import run_covariance_experiment
from genpickands.samplers import RngStream

LOG2 = math.log(2.0)
GRID20 = np.linspace(0.2, 0.8, 20)


def pickands_asymptotic_variance(g):
    """Known asymptotic variance of the classical Pickands estimator (spacings k, 2k, 4k)."""
    if g == 0:
        return 3.0 / (4.0 * LOG2**4)
    return g * g * (2 ** (2 * g + 1) + 1) / (2 * (2**g - 1) * LOG2) ** 2


class TestGFactor:
    def test_k_zero(self):
        assert k_limit_g_factor(0.5, 0.0) == pytest.approx(-1 / LOG2**2, rel=1e-14)
        assert k_limit_g_factor(0.5, 0.0) == pytest.approx(-2.0814, abs=1e-4)
        assert k_limit_g_factor(0.5, 1e-8) == pytest.approx(k_limit_g_factor(0.5, 0.0), rel=1e-7)

    def test_k_one(self):
        assert k_limit_g_factor(0.5, 1.0) == pytest.approx(-1 / LOG2, rel=1e-14)
        assert k_limit_g_factor(0.5, 1.0) == pytest.approx(-1.4427, abs=1e-4)

    def test_continuity(self):
        s = np.linspace(0.1, 0.9, 100)
        assert np.max(np.abs(k_limit_g_factor(s, 1e-6) - k_limit_g_factor(s, 0.0))) < 1e-4

    @pytest.mark.parametrize("K", [math.inf, math.nan])
    def test_rejects_nonfinite(self, K):
        with pytest.raises(ValueError):
            k_limit_g_factor(0.5, K)


class TestKernelValues:
    @pytest.mark.parametrize("g", [-2.0, -1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 2.0, 3.0])
    def test_diagonal_half_matches_classical_variance(self, g):
        assert gamma_constructive(0.5, 0.5, g) == pytest.approx(pickands_asymptotic_variance(g), rel=1e-12)

    def test_k_zero_diagonal(self):
        assert gamma_constructive(0.5, 0.5, 0.0) == pytest.approx(0.75 / LOG2**4, rel=1e-14)
        assert gamma_constructive(0.5, 0.5, 0.0) == pytest.approx(3.249, abs=1e-3)
        assert gamma_closed_form(0.5, 0.5, 0.0) == pytest.approx(0.75 / LOG2**4, rel=1e-14)

    def test_k_zero_off_diagonal(self):
        # 1 - 2t + t^2 + 2s - 2 min(s, t^2) with s = 0.4, t = 0.6
        expected = 0.24 / (math.log(0.4) ** 2 * math.log(0.6) ** 2)
        assert gamma_constructive(0.4, 0.6, 0.0) == pytest.approx(expected, rel=1e-12)

    def test_off_diagonal_against_pickands_simulation(self):
        rep = run_covariance_experiment(exponential(), 10**6, 2000, TailGrid.of([0.4, 0.6]), 6000, seed=3)
        emp = rep.covariance[0][1]
        assert emp == pytest.approx(gamma_constructive(0.4, 0.6, 0.0), rel=0.15)

    @pytest.mark.parametrize("K", [-1.0, 0.0, 1.0, 2.0])
    def test_symmetry(self, K):
        M = CovarianceKernel(K).matrix(GRID20)
        assert np.max(np.abs(M - M.T)) <= 1e-14 * np.max(np.abs(M))

    @pytest.mark.parametrize("K", [-1.0, 0.0, 0.5, 1.0, 2.0])
    def test_closed_form_finite_on_diagonal(self, K):
        assert np.all(np.isfinite(np.diag(CovarianceKernel(K, "closed").matrix(GRID20))))

    def test_k_continuity(self):
        base = CovarianceKernel(0.0).matrix(GRID20)
        devs = [np.max(np.abs(CovarianceKernel(e).matrix(GRID20) - base)) for e in (1e-2, 1e-4, 1e-6)]
        assert devs[0] / devs[1] >= 10 and devs[1] / devs[2] >= 10

    def test_unknown_form(self):
        with pytest.raises(ValueError):
            CovarianceKernel(1.0, "other")


@settings(max_examples=100, deadline=None)
@given(K=st.floats(-2.0, 3.0),
       pts=st.lists(st.floats(0.05, 0.95), min_size=2, max_size=50, unique=True))
def test_kernel_psd(K, pts):
    p = np.sort(np.asarray(pts))
    if np.any(np.diff(p) < 1e-6):
        p = np.unique(np.round(p, 6))
    M = CovarianceKernel(K).matrix(p)
    assert np.linalg.eigvalsh(M)[0] >= -1e-8 * max(1.0, np.max(np.abs(M)))


def test_wiener_triple_against_brute_force():
    """Discretised Wiener paths reproduce the scaling covariance table."""
    s, t = 0.5, 0.8
    levels = sorted({s, t, 1.0, s * s, t * t})
    dt = min(np.diff([0.0] + levels)) / 16
    rng = np.random.default_rng(12345)
    n = 100_000
    steps = int(round(1.0 / dt))
    B = np.zeros((n, len(levels)))
    acc = np.zeros(n)
    pos = 0
    for idx, lv in enumerate(levels):
        target = int(round(lv / dt))
        if target > pos:
            acc += rng.standard_normal((n, target - pos)).sum(axis=1) * math.sqrt(dt)
            pos = target
        B[:, idx] = acc
    assert pos == steps
    at = {lv: B[:, i] for i, lv in enumerate(levels)}
    triple = lambda u: np.stack([at[u], at[1.0], at[u * u]])
    emp = (triple(s) @ triple(t).T) / n
    exact = wiener_triple_cov(s, t)
    assert np.max(np.abs(emp - exact) / np.abs(exact)) < 0.03


class TestSimulation:
    def test_covariance_recovered(self):
        grid = TailGrid.linspace(0.2, 0.8, 10)
        X = simulate_limit_matrix(1.0, grid, 10_000, RngStream(1))
        M = CovarianceKernel(1.0).matrix(grid.s)
        assert np.linalg.norm(np.cov(X.T, ddof=1) - M) / np.linalg.norm(M) < 0.05

    def test_single_point_k_zero(self):
        X = simulate_limit_matrix(0.0, TailGrid.of([0.5]), 10_000, RngStream(2))
        assert X[:, 0].var(ddof=1) == pytest.approx(0.75 / LOG2**4, rel=0.05)

    def test_workers_do_not_change_paths(self):
        grid = TailGrid.linspace(0.2, 0.8, 7)
        a = simulate_limit_matrix(0.5, grid, 300, RngStream(3), workers=1)
        b = simulate_limit_matrix(0.5, grid, 300, RngStream(3), workers=4)
        assert a.tobytes() == b.tobytes()

    def test_paths_wrap(self):
        paths = simulate_limit_paths(1.0, TailGrid.linspace(0.3, 0.6, 4), 3, RngStream(0))
        assert len(paths) == 3 and paths[0].meta["kind"] == "gaussian_limit"

    def test_limits(self):
        with pytest.raises(ValueError):
            simulate_limit_matrix(1.0, TailGrid.linspace(0.1, 0.9, 501), 1, RngStream(0))
        with pytest.raises(ValueError):
            simulate_limit_matrix(1.0, TailGrid.linspace(0.1, 0.9, 5), 0, RngStream(0))

    def test_not_psd_fails_loudly(self):
        with pytest.raises(KernelNotPSDError, match="not PSD"):
            factorize(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_jitter_rescues_semidefinite(self):
        L = factorize(np.ones((3, 3)))
        assert np.allclose(L @ L.T, np.ones((3, 3)), atol=1e-6)


class TestModulus:
    def test_constants(self):
        assert modulus_constants(0.0, 0.5).L == pytest.approx(1 / LOG2**2, rel=1e-14)
        assert modulus_constants(0.0, 0.5).L == pytest.approx(2.0814, abs=1e-4)
        assert modulus_constants(1.0, 0.5).L == pytest.approx(2 / LOG2, rel=1e-14)
        assert modulus_constants(1.0, 0.5).L == pytest.approx(2.8854, abs=1e-4)

    def test_w(self):
        assert modulus_w(0.01) == pytest.approx(math.sqrt(0.02 * math.log(100)), rel=1e-15)
        assert modulus_w(0.01) == pytest.approx(0.3035, abs=1e-4)
        assert modulus_constants(1.0, 0.5).w(0.01) == modulus_w(0.01)
        with pytest.raises(ValueError):
            modulus_w(0.0)

    def test_sup_ratio_bookkeeping(self):
        paths = np.array([[0.0, 1.0, 3.0], [0.0, -2.0, -2.5]])
        pts = [0.3, 0.31, 0.5]
        r = modulus_sup_ratio(paths, pts, 0.02)
        np.testing.assert_allclose(r, np.array([1.0, 2.0]) / modulus_w(0.02))
        assert np.isnan(modulus_sup_ratio(paths, [0.1, 0.5, 0.9], 0.01)).all()

    def test_compare_reports_location(self):
        rep = compare_kernels(GRID20, [0.0, 1.0])
        assert set(rep.argmax) >= {"s", "t", "K"}
        assert rep.max_abs_deviation == max(rep.max_abs_deviation_by_K.values())
        assert compare_kernels(GRID20, [1.0], candidate="constructive").agrees


@pytest.mark.parametrize("K", [0.0, 1.0, -0.5])
@pytest.mark.parametrize("s", [0.3, 0.8])
def test_local_increment_rate(K, s):
    """Var(G(s + d) - G(s)) / d -> g(s)^2 ((s^-K + 1)^2 + 2s), the Levy-modulus constant squared."""
    d = 1e-6
    kern = CovarianceKernel(K)
    inc = (kern(s + d, s + d) + kern(s, s) - 2 * kern(s, s + d)) / d
    rate = k_limit_g_factor(s, K) ** 2 * ((s ** -K + 1) ** 2 + 2 * s)
    assert inc == pytest.approx(rate, rel=1e-3)
    if s == 0.8 and K >= 0:
        # at the right end the local constant already exceeds 2L
        assert math.sqrt(rate) > 2 * modulus_constants(K, 0.8).L
