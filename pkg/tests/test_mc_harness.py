import json
import math

import numpy as np
import pytest
from scipy import stats

from genpickands.evt_core import ExtremeIndex, TailGrid, TailModel, exponential, pareto
from genpickands.functionals import GridMeasure
from genpickands.limit_gaussian import CovarianceKernel, modulus_constants, modulus_w
from genpickands.mc_harness import (
    kolmogorov_sf,
    ks_test,
    normal_cdf,
    replicate,
    run_covariance_experiment,
    run_lemma1_experiment,
    run_modulus_experiment,
    run_normality_experiment,
    simulate_pickands,
)
from genpickands.samplers import RngStream


class TestKS:
    def test_too_few(self):
        with pytest.raises(ValueError):
            ks_test([0.5], normal_cdf)
        with pytest.raises(ValueError):
            ks_test(np.zeros(7), normal_cdf)

    def test_quantile_construction(self):
        vals = stats.norm.ppf((np.arange(8) + 0.5) / 8)
        res = ks_test(vals, normal_cdf)
        assert res.statistic == pytest.approx(1 / 16, abs=1e-12)
        assert res.p_value > 0.5

    def test_against_scipy(self):
        rng = np.random.default_rng(0)
        for n in (8, 50, 1000):
            x = rng.standard_t(5, size=n)
            ours = ks_test(x, normal_cdf)
            ref = stats.kstest(x, "norm", method="asymp")
            assert ours.statistic == pytest.approx(ref.statistic, abs=1e-14)
            assert ours.p_value == pytest.approx(stats.kstwobign.sf(ref.statistic * math.sqrt(n)), abs=1e-9)

    def test_kolmogorov_series(self):
        for x in (0.3, 0.8, 1.36, 2.5):
            assert kolmogorov_sf(x) == pytest.approx(stats.kstwobign.sf(x), abs=1e-9)
        assert kolmogorov_sf(0.0) == 1.0

    def test_level(self):
        passes = sum(ks_test(RngStream(s).generator().standard_normal(10_000), normal_cdf).p_value > 0.01
                     for s in range(100))
        assert passes >= 95


class TestReplicate:
    def test_rows_follow_streams(self):
        out = replicate(lambda st: st.generator().random(2), 5, 2, seed=3, workers=3)
        assert out[4].tolist() == RngStream(3, 4).generator().random(2).tolist()

    def test_workers_identical(self):
        a = simulate_pickands(pareto(1.0), 10**4, 100, [0.4, 0.6], 64, seed=2, workers=1, method="full")
        b = simulate_pickands(pareto(1.0), 10**4, 100, [0.4, 0.6], 64, seed=2, workers=8, method="full")
        assert a.tobytes() == b.tobytes()


def integer_model():
    # discrete tail: heavy ties among upper order statistics
    return TailModel("frechet", ExtremeIndex(1.0), exact_quantile=lambda u: np.floor(1.0 / u),
                     name="integer")


class TestNormality:
    def test_low_power_flag(self):
        rep = run_normality_experiment(pareto(1.0), 1000, 10**5, TailGrid.of([0.5]), 2, seed=0)
        assert rep.summary["low_power"] and rep.points[0]["ks_pvalue"] is None
        assert math.isfinite(rep.points[0]["variance"])

    def test_exclusions_counted(self):
        rep = run_normality_experiment(integer_model(), 4, 40, TailGrid.of([0.5]), 300, seed=1)
        ex = rep.summary["excluded"]
        assert ex > 0 and ex + rep.summary["included"] == 300
        assert rep.summary["excluded_flag"] == (ex > 3)
        heavy = run_normality_experiment(integer_model(), 4, 20, TailGrid.of([0.5]), 300, seed=1)
        assert heavy.summary["excluded_flag"] and heavy.summary["excluded"] > 3
        assert heavy.points[0]["mean"] is not None

    def test_pareto_ks(self):
        rep = run_normality_experiment(pareto(1.0), 1000, 10**5, TailGrid.of([0.5]), 10_000, seed=4)
        assert rep.points[0]["ks_pvalue"] > 0.01
        assert rep.summary["excluded"] == 0

    def test_exponential_variance(self):
        rep = run_normality_experiment(exponential(), 1000, 10**5, TailGrid.of([0.5]), 10_000, seed=5)
        assert rep.points[0]["variance"] == pytest.approx(0.75 / math.log(2) ** 4, rel=0.2)

    def test_integral_block(self):
        grid = TailGrid.linspace(0.3, 0.7, 5)
        rep = run_normality_experiment(pareto(1.0), 1000, 10**5, grid, 2000, seed=6,
                                       measure=GridMeasure.uniform(grid.s))
        block = rep.summary["integral"]
        assert block["z_variance"] == pytest.approx(1.0, rel=0.15)
        with pytest.raises(ValueError):
            run_normality_experiment(pareto(1.0), 1000, 10**5, grid, 10, measure=GridMeasure.dirac(0.45))

    def test_zero_region_grid_rejected(self):
        with pytest.raises(ValueError):
            run_normality_experiment(pareto(1.0), 1000, 10**4, TailGrid.of([0.2]), 10)

    def test_report_json_stable(self):
        rep = run_normality_experiment(pareto(1.0), 100, 10**4, TailGrid.of([0.5]), 50, seed=1)
        d = json.loads(rep.to_json())
        assert d["schema"] == 1 and "elapsed_seconds" not in d
        assert "elapsed_seconds" in rep.to_dict(timing=True)
        assert d["config"]["seed"] == 1 and d["config"]["reps"] == 50


class TestCovariance:
    def test_one_point_matches_normality(self):
        g = TailGrid.of([0.5])
        cov = run_covariance_experiment(pareto(1.0), 10**5, 1000, g, 500, seed=8)
        nor = run_normality_experiment(pareto(1.0), 1000, 10**5, g, 500, seed=8)
        assert cov.covariance[0][0] == pytest.approx(nor.points[0]["variance"], rel=1e-12)

    def test_symmetric_psd(self):
        rep = run_covariance_experiment(pareto(1.0), 10**5, 1000, TailGrid.linspace(0.3, 0.7, 4), 300, seed=2)
        C = np.array(rep.covariance)
        assert np.array_equal(C, C.T) and np.linalg.eigvalsh(C)[0] >= -1e-10

    def test_ten_point_frobenius(self):
        rep = run_covariance_experiment(pareto(1.0), 10**5, 1000, TailGrid.linspace(0.3, 0.7, 10), 10_000,
                                        seed=9)
        assert rep.summary["frobenius_rel_error"] < 0.25

    def test_more_reps_usually_help(self):
        g = TailGrid.linspace(0.3, 0.7, 3)
        pairs = np.array([[run_covariance_experiment(pareto(1.0), 10**5, 1000, g, r, seed=s)
                           .summary["frobenius_rel_error"] for r in (100, 200)] for s in range(100)])
        assert np.sum(pairs[:, 1] <= pairs[:, 0]) >= 65
        assert pairs[:, 1].mean() < pairs[:, 0].mean()


class TestLemma1:
    def test_variances_and_covariance(self):
        rep = run_lemma1_experiment(10**5, 1000, [0.25, 0.5, 1.0], 10_000, seed=1)
        v = {p["s"]: p["variance"] for p in rep.points}
        assert 0.9 <= v[1.0] <= 1.1
        assert 0.2 <= v[0.25] <= 0.3
        assert rep.covariance[0][1] == pytest.approx(0.25, rel=0.15)


class TestModulus:
    def test_bookkeeping(self):
        rep = run_modulus_experiment(1.0, TailGrid.linspace(0.2, 0.8, 200), 100, [0.02, 0.01, 0.005], seed=0)
        assert [p["h"] for p in rep.points] == [0.02, 0.01, 0.005]
        assert all(math.isfinite(p["sup_ratio"]) for p in rep.points)
        assert rep.summary["L"] == modulus_constants(1.0, 0.8).L

    def test_single_path_two_points(self):
        grid = TailGrid.of([0.5, 0.51])
        rep = run_modulus_experiment(0.0, grid, 1, [0.01], seed=7)
        from genpickands.limit_gaussian import simulate_limit_matrix
        X = simulate_limit_matrix(0.0, grid, 1, RngStream(7, 0))
        assert rep.points[0]["sup_ratio"] == pytest.approx(abs(X[0, 1] - X[0, 0]) / modulus_w(0.01), rel=1e-12)
