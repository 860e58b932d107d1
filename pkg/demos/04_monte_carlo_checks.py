"""Desk-scale Monte Carlo checks of the limit theory.

Each experiment returns a report with a stable JSON form; results do not
depend on the number of worker threads.
"""

from genpickands import (
    GridMeasure,
    TailGrid,
    exponential,
    pareto,
    run_covariance_experiment,
    run_lemma1_experiment,
    run_modulus_experiment,
    run_normality_experiment,
)

grid = TailGrid.of([10 / 30, 10 / 25, 10 / 20, 10 / 17, 10 / 15])
rep = run_normality_experiment(pareto(1.0), 1000, 100_000, grid, 5000, seed=1, workers=4,
                               measure=GridMeasure.uniform(grid.s))
for p in rep.points:
    print(f"s={p['s']:.3f}  var ratio {p['variance_ratio']:.3f}  KS p {p['ks_pvalue']:.3f}")
print("integral z:", {k: round(v, 3) for k, v in rep.summary["integral"].items() if k.startswith("z_")})

cov = run_covariance_experiment(exponential(), 100_000, 1000, TailGrid.linspace(0.3, 0.7, 5), 5000, seed=2)
print("\ncovariance, exponential data: Frobenius error", round(cov.summary["frobenius_rel_error"], 4))

lem = run_lemma1_experiment(100_000, 1000, [0.25, 0.5, 1.0], 5000, seed=3)
print("uniform tail statistic variances:", [round(p["variance"], 3) for p in lem.points])

mod = run_modulus_experiment(0.0, TailGrid.linspace(0.2, 0.8, 200), 300, [0.02, 0.01], seed=4)
for p in mod.points:
    print(f"h={p['h']}: sup ratio {p['sup_ratio']:.2f}, L = {p['L']:.2f}")
