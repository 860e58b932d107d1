"""Averaging P_n over tail levels, and choosing the weights.

A unit-mass measure on a grid gives a consistent estimator whose
asymptotic variance is a quadratic form in the kernel. The optimizer picks
the weights minimizing it.
"""

from genpickands import (
    CovarianceKernel,
    GridMeasure,
    OptimizationProblem,
    RngStream,
    TailGrid,
    normalized_estimate,
    optimize_measure,
    pareto,
    sample_sorted,
    sigma2,
)

kern = CovarianceKernel(1.0)
grid = TailGrid.linspace(0.3, 0.7, 21)

dirac = GridMeasure.dirac(0.5)
flat = GridMeasure.uniform(grid.s)
best = optimize_measure(OptimizationProblem.from_kernel(kern, grid), grid)
positive = optimize_measure(OptimizationProblem.from_kernel(kern, grid, nonnegative=True), grid)

print("asymptotic variance")
print(f"  single level s=1/2   {sigma2(dirac, kern):.4f}")
print(f"  uniform on 21 levels {sigma2(flat, kern):.4f}")
print(f"  optimal signed       {best.sigma2:.4f}  (kkt {best.kkt_residual:.1e})")
print(f"  optimal nonnegative  {positive.sigma2:.4f}")

sample = sample_sorted(pareto(1.0), 100_000, RngStream(seed=3))
for label, m in [("dirac", dirac), ("optimal", best.measure)]:
    est = normalized_estimate(sample, 1000, m, kern, reference=1.0)
    print(f"{label:8s} estimate {est.estimate:.4f} +/- {est.std_error:.4f}  z = {est.z:+.2f}")
