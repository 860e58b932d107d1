"""Pickands process on a heavy-tailed sample.

Draw Pareto data, evaluate P_n(s) across a grid of tail levels, and compare
it with its deterministic counterpart p_n(s) and with the true index.
"""

import numpy as np

from genpickands import (
    RngStream,
    TailGrid,
    kappa_star_path,
    pareto,
    pickands_path,
    sample_sorted,
    theoretical_pickands,
)

model = pareto(1.0)
n, k = 100_000, 1000
sample = sample_sorted(model, n, RngStream(seed=7))
grid = TailGrid.linspace(0.3, 0.7, 9)

path = pickands_path(sample, k, grid)
print(" s      P_n(s)   p_n(s)")
for s, v in zip(grid.points, path.values):
    print(f"{s:.2f}  {v:8.4f} {theoretical_pickands(model, n, k, s):8.4f}")

# kappa* scales the error by sqrt(k); its spread grows towards s = 1 where
# the three order statistics crowd together.
kstar = kappa_star_path(sample, model.gamma, k, grid)
print("\nkappa*_n:", np.round(kstar.values, 3))

# Below sqrt(k/n) the process is defined to be zero.
print("P_n(0.05) with k/n = 0.01:", pickands_path(sample, k, TailGrid.of([0.05])).values[0])
