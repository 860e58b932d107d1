"""Checking the intermediate-sequence and second-order conditions.

Both checks are finite-n proxies: they look at whether the relevant
quantities shrink across a few sample sizes.
"""

import numpy as np

from genpickands import ExtremeIndex, KSequence, TailModel, check_condition_k, check_rc, model_from_dict, pareto

ns = [10**3, 10**5, 10**7]
for rule in ("sqrt", "log", "n"):
    v = check_condition_k(KSequence.from_rule(rule), ns)
    print(f"k = {rule:5s} accepted={v.accepted}  loglog n / k: {np.round(v.loglogn_over_k, 4)}")

print("\nexact Pareto:", check_rc(pareto(1.0), KSequence.from_rule("sqrt"), 2.0, 0.5, ns).rc1_values)

# A second-order term p(u) = u^(1/2) is visible at moderate n.
perturbed = TailModel("frechet", ExtremeIndex(1.0), p_aux=lambda u: np.sqrt(u))
v = check_rc(perturbed, KSequence.from_rule("pow:0.3333333333333333"), 2.0, 0.5, ns)
print("sqrt-perturbed Pareto RC1:", np.round(v.rc1_values, 4), "trend ok:", v.rc1_trend_to_zero)

# Models can also come from tables of the auxiliary functions.
tabled = model_from_dict({"case": "gumbel", "gamma": "inf", "c": 1.0,
                          "p_table": [[0.001, 0.0], [0.5, 0.2]]})
print("\ntabled Gumbel-domain quantiles:", np.round(tabled.tail_quantile(np.array([0.1, 0.01, 0.001])), 4))
