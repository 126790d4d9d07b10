"""
Monte Carlo check of the sandwich and split-sample choice of gamma
==================================================================

Small versions of the acceptance runs; raise ``R`` for sharper numbers.
"""
import numpy as np

from hqer import Dataset, ScenarioSpec, make_rng, run_scenario, select_gamma

spec = ScenarioSpec.from_dict(dict(
    model="location_shift", error_law="normal", n=5000, levels=[0.3, 0.7], level_kind="tau",
    methods=[dict(name="HQER", gamma=0.3), dict(name="QR")], replicates=100, seed=3))
res = run_scenario(spec)
for c in res.cells:
    print(f"{c.method:5s} {c.gamma_or_k} tau={c.level}: empirical {np.round(c.empirical_var, 2)} "
          f"asymptotic {np.round(c.asymptotic_var, 2)}")

# %%
# gamma selection on a few simulated datasets
picks = []
for run in range(5):
    r = make_rng(100 + run)
    x = r.uniform(0, 1, 4000)
    d = Dataset.from_features(15 + 90 * x + r.standard_normal(4000), x)
    picks.append(select_gamma(d, 0.6, [g / 10 for g in range(1, 10)], seed=100 + run).chosen_gamma)
print("\nchosen gamma per dataset:", picks)
