"""
Fitting a hybrid regression and attaching bootstrap standard errors
===================================================================
"""
import numpy as np

from hqer import Dataset, LossParams, bootstrap_cov, fit, make_rng
from hqer.avar import design_moment, hqer_scalar_variance
from hqer.dist import ErrorDistribution
from hqer.expectile import population_expectile

rng = make_rng(1)
n = 5000
x = rng.uniform(0, 1, n)
y = 15 + 90 * x + rng.standard_t(3, n)
data = Dataset.from_features(y, x, ["x"])

# %%
for method, kw in (("quantile", {}), ("hqer", {"gamma": 0.3}), ("hqer", {"gamma": 0.8}), ("expectile", {})):
    res = fit(data, method, 0.7, **kw)
    print(f"{res.method:10s} gamma={kw.get('gamma', '-')!s:4s} beta={np.round(res.beta, 4)} "
          f"p_alpha={res.p_alpha:.3f} iters={res.iterations}")

# %%
# Pairs bootstrap against the sandwich formula
p = LossParams(0.7, 0.3)
bc = bootstrap_cov(data, p, 200, seed=5)
T3 = ErrorDistribution.student_t(3)
xi = population_expectile(p, T3)
sig = hqer_scalar_variance(p, T3.shifted(-xi)) * np.diag(np.linalg.inv(design_moment(ErrorDistribution.uniform())))
print("\nbootstrap SE:", np.round(bc.se, 4))
print("sandwich SE: ", np.round(np.sqrt(sig / n), 4))
