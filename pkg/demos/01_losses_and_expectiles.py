"""
Hybrid losses and their location functionals
=============================================

Walk from the pinball loss (gamma = 0) to the asymmetric squared loss
(gamma = 1) and watch the tau-gamma expectile of a few laws move.
"""
import numpy as np

from hqer import ErrorDistribution, LossParams, population_expectile
from hqer.expectile import inverse_expectile, match_quantile_level
from hqer.loss import hqer_loss

# the loss at a handful of residuals
s = np.linspace(-2, 2, 5)
for g in (0.0, 0.5, 1.0):
    print(f"gamma={g}: C(s) =", np.round(hqer_loss(LossParams(0.8, g), s), 3))

# %%
# For a fixed tau the functional slides from the quantile to the expectile.
N = ErrorDistribution.normal()
print("\nnormal, tau = 0.8")
for g in (0.0, 0.25, 0.5, 0.75, 1.0):
    print(f"  gamma={g:.2f}  xi = {population_expectile(LossParams(0.8, g), N):+.4f}")

# %%
# Skewed laws separate quantile and expectile more.
E = ErrorDistribution.exponential(1.0)
print("\nexp(1), tau = 0.5:  median", round(E.quantile(0.5), 4), " mean", E.mean())
print("  gamma=0.5 expectile", round(population_expectile(LossParams(0.5, 0.5), E), 4))

# %%
# Matching: which tau makes the hybrid hit the 25% quantile?
lvl = match_quantile_level(LossParams(0.5, 0.5), N, 0.25)
print(f"\nmatched tau for alpha=0.25 at gamma=0.5: {lvl.tau:.4f}")
print("  check: expectile at that tau =", round(population_expectile(LossParams(lvl.tau, 0.5), N), 6),
      " quantile =", round(lvl.target, 6))

# the legacy inverse (gamma dropped in the denominator) gives the older tabulated level
print("  legacy inverse level:", round(inverse_expectile(LossParams(0.5, 0.5), N, lvl.target, literal=True), 4))
