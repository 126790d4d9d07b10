"""
Asymptotic efficiency against maximum likelihood
================================================

Every method is lined up at the alpha-quantile and compared with the MLE
of mu + sigma q_alpha.  Heavier tails favour small gamma.
"""
from hqer import ErrorDistribution, LossParams
from hqer.avar import method_avar
from hqer.sim import emit_table, table_grid

print(emit_table(table_grid("table2"), "table2"))

# %%
# Student t with 3 degrees of freedom
print(emit_table(table_grid("table3"), "table3"))

# %%
# Which gamma is best at each level?  Scan a fine grid.
T3 = ErrorDistribution.student_t(3)
for a in (0.55, 0.7, 0.9):
    best = max((method_avar("HQER", T3, LossParams(0.5, g / 20), a).are, g / 20) for g in range(1, 20))
    print(f"t(3), alpha={a}: best gamma {best[1]:.2f}  ARE {best[0]:.3f}")

# %%
# Coefficient variances in y = 15 + 90 x + e with x ~ U(0, 1)
print(emit_table(table_grid("table5"), "table5"))
