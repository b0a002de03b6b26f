"""Convergence against a fine reference solution
===============================================

No exact solution is known, so errors are measured against a solution on a
nested mesh several times finer. A reduced version of the full study runs in a
few seconds; ``hdgcontrol run-study`` runs the full one from a config file.
"""

# %%
from hdgcontrol.analysis import ExpectedRates, StudySettings, run_study
import math

settings = StudySettings(problem="paper", k=0, study_levels=[2, 4, 8], reference_n=64)
table = run_study(settings, progress=print)
print(table.format())

# %%
# The a priori bounds for this data: y_d lies in H^t for every t < 1/3 and the
# largest angle is pi/2.
for k in (0, 1):
    r = ExpectedRates.corner_problem(k, t_star=1 / 3, omega=math.pi / 2)
    print(f"k = {k}: guaranteed control rate {r.rate_u:.3f}, flux rate {r.rate_q:.3f}")

# %%
# The same table as CSV, as written by the command-line tool.
print(table.to_csv())
