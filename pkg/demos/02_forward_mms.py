"""Forward solver against a manufactured solution
================================================

The state equation alone, with ``y = sin(2 pi x / L) sin(2 pi y / L)`` and
the matching source. Scalars converge at order k + 2 and fluxes at k + 1.
"""

# %%
from hdgcontrol.analysis import run_mms

for k in (0, 1, 2):
    table = run_mms(k, [4, 8, 16, 32])
    print(f"k = {k}")
    print(table.format())
    print()
