"""
The conic solver on small programs
==================================

Programs are stated as ``maximize c^T x`` subject to ``A x + b`` in a
product of zero, nonnegative and second-order cones.
"""

# %%
import numpy as np

from isac_coverage.conic import NONNEG, SOC, ConeBlock, ConicProgram, solve

# maximize x1 + x2 inside the unit disc: optimum sqrt(2) at (1, 1)/sqrt(2)
disc = ConeBlock("disc", np.vstack([np.zeros(2), -np.eye(2)]), [1.0, 0.0, 0.0], SOC)
rep = solve(ConicProgram([1.0, 1.0], [disc]))
print(rep.status, rep.objective_value, rep.x_opt, f"{rep.iterations} iterations")

# %%
# Adding x1 <= 0.2 moves the optimum along the circle.
cap = ConeBlock("cap", [[-1.0, 0.0]], [0.2], NONNEG)
rep = solve(ConicProgram([1.0, 1.0], [disc, cap]))
print(rep.status, rep.objective_value, "expected", 0.2 + np.sqrt(1 - 0.04))

# %%
# Infeasible programs come back with a status rather than an exception.
lo = ConeBlock("lo", [[1.0, 0.0]], [-2.0], NONNEG)
print(solve(ConicProgram([1.0, 1.0], [disc, lo])).status)
