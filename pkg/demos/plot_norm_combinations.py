"""
Four programs from two norms
============================

Pairing an l1 or l2 penalty on the coefficients with an l1 or l2 penalty
on the error gives four programs. Only the l1 error term tolerates a few
entries of large corruption.
"""

import numpy as np

from sparseface.numcore import make_rng
from sparseface.solvers import ComboProgram, Norm, solve_combo, solve_l2l2_closed

rng = make_rng(1)
a = 2 * rng.standard_normal((60, 10)) / np.sqrt(60)
x0 = np.zeros(10)
x0[[1, 6]] = [1.0, -0.7]
y = a @ x0
y[rng.choice(60, 6, replace=False)] += 4.0

for xn in Norm:
    for en in Norm:
        sol = solve_combo(a, y, ComboProgram(xn, en))
        err = np.linalg.norm(sol.x - x0) / np.linalg.norm(x0)
        print(f"x:{xn.value} e:{en.value}  objective={sol.objective:8.4f}  error in x={err:.2e}")

# The unsquared l2/l2 program is stationary exactly where the ridge-style
# closed form with gamma = ||x|| / ||e|| lands.
sol = solve_combo(a, y, ComboProgram(Norm.L2, Norm.L2))
if np.linalg.norm(sol.x) > 0:
    gamma = np.linalg.norm(sol.x) / np.linalg.norm(sol.e)
    print("distance to closed form:", np.abs(sol.x - solve_l2l2_closed(a, y, gamma)).max())
