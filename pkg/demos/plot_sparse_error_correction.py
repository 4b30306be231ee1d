"""
Correcting gross errors with l1 minimization
============================================

A signal that is a sparse combination of dictionary columns, with a
fraction of its entries overwritten, can be recovered exactly by
minimizing ``||x||_1 + ||e||_1`` subject to ``y = A x + e``.
"""

import numpy as np

from sparseface.numcore import make_rng
from sparseface.solvers import lp_oracle_l1l1, solve_l1l1

rng = make_rng(0)

# A 200 x 30 Gaussian dictionary, a 5-sparse code and 20% gross errors.
a = rng.standard_normal((200, 30)) / np.sqrt(200)
x0 = np.zeros(30)
x0[rng.choice(30, 5, replace=False)] = rng.standard_normal(5)
e0 = np.zeros(200)
e0[rng.choice(200, 40, replace=False)] = 3 * rng.standard_normal(40)
y = a @ x0 + e0

sol = solve_l1l1(a, y)
print(f"converged={sol.converged} after {sol.iters} iterations")
print("relative error in x:", np.linalg.norm(sol.x - x0) / np.linalg.norm(x0))
print("relative error in e:", np.linalg.norm(sol.e - e0) / np.linalg.norm(e0))

# The same program is a linear program. On desk-sized problems the
# oracle enumerates vertices and gives the exact optimum to compare with.
small = rng.standard_normal((8, 4))
target = rng.standard_normal(8)
exact, _, _ = lp_oracle_l1l1(small, target)
print(f"oracle objective {exact:.10f}, solver objective {solve_l1l1(small, target).objective:.10f}")

# Least squares has no such luck: it spreads the error over everything.
x_ls = np.linalg.lstsq(a, y, rcond=None)[0]
print("least-squares relative error in x:", np.linalg.norm(x_ls - x0) / np.linalg.norm(x0))
