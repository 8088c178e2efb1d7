"""Rough data: a dipole source delta' at an off-grid point.

The exact solution jumps at xbar, so the L2 error can only decay like sqrt(h).
"""

import numpy as np

from ipdg1d.problems import (
    best_approximation_quantity,
    exact_solution,
    measure_errors,
    point_source_problem,
    solve,
)
from ipdg1d.dgspace import DgSpace
from ipdg1d.mesh import uniform_mesh

spec = point_source_problem(xbar=0.6366, c0=0.0, c1=1.0)
u = exact_solution(spec)
print(f"{'n':>6} {'L2 error':>11} {'best approx':>12} {'ratio':>7}")
rows = []
for n in (16, 32, 64, 128, 256, 512, 1024):
    mesh = uniform_mesh(n)
    u_h, _ = solve(spec, mesh, k=2)
    err = measure_errors(u_h, u).err_l2
    best = best_approximation_quantity(u, DgSpace(mesh, 2))
    print(f"{n:>6} {err:11.4e} {best:12.4e} {err / best:7.3f}")
    rows.append((mesh.h_max, err))
(h0, e0), (h1, e1) = rows[0], rows[-1]
print(f"overall L2 rate: {np.log(e0 / e1) / np.log(h0 / h1):.3f}")
