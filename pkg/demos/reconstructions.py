"""Averaging and Ritz C1 reconstructions of a discontinuous function.

Prints sampled values; also writes reconstructions.png when matplotlib is installed.
"""

import numpy as np

from ipdg1d.dgspace import DgSpace, project_l2
from ipdg1d.mesh import uniform_mesh
from ipdg1d.reconstruct import averaging_reconstruct, ritz_reconstruct

space = DgSpace(uniform_mesh(6), 2)
u_h = project_l2(lambda x: np.where(x < 0.45, np.sin(3 * x), 0.3 - x**2), space, breakpoints=(0.45,))
avg = averaging_reconstruct(u_h)
ritz = ritz_reconstruct(u_h)
x = np.linspace(0.0, 1.0, 601)
for xi in x[::60]:
    print(f"x={xi:5.3f} u_h={u_h(xi):+.4f} E(u_h)={avg.evaluate(xi):+.4f} R(u_h)={ritz.evaluate(xi):+.4f}")
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    pass
else:
    plt.plot(x, u_h(x), label="u_h")
    plt.plot(x, avg.evaluate(x), label="averaging")
    plt.plot(x, ritz.evaluate(x), label="Ritz")
    plt.legend()
    plt.savefig("reconstructions.png", dpi=120)
