"""Convergence of the stabilized interior penalty method for -u'' = pi^2 sin(pi x).

Prints errors in the three mesh-dependent norms and their observed orders
for k = 2 and k = 3.
"""

from ipdg1d.analysis import eoc
from ipdg1d.forms import PenaltyParams
from ipdg1d.problems import convergence_study, sine_problem

for k in (2, 3):
    recs = convergence_study(sine_problem(), [8, 16, 32, 64, 128], k=k, params=PenaltyParams(10.0 * k**2, 1.0))
    h = [r.h_max for r in recs]
    rates = {name: eoc(list(zip(h, [getattr(r, name) for r in recs]))).rates for name in ("err_znorm", "err_enorm", "err_eenorm")}
    print(f"k = {k}")
    print(f"{'n':>5} {'znorm':>11} {'eoc':>6} {'enorm':>11} {'eoc':>6} {'eenorm':>11} {'eoc':>6}")
    for i, r in enumerate(recs):
        print(
            f"{r.n_elements:>5} {r.err_znorm:11.3e} {rates['err_znorm'][i]:6.2f} "
            f"{r.err_enorm:11.3e} {rates['err_enorm'][i]:6.2f} {r.err_eenorm:11.3e} {rates['err_eenorm'][i]:6.2f}"
        )
    print()
