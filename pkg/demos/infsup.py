"""Discrete inf-sup and coercivity constants under refinement, and what a
too-small value-jump penalty does to them."""

from ipdg1d.analysis import infsup_sweep
from ipdg1d.forms import PenaltyParams

for label, params in (("sigma0 = 40", PenaltyParams(40.0, 1.0)), ("sigma0 = 0.01", PenaltyParams(0.01, 1.0))):
    rep = infsup_sweep([8, 16, 32, 64], k=2, params=params, with_w=params.sigma0 > 1)
    print(label)
    print(f"{'n':>4} {'gamma_V':>9} {'gamma_W':>9} {'lambda':>9} {'sigma_max':>10}")
    for n, h, gv, gw, lam, smax in rep.rows():
        print(f"{n:>4} {gv:9.5f} {gw:9.5f} {lam:9.5f} {smax:10.4f}")
    print()
