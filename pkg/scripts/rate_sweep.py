"""Fit both tail rates of computed waves over a range of speeds and print them against the closed forms."""
import argparse

import numpy as np

from invwave.analysis import check_wave_rates
from invwave.model import ModelParams, min_speed
from invwave.wave import IterationConfig, solve_wave


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambda", dest="lam", type=float, default=0.2)
    ap.add_argument("--K", type=float, default=1.0)
    ap.add_argument("--factors", default="1.0,1.1,1.2,1.4,1.6", help="speeds as multiples of c*")
    ap.add_argument("--bracket", choices=["sandwich", "trivial"], default="sandwich")
    a = ap.parse_args()
    p = ModelParams(a.lam, a.K)
    cs = min_speed(p)
    print("c,component,side,fitted,theory,rel_error")
    for f in np.array(a.factors.split(","), dtype=float):
        w, _ = solve_wave(p, f * cs, None, IterationConfig(bracket=a.bracket))
        for r in check_wave_rates(w, p):
            print(f"{w.c:.6f},{r.component},{r.side},{r.fitted_rate:.6f},{r.theoretical_rate:.6f},{r.rel_error:.4f}")


if __name__ == "__main__":
    main()
