"""Sweep the diode ideality factor and report the STC operating point.

Used to pick the bundled ideality: the value whose MPP best matches the
nameplate targets P_max 200.017 W, V_mp 26.4 V, I_mp 7.5764 A.
"""

import argparse
from dataclasses import replace

import numpy as np

from helios.mpp import find_mpp
from helios.pv_model import STC, load_params


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lo", type=float, default=1.0)
    ap.add_argument("--hi", type=float, default=1.5)
    ap.add_argument("--steps", type=int, default=11)
    args = ap.parse_args()

    base = load_params()
    print(f"{'n':>6} {'P_max':>10} {'V_mp':>8} {'I_mp':>8} {'score':>8}")
    for n in np.linspace(args.lo, args.hi, args.steps):
        r = find_mpp(replace(base, ideality=float(n)), STC)
        score = abs(r.p_max / 200.017 - 1) + abs(r.v_mp / 26.4 - 1) + abs(r.i_mp / 7.5764 - 1)
        print(f"{n:6.3f} {r.p_max:10.4f} {r.v_mp:8.4f} {r.i_mp:8.5f} {score:8.5f}")


if __name__ == "__main__":
    main()
