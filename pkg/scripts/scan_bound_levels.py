#!/usr/bin/env python3
"""Sweep a contact-interaction strength and tabulate the bound levels.

Writes one CSV row per (coupling, level) with the energy, the smallest
singular value at the root, and the multiplicity. The sweep covers
either the spin-diagonal or the spin-flip preset family.

    python3 scripts/scan_bound_levels.py --family delta --dimension 1 \
        --lo -3.0 --hi -0.2 --steps 30 --out levels.csv
"""

import argparse
import sys

import numpy as np

from spinpoint.boundary import preset_delta, preset_offdiag
from spinpoint.spectral import find_bound_states
from spinpoint.spins import ModelSpec


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", choices=["delta", "offdiag"], default="delta")
    ap.add_argument("--dimension", type=int, choices=[1, 3], default=1)
    ap.add_argument("--alpha", type=float, default=0.0, help="Zeeman strength")
    ap.add_argument("--lo", type=float, default=-3.0)
    ap.add_argument("--hi", type=float, default=-0.2)
    ap.add_argument("--steps", type=int, default=30)
    ap.add_argument("--out", default=None, help="CSV path (default stdout)")
    args = ap.parse_args(argv)

    if args.dimension == 1:
        model = ModelSpec(1, [0.0], [args.alpha])
    else:
        model = ModelSpec(3, [np.zeros(3)], [args.alpha])
    build = preset_delta if args.family == "delta" else preset_offdiag

    lines = ["coupling,energy,sigma_min,multiplicity"]
    for g in np.linspace(args.lo, args.hi, args.steps):
        g = float(g)
        pair = build(model, g)
        for bs in find_bound_states(model, pair):
            lines.append(f"{g!r},{bs.energy!r},{bs.smallest_singular_value!r},"
                         f"{bs.multiplicity}")
    payload = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
