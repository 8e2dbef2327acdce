#!/usr/bin/env python3
"""Scan cation dilution and report the qubit-planning quantities: nearest
neighbor distances, dipole-coupling magnitudes and per-band channel counts.

Usage: python scripts/dilution_scan.py [--a-nm 1.0] [--mu-debye 1.0]
"""

import argparse

from rotorspec import qubitplan, units


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--a-nm", type=float, default=1.0)
    ap.add_argument("--mu-debye", type=float, default=1.0)
    ap.add_argument("--fwhm-cm1", type=float, default=1.5)
    ap.add_argument("--source-ghz", type=float, default=1.0)
    ap.add_argument("--mc-samples", type=int, default=50_000)
    args = ap.parse_args()

    channels = qubitplan.addressable_channels(args.fwhm_cm1, args.source_ghz)
    print(f"band fwhm {args.fwhm_cm1} cm^-1 = "
          f"{units.cm1_to_ghz(args.fwhm_cm1):.2f} GHz, source {args.source_ghz} GHz "
          f"-> {channels} channels per band\n")
    print(f"{'c':>8s} {'r_char/nm':>10s} {'r_mean/nm':>10s} {'r_MC/nm':>9s} "
          f"{'J(r_char)':>12s} {'J(r_mean)':>12s}")
    for c in (1.0, 0.5, 0.1, 0.05, 0.01, 0.005, 0.001):
        spec = qubitplan.CrystalSpec(a_nm=args.a_nm, c=c)
        r_char = qubitplan.nn_distance(spec, "characteristic")
        r_mean = qubitplan.nn_distance(spec, "poisson_mean")
        r_mc = qubitplan.nn_distance_mc(spec, args.mc_samples, seed=0)
        j_char = qubitplan.coupling_estimate(args.mu_debye, r_char)
        j_mean = qubitplan.coupling_estimate(args.mu_debye, r_mean)
        print(f"{c:8.3f} {r_char:10.3f} {r_mean:10.3f} {r_mc:9.3f} "
              f"{j_char/1e6:9.1f} MHz {j_mean/1e6:9.1f} MHz")


if __name__ == "__main__":
    main()
