#!/usr/bin/env python3
"""Dump the three decay exponents of the detuned-echo decomposition
versus tau, and the four tilt-dependent component weights versus theta,
as CSV files (the spectral-overlap picture of the signal)."""

import argparse
from pathlib import Path

from hahnramsey.cli import main as cli

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/components")
    ap.add_argument("--lam", type=float, default=2.5)
    ap.add_argument("--gamma", type=float, default=0.6283185307179586)
    args = ap.parse_args()
    rc = cli(["components", "--lam", str(args.lam), "--gamma", str(args.gamma),
              "--tau-start", "0", "--tau-stop", "4", "--tau-count", "81",
              "--theta-count", "91", "--out", args.out])
    raise SystemExit(rc)
