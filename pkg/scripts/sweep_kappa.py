#!/usr/bin/env python3
"""Sweep the risky-investment fraction kappa and track the ruin decay.

For each kappa the pipeline reports gamma, the probe ruin probabilities and
the leading asymptotic constant; points with gamma <= 1 (ruin certain) are
marked infeasible and the gamma = 1 threshold is bracketed when crossed.
"""

import argparse
import sys
from pathlib import Path

from ruinsolve.cli import main as cli_main

ROOT = Path(__file__).resolve().parent.parent
DEFAULT_CONFIG = ROOT / "configs" / "reference.json"


def run():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(DEFAULT_CONFIG))
    parser.add_argument("--out", default="out/sweep_kappa")
    parser.add_argument("--start", type=float, default=0.3)
    parser.add_argument("--stop", type=float, default=1.0)
    parser.add_argument("--num", type=int, default=8)
    args = parser.parse_args()

    rc = cli_main(["sweep", "--config", args.config, "--out", args.out,
                   "--param", "kappa", "--start", str(args.start),
                   "--stop", str(args.stop), "--num", str(args.num)])
    if rc == 0:
        print(f"sweep table written to {args.out}/sweep.csv")
    return rc


if __name__ == "__main__":
    sys.exit(run())
