#!/usr/bin/env python3
"""Solve, verify and Monte-Carlo cross-check the reference configuration.

Writes solution table, summary, verification report and simulation results
under --out (default out/reference).
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
    parser.add_argument("--out", default="out/reference")
    parser.add_argument("--paths", type=int, default=20000)
    args = parser.parse_args()

    for command, extra in (("solve", []), ("verify", []),
                           ("simulate", ["--paths", str(args.paths)])):
        print(f"== {command} ==")
        rc = cli_main([command, "--config", args.config,
                       "--out", args.out] + extra)
        if rc != 0:
            print(f"{command} failed with exit code {rc}", file=sys.stderr)
            return rc
    print(f"\nartifacts written to {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(run())
