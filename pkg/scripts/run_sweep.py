#!/usr/bin/env python3
"""Threshold-grid sweep over a synthetic one-cut fixture.

Generates the fixture (if missing), runs the pipeline once per
(tau_sim, tau_diff) cell of the default ablation grids, and writes one
CSV row per cell. Pass --input to sweep your own STSD tensor instead.
"""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

from st_simdiff import SyntheticSpec, generate_synthetic, save_grid
from st_simdiff.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", help="STSD tensor to sweep (default: generated fixture)")
    parser.add_argument("--output", "-o", default="sweep.csv", help="CSV destination")
    parser.add_argument("--noise", type=float, default=0.05, help="fixture noise amplitude")
    parser.add_argument("--seed", type=int, default=3, help="fixture RNG seed")
    args = parser.parse_args()

    if args.input:
        input_path = args.input
    else:
        input_path = str(Path(tempfile.gettempdir()) / "st_simdiff_sweep_fixture.stsd")
        spec = SyntheticSpec(cuts=(4,), noise=args.noise, seed=args.seed)
        save_grid(generate_synthetic(spec), input_path)
        print(f"fixture: {input_path}", file=sys.stderr)

    code = cli_main(["sweep", input_path, "--output", args.output])
    if code == 0:
        print(f"wrote {args.output}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
