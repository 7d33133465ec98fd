"""Run the four corollary grids and print the pass/fail table."""

import argparse
import sys

from mixedheat.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--output", default="out/corollaries")
    args = ap.parse_args()
    sys.exit(main(["reproduce", "--output", args.output]))
