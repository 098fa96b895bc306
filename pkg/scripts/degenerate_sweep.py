#!/usr/bin/env python3
"""Sweep the greedy-penalty weight on the degenerate-optimum fixture.

Exact decoding with no penalty returns the empty string for every input of
this fixture; growing the weight drives the optimum onto the locally
optimal path. Emits one CSV row per weight (the plotting interface).

Usage: python3 scripts/degenerate_sweep.py [--out results/degenerate_sweep.csv]
"""

import argparse
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from regdecode.cli import main as cli_main  # noqa: E402

DEFAULT_LAMBDAS = "0,0.2,0.5,0.7,1,2,3,4,6,7,8,9,10,20,55,80,1e6"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/degenerate_sweep.csv")
    parser.add_argument("--lambdas", default=DEFAULT_LAMBDAS)
    args = parser.parse_args()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    return cli_main([
        "sweep",
        str(ROOT / "fixtures" / "m3.json"),
        str(ROOT / "fixtures" / "m3.inputs.txt"),
        str(ROOT / "fixtures" / "m3.refs.txt"),
        "--objective-kind", "greedy",
        "--lambdas", args.lambdas,
        "--decoder", "exact",
        "--n-max", "6",
        "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
