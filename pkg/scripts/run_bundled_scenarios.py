#!/usr/bin/env python3
"""Run every bundled scenario and collect the artifact bundles under out/.

Usage:
    python scripts/run_bundled_scenarios.py [--out DIR] [--analyze-only]
"""

import argparse
import sys
from pathlib import Path

from sismob.cli import main as sismob_main

REPO = Path(__file__).resolve().parents[1]


def run(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(REPO / "out"))
    parser.add_argument("--analyze-only", action="store_true",
                        help="skip time integration, write analysis JSONs only")
    args = parser.parse_args(argv)

    command = "analyze" if args.analyze_only else "run"
    failures = 0
    for scenario in sorted((REPO / "scenarios").glob("*.json")):
        out_dir = Path(args.out) / scenario.stem
        print(f"== {command} {scenario.name} -> {out_dir}")
        code = sismob_main([command, "--scenario", str(scenario), "--out", str(out_dir)])
        failures += code != 0
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(run())
