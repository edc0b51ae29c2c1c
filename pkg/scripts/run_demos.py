#!/usr/bin/env python3
"""Run both counterexample demos and print their reports.

Usage: python scripts/run_demos.py [--json out_dir]
"""

import argparse
import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from polyclinch import demo_appendix_d, demo_impossibility  # noqa: E402


def show(name, report):
    print(f"=== {name} ===")
    for prop in report.properties:
        mark = "PASS" if prop.passed else "FAIL"
        print(f"  [{mark}] {prop.name}")
        if not prop.passed and prop.detail:
            print(f"         {prop.detail}")
    for note in report.narrative:
        print(f"  note: {note}")
    print()


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--json", default=None, help="directory for JSON reports")
    args = parser.parse_args()
    reports = {
        "appendix-d": demo_appendix_d(),
        "impossibility": demo_impossibility(),
    }
    for name, report in reports.items():
        show(name, report)
        if args.json:
            dest = pathlib.Path(args.json)
            dest.mkdir(parents=True, exist_ok=True)
            with open(dest / f"{name}.json", "w", encoding="utf-8") as fh:
                json.dump(report.to_json(), fh, indent=2)
                fh.write("\n")
    return 0 if all(r.ok() for r in reports.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
