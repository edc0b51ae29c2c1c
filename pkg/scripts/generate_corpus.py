#!/usr/bin/env python3
"""Generate a seeded instance corpus and verify every instance end to end.

Usage: python scripts/generate_corpus.py OUT_DIR [--per-kind 5] [--seed 1]
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from polyclinch import AuctionConfig, check_outcome, run_with_monitors  # noqa: E402
from polyclinch.instances import (  # noqa: E402
    POLYMATROID_KINDS,
    generate_instance,
    write_instance,
)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("out_dir")
    parser.add_argument("--per-kind", type=int, default=5)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    failures = 0
    for kind in POLYMATROID_KINDS:
        for k in range(args.per_kind):
            seed = args.seed * 1000 + k
            inst = generate_instance(kind, n=3 + k % 3, m=2, seed=seed)
            path = out / f"{kind}-{seed}.json"
            write_instance(inst, path)
            oracle = inst.build_oracle()
            outcome, monitors = run_with_monitors(oracle, inst.bidders, AuctionConfig())
            checks = check_outcome(oracle, inst.bidders, outcome)
            status = "ok" if monitors.ok() and checks.ok() else "FAIL"
            if status == "FAIL":
                failures += 1
            print(f"{path.name}: {status}  x={[str(v) for v in outcome.allocation]}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
