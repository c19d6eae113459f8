"""Randomized asset-conservation and revert-atomicity check.

    python3 scripts/conservation_fuzz.py --sequences 10000 --seed 0
"""

from __future__ import annotations

import argparse
import sys
import time

from psamathe.conservation import FuzzConfig, run_fuzz


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--sequences", type=int, default=10_000)
    p.add_argument("--max-len", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    start = time.perf_counter()
    report = run_fuzz(FuzzConfig(args.sequences, args.max_len, args.seed))
    elapsed = time.perf_counter() - start
    print(f"{report.sequences} sequences, {report.statements} committed statements, "
          f"{report.reverted} reverted runs, {report.try_blocks} try blocks replayed "
          f"in {elapsed:.1f}s")
    for v in report.violations[:20]:
        print("violation:", v)
    print(f"{len(report.violations)} violations")
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
