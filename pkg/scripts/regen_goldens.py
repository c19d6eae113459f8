"""Rewrite every corpus `.expected` file from the current implementation.

Review the diff before committing: goldens are the output contract.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from psamathe.conformance import write_goldens

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("corpus", nargs="?", default=ROOT / "corpus", type=Path)
    args = p.parse_args()
    for path in write_goldens(args.corpus):
        print(f"wrote {path.name}")


if __name__ == "__main__":
    main()
