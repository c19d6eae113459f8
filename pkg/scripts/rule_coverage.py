"""Report which corpus programs exercise each instrumented typing and
evaluation rule, and check the table in corpus/RULES.md against it."""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from psamathe.conformance import DYNAMIC_RULES, STATIC_RULES, rule_coverage

ROOT = Path(__file__).resolve().parent.parent
_ROW = re.compile(r"^\|\s*([\w-]+)\s*\|\s*([^|]+?)\s*\|")


def documented(rules_md: Path) -> dict[str, list[str]]:
    table = {}
    for line in rules_md.read_text(encoding="utf-8").splitlines():
        m = _ROW.match(line)
        if m and m.group(1) in STATIC_RULES + DYNAMIC_RULES:
            table[m.group(1)] = [f.strip(" `") for f in m.group(2).split(",")]
    return table


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("corpus", nargs="?", default=ROOT / "corpus", type=Path)
    args = p.parse_args(argv)
    hits = rule_coverage(args.corpus)
    docs = documented(args.corpus / "RULES.md")
    covered = 0
    for rule, files in hits.items():
        listed = docs.get(rule, [])
        stale = [f for f in listed if f not in files]
        ok = bool(files) and bool(listed) and not stale
        covered += ok
        note = f"  stale in RULES.md: {', '.join(stale)}" if stale else ""
        print(f"{'ok ' if ok else 'MISSING'} {rule:16} {len(files):3} file(s){note}")
    total = len(hits)
    print(f"{covered}/{total} rules covered")
    return 0 if covered == total else 1


if __name__ == "__main__":
    sys.exit(main())
