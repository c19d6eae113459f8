"""Golden-file conformance corpus.

Each ``*.psa`` file starts with a ``// kind: <kind>`` header and sits next to
a ``.expected`` file holding the combined stdout and stderr of running it
(``parse`` for parse-only cases, ``run`` otherwise), with the file's base name
standing in for its path.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

from psamathe.cli import CliConfig, cmd_parse, cmd_run
from psamathe.parser import parse
from psamathe.runtime import run_program
from psamathe.typechecker import check

KINDS = ("run-success", "run-revert", "check-error", "parse-only")
EXPECTED_EXIT = {"run-success": 0, "run-revert": 1, "check-error": 1, "parse-only": 0}

STATIC_RULES = ("Nat", "Bool", "Var", "VarDef", "Ok-Flow", "Ok-Transformer")
DYNAMIC_RULES = ("Loc-Nat", "Loc-Bool", "Loc-Id", "Loc-VarDef", "Flow", "Flow-Error")

_KIND_RE = re.compile(r"^//\s*kind:\s*(\S+)", re.MULTILINE)


@dataclass(frozen=True)
class CorpusCase:
    source_path: Path
    expected_path: Path
    kind: str

    @property
    def name(self) -> str:
        return self.source_path.stem


def case_kind(path: Path) -> str:
    m = _KIND_RE.search(path.read_text(encoding="utf-8"))
    if m is None or m.group(1) not in KINDS:
        raise ValueError(f"{path}: missing or unknown '// kind:' header")
    return m.group(1)


def load_corpus(directory) -> list[CorpusCase]:
    directory = Path(directory)
    return [CorpusCase(p, p.with_suffix(".expected"), case_kind(p))
            for p in sorted(directory.glob("*.psa"))]


def case_output(case: CorpusCase) -> tuple[str, int]:
    """Combined output and exit code, as the golden files record them."""
    buf = io.StringIO()
    cfg = CliConfig("parse" if case.kind == "parse-only" else "run")
    cmd = cmd_parse if case.kind == "parse-only" else cmd_run
    code = cmd(str(case.source_path), cfg, buf, buf, shown=case.source_path.name)
    return buf.getvalue(), code


def compare(case: CorpusCase) -> str | None:
    """None if the case matches its golden, else a short reason."""
    text, code = case_output(case)
    if code != EXPECTED_EXIT[case.kind]:
        return f"exit {code}, expected {EXPECTED_EXIT[case.kind]}"
    if not case.expected_path.exists():
        return "missing .expected file"
    if case.expected_path.read_text(encoding="utf-8") != text:
        return "output differs from golden"
    return None


def run_corpus(directory, out: TextIO) -> int:
    cases = load_corpus(directory)
    failed = 0
    for case in cases:
        reason = compare(case)
        if reason is None:
            print(f"PASS  {case.source_path.name}", file=out)
        else:
            failed += 1
            print(f"FAIL  {case.source_path.name}: {reason}", file=out)
    print(f"{len(cases)} cases, {failed} failed", file=out)
    return 1 if failed else 0


def write_goldens(directory) -> list[Path]:
    written = []
    for case in load_corpus(directory):
        text, _ = case_output(case)
        case.expected_path.write_text(text, encoding="utf-8")
        written.append(case.expected_path)
    return written


def rule_coverage(directory) -> dict[str, list[str]]:
    """Map each instrumented rule to the corpus files that exercise it."""
    hits: dict[str, list[str]] = {r: [] for r in STATIC_RULES + DYNAMIC_RULES}
    for case in load_corpus(directory):
        if case.kind == "parse-only":
            continue
        prog = parse(case.source_path.read_text(encoding="utf-8"))
        result = check(prog)
        rules = set(result.rules_hit)
        if result.ok:
            rules |= run_program(prog).rules_hit
        for r in hits:
            if r in rules:
                hits[r].append(case.source_path.name)
    return hits
