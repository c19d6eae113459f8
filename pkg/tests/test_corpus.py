from __future__ import annotations

import io
import shutil
from pathlib import Path

import pytest

from psamathe.conformance import (
    DYNAMIC_RULES, EXPECTED_EXIT, STATIC_RULES, case_kind, compare, load_corpus,
    rule_coverage, run_corpus, write_goldens,
)

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
CASES = load_corpus(CORPUS)


@pytest.mark.parametrize("case", CASES, ids=lambda c: c.name)
def test_case_matches_golden(case):
    assert compare(case) is None


def test_required_programs_present():
    names = {c.name for c in CASES}
    assert {"erc20_transfer", "erc20_insufficient", "erc20_overflow", "lottery_end",
            "voting", "blind_auction", "lottery_missing_balance_flow",
            "err_fungible_unique", "err_unused_asset"} <= names


def test_every_kind_is_exercised():
    assert {c.kind for c in CASES} == set(EXPECTED_EXIT)


def test_run_corpus_summary():
    out = io.StringIO()
    assert run_corpus(CORPUS, out) == 0
    assert out.getvalue().splitlines()[-1] == f"{len(CASES)} cases, 0 failed"


def test_edited_golden_fails(tmp_path):
    for name in ("erc20_transfer.psa", "erc20_transfer.expected"):
        shutil.copy(CORPUS / name, tmp_path / name)
    golden = tmp_path / "erc20_transfer.expected"
    golden.write_text(golden.read_text(encoding="utf-8").replace("70", "71"), encoding="utf-8")
    out = io.StringIO()
    assert run_corpus(tmp_path, out) == 1
    assert "FAIL  erc20_transfer.psa: output differs from golden" in out.getvalue()


def test_missing_golden_is_reported(tmp_path):
    shutil.copy(CORPUS / "rule_nat.psa", tmp_path / "rule_nat.psa")
    (case,) = load_corpus(tmp_path)
    assert compare(case) == "missing .expected file"
    write_goldens(tmp_path)
    assert compare(case) is None


def test_empty_directory(tmp_path):
    out = io.StringIO()
    assert run_corpus(tmp_path, out) == 0
    assert out.getvalue() == "0 cases, 0 failed\n"


def test_kind_header_required(tmp_path):
    p = tmp_path / "bad.psa"
    p.write_text("1 --> var x : nat\n", encoding="utf-8")
    with pytest.raises(ValueError):
        case_kind(p)


def test_rule_coverage_is_complete():
    hits = rule_coverage(CORPUS)
    assert set(hits) == set(STATIC_RULES + DYNAMIC_RULES)
    assert all(hits.values()), [r for r, files in hits.items() if not files]
