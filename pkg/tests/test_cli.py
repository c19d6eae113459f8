from __future__ import annotations

import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from psamathe.cli import main

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def cli(*argv: str) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def write(tmp_path):
    def _write(text: str, name: str = "prog.psa") -> str:
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return str(p)
    return _write


def test_run_success(write):
    code, out, err = cli("run", write("1 --> var x : nat\n"))
    assert (code, out, err) == (0, "x : nat = 1\n", "")


def test_run_failure_exit_one():
    code, out, err = cli("run", str(CORPUS / "erc20_insufficient.psa"))
    assert code == 1 and out == ""
    assert err == ("Cannot flow 200 Token from account[0xA] to account[0xB]:\n"
                   "    source only has 100 Token.\n")


def test_check_error_exit_one(write):
    path = write("x --> var y : nat\n")
    code, _, err = cli("check", path)
    assert code == 1
    assert err == f"{path}:1:1: error[UnboundVariable]: variable x is not defined\n"


def test_parse_error_exit_two(write):
    path = write("x --> -->\n")
    code, _, err = cli("parse", path)
    assert code == 2
    assert err.startswith(f"{path}:1:7: error: ")


def test_missing_file_exit_three(tmp_path):
    path = str(tmp_path / "nope.psa")
    code, _, err = cli("run", path)
    assert code == 3
    assert err == f"{path}: error: cannot read file: No such file or directory\n"


def test_worst_exit_code_wins(write, tmp_path):
    good = write("1 --> var x : nat\n", "good.psa")
    code, _, _ = cli("check", good, str(tmp_path / "missing.psa"))
    assert code == 3


def test_json_diagnostics(write):
    path = write("x --> var y : nat\n")
    _, _, err = cli("check", "--json", path)
    record = json.loads(err.splitlines()[0])
    assert record == {"code": "UnboundVariable", "severity": "error", "message": "variable x is not defined",
                      "file": path, "line": 1, "col": 1}


def test_trace_flows(write):
    code, out, _ = cli("run", "--trace-flows", write("1 --> var x : nat\n"))
    assert code == 0
    assert out.splitlines() == ["flow 1 nat: 1 --> var x : nat", "x : nat = 1"]


def test_emit_ast(write):
    code, out, _ = cli("parse", "--emit-ast", write("y <-- x  // comment\n"))
    assert (code, out) == (0, "x --> y\n")


def test_color_env(write, monkeypatch):
    path = write("x --> var y : nat\n")
    monkeypatch.setenv("PSAMATHE_COLOR", "1")
    _, _, err = cli("check", path)
    assert "\x1b[31m" in err
    monkeypatch.setenv("PSAMATHE_COLOR", "0")
    _, _, err = cli("check", path)
    assert "\x1b[" not in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "psamathe", "run", str(CORPUS / "erc20_transfer.psa")],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout == "account : table(owner) Token = [0xA: 70, 0xB: 30]\n"


def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as info:
        cli("frobnicate", "x.psa")
    assert info.value.code == 2
