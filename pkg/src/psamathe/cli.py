"""Command-line interface: ``psamathe {parse,check,run,corpus} [flags] paths...``.

Exit codes: 0 success, 1 type or runtime failure, 2 parse failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from typing import Optional, TextIO

from psamathe import syntax as ast
from psamathe.parser import ParseError, parse
from psamathe.runtime import run_program
from psamathe.typechecker import check

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_IO = 0, 1, 2, 3


@dataclass
class CliConfig:
    command: str
    paths: list[str] = field(default_factory=list)
    json: bool = False
    trace_flows: bool = False
    emit_ast: bool = False


def _report(diags, path: str, cfg: CliConfig, err: TextIO) -> None:
    for d in diags:
        print(d.to_json(path) if cfg.json else d.format(path), file=err)


def _load(path: str, shown: str, cfg: CliConfig, err: TextIO) -> tuple[Optional[ast.Program], int]:
    try:
        with open(path, encoding="utf-8") as fh:
            source = fh.read()
    except OSError as e:
        print(f"{shown}: error: cannot read file: {e.strerror}", file=err)
        return None, EXIT_IO
    try:
        return parse(source), EXIT_OK
    except ParseError as e:
        _report(e.diagnostics, shown, cfg, err)
        return None, EXIT_PARSE


def cmd_parse(path: str, cfg: CliConfig, out: TextIO, err: TextIO, shown: Optional[str] = None) -> int:
    prog, code = _load(path, shown or path, cfg, err)
    if prog is not None and cfg.emit_ast:
        out.write(ast.pretty(prog))
    return code


def cmd_check(path: str, cfg: CliConfig, out: TextIO, err: TextIO, shown: Optional[str] = None) -> int:
    shown = shown or path
    prog, code = _load(path, shown, cfg, err)
    if prog is None:
        return code
    diags = check(prog).diagnostics
    _report(diags, shown, cfg, err)
    return EXIT_FAIL if diags else EXIT_OK


def cmd_run(path: str, cfg: CliConfig, out: TextIO, err: TextIO, shown: Optional[str] = None) -> int:
    shown = shown or path
    prog, code = _load(path, shown, cfg, err)
    if prog is None:
        return code
    diags = check(prog).diagnostics
    if diags:
        _report(diags, shown, cfg, err)
        return EXIT_FAIL
    result = run_program(prog)
    if cfg.trace_flows:
        for line in result.trace:
            print(line, file=out)
    if result.error is not None:
        print(result.error.message, file=err)
        return EXIT_FAIL
    out.write(result.final.render())
    return EXIT_OK


def cmd_corpus(path: str, cfg: CliConfig, out: TextIO, err: TextIO) -> int:
    from psamathe.conformance import run_corpus
    return run_corpus(path, out)


COMMANDS = {"parse": cmd_parse, "check": cmd_check, "run": cmd_run, "corpus": cmd_corpus}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="psamathe", description="Parse, check and run .psa programs.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("paths", nargs="+")
    p.add_argument("--json", action="store_true", help="line-delimited JSON diagnostics")
    p.add_argument("--trace-flows", action="store_true", help="print each committed flow")
    p.add_argument("--emit-ast", action="store_true", help="pretty-print the parsed program")
    return p


def main(argv: Optional[list[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    cfg = CliConfig(args.command, args.paths, args.json, args.trace_flows, args.emit_ast)
    code = EXIT_OK
    for path in cfg.paths:
        code = max(code, COMMANDS[cfg.command](path, cfg, out, err))
    return code


if __name__ == "__main__":
    sys.exit(main())
