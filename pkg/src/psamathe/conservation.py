"""Randomized conservation and atomicity checks over an ERC-20-like state.

Each sequence starts from two empty ledgers, ``account`` (a nonconsumable
token) and ``gold`` (a consumable one), and executes random mints, moves,
transformer calls, burns and try/catch blocks. After every statement the
total supply of each token must change exactly as the statement's
allocation or consumption says. A sequence that hits an uncaught failure must
leave the state bit-identical to where it started, and every try/catch must
agree with a replay that uses snapshot-and-restore instead of the journal.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field

from psamathe import syntax as ast
from psamathe.parser import parse
from psamathe.runtime import MAX_AMOUNT, FlowError, Interpreter

PRELUDE = """
type Token is fungible asset nat
type Gold is fungible consumable asset nat
transformer transfer(account : table(owner) Token, src : address, dst : address, amount : nat) -> ok : bool {
    account[src][amount] --> account[dst]
    true --> ok
}
[] --> var account : table(owner) Token
[] --> var gold : table(owner) Gold
"""

ACCOUNTS = (0xA, 0xB, 0xC, 0xD)
TOKENS = {"account": "Token", "gold": "Gold"}


@dataclass
class FuzzConfig:
    sequences: int = 10_000
    max_len: int = 8
    seed: int = 0


@dataclass
class FuzzReport:
    sequences: int = 0
    statements: int = 0
    reverted: int = 0
    try_blocks: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _addr(a: int) -> ast.NatLit:
    return ast.NatLit(a, hex=True)


def _cell(table: str, a: int) -> ast.Select:
    return ast.Select(ast.Var(table), _addr(a))


@dataclass(frozen=True)
class Step:
    stmt: ast.Stmt
    token: str = ""
    delta: int = 0  # supply change if the statement succeeds


class Generator:
    def __init__(self, rng: random.Random):
        self.rng = rng

    def amount(self) -> int:
        r = self.rng.random()
        if r < 0.05:
            return MAX_AMOUNT - self.rng.randrange(3)
        return self.rng.randrange(0, 200)

    def move(self) -> ast.Stmt:
        rng = self.rng
        table = rng.choice(tuple(TOKENS))
        a, b = rng.choice(ACCOUNTS), rng.choice(ACCOUNTS)
        n = ast.NatLit(rng.randrange(0, 40))
        if table == "account" and rng.random() < 0.4:
            call = ast.Call("transfer", (ast.Var("account"), _addr(a), _addr(b), ast.Hole()))
            return ast.FlowTransform(n, call, None)
        return ast.Flow(ast.Select(_cell(table, a), n), _cell(table, b))

    def mint(self, table: str) -> Step:
        n = self.amount()
        call = ast.New(TOKENS[table], (ast.Hole(),))
        dest = _cell(table, self.rng.choice(ACCOUNTS))
        return Step(ast.FlowTransform(ast.NatLit(n), call, dest), TOKENS[table], n)

    def step(self) -> Step:
        rng = self.rng
        r = rng.random()
        if r < 0.25:
            return self.mint(rng.choice(tuple(TOKENS)))
        if r < 0.35:
            n = rng.randrange(0, 60)
            src = ast.Select(_cell("gold", rng.choice(ACCOUNTS)), ast.NatLit(n))
            return Step(ast.Flow(src, ast.Consume()), "Gold", -n)
        if r < 0.55:
            body = tuple(self.move() for _ in range(rng.randrange(1, 4)))
            catch = tuple(self.move() for _ in range(rng.randrange(0, 3)))
            return Step(ast.TryCatch(body, catch))
        return Step(self.move())


def supply(it: Interpreter, type_name: str) -> int:
    total = 0
    for res in it.rho.values():
        if isinstance(res.base, ast.Named) and res.base.name == type_name:
            total += res.value
    return total


def snapshot(it: Interpreter):
    return (dict(it.globals), dict(it.rho), copy.deepcopy(it.store.registry))


def replay_try(it: Interpreter, s: ast.TryCatch) -> None:
    """Run a try/catch by copying the whole state instead of journaling."""
    saved = copy.deepcopy((it.globals, it.rho, it.store.registry, it.store.trace))
    try:
        for t in s.try_body:
            it.exec_stmt(t)
    except FlowError:
        globals_, rho, registry, trace = saved
        it.globals.clear()
        it.globals.update(globals_)
        it.rho.clear()
        it.rho.update(rho)
        it.store.registry = registry
        it.store.trace[:] = trace
        for t in s.catch_body:
            it.exec_stmt(t)


def _fresh(program: ast.Program) -> Interpreter:
    it = Interpreter(program)
    for s in program.body:
        it.exec_stmt(s)
    return it


def run_sequence(program: ast.Program, steps: list[Step], report: FuzzReport, tag: str) -> None:
    it = _fresh(program)
    start = snapshot(it)
    sp = it.store.savepoint()
    done: list[ast.Stmt] = []
    for i, step in enumerate(steps):
        before = {t: supply(it, t) for t in TOKENS.values()}
        try:
            it.exec_stmt(step.stmt)
        except FlowError:
            it.store.rollback(sp)
            report.reverted += 1
            if snapshot(it) != start:
                report.violations.append(f"{tag}: state changed after revert at step {i}")
            return
        report.statements += 1
        after = {t: supply(it, t) for t in TOKENS.values()}
        for t in TOKENS.values():
            expected = before[t] + (step.delta if step.token == t else 0)
            if after[t] != expected:
                report.violations.append(
                    f"{tag}: step {i} changed {t} supply {before[t]} -> {after[t]}, expected {expected}")
        if after["Token"] < before["Token"]:
            report.violations.append(f"{tag}: nonconsumable supply decreased at step {i}")
        if isinstance(step.stmt, ast.TryCatch):
            report.try_blocks += 1
            other = _fresh(program)
            for s in done:
                other.exec_stmt(s)
            replay_try(other, step.stmt)
            if snapshot(other)[:2] != snapshot(it)[:2]:
                report.violations.append(f"{tag}: try/catch at step {i} differs from snapshot replay")
        done.append(step.stmt)


def run_fuzz(cfg: FuzzConfig = FuzzConfig()) -> FuzzReport:
    program = parse(PRELUDE)
    rng = random.Random(cfg.seed)
    gen = Generator(rng)
    report = FuzzReport()
    for k in range(cfg.sequences):
        steps = [gen.mint(t) for t in TOKENS for _ in range(2)]
        steps += [gen.step() for _ in range(rng.randrange(1, cfg.max_len + 1))]
        run_sequence(program, steps, report, f"sequence {k}")
        report.sequences += 1
    return report
