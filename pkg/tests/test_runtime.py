from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psamathe import syntax as ast
from psamathe.conservation import FuzzConfig, run_fuzz
from psamathe.parser import parse
from psamathe.runtime import (
    MAX_AMOUNT, ErrorKind, FlowError, Interpreter, Resource, Store,
    format_flow_error, run_program, show_scalar,
)
from psamathe.typechecker import check

TOKEN = "type Token is fungible asset nat\n"
TRANSFER = (
    "transformer transfer(account : table(owner) Token, src : address, dst : address,"
    " amount : nat) -> ok : bool {\n"
    "    account[src][amount] --> account[dst]\n"
    "    true --> ok\n"
    "}\n"
)
LEDGER = TOKEN + TRANSFER + "[] --> var account : table(owner) Token\n"


def run(src: str):
    prog = parse(src)
    assert check(prog).ok, check(prog).diagnostics
    return run_program(prog)


def output(src: str) -> str:
    return run(src).final.render()


# -- ERC-20 shaped programs ------------------------------------------------


def test_mint_then_transfer():
    out = output(LEDGER + "100 --> new Token(_) --> account[0xA]\n"
                          "30 --> transfer(account, 0xA, 0xB, _)\n")
    assert out == "account : table(owner) Token = [0xA: 70, 0xB: 30]\n"


def test_insufficient_source_message():
    result = run(LEDGER + "100 --> new Token(_) --> account[0xA]\n"
                          "200 --> transfer(account, 0xA, 0xB, _)\n")
    assert result.error.kind is ErrorKind.INSUFFICIENT_SOURCE
    assert result.error.message == (
        "Cannot flow 200 Token from account[0xA] to account[0xB]:\n"
        "    source only has 100 Token.")


def test_overflow_reverts_everything():
    result = run(LEDGER + "1 --> new Token(_) --> account[0xA]\n"
                          f"{MAX_AMOUNT} --> new Token(_) --> account[0xB]\n"
                          "1 --> transfer(account, 0xA, 0xB, _)\n")
    assert result.error.kind is ErrorKind.DESTINATION_OVERFLOW
    assert result.final.lines == []
    assert result.trace == []


def test_format_flow_error():
    assert format_flow_error("3", "Token", "a", "b", "why") == "Cannot flow 3 Token from a to b:\n    why."


# -- statements ------------------------------------------------------------


def test_try_catch_keeps_only_catch_effects():
    out = output(TOKEN + "[] --> var account : table(owner) Token\n"
                 "50 --> new Token(_) --> account[0xA]\n"
                 "try {\n account[0xA][20] --> account[0xB]\n account[0xA][40] --> account[0xC]\n"
                 "} catch {\n account[0xA][10] --> account[0xD]\n}\n")
    assert out == "account : table(owner) Token = [0xA: 40, 0xD: 10]\n"


def test_try_commits_when_body_succeeds():
    out = output(TOKEN + "[] --> var account : table(owner) Token\n"
                 "50 --> new Token(_) --> account[0xA]\n"
                 "try { account[0xA][20] --> account[0xB] } catch { account[0xA] --> account[0xC] }\n")
    assert out == "account : table(owner) Token = [0xA: 30, 0xB: 20]\n"


def test_nested_try_inner_failure_is_contained():
    out = output(TOKEN + "[] --> var account : table(owner) Token\n"
                 "5 --> new Token(_) --> account[0xA]\n"
                 "try {\n account[0xA][1] --> account[0xB]\n"
                 " try { account[0xA][99] --> account[0xC] } catch { }\n"
                 "} catch { }\n")
    assert out == "account : table(owner) Token = [0xA: 4, 0xB: 1]\n"


def test_consume_destroys_consumable_asset():
    out = output("type G is consumable fungible asset nat\n"
                 "10 --> new G(_) --> var g : G\ng[4] --> consume\ng --> consume\n")
    assert out == "g : G = 0\n"


def test_unique_values_are_registered():
    result = run("type V is unique asset address\n[] --> var vs : list V\n"
                 "0xA --> new V(_) --> vs\n0xA --> new V(_) --> vs\n")
    assert result.error.kind is ErrorKind.UNIQUENESS_VIOLATION
    assert result.error.message.endswith("unique value 0xA already exists.")


def test_missing_key_in_source():
    result = run("type Item is {id : nat, size : nat}\n[] --> var items : table(id) Item\n"
                 "1 --> new Item(_, 10) --> items\nitems[2] --> var it : Item\n")
    assert result.error.message == (
        "Cannot flow one Item from items[2] to var it : Item:\n    no row has key 2.")


def test_filter_selects_exactly_one():
    src = ("type User is {id : address, age : nat}\n"
           "transformer P(u : User) -> r : bool { u.age >= 18 --> r }\n"
           "[] --> var users : list User\n0xA --> new User(_, 12) --> users\n")
    assert run(src + "var u : User <-- users[one such that P(_)]\n").error.kind is ErrorKind.SELECTOR_UNSATISFIED
    out = output(src + "0xB --> new User(_, 30) --> users\nvar u : User <-- users[one such that P(_)]\n")
    assert out.splitlines()[-1] == "u : User = {id: 0xB, age: 30}"


@pytest.mark.parametrize("expr, reason", [
    ("10 / d", "division by zero"),
    ("d - 1", "result would be negative"),
])
def test_arithmetic_errors(expr, reason):
    result = run(f"0 --> var d : nat\n{expr} --> var q : nat\n")
    assert result.error.kind is ErrorKind.ARITHMETIC_ERROR
    assert result.error.message.endswith(reason + ".")


def test_destination_already_full():
    result = run("true --> var b : bool\nfalse --> b\n")
    assert result.error.message.endswith("destination already holds a value.")


def test_trace_lists_committed_flows():
    result = run(LEDGER + "100 --> new Token(_) --> account[0xA]\n")
    assert result.trace[-1] == "flow 100 nat: 100 --> new Token(_) --> account[0xA]"


# -- store and values ------------------------------------------------------


def test_store_rollback_restores_everything():
    store = Store()
    a = store.alloc(Resource(ast.Nat(), 1))
    frame: dict[str, int] = {}
    sp = store.savepoint()
    store.set(a, 2)
    b = store.alloc(Resource(ast.Nat(), 3))
    store.bind(frame, "x", b)
    store.witness("V", 7)
    store.log("line")
    store.drop(a)
    store.rollback(sp)
    assert store.rho == {a: Resource(ast.Nat(), 1)}
    assert frame == {} and store.registry == {"V": set()} and store.trace == []
    assert store.alloc(Resource(ast.Nat(), 0)) > b  # locations are never reused


def test_witness_rejects_duplicates():
    store = Store()
    assert store.witness("V", 1)
    assert not store.witness("V", 1)
    assert store.witness("W", 1)


def test_show_scalar():
    assert show_scalar(10, hex_=True) == "0xA"
    assert show_scalar(10) == "10"
    assert show_scalar(None) == "empty"
    assert show_scalar(True) == "true"


def test_count_matches_value_shape():
    prog = parse(TOKEN + "[] --> var account : table(owner) Token\n"
                 "3 --> new Token(_) --> account[0xA]\n7 --> new Token(_) --> var t : Token\n"
                 "true --> var b : bool\n")
    it = Interpreter(prog)
    it.run()
    g = it.globals
    assert it.count(g["account"]) == 1
    assert it.count(g["t"]) == 7
    assert it.count(g["b"]) == 1


def test_uncaught_failure_is_bit_identical_to_start():
    prog = parse(LEDGER + "100 --> new Token(_) --> account[0xA]\n"
                          "200 --> transfer(account, 0xA, 0xB, _)\n")
    it = Interpreter(prog)
    start = (dict(it.globals), dict(it.rho), {k: set(v) for k, v in it.store.registry.items()})
    assert it.run().error is not None
    assert (it.globals, it.rho, it.store.registry) == start


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("ABC"), st.sampled_from("ABC"), st.integers(0, 80)),
                max_size=6))
def test_transfers_conserve_supply(moves):
    src = LEDGER + "100 --> new Token(_) --> account[0xA]\n100 --> new Token(_) --> account[0xB]\n"
    src += "".join(f"try {{ {n} --> transfer(account, 0x{a}, 0x{b}, _) }} catch {{ }}\n"
                   for a, b, n in moves)
    it = Interpreter(parse(src))
    assert it.run().ok
    table = it.rho[it.globals["account"]].value
    assert sum(it.count(r) for r in table.rows) == 200


def test_small_fuzz_is_clean():
    report = run_fuzz(FuzzConfig(sequences=200, seed=7))
    assert report.ok, report.violations[:3]
    assert report.reverted > 0 and report.try_blocks > 0


def test_fuzz_detects_broken_rollback(monkeypatch):
    monkeypatch.setattr(Store, "rollback", lambda self, sp: None)
    report = run_fuzz(FuzzConfig(sequences=200, seed=7))
    assert not report.ok


def test_flow_error_is_an_exception():
    err = FlowError(ErrorKind.EXPLICIT_REVERT, "stop")
    assert str(err) == "stop" and err.kind is ErrorKind.EXPLICIT_REVERT
