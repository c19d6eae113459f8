from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from psamathe import syntax as ast
from psamathe.parser import parse
from psamathe.quantity import ALL_QUANTS, ANY, EMPTY, NONEMPTY, ONE, Add, With, quant_add
from psamathe.typechecker import WITH_EMPTY, Checker, CheckError, Code, Mode, check

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

PRELUDE = (
    "type Token is fungible asset nat\n"
    "type Addr is immutable nat\n"
    "type Ticket is consumable asset nat\n"
)


def token(q):
    return ast.Type(q, ast.Named("Token"))


def checker(src: str = PRELUDE) -> Checker:
    return Checker(parse(src))


def codes(src: str) -> list[str]:
    return [d.code for d in check(parse(src)).diagnostics]


# -- locator rules ---------------------------------------------------------


def test_nat_literal_is_approximated():
    c = checker("")
    assert c.type_locator({}, Mode.SOURCE, WITH_EMPTY, ast.NatLit(5)) == (ast.Type(NONEMPTY, ast.Nat()), {})
    assert c.peek({}, Mode.SOURCE, ast.NatLit(1)).quant is ONE
    assert c.peek({}, Mode.SOURCE, ast.NatLit(0)).quant is EMPTY


def test_var_source_empties_the_variable():
    t, env = checker().type_locator({"x": token(ONE)}, Mode.SOURCE, WITH_EMPTY, ast.Var("x"))
    assert t == token(ONE)
    assert env == {"x": token(EMPTY)}


def test_var_of_immutable_type_cannot_change():
    env = {"x": ast.Type(ONE, ast.Named("Addr"))}
    with pytest.raises(CheckError) as info:
        checker().type_locator(env, Mode.SOURCE, WITH_EMPTY, ast.Var("x"))
    assert info.value.diag.code == Code.IMMUTABLE_MUTATION


def test_vardef_starts_empty_then_updates():
    t, env = checker("").type_locator({}, Mode.DEST, Add(ONE), ast.VarDef("y", ast.Nat()))
    assert t == ast.Type(EMPTY, ast.Nat())
    assert env == {"y": ast.Type(ONE, ast.Nat())}


def test_vardef_is_not_a_source():
    with pytest.raises(CheckError) as info:
        checker("").type_locator({}, Mode.SOURCE, WITH_EMPTY, ast.VarDef("y", ast.Nat()))
    assert info.value.diag.code == Code.MODE_MISMATCH


def test_flow_between_variables():
    env = {"x": token(ONE), "y": token(EMPTY)}
    out = checker().check_stmt(env, ast.Flow(ast.Var("x"), ast.Var("y")))
    assert out == {"x": token(EMPTY), "y": token(ONE)}


@given(st.sampled_from(ALL_QUANTS), st.sampled_from(ALL_QUANTS))
def test_flow_adds_source_quantity_to_destination(qx, qy):
    env = {"x": token(qx), "y": token(qy)}
    out = checker().check_stmt(env, ast.Flow(ast.Var("x"), ast.Var("y")))
    assert out["x"] == token(EMPTY)
    assert out["y"] == token(quant_add(qy, qx))


def test_consume_empties_consumable_source():
    src = PRELUDE + "[] --> var t : list Ticket\n"
    c = checker(src)
    env = c.check_stmt({}, parse(src).body[0])
    env = {"t": ast.Type(NONEMPTY, env["t"].base)}
    assert c.check_stmt(env, ast.Flow(ast.Var("t"), ast.Consume()))["t"].quant is EMPTY


def test_with_updater_replaces_quantity():
    assert With(ANY)(token(ONE)) == token(ANY)


# -- one snippet per diagnostic code ---------------------------------------

SNIPPETS = {
    Code.UNBOUND_VARIABLE: "x --> var y : nat",
    Code.IMMUTABLE_MUTATION: PRELUDE + "0 --> new Addr(_) --> var a : Addr\na --> var b : Addr",
    Code.MODE_MISMATCH: "var y : nat --> var z : nat",
    Code.BASE_TYPE_MISMATCH: "true --> var y : nat",
    Code.QUANTITY_MISMATCH: "transformer f(a : one nat, x : nat) -> r : nat { x --> r }\n1 --> f(5, _) --> var y : nat",
    Code.DUPLICATE_BINDING: "1 --> var y : nat\n2 --> var y : nat",
    Code.UNSUPPORTED_CONSTRUCT: "copy(1) --> var y : nat",
    Code.NOT_CONSUMABLE: PRELUDE + "5 --> new Token(_) --> var t : Token\nt --> consume",
    Code.UNKNOWN_TRANSFORMER: "1 --> f(_) --> var y : nat",
    Code.UNKNOWN_TYPE: "1 --> var y : Nope",
    Code.UNKNOWN_FIELD: "{a : nat |-> 1} --> var r : {a : nat}\nr.b --> var y : nat",
    Code.CYCLIC_TYPE: "type A is B\ntype B is A",
    Code.ARITY_MISMATCH: "transformer f(a : nat, x : nat) -> r : nat { x --> r }\n1 --> f(_) --> var y : nat",
    Code.HOLE_MISUSE: "transformer f(a : nat, x : nat) -> r : nat { x --> r }\n1 --> f(1, 2) --> var y : nat",
    Code.INVALID_SELECTION: "true --> var b : bool\nb[1] --> var y : nat",
    Code.INVALID_TABLE: "type R is {a : nat}\n[] --> var t : table(z) R",
    Code.NOT_A_PREDICATE: (
        "transformer p(x : nat) -> r : nat { x --> r }\n"
        "[] --> var xs : list nat\nxs[any st p(_)] --> var ys : list nat"),
    Code.BRANCH_ENV_MISMATCH: PRELUDE + "try { 5 --> new Token(_) --> var c : Token } catch { }",
    Code.ASSET_NOT_CONSUMED: PRELUDE + "transformer keep(c : Token) -> r : nat { 5 --> r }",
    Code.AUXILIARY_TYPE_CHANGED: (
        PRELUDE + "transformer drain(from : one Token, c : Token) -> r : Token {\n"
        "from --> r\nc --> r }"),
    Code.RETURN_TYPE_MISMATCH: "transformer f(x : nat) -> r : one nat { 5 --> r }",
    Code.CONFLICTING_MODIFIERS: "type X is fungible unique nat",
    Code.FUNGIBLE_NON_NUMERIC: "type X is fungible bool",
    Code.UNUSED_ASSET: PRELUDE + "5 --> new Token(_) --> var t : Token",
}


def test_every_code_has_a_snippet():
    assert set(SNIPPETS) == set(Code)


@pytest.mark.parametrize("code", list(SNIPPETS), ids=str)
def test_snippet_reports_code(code):
    assert code.value in codes(SNIPPETS[code])


def test_diagnostics_carry_spans_and_format():
    (d,) = check(parse("\n  x --> var y : nat")).diagnostics
    assert (d.span.line, d.span.col) == (2, 3)
    assert d.format("f.psa") == "f.psa:2:3: error[UnboundVariable]: variable x is not defined"


# -- transformers and programs ---------------------------------------------


def test_transfer_is_well_typed():
    src = (PRELUDE + "transformer transfer(account : table(owner) Token, src : address,"
           " dst : address, amount : nat) -> ok : bool {\n"
           "account[src][amount] --> account[dst]\ntrue --> ok }\n"
           "[] --> var account : table(owner) Token\n"
           "5 --> transfer(account, 0xA, 0xB, _) --> var ok : bool\n")
    assert codes(src) == []


def test_predicate_may_keep_its_argument():
    src = PRELUDE + "transformer wins(t : Ticket) -> r : bool { true --> r }\n"
    c = checker(src)
    info = c.check_transformer(parse(src).transformers["wins"])
    assert info.predicate_ok and not info.flow_ok
    assert codes(src) == []


def test_leaky_transformer_cannot_transform_flows():
    src = PRELUDE + ("transformer wins(t : Ticket) -> r : bool { true --> r }\n"
                     "[] --> var ts : list Ticket\nts --> wins(_) --> var b : bool\nts --> consume")
    assert codes(src) != []


def test_missing_balance_flow_message():
    text = (CORPUS / "lottery_missing_balance_flow.psa").read_text(encoding="utf-8")
    messages = [d.message for d in check(parse(text)).diagnostics]
    assert any("any ether, not empty ether" in m for m in messages)


def test_empty_program():
    assert check(parse("")).ok


def test_fungible_and_unique_conflict():
    assert codes("type X is fungible unique nat") == ["ConflictingModifiers"]


def test_consumable_asset_record_ok():
    assert codes("type Ticket is consumable asset {owner : address, n : nat}") == []


def test_env_trace_has_one_entry_per_statement():
    result = check(parse("1 --> var a : nat\n2 --> var b : nat"))
    assert len(result.env_trace) >= 2
    assert result.env_trace[-1]["b"] == ast.Type(NONEMPTY, ast.Nat())


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.psa")), ids=lambda p: p.name)
def test_corpus_check_status(path):
    text = path.read_text(encoding="utf-8")
    if "kind: parse-only" in text:
        pytest.skip("parse-only case")
    ok = check(parse(text)).ok
    assert ok == ("kind: check-error" not in text)
