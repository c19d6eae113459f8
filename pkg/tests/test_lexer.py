from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from psamathe.lexer import KEYWORDS, LexError, tokenize


def kinds(source: str) -> list[tuple[str, str]]:
    return [(t.kind, t.lexeme) for t in tokenize(source) if t.kind != "eof"]


def test_flow_is_three_tokens():
    assert kinds("x --> y") == [("identifier", "x"), ("symbol", "-->"), ("identifier", "y")]


def test_type_declaration_tokens():
    assert kinds("type Token is fungible asset nat") == [
        ("keyword", "type"), ("identifier", "Token"), ("keyword", "is"),
        ("keyword", "fungible"), ("keyword", "asset"), ("keyword", "nat"),
    ]


def test_filter_selector_tokens():
    assert kinds("tickets[nonempty st ticketWins(winNum, _)]") == [
        ("identifier", "tickets"), ("symbol", "["), ("keyword", "nonempty"),
        ("keyword", "st"), ("identifier", "ticketWins"), ("symbol", "("),
        ("identifier", "winNum"), ("symbol", ","), ("symbol", "_"),
        ("symbol", ")"), ("symbol", "]"),
    ]


def test_such_that_is_one_keyword():
    assert kinds("one such   that P") == [
        ("keyword", "one"), ("keyword", "such that"), ("identifier", "P")]


def test_such_alone_is_an_identifier():
    assert kinds("such")[0] == ("identifier", "such")


def test_longest_symbol_wins():
    assert [lx for _, lx in kinds("a <-- b -> c - d --> e")] == [
        "a", "<--", "b", "->", "c", "-", "d", "-->", "e"]


def test_comments_and_hex():
    toks = tokenize("0xA // trailing words --> x\n12")
    assert [(t.kind, t.lexeme) for t in toks[:-1]] == [("natural", "0xA"), ("natural", "12")]
    assert toks[0].value == 10
    assert toks[1].span.line == 2


def test_spans_point_into_source():
    src = "var x : nat\n  <-- 5"
    for t in tokenize(src)[:-1]:
        assert src[t.span.offset:t.span.offset + t.span.length] == t.lexeme
    assert str(tokenize(src)[-2].span) == "2:7"


def test_all_unexpected_characters_reported():
    with pytest.raises(LexError) as info:
        tokenize("x # y @")
    assert [str(d.span) for d in info.value.diagnostics] == ["1:3", "1:7"]
    assert "'#'" in info.value.diagnostics[0].message


def test_keywords_cover_modifiers_and_quantities():
    for word in ("fungible", "unique", "immutable", "consumable", "asset",
                 "empty", "one", "any", "nonempty", "table", "list"):
        assert word in KEYWORDS


idents = st.from_regex(r"[a-z][a-z0-9]{0,6}", fullmatch=True).filter(lambda s: s not in KEYWORDS)


@given(st.lists(st.one_of(idents, st.integers(0, 10**6).map(str),
                          st.sampled_from(["-->", "<--", "(", ")", "[", "]", ".", ","])),
                min_size=1, max_size=20))
def test_spans_ordered_and_disjoint(words):
    toks = tokenize(" ".join(words))[:-1]
    assert [t.lexeme for t in toks] == words
    for a, b in zip(toks, toks[1:]):
        assert a.span.offset + a.span.length <= b.span.offset


@given(st.text(alphabet="abc -->[]().,_0x19\n", max_size=40))
def test_tokenize_is_deterministic(src):
    try:
        first = tokenize(src)
    except LexError:
        with pytest.raises(LexError):
            tokenize(src)
        return
    assert tokenize(src) == first
