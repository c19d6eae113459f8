from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from psamathe.quantity import (
    ANY, EMPTY, NONEMPTY, ONE, Add, Id, Sub, With, concretize, contains,
    quant_add, quant_approx, quant_join, quant_leq, quant_max, quant_mul, quant_sub,
)
from psamathe.syntax import Nat, Type

from oracles import (
    QUANTS, WITNESSES, oracle_add, oracle_join, oracle_leq, oracle_mul, oracle_sub,
)

PAIRS = list(itertools.product(QUANTS, QUANTS))
quants = st.sampled_from(QUANTS)

# frozen from the oracle; keyed by (left, right)
ADD_TABLE = {
    (EMPTY, EMPTY): EMPTY, (EMPTY, ONE): ONE, (EMPTY, NONEMPTY): NONEMPTY, (EMPTY, ANY): ANY,
    (ONE, ONE): NONEMPTY, (ONE, NONEMPTY): NONEMPTY, (ONE, ANY): NONEMPTY,
    (NONEMPTY, NONEMPTY): NONEMPTY, (NONEMPTY, ANY): NONEMPTY, (ANY, ANY): ANY,
}
SUB_TABLE = {
    (EMPTY, ONE): EMPTY, (EMPTY, ANY): EMPTY, (ONE, EMPTY): ONE, (ONE, ONE): EMPTY,
    (ONE, NONEMPTY): EMPTY, (ONE, ANY): ANY, (NONEMPTY, ONE): ANY,
    (NONEMPTY, EMPTY): NONEMPTY, (ANY, ONE): ANY, (ANY, EMPTY): ANY,
}
JOIN_TABLE = {
    (EMPTY, ONE): ANY, (EMPTY, NONEMPTY): ANY, (ONE, NONEMPTY): NONEMPTY,
    (ONE, ANY): ANY, (EMPTY, EMPTY): EMPTY, (NONEMPTY, NONEMPTY): NONEMPTY,
}


@pytest.mark.parametrize("a,b", PAIRS)
def test_add_matches_oracle(a, b):
    assert quant_add(a, b) is oracle_add(a, b)


@pytest.mark.parametrize("a,b", PAIRS)
def test_sub_matches_oracle(a, b):
    assert quant_sub(a, b) is oracle_sub(a, b)


@pytest.mark.parametrize("a,b", PAIRS)
def test_join_matches_oracle(a, b):
    assert quant_join(a, b) is oracle_join(a, b)


@pytest.mark.parametrize("a,b", PAIRS)
def test_mul_matches_oracle(a, b):
    assert quant_mul(a, b) is oracle_mul(a, b)


@pytest.mark.parametrize("a,b", PAIRS)
def test_leq_matches_oracle(a, b):
    assert quant_leq(a, b) == oracle_leq(a, b)


def test_frozen_add_table():
    for (a, b), want in ADD_TABLE.items():
        assert quant_add(a, b) is want
        assert quant_add(b, a) is want


def test_frozen_sub_table():
    for (a, b), want in SUB_TABLE.items():
        assert quant_sub(a, b) is want


def test_frozen_join_table():
    for (a, b), want in JOIN_TABLE.items():
        assert quant_join(a, b) is want
        assert quant_join(b, a) is want


def test_one_join_empty_is_any():
    # no quantity denotes exactly {0, 1}
    assert quant_join(ONE, EMPTY) is ANY


@pytest.mark.parametrize("n,want", [(0, EMPTY), (1, ONE), (2, NONEMPTY), (8, NONEMPTY), (10**80, NONEMPTY)])
def test_approx(n, want):
    assert quant_approx(n) is want


def test_approx_rejects_negative():
    with pytest.raises(ValueError):
        quant_approx(-1)


@given(st.integers(min_value=0, max_value=10**6))
def test_approx_is_least_containing(n):
    q = quant_approx(n)
    assert contains(q, n)
    for r in QUANTS:
        if contains(r, n):
            assert quant_leq(q, r)


@given(quants, st.integers(min_value=0, max_value=8))
def test_concretize_agrees_with_contains(q, n):
    assert concretize(q)(n) == contains(q, n)


@given(quants, quants, quants)
def test_leq_is_partial_order(a, b, c):
    assert quant_leq(a, a)
    if quant_leq(a, b) and quant_leq(b, a):
        assert a is b
    if quant_leq(a, b) and quant_leq(b, c):
        assert quant_leq(a, c)


@given(quants, quants)
def test_join_is_least_upper_bound(a, b):
    j = quant_join(a, b)
    assert quant_leq(a, j) and quant_leq(b, j)
    for u in QUANTS:
        if quant_leq(a, u) and quant_leq(b, u):
            assert quant_leq(j, u)


@given(quants, quants, st.integers(0, 8), st.integers(0, 8))
def test_add_sub_sound_on_witnesses(a, b, x, y):
    if contains(a, x) and contains(b, y):
        assert contains(quant_add(a, b), x + y)
        assert contains(quant_sub(a, b), max(x - y, 0))
        assert contains(quant_mul(a, b), x * y)


@given(quants)
def test_empty_is_additive_identity(q):
    assert quant_add(EMPTY, q) is q
    assert quant_sub(q, EMPTY) is q


def test_witness_range():
    assert list(WITNESSES) == list(range(9))


class TestUpdaters:
    t = Type(ONE, Nat())

    def test_id(self):
        assert Id()(self.t) == self.t

    def test_add(self):
        assert Add(ONE)(self.t) == Type(NONEMPTY, Nat())

    def test_sub(self):
        assert Sub(ONE)(self.t) == Type(EMPTY, Nat())

    def test_with(self):
        assert With(EMPTY)(self.t) == Type(EMPTY, Nat())

    def test_str(self):
        assert [str(f) for f in (Id(), Add(ONE), Sub(ANY), With(EMPTY))] == ["id", "⊕one", "⊖any", "with_empty"]


@given(quants, quants)
def test_max_picks_an_argument_and_respects_order(a, b):
    m = quant_max(a, b)
    assert m in (a, b)
    if quant_leq(a, b):
        assert m is b
    elif quant_leq(b, a):
        assert m is a
    else:
        assert m is a  # incomparable: left argument wins
