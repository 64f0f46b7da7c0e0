from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swolff.diagrams import (
    DiagramContext,
    decode,
    encode,
    enumerate_admissible,
    enumerate_s_admissible,
    evaluate_tree,
    generator_via_diagrams,
    heff_via_diagrams,
    is_admissible,
    tree_table,
    tree_weight,
)
from swolff.errors import NotAdmissible, OrderTooLarge
from swolff.exact_sw import make_split
from swolff.operator_core import operator_norm
from swolff.perturbative_sw import generator_series, heff_series

from conftest import random_hermitian, random_split

seeds = st.integers(0, 2**31 - 1)


def ad(A, X):
    return A @ X - X @ A


def test_counts():
    assert [len(enumerate_admissible(n)) for n in range(2, 7)] == [1, 1, 3, 7, 20]
    assert len(enumerate_s_admissible(1)) == 1


def test_order_limit():
    with pytest.raises(OrderTooLarge):
        enumerate_admissible(11)


def test_weights():
    assert tree_weight(decode((1, 0))) == Fraction(1, 2)
    assert tree_weight(decode((3, 0, 0, 0))) == Fraction(-1, 24)
    assert tree_weight(decode((1, 2, 0, 0))) == Fraction(1, 6)
    with pytest.raises(NotAdmissible):
        tree_weight(decode((2, 0, 0)))


def test_encoding_round_trip():
    for n in range(2, 7):
        for T in enumerate_admissible(n):
            assert decode(encode(T)) == T and is_admissible(T)
    with pytest.raises(ValueError):
        decode((1, 0, 0))


def test_canonical_order_is_deterministic():
    codes = [encode(T) for T in enumerate_admissible(6)]
    assert codes == sorted(codes) and len(set(codes)) == len(codes)


def test_fourth_order_trees_explicit():
    rng = np.random.default_rng(3)
    split = random_split(rng, 6, 2)
    ctx = DiagramContext(split, random_hermitian(rng, 6))
    P0, S1, L = ctx.P0, ctx.S1, ctx.L
    t3 = evaluate_tree(decode((3, 0, 0, 0)), ctx)
    assert operator_norm(t3 - P0 @ ad(S1, ad(S1, ad(S1, ctx.Vod))) @ P0) <= 1e-10
    t2 = evaluate_tree(decode((1, 2, 0, 0)), ctx)
    ref = -P0 @ ad(ctx.Vod, L(ad(S1, ad(S1, ctx.Vod)))) @ P0
    assert operator_norm(t2 - ref) <= 1e-10


def test_block_diagonal_v_gives_zero_trees():
    split = make_split(np.diag([0.0, 2.0, 3.0]), (-0.5, 0.5))
    ctx = DiagramContext(split, np.diag([0.2, -0.1, 0.4]))
    for n in range(2, 6):
        for T in enumerate_admissible(n):
            assert operator_norm(evaluate_tree(T, ctx)) == 0.0


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_diagrams_reproduce_recursion(seed):
    rng = np.random.default_rng(seed)
    split = random_split(rng, 7, 2)
    V = random_hermitian(rng, 7)
    ctx = DiagramContext(split, V)
    H = heff_series(split, 6, V).coeffs
    S = generator_series(split, 6, V).coeffs
    for a, b in zip(heff_via_diagrams(ctx, 6).coeffs, H):
        assert operator_norm(a - b) <= 1e-10 * max(1.0, operator_norm(b))
    for a, b in zip(generator_via_diagrams(ctx, 6).coeffs, S):
        assert operator_norm(a - b) <= 1e-10 * max(1.0, operator_norm(b))


def test_tree_table():
    t = tree_table(5)
    assert [t[str(q)]["count"] for q in range(2, 6)] == [1, 1, 3, 7]
    assert t["2"]["trees"][0] == {"encoding": [1, 0], "weight": "1/2"}
