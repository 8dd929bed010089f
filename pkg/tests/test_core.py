import math
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chromoshuffle.core import (BlockAverage, BlockExchange, Configuration, InvalidExchangeError,
                                InvalidVertexError, PartitionTooCoarseError, Reversal,
                                apply_block_exchange, apply_move, apply_reversal,
                                apply_transposition, decompose_exchange, decompose_transposition,
                                make_partition, rank, rank_states, type_one_partitions, unrank,
                                unrank_all)


def C(*letters):
    return Configuration(letters)


@st.composite
def configurations(draw, n_min=2, n_max=8):
    n = draw(st.integers(n_min, n_max))
    return Configuration(tuple(draw(st.permutations(range(1, n + 1)))))


def test_configuration_validation():
    with pytest.raises(ValueError):
        Configuration((1, 1, 2))
    eta = C(3, 1, 2)
    assert eta[1] == 3 and eta[4] == 3
    assert eta.position(2) == 3
    assert Configuration.from_json(eta.to_json()) == eta


@pytest.mark.parametrize("eta, x, ell, expected", [
    ((1, 2, 3, 4, 5), 1, 2, (3, 2, 1, 4, 5)),
    ((1, 2, 3, 4), 4, 1, (4, 2, 3, 1)),
    ((1, 2, 3), 2, 0, (1, 2, 3)),
    ((1, 2, 3, 4), 3, 3, (4, 3, 2, 1)),  # segment 3,4,1,2 wraps
])
def test_reversal_examples(eta, x, ell, expected):
    assert apply_reversal(Configuration(eta), x, ell).letters == expected


def test_reversal_full_wrap():
    # ell >= n - 1 reverses the whole cycle starting at x
    eta = C(1, 2, 3, 4)
    assert apply_reversal(eta, 2, 3).letters == (2, 1, 4, 3)
    assert apply_reversal(eta, 2, 3) == apply_reversal(eta, 2, 7)


def test_invalid_vertex():
    with pytest.raises(InvalidVertexError):
        apply_reversal(C(1, 2, 3), 4, 1)
    with pytest.raises(InvalidVertexError):
        apply_transposition(C(1, 2, 3), 0, 1)


@settings(max_examples=60, deadline=None)
@given(configurations(), st.integers(1, 8), st.integers(0, 9))
def test_reversal_involution(eta, x, ell):
    x = (x - 1) % eta.n + 1
    assert apply_reversal(apply_reversal(eta, x, ell), x, ell) == eta


def test_transposition_examples():
    assert apply_transposition(C(1, 2, 3), 1, 3).letters == (3, 2, 1)
    assert apply_transposition(C(1, 2, 3), 2, 2) == C(1, 2, 3)


@pytest.mark.parametrize("n", range(2, 7))
def test_decompose_transposition_exhaustive(n):
    for letters in permutations(range(1, n + 1)):
        eta = Configuration(letters)
        for x in range(1, n + 1):
            for h in range(1, n):
                out = eta
                for mv in decompose_transposition(x, h, n):
                    out = apply_move(out, mv)
                y = (x + h - 1) % n + 1
                assert out == apply_transposition(eta, x, y)


def test_decompose_transposition_examples():
    assert decompose_transposition(2, 1, 5) == [Reversal(2, 1)]
    assert decompose_transposition(2, 2, 5) == [Reversal(2, 2)]
    inner, outer = decompose_transposition(1, 3, 5)
    step = apply_move(C(1, 2, 3, 4, 5), inner)
    assert step.letters == (1, 3, 2, 4, 5)
    assert apply_move(step, outer).letters == (4, 2, 3, 1, 5)


def test_partition_examples():
    assert make_partition(7, 2, 1, 4).blocks == ((1, 2), (3, 4), (5, 6), (7,))
    P = make_partition(6, 2)
    assert P.blocks == ((1, 2), (3, 4), (5, 6)) and P.m_block is None
    P = make_partition(7, 2, 3, 1)
    assert P.blocks == ((3,), (4, 5), (6, 7), (1, 2))
    assert P.block(1) == (4, 5) and P.m_block == (3,)
    with pytest.raises(PartitionTooCoarseError):
        make_partition(5, 3)
    assert len(type_one_partitions(7, 2)) == 4
    assert len(type_one_partitions(6, 2)) == 1


def test_block_exchange_examples():
    P = make_partition(4, 2)
    eta = C(1, 2, 3, 4)
    assert apply_block_exchange(eta, P, 1).letters == (3, 4, 1, 2)
    assert apply_block_exchange(apply_block_exchange(eta, P, 1), P, 1) == eta
    with pytest.raises(InvalidExchangeError):
        BlockExchange(P, 2).source(4)
    with pytest.raises(TypeError):
        apply_move(eta, BlockAverage(P, 1, 2))


def test_decompose_exchange_examples():
    P = make_partition(6, 2)
    assert decompose_exchange(P, 1) == [Reversal(1, 1), Reversal(3, 1), Reversal(1, 3)]
    P1 = make_partition(4, 1)
    assert decompose_exchange(P1, 2) == [Reversal(2, 0), Reversal(3, 0), Reversal(2, 1)]


@pytest.mark.parametrize("n", range(2, 7))
def test_decompose_exchange_exhaustive(n):
    for ell in range(1, n // 2 + 1):
        N, m = divmod(n, ell)
        for k in (range(1, N + 2) if m else [1]):
            P = make_partition(n, ell, 1, k)
            for i in range(1, N):
                src = BlockExchange(P, i).source(n)
                comp = np.arange(n)
                for mv in decompose_exchange(P, i):
                    comp = comp[mv.source(n)]
                assert np.array_equal(comp, src)


def test_decompose_exchange_random_n8():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        ell = int(rng.integers(1, n // 2 + 1))
        N, m = divmod(n, ell)
        k = int(rng.integers(1, N + 2)) if m else 1
        P = make_partition(n, ell, int(rng.integers(1, n + 1)), k)
        i = int(rng.integers(1, N)) if N > 1 else 1
        eta = Configuration(tuple(rng.permutation(n) + 1))
        out = eta
        for mv in decompose_exchange(P, i):
            out = apply_move(out, mv)
        assert out == apply_block_exchange(eta, P, i)


def test_rank_identity_and_bounds():
    assert rank(Configuration.identity(6)) == 0
    assert unrank(0, 4) == Configuration.identity(4)
    with pytest.raises(ValueError):
        unrank(24, 4)


def test_rank_bijection_s5():
    ranks = sorted(rank(p) for p in permutations(range(1, 6)))
    assert ranks == list(range(120))


@pytest.mark.parametrize("n", range(1, 8))
def test_unrank_all_matches_scalar(n):
    states = unrank_all(n)
    assert states.shape == (math.factorial(n), n)
    assert np.array_equal(rank_states(states), np.arange(math.factorial(n)))
    for r in range(0, math.factorial(n), max(1, math.factorial(n) // 50)):
        assert tuple(states[r]) == unrank(r, n).letters


@settings(max_examples=50, deadline=None)
@given(configurations(n_max=7))
def test_rank_roundtrip(eta):
    assert unrank(rank(eta), eta.n) == eta
