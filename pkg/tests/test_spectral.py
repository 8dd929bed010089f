from fractions import Fraction

import numpy as np
import pytest

from chromoshuffle.chains import (BlockAverageChain, Generator, LocalAvgExchange, LReversal,
                                  RandomTransposition, ThetaReversal)
from chromoshuffle.lanczos import lanczos_smallest
from chromoshuffle.spectral import (DimensionCapError, GapReport, ReducibleChainError,
                                    block_average_gap, build_k_operator, generator_gap,
                                    k_eigenvalues_exact, k_eigenvalues_formula, p_operator_gap,
                                    verify_k_indicator_action)


def test_k_formula_examples():
    assert k_eigenvalues_exact(6, 2) == [Fraction(1), Fraction(-1, 2), Fraction(1, 6)]
    assert k_eigenvalues_exact(4, 2) == [1, -1, 1]
    for n in range(2, 12):
        for m in range(1, n // 2 + 1):
            assert k_eigenvalues_exact(n, m)[0] == 1
    with pytest.raises(ValueError):
        k_eigenvalues_exact(5, 3)


def test_k_operator_small():
    K = build_k_operator(3, 1)
    assert np.allclose(K.matrix, (np.ones((3, 3)) - np.eye(3)) / 2)
    assert np.allclose(np.sort(K.eigenvalues), [-0.5, -0.5, 1])
    K = build_k_operator(6, 2)
    assert K.dimension == 30
    assert np.allclose(K.distinct_eigenvalues(), [-0.5, 1 / 6, 1])


@pytest.mark.parametrize("n, m", [(4, 1), (4, 2), (5, 2), (6, 3)])
def test_k_counting_matches_combinatorial(n, m):
    assert np.allclose(build_k_operator(n, m).matrix,
                       build_k_operator(n, m, count_states=True).matrix, atol=1e-15)


def test_k_cap():
    with pytest.raises(DimensionCapError):
        build_k_operator(10, 5)


@pytest.mark.parametrize("n, m, letters", [(6, 2, {1, 2}), (6, 2, {5}), (7, 3, {1, 4, 6}), (5, 2, {3})])
def test_indicator_action(n, m, letters):
    rep = verify_k_indicator_action(n, m, letters)
    assert rep["pass"], rep
    if letters == {5}:
        assert rep["abs_lambda"] == pytest.approx(0.5)


def test_p_operator_examples():
    r = p_operator_gap(3, 1, N=3)
    assert r["bound"] == 0.5 and r["mu"] >= 0.5
    assert r["mu"] == pytest.approx(0.5, abs=1e-12)
    r = p_operator_gap(4, 1, N=2)
    assert r["bound"] == 0.0 and r["pass"]
    with pytest.raises(ValueError):
        p_operator_gap(4, 2, blocks=[(1, 2), (2, 3)])


def test_p_operator_lanczos_path():
    r = p_operator_gap(7, 1, N=5)
    assert r["method"] == "lanczos" and r["pass"]


def test_gap_two_state():
    r = generator_gap(LReversal(2, 1))
    assert r.gap == pytest.approx(2.0) and r.tau == pytest.approx(0.5)
    d = r.to_dict()
    assert d["schema"] == "chromoshuffle.gap/1" and d["chain"] == "l-reversal" and d["L"] == 1


@pytest.mark.parametrize("spec", [LReversal(6, 2), ThetaReversal(6, 0.5), RandomTransposition(6)],
                         ids=repr)
def test_dense_vs_lanczos(spec):
    a = generator_gap(spec, "exact-dense")
    b = generator_gap(spec, "lanczos")
    assert abs(a.gap - b.gap) <= 1e-8
    assert b.converged and b.residual_or_stderr <= 1e-7


def test_lanczos_on_known_operator():
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.standard_normal((60, 60)))
    vals = np.linspace(0.3, 5, 60)
    A = (Q * vals) @ Q.T
    res = lanczos_smallest(lambda v: A @ v, 60, deflate_constant=False, tol=1e-10)
    assert res.value == pytest.approx(0.3, abs=1e-9) and res.converged


def test_reducible_chain():
    with pytest.raises(ReducibleChainError):
        generator_gap(_exchange_only())


def _exchange_only():
    # a LocalAvgExchange whose averages are switched off is not irreducible
    class Spec(LocalAvgExchange):
        def moves(self):
            return [mv for mv in super().moves() if mv[0].__class__.__name__ == "BlockExchange"]
    return Spec(4, 2, 1, 1.0)


@pytest.mark.parametrize("N, ell", [(2, 1), (3, 1), (4, 1), (2, 2), (3, 2), (2, 3)])
def test_block_average_gap_is_one(N, ell):
    r = block_average_gap(N, ell)
    assert r.chain["gap_is_one"]
    assert r.chain["witness_rayleigh"] == pytest.approx(1.0, abs=1e-12)


def test_gap_report_json_roundtrip():
    import json
    r = GapReport(0.5, "exact-dense", 1e-14, 0, {"chain": "l-reversal", "n": 3, "L": 1})
    d = json.loads(r.to_json())
    assert d["tau"] == 2.0 and d["method"] == "exact-dense"


def test_generator_gap_matches_dense_eigs():
    spec = LReversal(4, 3)
    vals = np.linalg.eigvalsh(-Generator(spec).dense())
    assert generator_gap(spec).gap == pytest.approx(vals[1], abs=1e-12)
