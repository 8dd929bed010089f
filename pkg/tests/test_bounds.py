import math
from fractions import Fraction

import numpy as np
import pytest

from chromoshuffle.bounds import (InequalityReport, ProfileG, check_assembly, check_lemma_2_5,
                                  check_lemma_2_6, check_lemma_2_7, check_prop_2_4,
                                  chi_dirichlet_exact, chi_stats_projected, cosine_profile,
                                  lemma_2_5_sides, make_witness, psi_dirichlet_projected,
                                  psi_variance_projected, random_tables, run_point, suite_points,
                                  summarize, theta_l_sides, xi_dirichlet_exact, xi_witness)
from chromoshuffle.chains import (Generator, LReversal, PartitionAverage, ThetaReversal, dirichlet,
                                  state_space, uniform_stats)
from chromoshuffle.core import make_partition


def test_profile_quadrature():
    g = cosine_profile()
    mean, norm = g.quadrature_check()
    assert abs(mean) < 1e-8 and abs(norm - 1) < 1e-8
    from scipy.integrate import quad
    assert quad(lambda t: g.dg(t) ** 2, 0, 1)[0] == pytest.approx(g.dirichlet_integral, rel=1e-10)
    assert g.dirichlet_integral == pytest.approx(4 * math.pi ** 2)
    bad = ProfileG(lambda t: np.ones_like(t), lambda t: 0 * t, 0.0, "one")
    with pytest.raises(ValueError):
        bad.quadrature_check()
    wrong_energy = ProfileG(g.g, g.dg, 8 * math.pi ** 2, "cos-8pi2")
    with pytest.raises(ValueError):
        wrong_energy.quadrature_check()


def test_witness_means():
    assert make_witness("chi", 4).table().mean() == pytest.approx(2 / 3)
    assert make_witness("xi", 4).table().mean() == pytest.approx(1 / 6)
    assert np.all(make_witness("chi", 3).table() == 1)
    with pytest.raises(ValueError):
        make_witness("xi", 5)
    with pytest.raises(ValueError):
        make_witness("chi", 2)


def test_witness_pointwise():
    from chromoshuffle.core import Configuration
    chi = make_witness("chi", 5)
    assert chi(Configuration((2, 3, 4, 5, 1))) == 1.0  # wraps around the cycle
    assert chi(Configuration((1, 3, 2, 4, 5))) == 0.0
    xi = make_witness("xi", 4)
    assert xi(Configuration((2, 1, 4, 3))) == 1.0 and xi(Configuration((1, 3, 2, 4))) == 0.0
    psi = make_witness("psi", 4)
    assert psi(Configuration((4, 1, 2, 3))) == pytest.approx(math.sqrt(2) * math.cos(math.pi / 2))


@pytest.mark.parametrize("n", range(3, 9))
def test_witness_stats_match_enumeration(n):
    for kind in ("psi", "chi") + (("xi",) if n % 2 == 0 else ()):
        w = make_witness(kind, n)
        mean, var, _ = uniform_stats(w.table(), with_entropy=False)
        assert mean == pytest.approx(w.stationary_mean(), abs=1e-12)
        assert var == pytest.approx(w.stationary_variance(), abs=1e-12)


def test_psi_projection_hand_value():
    assert psi_dirichlet_projected(4, LReversal(4, 1)) == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("spec", [LReversal(6, 2), LReversal(5, 5), LReversal(7, 3),
                                  ThetaReversal(6, 0.5), ThetaReversal(5, 0.9)], ids=repr)
def test_psi_projection_matches_enumeration(spec):
    table = make_witness("psi", spec.n).table()
    assert psi_dirichlet_projected(spec.n, spec) == pytest.approx(dirichlet(spec, table), abs=1e-12)


def test_psi_is_an_eigenfunction_for_unit_reversals():
    # a single-step reversal moves letter n by +-1, so psi decays at 2(1 - cos 2pi/n)/n
    for n in (5, 9, 64, 500):
        tau = psi_variance_projected(n) / psi_dirichlet_projected(n, LReversal(n, 1))
        assert tau == pytest.approx(n / (2 * (1 - math.cos(2 * math.pi / n))), rel=1e-10)


def test_psi_scaling_bounded():
    ratios = []
    for n in (100, 400, 1600):
        for L in (1, 5, n // 8, n // 4):
            E = psi_dirichlet_projected(n, LReversal(n, L))
            ratios.append(E / ((L / n) ** 3 * 8 * math.pi ** 2))
    assert max(ratios) < 1.0 and min(ratios) > 0.01


@pytest.mark.parametrize("n", range(3, 9))
def test_chi_projection_matches_enumeration(n):
    table = make_witness("chi", n).table()
    for L in range(1, n + 1):
        assert chi_dirichlet_exact(n, L) == pytest.approx(dirichlet(LReversal(n, L), table), abs=1e-12)


def test_chi_closed_forms():
    for n in range(3, 31):
        mean, var = chi_stats_projected(n)
        assert mean == Fraction(2, n - 1)
        assert var == Fraction(2 * (n - 3), (n - 1) ** 2)
        for L in range(1, n + 1):
            assert chi_dirichlet_exact(n, L) <= 16 / (n * (n - 1))
    assert chi_dirichlet_exact(3, 2) == 0.0


def test_chi_alternative_variance_disagrees():
    # the alternative closed form 4(n-2)/(n-1)^2 exceeds the Bernoulli bound p(1-p) <= 1/4 at n = 3
    n = 3
    alt = Fraction(4 * (n - 2), (n - 1) ** 2)
    assert alt == 1 and chi_stats_projected(n)[1] == 0


def test_xi_examples():
    r = xi_witness(4, 1)
    assert r["entropy"] == pytest.approx(math.log(6) / 6)
    assert r["nu_xi"] == pytest.approx(1 / 6)
    for n in (4, 6, 8):
        for L in range(1, n + 1):
            a = xi_witness(n, L, "enumeration")["dirichlet"]
            assert xi_dirichlet_exact(n, LReversal(n, L)) == pytest.approx(a, abs=1e-12)
    with pytest.raises(ValueError):
        xi_witness(5, 1)


def test_xi_monte_carlo_consistent():
    exact = xi_witness(12, 3, "projection")
    mc = xi_witness(12, 3, "mc", samples=40_000, seed=1)
    assert abs(mc["dirichlet"] - exact["dirichlet"]) <= 4 * mc["stderr"]


def test_report_pass_rule():
    assert InequalityReport(1.0, 1.0).passed
    assert InequalityReport(1.0 + 5e-11, 1.0).passed
    assert not InequalityReport(1.0 + 1e-9, 1.0).passed
    assert InequalityReport(2.0, 1.0, status="not-applicable").passed


def test_constant_tables():
    for n, ell in ((5, 2), (7, 3)):
        r = check_prop_2_4(n, ell, np.ones(math.factorial(n)))
        assert r.lhs == 0 and r.rhs == 0 and r.passed
    f = np.ones(720)
    assert check_lemma_2_5(6, 2, 1, f).passed
    assert check_lemma_2_6(6, 2, 1, 1, f).passed
    assert check_lemma_2_7(6, 2, 1, 1, f).passed
    assert check_assembly(7, 4, 2, np.ones(5040)).passed


def test_partition_average_check_not_applicable_for_m0():
    assert check_prop_2_4(6, 2, np.zeros(720)).status == "not-applicable"


def test_assembly_window():
    assert check_assembly(7, 7, 4, np.zeros(5040)).status == "not-applicable"
    assert check_assembly(7, 4, 2, np.zeros(5040)).status == "ok"


@pytest.mark.parametrize("suite, n", [("prop2_4", 7), ("lemma2_5", 7), ("lemma2_6", 6),
                                      ("lemma2_7", 6), ("assembly", 7)])
def test_random_tables_pass(suite, n):
    for point in suite_points(suite, n, n):
        reps = run_point(suite, point, 100, seed=7)
        s = summarize(suite, point, reps)
        assert s["failures"] == 0, s


def test_chi_passes_named_checks():
    chi7 = make_witness("chi", 7).table()
    assert check_prop_2_4(7, 3, chi7).passed
    psi6 = make_witness("psi", 6).table()
    assert check_lemma_2_5(6, 2, 1, psi6).passed
    chi8 = make_witness("chi", 8).table()
    assert check_assembly(8, 4, 2, chi8).passed


def test_average_check_records_both_indices():
    f = random_tables(6, 1, 0)[:, 0]
    r = check_lemma_2_7(6, 2, 1, 1, f)
    assert {"rhs_offset1", "frozen_lhs", "frozen_rhs"} <= set(r.extras)
    assert r.extras["frozen_lhs"] <= r.extras["frozen_rhs"] + 1e-12


def test_exchange_check_equality_diagnostic():
    # f depends only on the block pair's contents: exchange moves it, and the bound is tight up to 3
    sp = state_space(6)
    f = sp.states[:, 0].astype(float) - sp.states[:, 2]
    r = check_lemma_2_6(6, 2, 1, 1, f)
    assert r.passed and r.lhs > 0


def test_random_tables_seeded_and_centred():
    a = random_tables(5, 4, 3)
    assert np.array_equal(a, random_tables(5, 4, 3))
    assert np.allclose(a.mean(axis=0), 0, atol=1e-12)
    assert np.array_equal(a[:, :2], random_tables(5, 2, 3))


# -- stated constants that do not hold -----------------------------------------

@pytest.mark.parametrize("n, ell, tau", [(5, 2, 12 / 7), (7, 3, 18 / 11)])
def test_partition_average_constant_fails_for_two_blocks(n, ell, tau):
    """With N = 2 the slowest mode of the averaged block dynamics beats 3/2."""
    G = -Generator(PartitionAverage(n, ell)).dense()
    w, v = np.linalg.eigh(G)
    assert 1 / w[1] == pytest.approx(tau, rel=1e-10)
    r = check_prop_2_4(n, ell, v[:, 1])
    assert not r.passed
    N = n // ell
    assert check_prop_2_4(n, ell, v[:, 1], constant=N / (N - 1)).passed


def _same_block_indicator(n, ell, k):
    P = make_partition(n, ell, 1, k)
    sp = state_space(n)
    block_of = np.zeros((sp.size, n + 1), dtype=int)
    for b, verts in enumerate(P.ell_blocks, start=1):
        for v in verts:
            block_of[np.arange(sp.size), sp.states[:, v - 1]] = b
    return ((block_of[:, 1] == block_of[:, 2]) & (block_of[:, 1] > 0)).astype(float)


@pytest.mark.parametrize("n, ell, k", [(4, 2, 1), (6, 2, 1), (7, 2, 2)])
def test_split_constants_fail_for_exchange_invariant_f(n, ell, k):
    """Block exchanges leave f unchanged, so only the 1/2-weighted averages remain."""
    f = _same_block_indicator(n, ell, k)
    r = check_lemma_2_5(n, ell, k, f)
    assert not r.passed and r.lhs == pytest.approx(2 * r.rhs, rel=1e-12)
    N = n // ell
    lhs, rhs = lemma_2_5_sides(n, ell, k, f[:, None], exchange_constant=8 * N * N,
                               average_constant=4.0)
    assert lhs[0] <= rhs[0]


def test_theta_comparison_constant():
    F = random_tables(5, 20, 0)
    for theta in (0.25, 0.5, 0.9):
        for L in range(1, 6):
            lhs, rhs = theta_l_sides(5, theta, L, F)
            assert np.all(lhs <= rhs * (1 + 1e-12))
    # the doubled constant does not hold
    lhs, rhs = theta_l_sides(5, 0.25, 1, F, factor=2.0)
    assert np.all(lhs > rhs)
