"""Exact spectral computations.

* the block-coupling operator K on ordered m-tuples and its closed-form spectrum,
* the block-resampling operator P and the lowest nonzero eigenvalue of 1 - P,
* spectral gaps of chain generators, dense for small n and by Lanczos above.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Iterable, Sequence

import numpy as np

from .chains import (BlockAverageChain, ChainSpec, Generator, StateSpace,
                     rayleigh_lower_bound, spec_to_dict, state_space)
from .lanczos import lanczos_smallest

__all__ = [
    "GapReport", "ReducibleChainError", "DimensionCapError", "SCHEMA",
    "k_eigenvalues_formula", "k_eigenvalues_exact", "KOperator", "build_k_operator",
    "IndicatorProduct", "verify_k_indicator_action", "p_operator_gap",
    "generator_gap", "block_average_gap", "block_indicator_witness",
    "DENSE_MAX_N", "K_DENSE_CAP",
]

SCHEMA = "chromoshuffle.gap/1"
DENSE_MAX_N = 6
K_DENSE_CAP = 5040


class ReducibleChainError(RuntimeError):
    """The chain has more than one communicating class; its gap is 0."""

    gap = 0.0


class DimensionCapError(ValueError):
    pass


@dataclass
class GapReport:
    gap: float
    method: str
    residual_or_stderr: float
    iterations: int
    chain: dict = field(default_factory=dict)
    seed: int | None = None
    seconds: float = 0.0
    converged: bool = True
    observable: str | None = None

    @property
    def tau(self) -> float:
        return 1.0 / self.gap

    def to_dict(self) -> dict:
        out = {"schema": SCHEMA, **self.chain, "method": self.method,
               "gap": self.gap, "tau": self.tau,
               "residual_or_stderr": self.residual_or_stderr,
               "iterations": self.iterations, "converged": self.converged,
               "seconds": self.seconds}
        if self.seed is not None:
            out["seed"] = self.seed
        if self.observable is not None:
            out["observable"] = self.observable
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# -- the operator K ----------------------------------------------------------

def _check_km(n: int, m: int) -> None:
    if not (1 <= m and 2 * m <= n):
        raise ValueError(f"need 1 <= m <= n/2, got n={n}, m={m}")


def k_eigenvalues_exact(n: int, m: int) -> list[Fraction]:
    """lambda_k = (-1)^k C(n-m-k, m-k) / C(n-m, m), k = 0..m, as fractions."""
    _check_km(n, m)
    denom = math.comb(n - m, m)
    return [Fraction((-1) ** k * math.comb(n - m - k, m - k), denom) for k in range(m + 1)]


def k_eigenvalues_formula(n: int, m: int) -> list[float]:
    return [float(v) for v in k_eigenvalues_exact(n, m)]


@dataclass
class KOperator:
    n: int
    m: int
    tuples: list[tuple[int, ...]]
    matrix: np.ndarray
    eigenvalues: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.tuples)

    def distinct_eigenvalues(self, atol: float = 1e-10) -> list[float]:
        """Distinct eigenvalues of magnitude above ``atol``, merged within 1e-8."""
        vals = np.sort(self.eigenvalues[np.abs(self.eigenvalues) > atol])
        out: list[list[float]] = []
        for v in vals:
            if out and abs(v - out[-1][-1]) < 1e-8:
                out[-1].append(v)
            else:
                out.append([v])
        return [float(np.mean(c)) for c in out]

    def apply(self, phi: np.ndarray) -> np.ndarray:
        return self.matrix @ phi


def _count_k_matrix(n: int, m: int, tuples: list[tuple[int, ...]]) -> np.ndarray:
    # brute force over all n! configurations: joint counts of (second block, first block)
    pos = {t: i for i, t in enumerate(tuples)}
    D = len(tuples)
    joint = np.zeros((D, D))
    for eta in permutations(range(1, n + 1)):
        joint[pos[eta[m:2 * m]], pos[eta[:m]]] += 1
    return joint / joint.sum(axis=1, keepdims=True)


def build_k_operator(n: int, m: int, *, cap: int = K_DENSE_CAP,
                     count_states: bool = False) -> KOperator:
    """K(alpha, beta) = nu[first m-block = beta | second m-block = alpha].

    By default the entries are counted combinatorially: given alpha, the
    compatible completions with first block beta number (n-2m)! when beta is
    disjoint from alpha and 0 otherwise, out of (n-m)!. ``count_states``
    counts over all n! configurations instead (small n only).
    """
    _check_km(n, m)
    dim = math.perm(n, m)
    if dim > cap:
        raise DimensionCapError(f"K has dimension {dim} > cap {cap}")
    tuples = list(permutations(range(1, n + 1), m))
    if count_states:
        K = _count_k_matrix(n, m, tuples)
    else:
        masks = np.zeros((dim, n), dtype=bool)
        for i, t in enumerate(tuples):
            masks[i, np.asarray(t) - 1] = True
        overlap = masks.astype(np.int32) @ masks.T.astype(np.int32)
        p = math.factorial(n - 2 * m) / math.factorial(n - m)
        K = np.where(overlap == 0, p, 0.0)
    eigenvalues = np.linalg.eigvalsh(K)
    return KOperator(n, m, tuples, K, eigenvalues)


@dataclass(frozen=True)
class IndicatorProduct:
    """chi_{j1} ... chi_{jk}: 1 iff every listed letter appears in the tuple."""

    letters: frozenset[int]

    def __call__(self, alpha: Sequence[int]) -> float:
        return float(self.letters.issubset(alpha))

    def complement(self, alpha: Sequence[int]) -> float:
        """(1 - chi_{j1}) ... (1 - chi_{jk})."""
        return float(self.letters.isdisjoint(alpha))


def verify_k_indicator_action(n: int, m: int, letters: Iterable[int],
                              K: KOperator | None = None) -> dict:
    """Check K[chi_j1...chi_jk] = |lambda_k| (1-chi_j1)...(1-chi_jk) pointwise."""
    letters = frozenset(letters)
    k = len(letters)
    if not (1 <= k <= m):
        raise ValueError(f"need 1 <= |letters| <= m, got {k}")
    if K is None:
        K = build_k_operator(n, m)
    ind = IndicatorProduct(letters)
    phi = np.array([ind(a) for a in K.tuples])
    lhs = K.apply(phi)
    lam = abs(float(k_eigenvalues_exact(n, m)[k]))
    rhs = lam * np.array([ind.complement(a) for a in K.tuples])
    dev = float(np.max(np.abs(lhs - rhs)))
    return {"n": n, "m": m, "letters": sorted(letters), "abs_lambda": lam,
            "max_deviation": dev, "pass": dev <= 1e-12}


# -- the operator P ----------------------------------------------------------

def p_operator_gap(n: int, m: int, blocks: Sequence[Sequence[int]] | None = None,
                   N: int | None = None, *, tol: float = 1e-10, seed: int = 0) -> dict:
    """Lowest nonzero eigenvalue mu of 1 - P for N disjoint m-blocks.

    P = (1/N) sum_k P_k with P_k the conditional expectation given the letters
    on block k. ``blocks`` defaults to the consecutive blocks starting at 1.
    """
    if blocks is None:
        if N is None:
            raise ValueError("give either blocks or N")
        blocks = [tuple(range((b - 1) * m + 1, b * m + 1)) for b in range(1, N + 1)]
    blocks = [tuple(int(v) for v in b) for b in blocks]
    N = len(blocks)
    if N < 2:
        raise ValueError("need at least two blocks")
    seen: set[int] = set()
    for b in blocks:
        if len(b) != m or not all(1 <= v <= n for v in b):
            raise ValueError(f"block {b} is not an m-block of V_{n}")
        if seen.intersection(b):
            raise ValueError(f"overlapping blocks: {blocks}")
        seen.update(b)
    space = state_space(n)
    avs = [space.averager(b) for b in blocks]

    def one_minus_p(f):
        return f - sum(av.mean(f) for av in avs) / N

    t0 = time.perf_counter()
    if n <= DENSE_MAX_N:
        M = one_minus_p(np.eye(space.size))
        vals = np.linalg.eigvalsh((M + M.T) / 2)
        nonzero = vals[vals > 1e-9]
        if not len(nonzero):
            # a single block already fixes the configuration: 1 - P vanishes
            return {"n": n, "m": m, "N": N, "blocks": blocks, "mu": None,
                    "bound": (N - 2) / (N - 1), "pass": True, "status": "vacuous",
                    "method": "exact-dense", "residual": 0.0, "iterations": 0,
                    "seconds": time.perf_counter() - t0}
        mu, residual, iters, method = float(nonzero[0]), 0.0, 0, "exact-dense"
    else:
        res = lanczos_smallest(one_minus_p, space.size, tol=1e-9, seed=seed)
        mu, residual, iters, method = res.value, res.residual, res.iterations, "lanczos"
    bound = (N - 2) / (N - 1)
    return {"n": n, "m": m, "N": N, "blocks": blocks, "mu": mu, "bound": bound,
            "pass": mu >= bound - tol, "method": method, "residual": residual,
            "iterations": iters, "status": "ok", "seconds": time.perf_counter() - t0}


# -- generator gaps ----------------------------------------------------------

def generator_gap(spec: ChainSpec, method: str = "auto", tolerance: float | None = None,
                  *, seed: int = 0, maxiter: int = 500, allow_large: bool = False) -> GapReport:
    """Lowest nonzero eigenvalue of -G for the chain ``spec``.

    ``method`` is ``exact-dense`` (n <= 6), ``lanczos`` or ``auto``.
    """
    n = spec.n
    if method == "auto":
        method = "exact-dense" if n <= DENSE_MAX_N else "lanczos"
    if method == "exact-dense" and n > DENSE_MAX_N:
        raise ValueError(f"dense solve is limited to n <= {DENSE_MAX_N}")
    t0 = time.perf_counter()
    space = state_space(n, allow_large) if n > 8 else state_space(n)
    gen = Generator(spec, space)
    if n <= 8 and gen.components() > 1:
        raise ReducibleChainError(f"{spec} is not irreducible; gap = 0")
    if method == "exact-dense":
        tol = 1e-10 if tolerance is None else tolerance
        A = -gen.dense()
        vals, vecs = np.linalg.eigh((A + A.T) / 2)
        if vals[1] < 1e-10:
            raise ReducibleChainError(f"{spec} has a degenerate kernel; gap = 0")
        v = vecs[:, 1]
        residual = float(np.linalg.norm(A @ v - vals[1] * v))
        report = GapReport(float(vals[1]), "exact-dense", residual, 0,
                           spec_to_dict(spec), converged=residual <= tol)
    elif method == "lanczos":
        tol = 1e-8 if tolerance is None else tolerance
        res = lanczos_smallest(lambda f: -gen.apply(f), space.size, tol=tol,
                               maxiter=maxiter, seed=seed)
        if res.value < 1e-10:
            raise ReducibleChainError(f"{spec} has a degenerate kernel; gap = 0")
        report = GapReport(res.value, "lanczos", res.residual, res.iterations,
                           spec_to_dict(spec), seed=seed,
                           converged=res.converged and res.residual <= 10 * tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    report.seconds = time.perf_counter() - t0
    return report


def block_indicator_witness(N: int, ell: int) -> np.ndarray:
    """Indicator that letter 1 sits in the first ell-block."""
    space = state_space(N * ell)
    return (space.states[:, :ell] == 1).any(axis=1).astype(float)


def block_average_gap(N: int, ell: int, *, tol: float = 1e-8, seed: int = 0) -> GapReport:
    """Gap of the block-average dynamics; expected to equal 1."""
    if N < 2:
        raise ValueError("block-average dynamics needs N >= 2")
    report = generator_gap(BlockAverageChain(N, ell), seed=seed)
    report.chain["witness_rayleigh"] = rayleigh_lower_bound(
        BlockAverageChain(N, ell), block_indicator_witness(N, ell))
    report.chain["gap_is_one"] = abs(report.gap - 1.0) <= tol
    return report
