"""Test functions, projected Dirichlet forms and comparison-inequality checkers.

The witnesses psi, chi and xi depend on the positions of one, two or n/2
letters only, so their statistics and Dirichlet forms can be computed
exactly on small projected chains far beyond the reach of full enumeration.
The checkers evaluate both sides of each comparison inequality exactly on
the enumerated state space, vectorised over a stack of test tables.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np
from scipy.integrate import quad

from .chains import (ChainSpec, LReversal, PartitionAverage, StateSpace, ThetaReversal,
                     dirichlet, state_space)
from .core import (Reversal, Transposition, BlockExchange, make_partition,
                   reduce_vertex, type_one_partitions)

__all__ = [
    "ProfileG", "cosine_profile", "Witness", "make_witness", "InequalityReport",
    "psi_variance_projected", "psi_dirichlet_projected", "chi_stats_projected",
    "chi_dirichlet_exact", "xi_dirichlet_exact", "xi_witness", "random_tables",
    "check_prop_2_4", "check_lemma_2_5", "check_lemma_2_6", "check_lemma_2_7",
    "check_assembly", "prop_2_4_sides", "lemma_2_5_sides", "lemma_2_6_sides",
    "lemma_2_7_sides", "assembly_sides", "frozen_pair_sides", "theta_l_sides", "lemma_windows",
    "REL_TOL", "SUITES", "SUMMARY_COLUMNS", "suite_points", "run_point", "summarize",
]

REL_TOL = 1e-10


# -- profile and witnesses ---------------------------------------------------

@dataclass(frozen=True)
class ProfileG:
    """Smooth g on [0, 1] with zero mean and unit L2 norm, plus g' and int g'^2."""

    g: Callable[[np.ndarray], np.ndarray]
    dg: Callable[[np.ndarray], np.ndarray]
    dirichlet_integral: float
    name: str = "custom"

    def quadrature_check(self, tol: float = 1e-8) -> tuple[float, float]:
        mean = quad(lambda t: float(self.g(np.asarray(t))), 0, 1, limit=200)[0]
        norm = quad(lambda t: float(self.g(np.asarray(t))) ** 2, 0, 1, limit=200)[0]
        energy = quad(lambda t: float(self.dg(np.asarray(t))) ** 2, 0, 1, limit=200)[0]
        if abs(mean) > tol or abs(norm - 1) > tol:
            raise ValueError(f"profile {self.name}: int g = {mean}, int g^2 = {norm}")
        if abs(energy - self.dirichlet_integral) > tol * max(1.0, energy):
            raise ValueError(f"profile {self.name}: int g'^2 = {energy}, "
                             f"declared {self.dirichlet_integral}")
        return mean, norm


def cosine_profile() -> ProfileG:
    """g(t) = sqrt(2) cos(2 pi t); int g'^2 = 8 pi^2 int sin^2 = 4 pi^2."""
    r2 = math.sqrt(2.0)
    return ProfileG(g=lambda t: r2 * np.cos(2 * np.pi * t),
                    dg=lambda t: -2 * np.pi * r2 * np.sin(2 * np.pi * t),
                    dirichlet_integral=4 * math.pi ** 2, name="sqrt2-cos")


@dataclass(frozen=True)
class Witness:
    """One of the lower-bound test functions psi, chi, xi on n letters."""

    kind: str
    n: int
    profile: ProfileG | None = None

    def position_values(self) -> np.ndarray:
        """psi as a function of the vertex (1..n) holding letter n."""
        x = np.arange(1, self.n + 1) / self.n
        return np.asarray(self.profile.g(x), dtype=float)

    def evaluate_states(self, states: np.ndarray) -> np.ndarray:
        """Vectorised evaluation on an (S, n) array of letter rows."""
        states = np.asarray(states)
        n = self.n
        if self.kind == "psi":
            pos = np.argmax(states == n, axis=1)
            return self.position_values()[pos]
        if self.kind == "chi":
            p1 = np.argmax(states == 1, axis=1)
            p2 = np.argmax(states == 2, axis=1)
            d = (p1 - p2) % n
            return ((d == 1) | (d == n - 1)).astype(float)
        if self.kind == "xi":
            return np.all(states[:, : n // 2] <= n // 2, axis=1).astype(float)
        raise ValueError(f"unknown witness {self.kind!r}")

    def __call__(self, eta) -> float:
        letters = np.asarray(eta.letters if hasattr(eta, "letters") else eta)
        return float(self.evaluate_states(letters[None, :])[0])

    def table(self, space: StateSpace | None = None) -> np.ndarray:
        space = space if space is not None else state_space(self.n)
        return self.evaluate_states(space.states)

    def stationary_mean(self) -> float:
        if self.kind == "psi":
            return float(self.position_values().mean())
        if self.kind == "chi":
            return 2.0 / (self.n - 1)
        return 1.0 / math.comb(self.n, self.n // 2)

    def stationary_variance(self) -> float:
        if self.kind == "psi":
            return psi_variance_projected(self.n, self.profile)
        p = self.stationary_mean()
        if self.kind == "chi" and self.n == 3:
            return 0.0
        return p * (1 - p)


def make_witness(kind: str, n: int, g: ProfileG | None = None) -> Witness:
    if n < (2 if kind == "psi" else 3):
        raise ValueError(f"{kind} witness needs more letters (n = {n})")
    if kind == "xi" and n % 2:
        raise ValueError("xi needs an even number of letters")
    if kind == "psi" and g is None:
        g = cosine_profile()
    if kind not in ("psi", "chi", "xi"):
        raise ValueError(f"unknown witness {kind!r}")
    return Witness(kind, n, g if kind == "psi" else None)


# -- projected statistics ----------------------------------------------------

def _reversal_weights(spec) -> list[tuple[int, float]]:
    """(ell, per-vertex weight) pairs of an L- or theta-reversal chain."""
    if isinstance(spec, LReversal):
        return [(ell, 1.0 / (spec.n * spec.L)) for ell in range(1, spec.L + 1)]
    if isinstance(spec, ThetaReversal):
        return [(ell, spec.length_weight(ell)) for ell in range(1, spec.n + 1)]
    raise TypeError(f"projection needs an L- or theta-reversal chain, got {spec}")


def psi_variance_projected(n: int, g: ProfileG | None = None) -> float:
    G = make_witness("psi", n, g).position_values()
    return float(np.mean((G - G.mean()) ** 2))


def psi_dirichlet_projected(n: int, spec: ChainSpec, g: ProfileG | None = None) -> float:
    """E(psi, psi) through the position of letter n alone.

    A reversal of the segment x..x+s-1 sends x+j to x+s-1-j, so summing over
    x turns each move length into a sum of cyclic shift energies
    c(d) = sum_x (G[x+d] - G[x])^2 with d = s-1-2j.
    """
    if spec.n != n:
        raise ValueError("chain size mismatch")
    G = make_witness("psi", n, g).position_values()
    c = np.array([np.sum((np.roll(G, -d) - G) ** 2) for d in range(n)])
    total = 0.0
    for ell, w in _reversal_weights(spec):
        s = min(ell + 1, n)
        d = (s - 1 - 2 * np.arange(s)) % n
        total += w * c[d].sum()
    return total / (2 * n)


def chi_stats_projected(n: int) -> tuple[Fraction, Fraction]:
    """Exact (nu[chi], Var(chi)) from the n(n-1) equally likely position pairs."""
    if n < 3:
        raise ValueError("chi needs n >= 3")
    adjacent = sum(1 for p in range(n) for q in range(n)
                   if p != q and (p - q) % n in (1, n - 1))
    mean = Fraction(adjacent, n * (n - 1))
    return mean, mean - mean * mean


def _reversal_sources(spec) -> Iterator[tuple[np.ndarray, float]]:
    n = spec.n
    for ell, w in _reversal_weights(spec):
        for x in range(1, n + 1):
            yield Reversal(x, ell).source(n), w


def chi_dirichlet_exact(n: int, L: int | None = None, spec: ChainSpec | None = None) -> float:
    """E(chi, chi) on the chain of positions of letters 1 and 2."""
    if spec is None:
        spec = LReversal(n, L)
    p1, p2 = np.array([(p, q) for p in range(n) for q in range(n) if p != q]).T

    def adj(a, b):
        d = (a - b) % n
        return (d == 1) | (d == n - 1)

    before = adj(p1, p2)
    total = 0.0
    for src, w in _reversal_sources(spec):
        # reversals are involutions, so a letter at p lands at src[p]
        after = adj(src[p1], src[p2])
        total += 0.5 * w * np.mean(before != after)
    return total


def xi_dirichlet_exact(n: int, spec: ChainSpec) -> float:
    """E(xi, xi) = nu[xi] * (weight of moves that move the block {1..n/2} off itself).

    On {xi = 1} the small letters occupy exactly A = {1..n/2}; after an
    involutive move they occupy src(A), so xi flips iff src(A) != A.
    """
    half = n // 2
    A = np.arange(half)
    p = 1.0 / math.comb(n, half)
    moved = sum(w for src, w in _reversal_sources(spec)
                if set(src[A].tolist()) != set(A.tolist()))
    return p * moved


def xi_witness(n: int, L: int, method: str = "auto", *, samples: int = 100_000,
               seed: int = 0) -> dict:
    """Entropy-to-Dirichlet ratio of the half-block indicator xi.

    ``method``: ``enumeration`` (n <= 8), ``projection`` (exact, any n),
    ``mc`` (sampling conditioned on xi = 1, with standard error) or ``auto``.
    """
    if n % 2:
        raise ValueError("xi needs an even number of letters")
    spec = LReversal(n, L)
    p = 1.0 / math.comb(n, n // 2)
    ent = -p * math.log(p)
    if method == "auto":
        method = "enumeration" if n <= 8 else "projection"
    stderr = 0.0
    if method == "enumeration":
        E = dirichlet(spec, make_witness("xi", n).table())
    elif method == "projection":
        E = xi_dirichlet_exact(n, spec)
    elif method == "mc":
        rng = np.random.default_rng(seed)
        moves = list(_reversal_sources(spec))
        weights = np.array([w for _, w in moves])
        R = weights.sum()
        picks = rng.choice(len(moves), size=samples, p=weights / R)
        # with xi = 1 the small letters fill 0..n/2-1 whatever their order
        A = set(range(n // 2))
        flips = np.array([set(moves[i][0][: n // 2].tolist()) != A for i in picks], float)
        E = p * R * flips.mean()
        stderr = p * R * flips.std(ddof=1) / math.sqrt(samples)
    else:
        raise ValueError(f"unknown method {method!r}")
    return {"n": n, "L": L, "nu_xi": p, "entropy": ent, "dirichlet": E,
            "ratio": ent / E, "method": method, "stderr": stderr}


# -- inequality reports ------------------------------------------------------

@dataclass
class InequalityReport:
    lhs: float
    rhs: float
    context: dict = field(default_factory=dict)
    status: str = "ok"
    extras: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        if self.status == "not-applicable":
            return True
        return self.slack >= -REL_TOL * max(1.0, abs(self.rhs))

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "slack": self.slack,
                "pass": self.passed, "status": self.status,
                "context": self.context, **({"extras": self.extras} if self.extras else {})}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=float)


def _fingerprint(f: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(f, dtype="<f8").tobytes()).hexdigest()[:16]


def random_tables(n: int, trials: int, seed: int) -> np.ndarray:
    """(n!, trials) stack of centred standard-Gaussian tables; column t uses seed (seed, t)."""
    size = math.factorial(n)
    out = np.empty((size, trials))
    for t in range(trials):
        col = np.random.default_rng([seed, t]).standard_normal(size)
        out[:, t] = col - col.mean()
    return out


def _as_stack(f, n: int) -> np.ndarray:
    values = f.values if hasattr(f, "values") else np.asarray(f, dtype=float)
    if values.shape[0] != math.factorial(n):
        raise ValueError(f"table has {values.shape[0]} entries, expected {n}!")
    return values


def _var(F: np.ndarray) -> np.ndarray:
    return np.mean((F - F.mean(axis=0)) ** 2, axis=0)


def _grad_sq(space: StateSpace, src: np.ndarray, F: np.ndarray) -> np.ndarray:
    idx = space.index_map(src)
    return np.mean((F[idx] - F) ** 2, axis=0)


def _rev_sq(space: StateSpace, x: int, ell: int, F: np.ndarray) -> np.ndarray:
    """nu[(R_{x,ell} f)^2]; zero for ell < 1 (empty or single-vertex segment)."""
    if ell < 1:
        return np.zeros(F.shape[1:])
    return _grad_sq(space, Reversal(reduce_vertex(x, space.n), ell).source(space.n), F)


def _avg_sq(space: StateSpace, vertices, F: np.ndarray) -> np.ndarray:
    av = space.resample_averager(vertices)
    return np.mean((F - av.mean(F)) ** 2, axis=0)


def _pair_avg_sq(space, P, i, j, F):
    return _avg_sq(space, P.block(i) + P.block(j), F)


def _exchange_sq(space, P, i, F):
    return _grad_sq(space, BlockExchange(P, i).source(space.n), F)


def _partition_n_m(n: int, ell: int) -> tuple[int, int]:
    return n // ell, n % ell


def _not_applicable(reason: str, context: dict) -> InequalityReport:
    return InequalityReport(0.0, 0.0, {**context, "reason": reason}, status="not-applicable")


def _reports(lhs, rhs, context, F, extras=None) -> list[InequalityReport]:
    out = []
    for t in range(F.shape[1]):
        ex = {k: float(v[t]) for k, v in (extras or {}).items()}
        out.append(InequalityReport(float(lhs[t]), float(rhs[t]),
                                    {**context, "f": _fingerprint(F[:, t])}, extras=ex))
    return out


def _single(reports: list[InequalityReport]) -> InequalityReport:
    return reports[0]


# partition averages -------------------------------------------------------

def prop_2_4_sides(n: int, ell: int, F: np.ndarray, constant: float = 1.5):
    """(Var f, constant * D_hat(f, f)) columnwise."""
    space = state_space(n)
    parts = type_one_partitions(n, ell)
    N = n // ell
    dhat = 0.0
    for P in parts:
        for i in range(1, N + 1):
            for j in range(i + 1, N + 1):
                dhat = dhat + (2.0 / N) * _pair_avg_sq(space, P, i, j, F)
    dhat = dhat / len(parts)
    return _var(F), constant * dhat


def check_prop_2_4(n: int, ell: int, f, constant: float = 1.5) -> InequalityReport:
    """Var(f) <= (3/2) D_hat(f, f) for n = N ell + m with 1 <= m <= ell - 1."""
    N, m = _partition_n_m(n, ell)
    ctx = {"suite": "prop2_4", "n": n, "ell": ell, "N": N, "m": m}
    if N < 2:
        raise ValueError(f"n={n}, ell={ell}: need N >= 2")
    if m == 0:
        return _not_applicable("m = 0: covered by the block-average gap", ctx)
    F = _as_stack(f, n)[:, None]
    return _single(_reports(*prop_2_4_sides(n, ell, F, constant), ctx, F))


# exchange / average split --------------------------------------------------

def lemma_2_5_sides(n: int, ell: int, k: int, F: np.ndarray,
                    exchange_constant: float | None = None, average_constant: float = 0.5):
    """(D_k(f, f), 3N^2 sum nu[(E f)^2] + 1/2 sum nu[(A f)^2]) columnwise."""
    space = state_space(n)
    P = make_partition(n, ell, 1, k)
    N = P.N
    ce = 3.0 * N * N if exchange_constant is None else exchange_constant
    Dk = 0.0
    for i in range(1, N + 1):
        for j in range(i + 1, N + 1):
            Dk = Dk + (2.0 / N) * _pair_avg_sq(space, P, i, j, F)
    ex = sum(_exchange_sq(space, P, i, F) for i in range(1, N))
    av = sum(_pair_avg_sq(space, P, i, i + 1, F) for i in range(1, N))
    return Dk, ce * ex + average_constant * av


def check_lemma_2_5(n: int, ell: int, k: int, f, **constants) -> InequalityReport:
    N, m = _partition_n_m(n, ell)
    ctx = {"suite": "lemma2_5", "n": n, "ell": ell, "N": N, "m": m, "k": k}
    F = _as_stack(f, n)[:, None]
    return _single(_reports(*lemma_2_5_sides(n, ell, k, F, **constants), ctx, F))


# exchanges through reversals ----------------------------------------------

def lemma_2_6_sides(n: int, ell: int, k: int, i: int, F: np.ndarray):
    """(nu[(E_{i,i+1} f)^2], 3 nu[R_{z,2l-1}^2 + R_{z+l,l-1}^2 + R_{z,l-1}^2])."""
    space = state_space(n)
    P = make_partition(n, ell, 1, k)
    z = P.block(i)[0]
    lhs = _exchange_sq(space, P, i, F)
    rhs = 3.0 * (_rev_sq(space, z, 2 * ell - 1, F) + _rev_sq(space, z + ell, ell - 1, F)
                 + _rev_sq(space, z, ell - 1, F))
    return lhs, rhs


def check_lemma_2_6(n: int, ell: int, k: int, i: int, f) -> InequalityReport:
    N, m = _partition_n_m(n, ell)
    ctx = {"suite": "lemma2_6", "n": n, "ell": ell, "N": N, "m": m, "k": k, "i": i}
    F = _as_stack(f, n)[:, None]
    return _single(_reports(*lemma_2_6_sides(n, ell, k, i, F), ctx, F))


# averages through reversals -----------------------------------------------

def lemma_2_7_sides(n: int, ell: int, k: int, i: int, F: np.ndarray, inner_offset: int = 2):
    """(nu[(A_{i,i+1} f)^2], (1/2l) sum_{x in U} sum_{l' <= 2l} nu[R_{x,l'}^2 + R_{x+1,l'-off}^2]).

    ``inner_offset = 2`` is the composition-correct inner reversal; 1 gives the
    uncorrected inner index.
    """
    space = state_space(n)
    P = make_partition(n, ell, 1, k)
    U = P.block(i) + P.block(i + 1)
    lhs = _pair_avg_sq(space, P, i, i + 1, F)
    total = 0.0
    for x in U:
        for l in range(1, 2 * ell + 1):
            total = total + _rev_sq(space, x, l, F) + _rev_sq(space, x + 1, l - inner_offset, F)
    return lhs, total / (2 * ell)


def frozen_pair_sides(n: int, ell: int, k: int, i: int, F: np.ndarray):
    """(nu[Var(f | outside U)], (1/8l) sum_{x,y in U} nu[(grad_{x,y} f)^2])."""
    space = state_space(n)
    P = make_partition(n, ell, 1, k)
    U = P.block(i) + P.block(i + 1)
    lhs = _pair_avg_sq(space, P, i, i + 1, F)
    total = 0.0
    for x in U:
        for y in U:
            if x != y:
                total = total + _grad_sq(space, Transposition(x, y).source(n), F)
    return lhs, total / (8 * ell)


def check_lemma_2_7(n: int, ell: int, k: int, i: int, f) -> InequalityReport:
    N, m = _partition_n_m(n, ell)
    ctx = {"suite": "lemma2_7", "n": n, "ell": ell, "N": N, "m": m, "k": k, "i": i}
    F = _as_stack(f, n)[:, None]
    lhs, rhs = lemma_2_7_sides(n, ell, k, i, F)
    _, rhs_offset1 = lemma_2_7_sides(n, ell, k, i, F, inner_offset=1)
    lf, rf = frozen_pair_sides(n, ell, k, i, F)
    extras = {"rhs_offset1": rhs_offset1, "frozen_lhs": lf, "frozen_rhs": rf}
    return _single(_reports(lhs, rhs, ctx, F, extras))


# assembly -------------------------------------------------------------------

def assembly_window(L: int, ell: int, delta: float = 0.1) -> bool:
    return delta * L <= ell <= L / 2


def assembly_sides(n: int, ell: int, F: np.ndarray, exchange_constant: float = 4.5,
                   average_constant: float = 0.75):
    """(Var f, (9/2) N^2 Ex(f) + (3/4) Av(f)) columnwise."""
    space = state_space(n)
    parts = type_one_partitions(n, ell)
    N = n // ell
    ex = 0.0
    av = 0.0
    for P in parts:
        for i in range(1, N):
            ex = ex + _exchange_sq(space, P, i, F)
            av = av + _pair_avg_sq(space, P, i, i + 1, F)
    ex = ex / len(parts)
    av = av / len(parts)
    return _var(F), exchange_constant * N * N * ex + average_constant * av


def check_assembly(n: int, L: int, ell: int, f, delta: float = 0.1) -> InequalityReport:
    N, m = _partition_n_m(n, ell)
    ctx = {"suite": "assembly", "n": n, "L": L, "ell": ell, "N": N, "m": m}
    if not assembly_window(L, ell, delta) or N < 2:
        return _not_applicable(f"ell={ell} outside [{delta}L, L/2] or N < 2", ctx)
    F = _as_stack(f, n)[:, None]
    return _single(_reports(*assembly_sides(n, ell, F), ctx, F))


def lemma_windows(n_max: int, n_min: int = 2) -> Iterator[tuple[int, int, int]]:
    """All (n, ell, k) with N = n // ell >= 2 and k ranging over the type-1 partitions."""
    for n in range(n_min, n_max + 1):
        for ell in range(1, n // 2 + 1):
            N, m = divmod(n, ell)
            for k in (range(1, N + 2) if m else [1]):
                yield n, ell, k


# -- suites ------------------------------------------------------------------

SUITES = ("prop2_4", "lemma2_5", "lemma2_6", "lemma2_7", "assembly", "theta_l")


def suite_points(suite: str, n_max: int, n_min: int = 2) -> list[dict]:
    """Every valid parameter point of an inequality suite with n <= n_max."""
    pts: list[dict] = []
    for n in range(max(n_min, 2), n_max + 1):
        if suite == "theta_l":
            for theta in (0.25, 0.5, 0.75, 0.9):
                pts.append({"n": n, "theta": theta})
            continue
        if suite == "assembly":
            for L in range(2, n + 1):
                for ell in range(1, n // 2 + 1):
                    if assembly_window(L, ell):
                        pts.append({"n": n, "L": L, "ell": ell})
            continue
        for ell in range(1, n // 2 + 1):
            N, m = divmod(n, ell)
            if suite == "prop2_4":
                if m:
                    pts.append({"n": n, "ell": ell})
                continue
            for k in (range(1, N + 2) if m else [1]):
                if suite == "lemma2_5":
                    pts.append({"n": n, "ell": ell, "k": k})
                else:
                    pts.extend({"n": n, "ell": ell, "k": k, "i": i} for i in range(1, N))
    return pts


def theta_l_sides(n: int, theta: float, L: int, F: np.ndarray, factor: float = 1.0):
    """(factor * L (1-theta) theta^(L-1) E_L(f, f), E_theta(f, f)) columnwise."""
    from .chains import Generator

    space = state_space(n)
    e_theta = Generator(ThetaReversal(n, theta), space).dirichlet(F)
    e_l = Generator(LReversal(n, L), space).dirichlet(F)
    return factor * L * (1 - theta) * theta ** (L - 1) * e_l, e_theta


def run_point(suite: str, point: dict, trials: int = 100, seed: int = 0) -> list[InequalityReport]:
    """Check one parameter point on ``trials`` seeded random tables (plus the constant table)."""
    n = point["n"]
    F = random_tables(n, trials, seed)
    ctx = {"suite": suite, **point, "seed": seed}
    if suite == "prop2_4":
        return _reports(*prop_2_4_sides(n, point["ell"], F), ctx, F)
    if suite == "lemma2_5":
        return _reports(*lemma_2_5_sides(n, point["ell"], point["k"], F), ctx, F)
    if suite == "lemma2_6":
        return _reports(*lemma_2_6_sides(n, point["ell"], point["k"], point["i"], F), ctx, F)
    if suite == "lemma2_7":
        args = (n, point["ell"], point["k"], point["i"], F)
        lhs, rhs = lemma_2_7_sides(*args)
        _, offset1 = lemma_2_7_sides(*args, inner_offset=1)
        lf, rf = frozen_pair_sides(*args)
        reps = _reports(lhs, rhs, ctx, F, {"rhs_offset1": offset1,
                                           "frozen_lhs": lf, "frozen_rhs": rf})
        for rep in reps:
            # the intermediate conditional-variance bound must hold as well
            if rep.extras["frozen_lhs"] > rep.extras["frozen_rhs"] + REL_TOL * max(1.0, rep.extras["frozen_rhs"]):
                rep.status = "frozen-bound-failed"
                rep.rhs = min(rep.rhs, rep.extras["frozen_rhs"])
        return reps
    if suite == "assembly":
        return _reports(*assembly_sides(n, point["ell"], F), ctx, F)
    if suite == "theta_l":
        out = []
        for L in range(1, n + 1):
            lhs, rhs = theta_l_sides(n, point["theta"], L, F)
            out.extend(_reports(lhs, rhs, {**ctx, "L": L}, F))
        return out
    raise ValueError(f"unknown suite {suite!r}")


SUMMARY_COLUMNS = ("suite", "n", "ell", "L", "k", "i", "trials", "failures", "min_slack")


def summarize(suite: str, point: dict, reports: list[InequalityReport]) -> dict:
    return {"suite": suite, "n": point["n"], "ell": point.get("ell", ""),
            "L": point.get("L", ""), "k": point.get("k", ""), "i": point.get("i", ""),
            "trials": len(reports), "failures": sum(not r.passed for r in reports),
            "min_slack": min(r.slack for r in reports)}
