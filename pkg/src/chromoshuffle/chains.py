"""Chain specifications and exact quantities over the full permutation space.

A chain is a weighted family of moves. Deterministic moves ``m`` contribute
``w * (f(m eta) - f(eta))`` to the generator, block averages contribute
``w * (E[f | outside the two blocks] - f)``. All moves are involutions or
symmetric kernels, so every chain is reversible w.r.t. the uniform measure.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .core import (BlockAverage, BlockExchange, Move, Reversal, Transposition,
                   make_partition, rank_states, type_one_partitions, unrank_all)

__all__ = [
    "ENUMERATION_CAP", "MATRIX_FREE_CAP", "EnumerationCapError", "DegenerateFunctionError",
    "LReversal", "ThetaReversal", "RandomTransposition", "BlockAverageChain",
    "PartitionAverage", "LocalAvgExchange", "ChainSpec", "enumerate_moves",
    "StateSpace", "state_space", "Averager", "Generator", "ObservableTable",
    "dirichlet", "uniform_stats", "rayleigh_lower_bound", "spec_to_dict",
]

ENUMERATION_CAP = 8
MATRIX_FREE_CAP = 10


class EnumerationCapError(ValueError):
    pass


class DegenerateFunctionError(ValueError):
    pass


# -- chain specifications ----------------------------------------------------

@dataclass(frozen=True)
class LReversal:
    n: int
    L: int

    def __post_init__(self):
        if not (1 <= self.L <= self.n):
            raise ValueError(f"need 1 <= L <= n, got L={self.L}, n={self.n}")

    def moves(self) -> list[tuple[Move, float]]:
        w = 1.0 / (self.n * self.L)
        return [(Reversal(x, ell), w) for x in range(1, self.n + 1)
                for ell in range(1, self.L + 1)]


@dataclass(frozen=True)
class ThetaReversal:
    n: int
    theta: float

    def __post_init__(self):
        if not (0.0 < self.theta < 1.0):
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")

    def length_weight(self, ell: int) -> float:
        return (1.0 - self.theta) * self.theta ** (ell - 1) / self.n

    def moves(self) -> list[tuple[Move, float]]:
        return [(Reversal(x, ell), self.length_weight(ell))
                for x in range(1, self.n + 1) for ell in range(1, self.n + 1)]


@dataclass(frozen=True)
class RandomTransposition:
    """Random transpositions on the complete graph, normalised so Var <= E."""

    d: int

    @property
    def n(self) -> int:
        return self.d

    def moves(self) -> list[tuple[Move, float]]:
        # weight 1/(2d) per ordered pair: E(f,f) = (1/4d) sum_{x,y} nu[(grad f)^2]
        w = 1.0 / (2 * self.d)
        return [(Transposition(x, y), w) for x in range(1, self.d + 1)
                for y in range(1, self.d + 1) if x != y]


@dataclass(frozen=True)
class BlockAverageChain:
    """Block-average dynamics on n = N * ell vertices."""

    N: int
    ell: int

    @property
    def n(self) -> int:
        return self.N * self.ell

    def moves(self) -> list[tuple[Move, float]]:
        P = make_partition(self.n, self.ell, 1, 1)
        # each ordered pair of clocks: pair {i, j} fires at rate 2/N
        w = 2.0 / self.N
        return [(BlockAverage(P, i, j), w)
                for i, j in combinations(range(1, self.N + 1), 2)]


@dataclass(frozen=True)
class PartitionAverage:
    """Average over the type-1 partitions D_k of their block-average forms."""

    n: int
    ell: int

    def moves(self) -> list[tuple[Move, float]]:
        parts = type_one_partitions(self.n, self.ell)
        N = self.n // self.ell
        w = 2.0 / (N * len(parts))
        return [(BlockAverage(P, i, j), w) for P in parts
                for i, j in combinations(range(1, N + 1), 2)]


@dataclass(frozen=True)
class LocalAvgExchange:
    """Adjacent block averages (weight 1) and exchanges (weight ``speedup``) on D_k."""

    n: int
    ell: int
    k: int = 1
    speedup: float = 1.0

    def moves(self) -> list[tuple[Move, float]]:
        P = make_partition(self.n, self.ell, 1, self.k)
        out: list[tuple[Move, float]] = []
        for i in range(1, P.N):
            out.append((BlockAverage(P, i, i + 1), 1.0))
            if self.speedup > 0:
                out.append((BlockExchange(P, i), float(self.speedup)))
        return out


ChainSpec = Union[LReversal, ThetaReversal, RandomTransposition, BlockAverageChain,
                  PartitionAverage, LocalAvgExchange]

_CHAIN_NAMES = {
    LReversal: "l-reversal", ThetaReversal: "theta-reversal",
    RandomTransposition: "random-transposition", BlockAverageChain: "block-average",
    PartitionAverage: "partition-average", LocalAvgExchange: "local-avg-exchange",
}


def spec_to_dict(spec: ChainSpec) -> dict:
    out = {"chain": _CHAIN_NAMES[type(spec)], "n": spec.n}
    for key, attr in (("L", "L"), ("theta", "theta"), ("N", "N"), ("ell", "ell"),
                      ("k", "k"), ("speedup", "speedup")):
        if hasattr(spec, attr) and attr in spec.__dataclass_fields__:
            out[key] = getattr(spec, attr)
    return out


def enumerate_moves(spec: ChainSpec) -> list[tuple[Move, float]]:
    return spec.moves()


# -- the enumerated state space ----------------------------------------------

@dataclass
class Averager:
    """Conditional expectation given the letters on a fixed vertex set.

    States sharing the fixed letters form equal-size groups; ``order`` sorts
    states group by group so a reshape exposes each group as a row.
    """

    order: np.ndarray
    inverse: np.ndarray
    group_size: int

    def mean(self, f: np.ndarray) -> np.ndarray:
        g = f[self.order]
        shape = (-1, self.group_size) + f.shape[1:]
        means = g.reshape(shape).mean(axis=1)
        return np.repeat(means, self.group_size, axis=0)[self.inverse]

    def group_of(self) -> np.ndarray:
        return self.inverse // self.group_size


class StateSpace:
    """All n! configurations in rank order with cached move index maps.

    Index maps are cached while ``n <= ENUMERATION_CAP``; above that (up to
    ``MATRIX_FREE_CAP``, opt-in) they are recomputed on every request.
    """

    def __init__(self, n: int, allow_large: bool = False):
        cap = MATRIX_FREE_CAP if allow_large else ENUMERATION_CAP
        if not (1 <= n <= cap):
            raise EnumerationCapError(f"n={n} exceeds the enumeration cap {cap}")
        self.n = n
        self.size = math.factorial(n)
        self.states = unrank_all(n)
        self._cache_maps = n <= ENUMERATION_CAP
        self._maps: dict[bytes, np.ndarray] = {}
        self._averagers: dict[tuple[int, ...], Averager] = {}

    def index_map(self, src: np.ndarray) -> np.ndarray:
        """idx[s] = rank of the state obtained by moving state s with ``src``."""
        key = np.asarray(src, dtype=np.int8).tobytes()
        idx = self._maps.get(key)
        if idx is None:
            idx = rank_states(self.states[:, src])
            if self._cache_maps:
                self._maps[key] = idx
        return idx

    def move_map(self, move: Move) -> np.ndarray:
        return self.index_map(move.source(self.n))

    def averager(self, fixed_vertices) -> Averager:
        """Averager for E[f | letters on ``fixed_vertices``] (1-based)."""
        fixed = tuple(sorted(int(v) for v in fixed_vertices))
        av = self._averagers.get(fixed)
        if av is None:
            key = np.zeros(self.size, dtype=np.int64)
            for v in fixed:
                key = key * self.n + (self.states[:, v - 1].astype(np.int64) - 1)
            order = np.argsort(key, kind="stable")
            inverse = np.empty_like(order)
            inverse[order] = np.arange(self.size)
            free = self.n - len(fixed)
            av = Averager(order=order, inverse=inverse, group_size=math.factorial(free))
            if self._cache_maps:
                self._averagers[fixed] = av
        return av

    def resample_averager(self, vertices) -> Averager:
        """Averager that resamples ``vertices`` keeping everything else frozen."""
        vs = set(int(v) for v in vertices)
        return self.averager([v for v in range(1, self.n + 1) if v not in vs])

    def table(self, func: Callable[[np.ndarray], np.ndarray], name: str = "") -> "ObservableTable":
        """Evaluate a vectorised observable (rows of letters -> values) on all states."""
        values = np.asarray(func(self.states), dtype=float)
        return ObservableTable(self.n, values, name)


@lru_cache(maxsize=4)
def state_space(n: int, allow_large: bool = False) -> StateSpace:
    return StateSpace(n, allow_large)


class Generator:
    """Matrix-free generator of a chain on its enumerated state space."""

    def __init__(self, spec: ChainSpec, space: StateSpace | None = None):
        self.spec = spec
        self.space = space if space is not None else state_space(spec.n)
        if self.space.n != spec.n:
            raise ValueError("state space size mismatch")
        self.jumps: list[tuple[Move, float]] = []
        self.averages: list[tuple[BlockAverage, float]] = []
        for move, w in enumerate_moves(spec):
            if w == 0:
                continue
            if isinstance(move, BlockAverage):
                self.averages.append((move, w))
            else:
                self.jumps.append((move, w))

    @property
    def total_rate(self) -> float:
        return sum(w for _, w in self.jumps) + sum(w for _, w in self.averages)

    def _jump_maps(self):
        for move, w in self.jumps:
            yield self.space.move_map(move), w

    def _avg_ops(self):
        for move, w in self.averages:
            yield self.space.resample_averager(move.vertices()), w

    def apply(self, f: np.ndarray) -> np.ndarray:
        """(G f)(eta) for a vector or an (n!, k) stack of vectors."""
        out = np.zeros_like(f, dtype=float)
        for idx, w in self._jump_maps():
            out += w * (f[idx] - f)
        for av, w in self._avg_ops():
            out += w * (av.mean(f) - f)
        return out

    def dirichlet(self, f: np.ndarray) -> np.ndarray | float:
        """Move-by-move Dirichlet form; vectorised over trailing columns."""
        total = 0.0
        for idx, w in self._jump_maps():
            total = total + 0.5 * w * np.mean((f[idx] - f) ** 2, axis=0)
        for av, w in self._avg_ops():
            total = total + w * np.mean((f - av.mean(f)) ** 2, axis=0)
        return total

    def dense(self) -> np.ndarray:
        S = self.space.size
        G = np.zeros((S, S))
        rows = np.arange(S)
        for idx, w in self._jump_maps():
            np.add.at(G, (rows, idx), w)
            G[rows, rows] -= w
        for av, w in self._avg_ops():
            s = av.group_size
            for g in av.order.reshape(-1, s):
                G[np.ix_(g, g)] += w / s
            G[rows, rows] -= w
        return G

    def components(self) -> int:
        """Number of communicating classes of the chain."""
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import connected_components

        S = self.space.size
        rows, cols = [], []
        for idx, _ in self._jump_maps():
            rows.append(np.arange(S))
            cols.append(idx)
        for av, _ in self._avg_ops():
            members = av.order.reshape(-1, av.group_size)
            rows.append(members.ravel())
            cols.append(np.repeat(members[:, 0], av.group_size))
        if not rows:
            return S
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        graph = coo_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(S, S))
        count, _ = connected_components(graph, directed=False)
        return count


# -- observables -------------------------------------------------------------

@dataclass
class ObservableTable:
    """A real function on configurations, stored densely in rank order."""

    n: int
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[0] != math.factorial(self.n):
            raise ValueError(f"table has {self.values.shape[0]} entries, expected {self.n}!")

    def sha256(self) -> str:
        return hashlib.sha256(self.values.astype("<f8").tobytes()).hexdigest()

    def save(self, path: str | Path) -> None:
        """Write raw little-endian float64 data plus a JSON sidecar."""
        path = Path(path)
        path.write_bytes(self.values.astype("<f8").tobytes())
        sidecar = {"n": self.n, "name": self.name, "sha256": self.sha256()}
        path.with_name(path.name + ".json").write_text(json.dumps(sidecar, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "ObservableTable":
        path = Path(path)
        meta = json.loads(path.with_name(path.name + ".json").read_text())
        values = np.frombuffer(path.read_bytes(), dtype="<f8").astype(float)
        table = cls(meta["n"], values, meta.get("name", ""))
        if table.sha256() != meta["sha256"]:
            raise ValueError(f"checksum mismatch for {path}")
        return table


def _values(f, n: int) -> np.ndarray:
    if isinstance(f, ObservableTable):
        if f.n != n:
            raise ValueError(f"table for n={f.n} used with a chain on n={n}")
        return f.values
    values = np.asarray(f, dtype=float)
    if values.shape[0] != math.factorial(n):
        raise ValueError(f"table has {values.shape[0]} entries, expected {n}!")
    return values


def dirichlet(spec: ChainSpec, f) -> float:
    gen = Generator(spec)
    return float(gen.dirichlet(_values(f, spec.n)))


def uniform_stats(f, with_entropy: bool = True) -> tuple[float, float, float | None]:
    """Exact (mean, variance, entropy) under the uniform measure."""
    values = f.values if isinstance(f, ObservableTable) else np.asarray(f, dtype=float)
    mean = float(values.mean())
    var = float(np.mean((values - mean) ** 2))
    if not with_entropy:
        return mean, var, None
    if np.any(values < 0):
        raise ValueError("entropy is defined for nonnegative functions only")
    pos = values[values > 0]
    flogf = float(np.sum(pos * np.log(pos))) / values.size
    ent = flogf - (mean * math.log(mean) if mean > 0 else 0.0)
    return mean, var, ent


def rayleigh_lower_bound(spec: ChainSpec, f) -> float:
    """Var(f) / E(f, f): a certified lower bound on the relaxation time."""
    values = _values(f, spec.n)
    _, var, _ = uniform_stats(values, with_entropy=False)
    if var <= 1e-14 * max(1.0, float(np.mean(values ** 2))):
        raise DegenerateFunctionError("constant function has no Rayleigh quotient")
    return var / dirichlet(spec, values)
