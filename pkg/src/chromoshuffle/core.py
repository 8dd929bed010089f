"""Configurations on the n-cycle, atomic moves, block partitions and ranking.

Vertices and letters are 1-based, matching the cycle ``V_n = {1, ..., n}``.
A configuration stores the letter sitting at each vertex. Every deterministic
move is represented internally by a *source map* ``src`` (0-based) with the
meaning ``new[v] = old[src[v]]``, which lets the same move act on a single
configuration or on a whole table of states at once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "InvalidVertexError", "InvalidExchangeError", "PartitionTooCoarseError",
    "Configuration", "Reversal", "Transposition", "BlockExchange", "BlockAverage",
    "Move", "EllPartition", "make_partition", "type_one_partitions",
    "apply_move", "apply_reversal", "apply_transposition", "apply_block_exchange",
    "decompose_exchange", "decompose_transposition",
    "rank", "unrank", "rank_states", "unrank_all", "reduce_vertex",
]


class InvalidVertexError(ValueError):
    pass


class InvalidExchangeError(ValueError):
    pass


class PartitionTooCoarseError(ValueError):
    pass


def reduce_vertex(x: int, n: int) -> int:
    """Reduce an integer vertex label cyclically into {1..n}."""
    return (x - 1) % n + 1


def _check_vertex(x: int, n: int) -> None:
    if not (1 <= x <= n):
        raise InvalidVertexError(f"vertex {x} outside 1..{n}")


@dataclass(frozen=True)
class Configuration:
    """A permutation of the letters 1..n over the vertices 1..n."""

    letters: tuple[int, ...]

    def __post_init__(self):
        letters = tuple(int(a) for a in self.letters)
        object.__setattr__(self, "letters", letters)
        if sorted(letters) != list(range(1, len(letters) + 1)) or not letters:
            raise ValueError(f"not a permutation of 1..n: {letters}")

    @property
    def n(self) -> int:
        return len(self.letters)

    @classmethod
    def identity(cls, n: int) -> "Configuration":
        return cls(tuple(range(1, n + 1)))

    def __getitem__(self, x: int) -> int:
        """Letter at vertex ``x`` (1-based, cyclic)."""
        return self.letters[(x - 1) % self.n]

    def position(self, letter: int) -> int:
        return self.letters.index(letter) + 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.letters, dtype=np.int8)

    def to_json(self) -> str:
        return json.dumps(list(self.letters))

    @classmethod
    def from_json(cls, text: str) -> "Configuration":
        return cls(tuple(json.loads(text)))


# -- moves -------------------------------------------------------------------

def _segment(x: int, ell: int, n: int) -> np.ndarray:
    # first min(ell + 1, n) vertices starting at x, 0-based
    size = min(ell + 1, n)
    return (x - 1 + np.arange(size)) % n


@dataclass(frozen=True)
class Reversal:
    """Reverse the letters on the cyclic segment {x, ..., x + ell}."""

    x: int
    ell: int

    def source(self, n: int) -> np.ndarray:
        _check_vertex(self.x, n)
        if self.ell < 0:
            raise ValueError(f"negative reversal length {self.ell}")
        src = np.arange(n)
        seg = _segment(self.x, self.ell, n)
        src[seg] = seg[::-1]
        return src


@dataclass(frozen=True)
class Transposition:
    x: int
    y: int

    def source(self, n: int) -> np.ndarray:
        _check_vertex(self.x, n)
        _check_vertex(self.y, n)
        src = np.arange(n)
        src[[self.x - 1, self.y - 1]] = src[[self.y - 1, self.x - 1]]
        return src


@dataclass(frozen=True)
class EllPartition:
    """An ell-partition of the n-cycle anchored at vertex ``y``.

    ``blocks`` lists the arcs in positional order starting from ``y``; the
    m-block (if any) sits at position ``k``. ``ell_blocks`` relabels the
    ell-blocks so that block 1 is the one following the m-block, block 2
    the next one and so on; with ``m == 0`` labels follow positional order.
    """

    n: int
    ell: int
    y: int
    k: int
    blocks: tuple[tuple[int, ...], ...]

    @property
    def N(self) -> int:
        return self.n // self.ell

    @property
    def m(self) -> int:
        return self.n - self.N * self.ell

    @property
    def m_block(self) -> tuple[int, ...] | None:
        return self.blocks[self.k - 1] if self.m else None

    @property
    def ell_blocks(self) -> tuple[tuple[int, ...], ...]:
        if not self.m:
            return self.blocks
        after = self.blocks[self.k:] + self.blocks[: self.k - 1]
        return after

    def block(self, i: int) -> tuple[int, ...]:
        """The ell-block labelled ``i`` (1-based)."""
        if not (1 <= i <= self.N):
            raise InvalidExchangeError(f"ell-block index {i} outside 1..{self.N}")
        return self.ell_blocks[i - 1]


def make_partition(n: int, ell: int, y: int = 1, k: int = 1) -> EllPartition:
    """Type-``y`` ell-partition whose m-block is the ``k``-th block from ``y``."""
    if not (1 <= ell <= n):
        raise ValueError(f"block length {ell} outside 1..{n}")
    _check_vertex(y, n)
    N = n // ell
    m = n - N * ell
    if N < 2:
        raise PartitionTooCoarseError(f"n={n}, ell={ell} gives only N={N} blocks")
    if m == 0:
        k = 1
        sizes = [ell] * N
    else:
        if not (1 <= k <= N + 1):
            raise ValueError(f"m-block position {k} outside 1..{N + 1}")
        sizes = [m if pos == k else ell for pos in range(1, N + 2)]
    blocks = []
    start = y
    for size in sizes:
        blocks.append(tuple(reduce_vertex(start + j, n) for j in range(size)))
        start += size
    return EllPartition(n=n, ell=ell, y=y, k=k, blocks=tuple(blocks))


def type_one_partitions(n: int, ell: int) -> list[EllPartition]:
    """All type-1 ell-partitions D_1..D_{N+1} (a single one when m = 0)."""
    N, m = n // ell, n % ell
    ks = range(1, N + 2) if m else [1]
    return [make_partition(n, ell, 1, k) for k in ks]


@dataclass(frozen=True)
class BlockExchange:
    """Interchange the contents of ell-blocks ``i`` and ``i + 1``."""

    partition: EllPartition
    i: int

    def source(self, n: int) -> np.ndarray:
        P = self.partition
        if n != P.n:
            raise ValueError("partition size mismatch")
        if not (1 <= self.i < P.N):
            raise InvalidExchangeError(
                f"exchange ({self.i}, {self.i + 1}) needs two ell-blocks among 1..{P.N}")
        a = np.asarray(P.block(self.i)) - 1
        b = np.asarray(P.block(self.i + 1)) - 1
        src = np.arange(n)
        src[a], src[b] = b, a
        return src


@dataclass(frozen=True)
class BlockAverage:
    """Uniform reshuffle of the letters over ell-blocks ``i`` and ``j``."""

    partition: EllPartition
    i: int
    j: int

    def vertices(self) -> tuple[int, ...]:
        if self.i == self.j:
            raise ValueError("averaging a block with itself")
        return tuple(sorted(self.partition.block(self.i) + self.partition.block(self.j)))


Move = Union[Reversal, Transposition, BlockExchange, BlockAverage]


def apply_move(eta: Configuration, move: Move) -> Configuration:
    """Apply a deterministic move."""
    if isinstance(move, BlockAverage):
        raise TypeError("BlockAverage is stochastic; sample it through montecarlo")
    src = move.source(eta.n)
    return Configuration(tuple(eta.as_array()[src]))


def apply_reversal(eta: Configuration, x: int, ell: int) -> Configuration:
    return apply_move(eta, Reversal(x, ell))


def apply_transposition(eta: Configuration, x: int, y: int) -> Configuration:
    return apply_move(eta, Transposition(x, y))


def apply_block_exchange(eta: Configuration, P: EllPartition, i: int) -> Configuration:
    return apply_move(eta, BlockExchange(P, i))


def decompose_exchange(P: EllPartition, i: int) -> list[Reversal]:
    """Three reversals, applied first to last, that exchange blocks i and i+1."""
    if not (1 <= i < P.N):
        raise InvalidExchangeError(f"exchange ({i}, {i + 1}) outside 1..{P.N}")
    ell = P.ell
    z = P.block(i)[0]
    return [Reversal(z, ell - 1), Reversal(reduce_vertex(z + ell, P.n), ell - 1),
            Reversal(z, 2 * ell - 1)]


def decompose_transposition(x: int, h: int, n: int) -> list[Reversal]:
    """Reversals, applied first to last, composing to the swap of x and x+h.

    The inner reversal covers {x+1, ..., x+h-1}, i.e. length parameter h-2;
    it is dropped when that segment has fewer than two vertices.
    """
    _check_vertex(x, n)
    if h < 1:
        raise ValueError(f"transposition offset must be positive, got {h}")
    outer = Reversal(x, h)
    if h <= 2:
        return [outer]
    return [Reversal(reduce_vertex(x + 1, n), h - 2), outer]


# -- ranking -----------------------------------------------------------------

def rank(eta: Configuration | Sequence[int]) -> int:
    """Lehmer-code rank; the identity has rank 0 (lexicographic order)."""
    letters = eta.letters if isinstance(eta, Configuration) else tuple(eta)
    n = len(letters)
    r = 0
    for i, a in enumerate(letters):
        smaller = sum(1 for b in letters[i + 1:] if b < a)
        r += smaller * math.factorial(n - 1 - i)
    return r


def unrank(r: int, n: int) -> Configuration:
    if not (0 <= r < math.factorial(n)):
        raise ValueError(f"rank {r} outside 0..{n}!-1")
    pool = list(range(1, n + 1))
    out = []
    for i in range(n - 1, -1, -1):
        d, r = divmod(r, math.factorial(i))
        out.append(pool.pop(d))
    return Configuration(tuple(out))


def rank_states(states: np.ndarray) -> np.ndarray:
    """Vectorised Lehmer rank of an (S, n) array of letter rows."""
    states = np.asarray(states)
    n = states.shape[1]
    out = np.zeros(states.shape[0], dtype=np.int64)
    for i in range(n - 1):
        smaller = (states[:, i + 1:] < states[:, i, None]).sum(axis=1)
        out += smaller * math.factorial(n - 1 - i)
    return out


def unrank_all(n: int) -> np.ndarray:
    """All n! configurations as an (n!, n) int8 array, row r = unrank(r)."""
    total = math.factorial(n)
    r = np.arange(total, dtype=np.int64)
    available = np.ones((total, n), dtype=bool)
    out = np.empty((total, n), dtype=np.int8)
    for i in range(n):
        f = math.factorial(n - 1 - i)
        d = (r // f) % (n - i)
        # index of the (d+1)-th still-available letter
        pick = np.argmax(np.cumsum(available, axis=1) == (d + 1)[:, None], axis=1)
        out[:, i] = pick + 1
        available[np.arange(total), pick] = False
    return out
