"""Trajectory simulation, autocorrelation gap estimates and exact TV mixing times."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.stats import poisson

from .bounds import Witness, make_witness
from .chains import (ChainSpec, Generator, LReversal, ThetaReversal, enumerate_moves,
                     spec_to_dict, state_space)
from .core import BlockAverage, Configuration
from .spectral import GapReport, generator_gap

__all__ = [
    "SimParams", "StateObservable", "Event", "simulate", "ReplicaSimulator", "EstimationFailed",
    "estimate_gap_autocorr", "MixingResult", "exact_tv_mixing", "tv_curve",
    "ScalingRow", "FitResult", "fit_slope", "scaling_experiment", "rows_to_csv",
    "MIX_CAP", "CSV_COLUMNS",
]

MIX_CAP = 7
CSV_COLUMNS = ("n", "L", "theta", "chain", "method", "tau", "stderr", "seconds", "seed")


@dataclass(frozen=True)
class StateObservable:
    """Any vectorised function of the letters with a known stationary mean."""

    kind: str
    func: Callable[[np.ndarray], np.ndarray]
    mean: float

    def evaluate_states(self, states: np.ndarray) -> np.ndarray:
        return np.asarray(self.func(states), dtype=float)

    def stationary_mean(self) -> float:
        return self.mean


class EstimationFailed(RuntimeError):
    """The autocovariance signal was too weak to fit a decay rate."""


@dataclass
class SimParams:
    horizon: float
    dt: float = 1.0
    replicas: int = 64
    seed: int = 0
    burn_in: float = 0.0

    def __post_init__(self):
        if self.replicas < 2:
            raise ValueError("need at least two replicas for a standard error")
        if self.dt <= 0 or self.horizon < self.dt:
            raise ValueError("need 0 < dt <= horizon")

    @property
    def lags(self) -> np.ndarray:
        return np.arange(int(self.horizon / self.dt) + 1) * self.dt


# -- move tables -------------------------------------------------------------

class _MoveTable:
    """Moves of a chain as arrays: source maps for jumps, vertex sets for averages."""

    def __init__(self, spec: ChainSpec):
        n = spec.n
        moves = [(m, w) for m, w in enumerate_moves(spec) if w > 0]
        if not moves:
            raise ValueError(f"{spec} has no moves")
        self.moves = [m for m, _ in moves]
        self.weights = np.array([w for _, w in moves])
        self.rate = float(self.weights.sum())
        self.cum = np.cumsum(self.weights) / self.rate
        self.cum[-1] = 1.0
        self.is_avg = np.array([isinstance(m, BlockAverage) for m in self.moves])
        self.src = np.tile(np.arange(n), (len(self.moves), 1))
        self.avg_vertices: dict[int, np.ndarray] = {}
        for i, m in enumerate(self.moves):
            if isinstance(m, BlockAverage):
                self.avg_vertices[i] = np.asarray(m.vertices()) - 1
            else:
                self.src[i] = m.source(n)

    def pick(self, u: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.cum, u, side="right").clip(max=len(self.moves) - 1)

    def apply(self, states: np.ndarray, rows: np.ndarray, picks: np.ndarray,
              rng: np.random.Generator) -> None:
        """Apply move ``picks[j]`` to replica ``rows[j]`` in place."""
        states[rows] = np.take_along_axis(states[rows], self.src[picks], axis=1)
        if self.avg_vertices:
            for i in np.unique(picks[self.is_avg[picks]]):
                sel = rows[picks == i]
                verts = self.avg_vertices[int(i)]
                order = np.argsort(rng.random((len(sel), len(verts))), axis=1)
                block = states[np.ix_(sel, verts)]
                states[np.ix_(sel, verts)] = np.take_along_axis(block, order, axis=1)


@dataclass
class Event:
    time: float
    move: object
    configuration: Configuration


def simulate(spec: ChainSpec, eta0: Configuration, params: SimParams) -> Iterator[Event]:
    """Event stream of a single trajectory on [0, horizon]; deterministic given the seed."""
    table = _MoveTable(spec)
    rng = np.random.default_rng(params.seed)
    state = np.asarray(eta0.letters, dtype=np.int16)[None, :].copy()
    t = 0.0
    while True:
        t += rng.exponential(1.0 / table.rate)
        if t > params.horizon:
            return
        i = table.pick(rng.random(1))
        table.apply(state, np.zeros(1, dtype=int), i, rng)
        yield Event(t, table.moves[int(i[0])], Configuration(tuple(state[0].tolist())))


def uniform_states(n: int, replicas: int, rng: np.random.Generator) -> np.ndarray:
    """Independent uniform permutations (unbiased shuffles), one per row."""
    return (np.argsort(rng.random((replicas, n)), axis=1) + 1).astype(np.int16)


class ReplicaSimulator:
    """Independent stationary replicas advanced together on a time grid.

    Over each grid step every replica receives a Poisson(R dt) number of
    events; all replicas with pending events jump in lock step.
    """

    def __init__(self, spec: ChainSpec, replicas: int, seed: int):
        self.spec = spec
        self.table = _MoveTable(spec)
        self.rng = np.random.default_rng(seed)
        self.states = uniform_states(spec.n, replicas, self.rng)

    def advance(self, dt: float) -> int:
        counts = self.rng.poisson(self.table.rate * dt, size=len(self.states))
        for k in range(int(counts.max(initial=0))):
            rows = np.flatnonzero(counts > k)
            picks = self.table.pick(self.rng.random(len(rows)))
            self.table.apply(self.states, rows, picks, self.rng)
        return int(counts.sum())

    def record(self, observables: Sequence[Witness], dt: float, steps: int,
               burn_in: float = 0.0) -> np.ndarray:
        """(len(observables), replicas, steps + 1) array of observable samples."""
        if burn_in > 0:
            self.advance(burn_in)
        out = np.empty((len(observables), len(self.states), steps + 1))
        for s in range(steps + 1):
            if s:
                self.advance(dt)
            for o, obs in enumerate(observables):
                out[o, :, s] = obs.evaluate_states(self.states)
        return out


# -- autocorrelation estimates -----------------------------------------------

def _autocov(x: np.ndarray, mean: float) -> np.ndarray:
    """Per-replica autocovariance (replicas, lags) by FFT, unbiased in the lag count."""
    y = x - mean
    T = y.shape[-1]
    size = 1 << (2 * T - 1).bit_length()
    F = np.fft.rfft(y, size, axis=-1)
    acf = np.fft.irfft(F * np.conj(F), size, axis=-1)[..., :T]
    return acf / (T - np.arange(T))


def _window(rho: np.ndarray, lo: float, hi: float) -> np.ndarray | None:
    """Indices of the first contiguous run with lo <= rho <= hi, after rho first drops below hi."""
    start = np.flatnonzero(rho <= hi)
    if not len(start):
        return None
    i0 = int(start[0])
    below = np.flatnonzero(rho[i0:] < lo)
    if not len(below):
        return None
    i1 = i0 + int(below[0])
    idx = np.arange(i0, i1)
    if len(idx) < 3 or np.any(rho[idx] <= 0):
        return None
    return idx


def _decay_rate(c: np.ndarray, idx: np.ndarray, dt: float) -> float:
    if np.any(c[idx] <= 0):
        raise EstimationFailed("autocovariance nonpositive in the fit window")
    slope = np.polyfit(idx * dt, np.log(c[idx]), 1)[0]
    return -float(slope)


def estimate_gap_autocorr(spec: ChainSpec, observable: Witness | StateObservable | str = "psi",
                          params: SimParams | None = None, *, window=(0.1, 0.7),
                          steps: int = 1000, batches: int = 10, max_doublings: int = 16,
                          replicas: int = 256, seed: int = 0) -> GapReport:
    """Decay rate of the stationary autocovariance of ``observable``.

    The rate of any observable is at least the spectral gap, so ``1/rate`` is
    an observable-specific lower estimate of the relaxation time. Without
    ``params`` the sampling step starts at ``0.05/R`` and doubles until the
    autocorrelation falls below the window's lower edge well inside the run.
    """
    if isinstance(observable, str):
        observable = make_witness(observable, spec.n)
    mean = observable.stationary_mean()
    lo, hi = window
    t0 = time.perf_counter()
    if params is not None:
        attempts = [params]
    else:
        rate = _MoveTable(spec).rate
        dt0 = 0.05 / rate
        attempts = [SimParams(horizon=steps * dt0 * 2 ** d, dt=dt0 * 2 ** d,
                              replicas=replicas, seed=seed) for d in range(max_doublings)]
    for p in attempts:
        sim = ReplicaSimulator(spec, p.replicas, p.seed)
        nsteps = int(round(p.horizon / p.dt))
        x = sim.record([observable], p.dt, nsteps, p.burn_in)[0]
        if np.allclose(x.std(), 0):
            raise EstimationFailed("observable is constant along the sampled trajectories")
        acov = _autocov(x, mean)
        c = acov.mean(axis=0)
        if c[0] <= 0:
            raise EstimationFailed("zero sample variance")
        rho = c / c[0]
        idx = _window(rho, lo, hi)
        # the fit window must sit in the first eighth of the run to keep lags well sampled
        if idx is None or idx[-1] > nsteps // 8:
            if p is attempts[-1]:
                raise EstimationFailed("no usable autocorrelation window")
            continue
        rate = _decay_rate(c, idx, p.dt)
        batch_rates = []
        for part in np.array_split(acov, batches, axis=0):
            cb = part.mean(axis=0)
            if np.all(cb[idx] > 0):
                batch_rates.append(_decay_rate(cb, idx, p.dt))
        if len(batch_rates) < max(2, batches // 2):
            raise EstimationFailed("too many batches with nonpositive autocovariance")
        stderr = float(np.std(batch_rates, ddof=1) / math.sqrt(len(batch_rates)))
        report = GapReport(rate, "mc-autocorr", stderr, nsteps, spec_to_dict(spec),
                           seed=p.seed, seconds=time.perf_counter() - t0,
                           observable=observable.kind)
        report.chain.update({"dt": p.dt, "horizon": p.horizon, "replicas": p.replicas,
                             "window_lags": [float(idx[0] * p.dt), float(idx[-1] * p.dt)],
                             "tau_stderr": stderr / rate ** 2})
        return report
    raise EstimationFailed("no usable autocorrelation window")


# -- exact TV mixing ---------------------------------------------------------

@dataclass
class MixingResult:
    time: float
    epsilon: float
    tv_curve: list[tuple[float, float]]
    truncation_error: float
    chain: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema": "chromoshuffle.mix/1", **self.chain, "T": self.time,
                "epsilon": self.epsilon, "truncation_error": self.truncation_error,
                "tv_curve": [list(p) for p in self.tv_curve]}


class _Uniformized:
    """p_t = sum_k Poisson(Rt; k) P^k delta, with the powers cached as needed."""

    def __init__(self, spec: ChainSpec, tail: float = 1e-12):
        if spec.n > MIX_CAP:
            raise ValueError(f"exact mixing is limited to n <= {MIX_CAP}")
        self.gen = Generator(spec, state_space(spec.n))
        self.rate = self.gen.total_rate
        self.tail = tail
        size = self.gen.space.size
        start = np.zeros(size)
        start[0] = 1.0  # identity configuration has rank 0
        self.powers = [start]

    def _terms(self, t: float) -> int:
        return int(poisson.isf(self.tail, self.rate * t)) + 2

    def distribution(self, t: float) -> tuple[np.ndarray, float]:
        K = self._terms(t)
        while len(self.powers) < K:
            v = self.powers[-1]
            # the generator is symmetric, so it also evolves distributions
            self.powers.append(v + self.gen.apply(v) / self.rate)
        w = poisson.pmf(np.arange(K), self.rate * t)
        p = np.tensordot(w, np.asarray(self.powers[:K]), axes=1)
        return p, float(max(0.0, 1.0 - w.sum()))

    def tv(self, t: float) -> tuple[float, float]:
        p, err = self.distribution(t)
        return 0.5 * float(np.abs(p - 1.0 / len(p)).sum()), err


def tv_curve(spec: ChainSpec, times: Sequence[float]) -> list[tuple[float, float]]:
    u = _Uniformized(spec)
    return [(float(t), u.tv(t)[0]) for t in times]


def exact_tv_mixing(spec: ChainSpec, epsilon: float = math.exp(-1), *,
                    resolution: float = 1e-4, curve_points: int = 25) -> MixingResult:
    """First time the TV distance to uniform drops to ``epsilon``, by bisection."""
    u = _Uniformized(spec)
    if u.tv(0.0)[0] <= epsilon:
        return MixingResult(0.0, epsilon, [(0.0, u.tv(0.0)[0])], 0.0, spec_to_dict(spec))
    hi = 1.0 / u.rate
    while u.tv(hi)[0] > epsilon:
        hi *= 2
        if hi > 1e6:
            raise RuntimeError(f"{spec} does not mix (reducible?)")
    lo = 0.0
    err = 0.0
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        d, e = u.tv(mid)
        err = max(err, e)
        if d > epsilon:
            lo = mid
        else:
            hi = mid
    times = np.linspace(0.0, 2 * hi, curve_points)
    curve = [(float(t), u.tv(t)[0]) for t in times]
    return MixingResult(hi, epsilon, curve, err, spec_to_dict(spec))


# -- scaling experiments -----------------------------------------------------

@dataclass
class ScalingRow:
    n: int
    L: int | None
    theta: float | None
    chain: str
    method: str
    tau: float
    stderr: float
    seconds: float
    seed: int | None
    observable: str | None = None

    def as_csv_row(self) -> list:
        return [self.n, "" if self.L is None else self.L,
                "" if self.theta is None else self.theta, self.chain, self.method,
                repr(self.tau), repr(self.stderr), f"{self.seconds:.3f}",
                "" if self.seed is None else self.seed]


@dataclass
class FitResult:
    slope: float
    stderr: float
    lo: float
    hi: float
    points: int
    status: str = "ok"

    def to_dict(self) -> dict:
        return {"slope": self.slope, "stderr": self.stderr, "ci3": [self.lo, self.hi],
                "points": self.points, "status": self.status}


def fit_slope(ns: Sequence[float], taus: Sequence[float],
              stderrs: Sequence[float] | None = None) -> FitResult:
    """Weighted least-squares slope of log tau against log n with a 3-sigma interval."""
    ns = np.asarray(ns, float)
    taus = np.asarray(taus, float)
    ok = np.isfinite(taus) & (taus > 0)
    if ok.sum() < 3:
        return FitResult(math.nan, math.nan, math.nan, math.nan, int(ok.sum()),
                         "fit-unavailable")
    x, y = np.log(ns[ok]), np.log(taus[ok])
    if stderrs is not None and np.all(np.asarray(stderrs, float)[ok] > 0):
        sig = np.asarray(stderrs, float)[ok] / taus[ok]
    else:
        sig = None
    A = np.vstack([x, np.ones_like(x)]).T
    W = np.ones_like(x) if sig is None else 1.0 / sig ** 2
    cov = np.linalg.inv(A.T @ (A * W[:, None]))
    coef = cov @ (A.T @ (W * y))
    resid = y - A @ coef
    dof = len(x) - 2
    if sig is None:
        s2 = float(resid @ resid) / dof if dof > 0 else 0.0
        var = cov[0, 0] * s2
    else:
        # inflate by the reduced chi-square when the scatter exceeds the error bars
        chi2 = float((resid ** 2 * W).sum()) / dof if dof > 0 else 1.0
        var = cov[0, 0] * max(1.0, chi2)
    se = math.sqrt(max(var, 0.0))
    return FitResult(float(coef[0]), se, float(coef[0] - 3 * se), float(coef[0] + 3 * se),
                     int(ok.sum()))


def _mc_tau(spec: ChainSpec, observables: Sequence[str], seed: int,
            replicas: int) -> tuple[float, float, str]:
    best = None
    for obs in observables:
        if obs == "xi" and spec.n % 2:
            continue
        try:
            r = estimate_gap_autocorr(spec, obs, seed=seed, replicas=replicas)
        except EstimationFailed:
            continue
        cand = (r.tau, r.chain["tau_stderr"], obs)
        if best is None or cand[0] > best[0]:
            best = cand
    if best is None:
        return math.nan, math.nan, ",".join(observables)
    return best


def scaling_experiment(grid: Sequence[tuple[int, float]], method: str = "exact", *,
                       chain: str = "l-reversal", observables: Sequence[str] = ("psi",),
                       seed: int = 0, replicas: int = 128,
                       budget: float | None = None) -> list[ScalingRow]:
    """tau estimates along a grid of (n, L) or (n, theta) points.

    ``exact`` uses the spectral module; ``mc`` the slowest autocorrelation
    estimate among ``observables``. Point ``i`` uses the seed ``(seed, i)``.
    Points left after ``budget`` seconds are reported with tau = nan.
    """
    rows = []
    start = time.perf_counter()
    for i, (n, par) in enumerate(grid):
        spec = LReversal(n, int(par)) if chain == "l-reversal" else ThetaReversal(n, float(par))
        L = spec.L if chain == "l-reversal" else None
        theta = spec.theta if chain != "l-reversal" else None
        t0 = time.perf_counter()
        if budget is not None and t0 - start > budget:
            rows.append(ScalingRow(n, L, theta, chain, method, math.nan, math.nan, 0.0, None))
            continue
        if method == "exact":
            r = generator_gap(spec, seed=seed)
            rows.append(ScalingRow(n, L, theta, chain, r.method, r.tau,
                                   r.residual_or_stderr / r.gap ** 2,
                                   time.perf_counter() - t0, r.seed))
        elif method == "mc":
            point_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
            tau, se, obs = _mc_tau(spec, observables, point_seed, replicas)
            rows.append(ScalingRow(n, L, theta, chain, "mc-autocorr", tau, se,
                                   time.perf_counter() - t0, point_seed, obs))
        else:
            raise ValueError(f"unknown method {method!r}")
    return rows


def rows_to_csv(rows: Sequence[ScalingRow], include_seconds: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = CSV_COLUMNS if include_seconds else tuple(c for c in CSV_COLUMNS if c != "seconds")
    w.writerow(cols)
    for r in rows:
        vals = r.as_csv_row()
        if not include_seconds:
            vals = vals[:7] + vals[8:]
        w.writerow(vals)
    return buf.getvalue()
