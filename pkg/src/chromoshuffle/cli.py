"""Command-line front end.

Exit status: 0 on success, 1 when an identity or inequality fails, 2 on
usage errors. Every record carries the resolved configuration and the tool
version; timing fields aside, identical arguments give identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable

from . import __version__
from .bounds import (SUITES, SUMMARY_COLUMNS, chi_dirichlet_exact, chi_stats_projected,
                     make_witness, psi_dirichlet_projected, psi_variance_projected,
                     run_point, suite_points, summarize, xi_witness)
from .chains import (BlockAverageChain, LocalAvgExchange, LReversal, PartitionAverage,
                     RandomTransposition, ThetaReversal, dirichlet, uniform_stats)
from .montecarlo import (CSV_COLUMNS, EstimationFailed, SimParams, estimate_gap_autocorr,
                         exact_tv_mixing, fit_slope, rows_to_csv, scaling_experiment,
                         simulate)
from .core import Configuration
from .spectral import (DimensionCapError, ReducibleChainError, block_average_gap,
                       build_k_operator, generator_gap, k_eigenvalues_formula, p_operator_gap)

VERIFY_SUITES = ("lemma2_1", "prop2_2", "prop2_3", "prop2_4", "lemma2_5", "lemma2_6",
                 "lemma2_7", "assembly", "lower-bounds", "all")
CHAINS = ("l-reversal", "theta-reversal", "random-transposition", "block-average",
          "partition-average", "local-avg-exchange")


class UsageError(ValueError):
    pass


# -- helpers -----------------------------------------------------------------

def _config(args: argparse.Namespace) -> dict:
    skip = {"func", "config"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _record(args, payload: dict) -> dict:
    return {**payload, "config": _config(args), "version": __version__}


class _Out:
    """Serialised writer to stdout or --output."""

    def __init__(self, args):
        self.path = getattr(args, "output", None)
        self.buf = io.StringIO()

    def write(self, text: str) -> None:
        self.buf.write(text if text.endswith("\n") else text + "\n")

    def close(self) -> None:
        if self.path:
            Path(self.path).write_text(self.buf.getvalue())
        else:
            sys.stdout.write(self.buf.getvalue())


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=_json_default)


def _json_default(o):
    if hasattr(o, "item"):
        return o.item()
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    raise TypeError(type(o))


def _want_json(args) -> bool:
    return getattr(args, "json", False) or getattr(args, "format", None) == "json"


def _build_spec(args):
    chain = args.chain
    if chain == "l-reversal":
        return LReversal(args.n, args.L if args.L is not None else 1)
    if chain == "theta-reversal":
        if args.theta is None:
            raise UsageError("--theta is required for theta-reversal")
        return ThetaReversal(args.n, args.theta)
    if chain == "random-transposition":
        return RandomTransposition(args.d if args.d is not None else args.n)
    if chain == "block-average":
        if args.ell is None:
            raise UsageError("--ell is required for block-average")
        N = args.N if args.N is not None else args.n // args.ell
        return BlockAverageChain(N, args.ell)
    if chain == "partition-average":
        return PartitionAverage(args.n, args.ell)
    if chain == "local-avg-exchange":
        return LocalAvgExchange(args.n, args.ell, args.k, args.speedup)
    raise UsageError(f"unknown chain {chain}")


def _pool_map(func: Callable, items: list, jobs: int) -> Iterable:
    if jobs <= 1 or len(items) <= 1:
        return map(func, items)
    ex = ProcessPoolExecutor(max_workers=jobs)
    try:
        return list(ex.map(func, items))
    finally:
        ex.shutdown()


# -- subcommands -------------------------------------------------------------

def cmd_eigs_k(args) -> int:
    values = k_eigenvalues_formula(args.n, args.m)
    payload = {"schema": "chromoshuffle.eigs-k/1", "n": args.n, "m": args.m,
               "eigenvalues": values}
    ok = True
    if args.check:
        K = build_k_operator(args.n, args.m)
        numeric = sorted(K.distinct_eigenvalues(), reverse=True)
        expected = sorted(set(values), reverse=True)
        ok = len(numeric) == len(expected) and all(
            abs(a - b) <= 1e-10 for a, b in zip(numeric, expected))
        payload.update(numeric=numeric, dimension=K.dimension, **{"pass": ok})
    out = _Out(args)
    if _want_json(args):
        out.write(_dumps(_record(args, payload)))
    else:
        out.write(" ".join(repr(v) for v in values))
    out.close()
    return 0 if ok else 1


def _write_gap(args, rec: dict) -> None:
    out = _Out(args)
    if _want_json(args):
        out.write(_dumps(_record(args, rec)))
    else:
        out.write(f"gap {rec['gap']!r}\ntau {rec['tau']!r}\nmethod {rec['method']}")
    out.close()


def cmd_gap(args) -> int:
    spec = _build_spec(args)
    if args.trace:
        params = SimParams(horizon=args.trace_horizon, replicas=2, seed=args.seed)
        with open(args.trace, "w") as fh:
            for j, ev in enumerate(simulate(spec, Configuration.identity(spec.n), params)):
                row = {"time": ev.time, "move": repr(ev.move)}
                if args.snapshot_every and j % args.snapshot_every == 0:
                    row["configuration"] = list(ev.configuration.letters)
                fh.write(_dumps(row) + "\n")
    if args.method == "mc":
        try:
            report = estimate_gap_autocorr(spec, args.observable, seed=args.seed,
                                           replicas=args.replicas)
        except EstimationFailed as exc:
            _write_gap(args, {"status": "estimation-failed", "reason": str(exc),
                              "gap": math.nan, "tau": math.nan, "method": "mc-autocorr"})
            return 1
        _write_gap(args, report.to_dict())
        return 0
    try:
        report = generator_gap(spec, args.method, args.tolerance, seed=args.seed,
                               allow_large=args.allow_large)
    except ReducibleChainError as exc:
        _write_gap(args, {"status": "reducible", "reason": str(exc), "gap": 0.0,
                          "tau": math.inf, "method": args.method})
        return 1
    _write_gap(args, report.to_dict())
    return 0


def cmd_block_gap(args) -> int:
    report = block_average_gap(args.N, args.ell, seed=args.seed)
    rec = report.to_dict()
    _write_gap(args, rec)
    return 0 if rec["gap_is_one"] else 1


def cmd_p_gap(args) -> int:
    res = p_operator_gap(args.n, args.m, N=args.N, seed=args.seed)
    out = _Out(args)
    if _want_json(args):
        out.write(_dumps(_record(args, {"schema": "chromoshuffle.p-gap/1", **res})))
    else:
        out.write(f"mu {res['mu']!r}\nbound {res['bound']!r}\npass {res['pass']}")
    out.close()
    return 0 if res["pass"] else 1


def cmd_bounds(args) -> int:
    n = args.n
    kind = args.witness
    if args.theta is not None:
        spec = ThetaReversal(n, args.theta)
    else:
        spec = LReversal(n, args.L if args.L is not None else 1)
    rec: dict = {"schema": "chromoshuffle.bounds/1", "witness": kind, "n": n}
    if kind == "psi":
        var, E = psi_variance_projected(n), psi_dirichlet_projected(n, spec)
        rec.update(variance=var, dirichlet=E, rayleigh=var / E, method="projection")
    elif kind == "chi":
        if args.theta is not None:
            if n > 8:
                raise UsageError("chi with theta-reversal needs n <= 8 (enumeration)")
            E = dirichlet(spec, make_witness("chi", n).table())
        else:
            E = chi_dirichlet_exact(n, spec.L)
        mean, var = chi_stats_projected(n)
        rec.update(mean=float(mean), variance=float(var), dirichlet=E,
                   rayleigh=float(var) / E if E > 0 else math.inf,
                   bound=16.0 / (n * (n - 1)), method="projection")
    else:
        if args.theta is not None:
            raise UsageError("xi witness is defined for the L-reversal chain")
        rec.update(xi_witness(n, spec.L))
    if args.theta is not None:
        rec["theta"] = args.theta
    else:
        rec["L"] = spec.L
    out = _Out(args)
    if _want_json(args):
        out.write(_dumps(_record(args, rec)))
    else:
        out.write("\n".join(f"{k} {v!r}" for k, v in sorted(rec.items()) if k != "schema"))
    out.close()
    return 0


def cmd_mix(args) -> int:
    spec = _build_spec(args)
    res = exact_tv_mixing(spec, args.epsilon)
    out = _Out(args)
    if _want_json(args):
        out.write(_dumps(_record(args, res.to_dict())))
    else:
        out.write(f"# epsilon = {args.epsilon!r}")
        out.write(f"T {res.time!r}\ntruncation_error {res.truncation_error!r}")
    out.close()
    return 0


def _slice_grid(args) -> list[tuple[int, float]]:
    ns = [int(v) for v in args.ns.split(",")]
    grid = []
    for n in ns:
        if args.theta is not None:
            grid.append((n, args.theta))
        elif args.slice == "L=1":
            grid.append((n, 1))
        elif args.slice == "L=n":
            grid.append((n, n))
        elif args.slice == "all":
            grid.extend((n, L) for L in range(1, n + 1))
        else:
            alpha = float(args.slice.split("=")[1]) if "=" in args.slice else args.alpha
            grid.append((n, max(1, min(n, round(n ** alpha)))))
    return grid


def cmd_scaling(args) -> int:
    grid = _slice_grid(args)
    observables = tuple(args.observables.split(","))
    chain = "theta-reversal" if args.theta is not None else "l-reversal"
    rows = scaling_experiment(grid, args.method, chain=chain, observables=observables,
                              seed=args.seed, replicas=args.replicas, budget=args.budget)
    fit = None
    if args.slice != "all":
        fit = fit_slope([r.n for r in rows], [r.tau for r in rows],
                        [r.stderr for r in rows] if args.method == "mc" else None)
    out = _Out(args)
    if _want_json(args):
        out.write(_dumps(_record(args, {
            "schema": "chromoshuffle.scaling/1",
            "rows": [dict(zip(CSV_COLUMNS, r.as_csv_row())) for r in rows],
            "fit": fit.to_dict() if fit else None})))
    else:
        out.write(rows_to_csv(rows, include_seconds=not args.no_seconds))
        if fit:
            out.write(f"# slope {fit.slope!r} ci3 [{fit.lo!r}, {fit.hi!r}] status {fit.status}")
    out.close()
    return 0


# -- verify ------------------------------------------------------------------

def _verify_lemma2_1(n_max: int) -> list[dict]:
    recs = []
    for n in range(2, n_max + 1):
        for m in range(1, n // 2 + 1):
            if math.perm(n, m) > 5040:
                continue
            K = build_k_operator(n, m)
            # at n = 2m the formula repeats +-1, so compare distinct values
            expected = sorted(set(k_eigenvalues_formula(n, m)))
            numeric = sorted(K.distinct_eigenvalues())
            # every eigenvalue is either one of the formula values or zero
            dev = max(min(abs(v - e) for e in expected + [0.0]) for v in K.eigenvalues)
            ok = (len(numeric) == len(expected)
                  and all(abs(a - b) <= 1e-10 for a, b in zip(numeric, expected))
                  and dev <= 1e-10)
            recs.append({"suite": "lemma2_1", "n": n, "m": m, "dimension": K.dimension,
                         "max_deviation": dev, "pass": ok})
    return recs


def _verify_prop2_2(n_max: int) -> list[dict]:
    recs = []
    for n in range(2, min(n_max, 7) + 1):
        for m in range(1, n // 2 + 1):
            for N in range(2, n // m + 1):
                r = p_operator_gap(n, m, N=N, tol=1e-10)
                recs.append({"suite": "prop2_2", "n": n, "m": m, "N": N, "mu": r["mu"],
                             "bound": r["bound"], "pass": r["pass"]})
    return recs


def _verify_prop2_3(n_max: int) -> list[dict]:
    recs = []
    for n in range(2, n_max + 1):
        for ell in range(1, n // 2 + 1):
            if n % ell:
                continue
            r = block_average_gap(n // ell, ell)
            rq = r.chain["witness_rayleigh"]
            recs.append({"suite": "prop2_3", "n": n, "N": n // ell, "ell": ell, "gap": r.gap,
                         "witness_rayleigh": rq,
                         "pass": r.chain["gap_is_one"] and abs(rq - 1) <= 1e-12})
    return recs


def _verify_lower_bounds(n_max: int) -> list[dict]:
    from fractions import Fraction
    recs = []
    for n in range(3, max(n_max, 30) + 1):
        mean, var = chi_stats_projected(n)
        # chi is an indicator, so Var = p (1 - p) = 2(n-3)/(n-1)^2; the alternative
        # closed form 4(n-2)/(n-1)^2 is logged alongside for comparison
        alt = Fraction(4 * (n - 2), (n - 1) ** 2)
        ok = mean == Fraction(2, n - 1) and var == Fraction(2 * (n - 3), (n - 1) ** 2)
        worst = max(chi_dirichlet_exact(n, L) for L in range(1, n + 1))
        bound = 16.0 / (n * (n - 1))
        recs.append({"suite": "lower-bounds", "check": "chi", "n": n, "mean": float(mean),
                     "variance": float(var), "alt_variance": float(alt),
                     "alt_variance_matches": var == alt,
                     "max_dirichlet": worst, "bound": bound,
                     "pass": ok and worst <= bound * (1 + 1e-12)})
    for n in range(3, min(n_max, 8) + 1):
        for kind in ("psi", "chi"):
            table = make_witness(kind, n).table()
            for L in range(1, n + 1):
                spec = LReversal(n, L)
                E = dirichlet(spec, table)
                proj = (psi_dirichlet_projected(n, spec) if kind == "psi"
                        else chi_dirichlet_exact(n, L))
                mean, var, _ = uniform_stats(table, with_entropy=False)
                if kind == "psi":
                    ok_stats = abs(var - psi_variance_projected(n)) <= 1e-12
                else:
                    ok_stats = abs(mean - 2 / (n - 1)) <= 1e-12
                recs.append({"suite": "lower-bounds", "check": f"{kind}-projection", "n": n,
                             "L": L, "enumerated": E, "projected": proj,
                             "pass": abs(E - proj) <= 1e-12 and ok_stats})
        if n % 2 == 0:
            for L in range(1, n + 1):
                a, b = xi_witness(n, L, "enumeration"), xi_witness(n, L, "projection")
                recs.append({"suite": "lower-bounds", "check": "xi-projection", "n": n,
                             "L": L, "enumerated": a["dirichlet"], "projected": b["dirichlet"],
                             "pass": abs(a["dirichlet"] - b["dirichlet"]) <= 1e-12})
    for p in suite_points("theta_l", min(n_max, 7), 3):
        reps = run_point("theta_l", p, 20, 0)
        recs.append({"suite": "lower-bounds", "check": "theta-vs-L", **p,
                     **{k: v for k, v in summarize("theta_l", p, reps).items()
                        if k in ("trials", "failures", "min_slack")},
                     "pass": all(r.passed for r in reps)})
    return recs


def _inequality_task(task):
    suite, point, trials, seed = task
    reports = run_point(suite, point, trials, seed)
    return suite, point, [r.to_dict() for r in reports], summarize(suite, point, reports)


def cmd_verify(args) -> int:
    suites = list(VERIFY_SUITES[:-1]) if args.suite == "all" else [args.suite]
    out = _Out(args)
    summaries: list[dict] = []
    failures = 0
    for suite in suites:
        if suite == "lemma2_1":
            recs = _verify_lemma2_1(args.n_max)
        elif suite == "prop2_2":
            recs = _verify_prop2_2(args.n_max)
        elif suite == "prop2_3":
            recs = _verify_prop2_3(args.n_max)
        elif suite == "lower-bounds":
            recs = _verify_lower_bounds(args.n_max)
        else:
            n_cap = min(args.n_max, 7)
            tasks = [(suite, p, args.trials, args.seed) for p in suite_points(suite, n_cap)]
            recs = []
            for _, point, reps, summary in _pool_map(_inequality_task, tasks, args.jobs):
                summaries.append(summary)
                failures += summary["failures"]
                if args.reports:
                    for rep in reps:
                        out.write(_dumps(rep))
            if args.format != "csv":
                out.write(_dumps(_record(args, {
                    "schema": "chromoshuffle.verify/1", "suite": suite,
                    "points": len(tasks), "failures": sum(
                        s["failures"] for s in summaries if s["suite"] == suite)})))
            continue
        failures += sum(not r["pass"] for r in recs)
        if args.format != "csv":
            for r in recs:
                out.write(_dumps(_record(args, {"schema": "chromoshuffle.verify/1", **r})))
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for s in summaries:
            w.writerow({**s, "min_slack": repr(s["min_slack"])})
        out.write(buf.getvalue())
    elif args.summary:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for s in summaries:
            w.writerow({**s, "min_slack": repr(s["min_slack"])})
        Path(args.summary).write_text(buf.getvalue())
    out.close()
    return 1 if failures else 0


# -- parser ------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true", help="emit a JSON record")
    p.add_argument("--format", choices=("csv", "json", "text"), default=None)
    p.add_argument("--output", help="write to this file instead of stdout")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--config", help="JSON file with default values for these flags")


def _add_chain(p: argparse.ArgumentParser) -> None:
    p.add_argument("--chain", choices=CHAINS, default="l-reversal")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--L", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--ell", type=int)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--speedup", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chromoshuffle", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"chromoshuffle {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigs-k", help="closed-form spectrum of the block-coupling operator")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--check", action="store_true", help="also diagonalise the operator")
    _add_common(p)
    p.set_defaults(func=cmd_eigs_k)

    p = sub.add_parser("gap", help="spectral gap of a chain")
    _add_chain(p)
    p.add_argument("--method", choices=("auto", "exact-dense", "lanczos", "mc"), default="auto")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--allow-large", action="store_true", help="permit n = 9, 10 (matrix-free)")
    p.add_argument("--observable", choices=("psi", "chi", "xi"), default="psi")
    p.add_argument("--replicas", type=int, default=128)
    p.add_argument("--trace", help="write a JSON-lines event trace of one trajectory")
    p.add_argument("--trace-horizon", type=float, default=10.0)
    p.add_argument("--snapshot-every", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("block-gap", help="gap of the block-average dynamics")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--ell", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_block_gap)

    p = sub.add_parser("p-gap", help="lowest nonzero eigenvalue of 1 - P")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_p_gap)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", choices=VERIFY_SUITES, required=True)
    p.add_argument("--n-max", type=int, default=7)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--reports", action="store_true", help="stream every inequality report")
    p.add_argument("--summary", help="write the per-point summary CSV here")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bounds", help="test-function lower bounds")
    p.add_argument("--witness", choices=("psi", "chi", "xi"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--L", type=int)
    p.add_argument("--theta", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("mix", help="exact total-variation mixing time")
    _add_chain(p)
    p.add_argument("--epsilon", type=float, default=math.exp(-1))
    _add_common(p)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("scaling", help="relaxation-time scaling along a slice")
    p.add_argument("--ns", required=True, help="comma-separated n values")
    p.add_argument("--slice", default="L=1", help="L=1, L=n, alpha=<a> or all")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--theta", type=float)
    p.add_argument("--method", choices=("exact", "mc"), default="exact")
    p.add_argument("--observables", default="psi")
    p.add_argument("--replicas", type=int, default=128)
    p.add_argument("--budget", type=float)
    p.add_argument("--no-seconds", action="store_true", help="drop the timing column")
    _add_common(p)
    p.set_defaults(func=cmd_scaling)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            defaults = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(defaults) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        # explicit command-line flags take precedence over the file
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (UsageError, ValueError, DimensionCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
