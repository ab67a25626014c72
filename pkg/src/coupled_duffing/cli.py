"""Command-line entry point.

Every subcommand prints one JSON document (``scan`` also writes a CSV).  The
document has a deterministic ``result`` part and a separate ``timings`` part
with wall-clock seconds.  Exit codes: 0 success, 1 solve or certificate
failure, 2 usage or input error.

The solvers are vectorised within one process.  ``--threads`` is accepted and
recorded, but it does not change any output.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import chamberscan, polytope, toricomb
from .errors import InvalidInputError
from .polysys import load_system, random_system
from .solver import (
    SolverConfig,
    contains_all,
    solve_algorithm1_many,
    solve_algorithm2_many,
    solve_single_many,
    total_degree_oracle,
)
from .tracker import TrackerConfig

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad input detected after argument parsing."""


# --- config ------------------------------------------------------------------------

def _tracker_from(base: TrackerConfig, overrides: dict) -> TrackerConfig:
    names = {f.name for f in dataclasses.fields(TrackerConfig)}
    unknown = set(overrides) - names
    if unknown:
        raise UsageError(f"unknown tracker options: {sorted(unknown)}")
    return base.replace(**overrides)


def solver_config(path) -> SolverConfig:
    """``SolverConfig`` from an optional JSON file.

    Recognised keys: ``tracker`` and ``retry_collided`` (dicts of
    :class:`TrackerConfig` fields) and the scalar fields of
    :class:`SolverConfig`.
    """
    cfg = SolverConfig()
    if path is None:
        return cfg
    data = _read_json(path)
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    changes = {}
    for key, value in data.items():
        if key in ("tracker", "retry_collided"):
            if not isinstance(value, dict):
                raise UsageError(f"{path}: '{key}' must be an object")
            changes[key] = _tracker_from(getattr(cfg, key), value)
        elif key in {f.name for f in dataclasses.fields(SolverConfig)}:
            changes[key] = value
        else:
            raise UsageError(f"{path}: unknown config key '{key}'")
    return dataclasses.replace(cfg, **changes)


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON: {exc}") from None
    except OSError as exc:
        raise UsageError(f"{path}: {exc}") from None


# --- subcommands -------------------------------------------------------------------

def cmd_solve(args, cfg):
    try:
        target = load_system(args.params)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"{args.params}: {exc}") from None
    n = target.n_oscillators
    run = solve_algorithm1_many if args.algorithm == 1 else solve_algorithm2_many
    timings: dict = {}
    sol = run([target], cfg, [args.seed], timings)[0]
    ok = sol.n_solutions == 5 ** n
    result = {"N": n, "algorithm": args.algorithm, "seed": args.seed, "expected": 5 ** n,
              "solver_ok": ok, **sol.to_dict()}
    return result, timings, ok


def _bench_seeds(seed: int, n: int, trials: int):
    ss = np.random.SeedSequence([seed, n])
    return ss.spawn(2 * trials)


def cmd_bench(args, cfg):
    rows, timings = [], {}
    ok = True
    for n in args.N:
        if n < 1:
            raise UsageError(f"N must be >= 1, got {n}")
        seq = _bench_seeds(args.seed, n, args.trials)
        targets = [random_system(n, np.random.default_rng(s), real=True)
                   for s in seq[:args.trials]]
        solve_seeds = [np.random.default_rng(s) for s in seq[args.trials:]]
        t1, t2 = {}, {}
        s1 = solve_algorithm1_many(targets, cfg, solve_seeds, t1)
        solve_seeds = [np.random.default_rng(s) for s in seq[args.trials:]]
        s2 = solve_algorithm2_many(targets, cfg, solve_seeds, t2)
        r1 = [s.n_solutions / 5 ** n for s in s1]
        r2 = [s.n_solutions / 5 ** n for s in s2]
        subset = all(contains_all(a, b, 1e-8) for a, b in zip(s1, s2))
        ok &= subset and min(r1) == 1.0
        rows.append({
            "N": n, "5^N": 5 ** n, "trials": args.trials,
            "alg1_success_rate": float(np.mean(r1)), "alg1_min_rate": float(min(r1)),
            "alg2_success_rate": float(np.mean(r2)), "alg2_min_rate": float(min(r2)),
            "alg2_subset_of_alg1": subset,
        })
        timings[str(n)] = {
            "alg1_setup": t1.get("setup", 0.0) / args.trials,
            "alg1_solve": t1.get("solve", 0.0) / args.trials,
            "alg2_setup": t2.get("setup", 0.0) / args.trials,
            "alg2_solve": t2.get("solve", 0.0) / args.trials,
        }
    return {"seed": args.seed, "rows": rows}, timings, ok


def cmd_scan(args, cfg):
    base = chamberscan.WIDE_PRESET if args.preset == "wide" else chamberscan.SliceConfig()
    changes = {"solver_cfg": cfg, "seed": args.seed}
    if args.box:
        changes["omega_range"] = (args.box[0], args.box[1])
        changes["lambda_range"] = (args.box[2], args.box[3])
    if args.res:
        try:
            r, c = (int(x) for x in args.res.lower().split("x"))
        except ValueError:
            raise UsageError(f"--res must look like 60x40, got {args.res!r}") from None
        changes["resolution"] = (r, c)
    for name, attr in (("eta", "eta"), ("gamma", "gamma_damp"), ("F", "F_drive"),
                       ("theta", "Theta")):
        if getattr(args, name) is not None:
            changes[attr] = getattr(args, name)
    scfg = base.replace(**changes)
    t0 = time.perf_counter()
    grid = chamberscan.scan(scfg)
    elapsed = time.perf_counter() - t0
    if args.csv:
        chamberscan.export_csv(grid, args.csv)
    bad = chamberscan.chamber_violations(grid)
    result = {
        "omega_range": list(scfg.omega_range), "lambda_range": list(scfg.lambda_range),
        "resolution": list(scfg.resolution), "seed": scfg.seed,
        "real_counts": sorted(grid.real_counts()),
        "nodes": int(grid.n_real.size), "solver_ok_nodes": int(grid.solver_ok.sum()),
        "unpaired_conjugates": int(grid.n_unpaired.sum()),
        "chamber_violations": len(bad),
        "sign_pattern_counts": {str(k): v for k, v in chamberscan.chamber_counts(grid).items()},
    }
    ok = not bad and result["unpaired_conjugates"] == 0
    return result, {"scan": elapsed}, ok


def certificate_volumes(n_max: int = 6) -> dict:
    vols = [int(polytope.normalized_volume(polytope.oscillator_polytope(n)))
            for n in range(1, n_max + 1)]
    return {"volumes": vols, "pass": vols == [5 ** n for n in range(1, n_max + 1)]}


def cmd_polytope(args, cfg):
    if args.n_max < 1:
        raise UsageError("--n-max must be >= 1")
    out = certificate_volumes(args.n_max)
    ok = out["pass"]
    if args.n is not None:
        if args.n < 1:
            raise UsageError("--n must be >= 1")
        Q = polytope.oscillator_polytope(args.n)
        out["polytope"] = {"N": args.n, "vertices": [list(v) for v in Q.vertices],
                           "normalized_volume": int(polytope.normalized_volume(Q))}
    if args.samples:
        mc = polytope.monte_carlo_volume(2, args.samples, args.seed)
        z = abs(mc.estimate - 25 / 24) / mc.stderr
        out["monte_carlo_N2"] = {**dataclasses.asdict(mc), "exact": 25 / 24, "z": z}
        ok &= z <= 3
    return out, {}, ok


def certificate_hilbert(ell_max: int = 20) -> dict:
    if ell_max < 0:
        raise UsageError("--ell-max must be >= 0")
    table = toricomb.hilbert_table(toricomb.initial_generators(1), ell_max)
    poly = [toricomb.hilbert_polynomial(ell) for ell in range(ell_max + 1)]
    head = [1, 5, 14, 28, 47, 71, 100, 134, 173]
    ok = table == poly and table[:len(head)] == head[:ell_max + 1]
    return {"table": table, "pass": ok}


def cmd_hilbert(args, cfg):
    out = certificate_hilbert(args.ell_max)
    return out, {}, out["pass"]


def _graver_expected(path):
    if path is None:
        return set(toricomb.EXPECTED_GRAVER)
    data = _read_json(path)
    try:
        return {tuple(int(c) for c in v) for v in data}
    except (TypeError, ValueError):
        raise UsageError(f"{path}: expected a list of integer vectors") from None


def _canon(v):
    v = tuple(v)
    first = next(c for c in v if c)
    return v if first > 0 else tuple(-c for c in v)


def certificate_graver(boxes=(4, 6), expected_path=None) -> dict:
    expected = {_canon(v) for v in _graver_expected(expected_path)}
    found = {}
    for box in boxes:
        found[box] = sorted(_canon(b.vector) for b in
                            toricomb.graver_bruteforce(toricomb.GRAVER_MATRIX, box))
    ok = all(set(v) == expected for v in found.values())
    return {"found": {str(k): [list(v) for v in vs] for k, vs in found.items()}, "pass": ok}


def cmd_graver(args, cfg):
    out = certificate_graver(tuple(args.box), args.expected)
    return out, {}, out["pass"]


def certificate_toric(trials: int = 20, seed: int = 0, n: int = 3) -> dict:
    vanish = all(toricomb.verify_vanishing(b, n, trials, 1e-10, seed)
                 for b in toricomb.all_toric_generators(n))
    worst = max(float(toricomb.khovanskii_residuals(i, j, trials, seed).max())
                for i in range(1, n + 1) for j in range(1, n + 1) if i != j)
    return {"binomials_vanish": vanish, "khovanskii_max_residual": worst,
            "pass": vanish and worst <= 1e-10}


def cmd_verify_toric(args, cfg):
    if args.n < 2:
        raise UsageError("verify-toric needs --n >= 2")
    out = certificate_toric(args.trials, args.seed, args.n)
    return out, {}, out["pass"]


def cmd_oracle(args, cfg):
    seq = np.random.SeedSequence([args.seed, 9]).spawn(2 * args.targets)
    targets = [random_system(1, np.random.default_rng(s)).oscillators[0]
               for s in seq[:args.targets]]
    singles = solve_single_many(targets, cfg, [np.random.default_rng(s)
                                               for s in seq[args.targets:]])
    counts, matches = [], []
    for k, (p, single) in enumerate(zip(targets, singles)):
        o = total_degree_oracle(p, seed=np.random.default_rng([args.seed, k]))
        counts.append([o.n_solutions, o.diverged_count, o.failed_count])
        matches.append(o.n_solutions == single.n_solutions == 5
                       and contains_all(single, o, 1e-8) and contains_all(o, single, 1e-8))
    good = [c == [5, 4, 0] for c in counts]
    result = {"targets": args.targets, "five_finite_four_diverged": int(sum(good)),
              "matches_solve_single": int(sum(matches))}
    return result, {}, all(good) and all(matches)


def cmd_certify(args, cfg):
    certs = {
        "volume": certificate_volumes(6),
        "hilbert": certificate_hilbert(20),
        "graver": certificate_graver((4, 6), args.graver_expected),
        "toric": certificate_toric(20, args.seed),
    }
    for name, c in certs.items():
        line = f"{name}: {'pass' if c['pass'] else 'FAIL'}"
        if name == "volume":
            line += f"  5^N: {c['volumes']}"
        print(line, file=sys.stderr)
    return certs, {}, all(c["pass"] for c in certs.values())


# --- parser ------------------------------------------------------------------------

def _global_flags(defaults: bool) -> argparse.ArgumentParser:
    # Subcommands repeat the global flags with suppressed defaults, so a flag
    # given before the subcommand is not reset by the subparser.
    def d(value):
        return value if defaults else argparse.SUPPRESS

    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d(0), help="base seed (default 0)")
    p.add_argument("--threads", type=int, default=d(os.cpu_count() or 1),
                   help="accepted for compatibility; output does not depend on it")
    p.add_argument("--out", default=d(None), help="write the JSON document here instead of stdout")
    p.add_argument("--config", default=d(None), help="JSON file with solver/tracker overrides")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(defaults=False)
    ap = argparse.ArgumentParser(prog="coupled-duffing", parents=[_global_flags(defaults=True)],
                                 description="Coupled Duffing oscillator solvers and certificates.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve a parameter file")
    p.add_argument("params")
    p.add_argument("--algorithm", type=int, choices=(1, 2), default=1)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", parents=[common], help="success rates on random real targets")
    p.add_argument("--N", type=int, nargs="+", default=[2, 3])
    p.add_argument("--trials", type=int, default=10)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("scan", parents=[common], help="chamber scan of the (omega, lambda) slice")
    p.add_argument("--box", type=float, nargs=4, metavar=("WMIN", "WMAX", "LMIN", "LMAX"))
    p.add_argument("--res", help="grid resolution, e.g. 60x40")
    p.add_argument("--preset", choices=("default", "wide"), default="default")
    p.add_argument("--eta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--F", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--csv", help="write the per-node CSV here")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("polytope", parents=[common], help="normalized volumes of Q_N")
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--n", type=int, help="also print the vertices of Q_N for this N")
    p.add_argument("--samples", type=int, default=0, help="Monte Carlo samples for Q_2")
    p.set_defaults(func=cmd_polytope)

    p = sub.add_parser("hilbert", parents=[common], help="Hilbert function vs polynomial")
    p.add_argument("--ell-max", "--lmax", dest="ell_max", type=int, default=20)
    p.set_defaults(func=cmd_hilbert)

    p = sub.add_parser("graver", parents=[common], help="brute-force Graver basis")
    p.add_argument("--box", type=int, nargs="+", default=[4, 6])
    p.add_argument("--expected", help="JSON list of expected kernel vectors")
    p.set_defaults(func=cmd_graver)

    p = sub.add_parser("verify-toric", parents=[common], help="toric binomials and identities")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--n", type=int, default=3, help="number of oscillators (>= 2)")
    p.set_defaults(func=cmd_verify_toric)

    p = sub.add_parser("oracle", parents=[common], help="total-degree homotopy cross-check")
    p.add_argument("--targets", type=int, default=100)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("certify", parents=[common], help="run all root-count certificates")
    p.add_argument("--graver-expected", help="JSON list replacing the expected Graver set")
    p.set_defaults(func=cmd_certify)
    return ap


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = solver_config(args.config)
        result, timings, ok = args.func(args, cfg)
    except (UsageError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    doc = {"command": args.command, "ok": bool(ok), "result": result,
           "threads": args.threads, "timings": timings}
    text = dumps(doc) + "\n"
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
