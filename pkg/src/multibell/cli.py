"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from multibell import __version__, quantum
from multibell.bellcore import bell_additive, bell_multiplicative, build_basis
from multibell.classical import (
    DEFAULT_FACE_CAP,
    EXACT_LIMIT,
    RATIO_LIMIT,
    fd_log,
    fd_value,
    log_factorial,
    maximize_P,
    ratio_fd_to_factorial,
)
from multibell.game import NORMALIZATION_NOTE, GameConfig, classical_explicit, classical_fd, classical_opt_n2, quantum as quantum_strategy, run_game
from multibell.robustness import critical_efficiency, robustness_curve
from multibell.verify import run_verification

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
DETERMINISTIC = {"bounds", "construct", "simulate", "robustness", "verify", "ratio"}


class UsageError(Exception):
    pass


def fmt(x) -> str:
    return f"{float(x):.17g}"


def _json_number(x):
    x = float(x)
    return None if math.isnan(x) else x


def write_manifest(output: Path, command: str, params: dict, outputs: list[Path]) -> Path:
    manifest = {
        "command": command,
        "parameters": params,
        "seed": params.get("seed"),
        "version": __version__,
        "outputs": [str(p) for p in outputs],
    }
    path = output.with_name(output.name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _params(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "config")}


# bounds


def bounds_report(n: int, resolution: int = 11, cap: int = DEFAULT_FACE_CAP) -> dict:
    """The chain FD_n <= max P_n <= Bell limit <= n!."""
    report = {"n": n}
    if n < EXACT_LIMIT:
        factorial, fd = math.factorial(n), fd_value(n)
        report["tsirelson_n_factorial"] = factorial
        report["fd_lower_bound"] = fd
        report["fd_over_factorial"] = float(Fraction(fd, factorial))
    else:
        report["log_tsirelson_n_factorial"] = log_factorial(n)
        report["log_fd_lower_bound"] = fd_log(n)
        report["fd_over_factorial"] = ratio_fd_to_factorial(n)
    if n <= cap:
        point, value = maximize_P(n, resolution=resolution, cap=cap)
        report["classical_max_P"] = value
        report["classical_max_point"] = [float(x) for x in point]
    return report


def cmd_bounds(args) -> int:
    if args.n < 1:
        raise UsageError("n must be >= 1")
    report = bounds_report(args.n, args.resolution, args.cap)
    labels = {
        "tsirelson_n_factorial": "n! (Tsirelson bound)",
        "log_tsirelson_n_factorial": "log n! (Tsirelson bound)",
        "fd_lower_bound": "FD_n (deterministic lower bound on the Bell limit)",
        "log_fd_lower_bound": "log FD_n (deterministic lower bound on the Bell limit)",
        "fd_over_factorial": "FD_n / n!",
        "classical_max_P": "max |P_n| found (lower bound on the Bell limit, Bob deterministic)",
    }
    print(f"n = {args.n}")
    for key, label in labels.items():
        if key in report:
            print(f"  {label}: {report[key]:.6g}" if isinstance(report[key], float) else f"  {label}: {report[key]}")
    if args.output:
        out = Path(args.output)
        out.write_text(json.dumps(report, indent=2) + "\n")
        write_manifest(out, "bounds", _params(args), [out])
    return EXIT_OK


# construct


def construct_document(n: int) -> dict:
    basis = build_basis(n)
    setup = quantum.saturating_setup(n, basis)
    C = quantum.correlators_epr(setup)
    b_mult = bell_multiplicative(C, basis)
    target = math.factorial(n)
    if abs(b_mult - target) > 1e-9 * target:
        raise AssertionError(f"constructed strategy gives B_{n} = {b_mult!r}, expected {target}")
    R = quantum.moment_matrix(setup.alice, np.zeros(3))
    gaps = [quantum.schur_gap(R, C.column(j)) for j in range(n)]
    return {
        "n": n,
        "alice_directions": setup.alice.tolist(),
        "bob_directions": setup.bob.tolist(),
        "correlators": C.entries.tolist(),
        "bell_multiplicative": b_mult,
        "bell_additive": bell_additive(C, basis),
        "tsirelson_bound": target,
        "schur_gaps": gaps,
    }


def cmd_construct(args) -> int:
    if args.n < 2:
        raise UsageError("construct needs n >= 2")
    try:
        doc = construct_document(args.n)
    except AssertionError as exc:
        print(f"saturation check failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    text = json.dumps(doc, indent=2) + "\n"
    if args.output:
        out = Path(args.output)
        out.write_text(text)
        write_manifest(out, "construct", _params(args), [out])
    else:
        sys.stdout.write(text)
    return EXIT_OK


# simulate


def _parse_floats(text: str | None) -> list[float] | None:
    if text is None:
        return None
    return [float(x) for x in str(text).replace(",", " ").split()]


def make_strategy(kind: str, n: int, mu=None, bob_signs=None):
    if kind == "quantum":
        return quantum_strategy(n)
    if kind == "classical-fd":
        return classical_fd(n)
    if kind == "classical-opt-n2":
        if n != 2:
            raise UsageError("classical-opt-n2 is only defined for n=2")
        return classical_opt_n2()
    if kind == "classical-explicit":
        if mu is None:
            raise UsageError("classical-explicit needs --mu")
        signs = bob_signs if bob_signs is not None else [1] * len(mu)
        if len(mu) != n or len(signs) != n:
            raise UsageError(f"--mu and --bob-signs need exactly n={n} entries")
        return classical_explicit(mu, [int(s) for s in signs])
    raise UsageError(f"unknown strategy {kind!r}")


def write_paths_csv(path: Path, run, max_trials: int | None = None) -> None:
    n = run.config.n
    trials = run.config.trials if max_trials is None else min(max_trials, run.config.trials)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["trial", "round", "i", "j", "a", "b"] + [f"x{k}" for k in range(1, n + 1)])
        for t in range(trials):
            if run.config.rounds == 0:
                continue
            rec = run.records[t]
            pos = run.positions(t)
            for tau in range(run.config.rounds):
                writer.writerow(
                    [t, tau + 1, int(rec.i[tau]), int(rec.j[tau]), int(rec.a[tau]), int(rec.b[tau])]
                    + [fmt(x) for x in pos[tau]]
                )


def simulation_summary(run) -> dict:
    cfg = run.config
    summary = {
        "n": cfg.n,
        "strategy": cfg.strategy.kind,
        "scheduling": cfg.scheduling,
        "rounds": cfg.rounds,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "estimate": _json_number(run.estimate),
        "stderr": _json_number(run.stderr),
        "analytic_target": _json_number(run.analytic_target),
        "estimate_defined": run.defined,
        "normalization": NORMALIZATION_NOTE[cfg.scheduling],
    }
    if run.area is not None:
        summary["area_mean"] = _json_number(run.area_mean)
        summary["area_stderr"] = _json_number(run.area_stderr)
        summary["area_target"] = _json_number(run.analytic_target / 16)
    return summary


def cmd_simulate(args) -> int:
    strategy = make_strategy(args.strategy, args.n, _parse_floats(args.mu), _parse_floats(args.bob_signs))
    try:
        config = GameConfig(args.n, args.rounds, args.trials, args.seed, strategy, args.scheduling)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    record = args.paths is not None
    run = run_game(config, record_paths=record, workers=args.workers)
    summary = simulation_summary(run)
    outputs = []
    if record:
        paths = Path(args.paths)
        write_paths_csv(paths, run, args.path_trials)
        outputs.append(paths)
    text = json.dumps(summary, indent=2) + "\n"
    if args.summary:
        out = Path(args.summary)
        out.write_text(text)
        outputs.append(out)
        write_manifest(out, "simulate", _params(args), outputs)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# robustness


def cmd_robustness(args) -> int:
    try:
        rows = robustness_curve(args.eta_min, args.eta_max, args.steps)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.output)
    with open(out, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["eta", "delta_additive", "delta_multiplicative"])
        for row in rows:
            writer.writerow([fmt(x) for x in row])
    print(f"CHSH margin closes at eta* = 4/(2*sqrt(2)+2) = {critical_efficiency():.17g}")
    write_manifest(out, "robustness", _params(args), [out])
    return EXIT_OK


# ratio


def ratio_rows(ns) -> list[tuple[int, float, float]]:
    rows = []
    for n in ns:
        if n < 4:
            raise UsageError(f"ratio rows need n >= 4, got {n}")
        rows.append((n, ratio_fd_to_factorial(n), RATIO_LIMIT))
    return rows


def _parse_int_list(text) -> list[int]:
    out = []
    for part in str(text).replace(",", " ").split():
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def cmd_ratio(args) -> int:
    rows = ratio_rows(_parse_int_list(args.n))
    out = Path(args.output)
    with open(out, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["n", "ratio", "limit_reference"])
        for n, r, lim in rows:
            writer.writerow([n, fmt(r), fmt(lim)])
    write_manifest(out, "ratio", _params(args), [out])
    return EXIT_OK


# verify


def cmd_verify(args) -> int:
    results = run_verification(args.n_max, args.trials, args.seed)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAILED if failed else EXIT_OK


# replay


def cmd_replay(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    command = manifest["command"]
    if command not in DETERMINISTIC:
        raise UsageError(f"cannot replay command {command!r}")
    ns = argparse.Namespace(**manifest["parameters"])
    return HANDLERS[command](ns)


HANDLERS = {
    "bounds": cmd_bounds,
    "construct": cmd_construct,
    "simulate": cmd_simulate,
    "robustness": cmd_robustness,
    "ratio": cmd_ratio,
    "verify": cmd_verify,
    "replay": cmd_replay,
}


def read_config(path: str) -> dict:
    """Plain key=value lines; '#' starts a comment; keys use flag names."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multibell", description="Multiplicative Bell inequalities: bounds, strategies, simulation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value file supplying defaults; flags override")
        return p

    p = add("bounds", "n!, FD_n and the classical search value for one n")
    p.add_argument("n", type=int)
    p.add_argument("--resolution", type=int, default=11, help="grid points per axis for the face search")
    p.add_argument("--cap", type=int, default=DEFAULT_FACE_CAP, help="largest n for the face search")
    p.add_argument("--output", help="also write the report as JSON")
    p.set_defaults(func=cmd_bounds)

    p = add("construct", "build the n!-saturating quantum strategy")
    p.add_argument("n", type=int)
    p.add_argument("--output", help="JSON path (stdout if omitted)")
    p.set_defaults(func=cmd_construct)

    p = add("simulate", "Monte Carlo walker game")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--strategy", default="quantum", choices=["quantum", "classical-fd", "classical-opt-n2", "classical-explicit"])
    p.add_argument("--mu", help="Alice's one-point correlators for classical-explicit, comma separated")
    p.add_argument("--bob-signs", help="Bob's signs for classical-explicit (default all +1)")
    p.add_argument("--rounds", type=int, default=100000)
    p.add_argument("--trials", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheduling", default="stratified", choices=["stratified", "uniform"])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--paths", help="write per-round walker positions to this CSV")
    p.add_argument("--path-trials", type=int, help="only write the first K trials to the paths CSV")
    p.add_argument("--summary", help="summary JSON path (stdout if omitted)")
    p.set_defaults(func=cmd_simulate)

    p = add("robustness", "detection-loophole margins versus detector efficiency")
    p.add_argument("--eta-min", type=float, default=0.8)
    p.add_argument("--eta-max", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=201)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_robustness)

    p = add("ratio", "FD_n / n! curve")
    p.add_argument("--n", default="4-255", help="list like '4-255' or '4,8,10000'")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ratio)

    p = add("verify", "run the numerical property suite")
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = add("replay", "re-run a command from its manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config(known.config)
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in sub_action.choices.values():
        casted = {}
        for action in sp._actions:
            if action.dest in values:
                raw = values[action.dest]
                casted[action.dest] = action.type(raw) if action.type else raw
        sp.set_defaults(**casted)
        # config may satisfy required options
        for action in sp._actions:
            if action.dest in casted and action.option_strings:
                action.required = False


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
