"""Command-line entry point: ``nashkit bench|solve|metrics|generate``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import bench
from .algorithms import ALGORITHMS, OK, run_algorithm
from .errors import ConfigError, NashkitError
from .fileio import read_game, read_profile, write_game, write_profile
from .game import epsilon_of
from .generate import FAMILIES, FIXTURES, GameSpec, generate

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2, 3


def _bench_overrides(args) -> dict:
    out = {}
    if getattr(args, "jobs", None) is not None:
        out["jobs"] = args.jobs
    if getattr(args, "timeout_floor", None) is not None:
        out["timeout_floor"] = args.timeout_floor
    return out


def cmd_bench(args) -> int:
    try:
        p = bench.plan(args.config, _bench_overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.action == "plan":
        for t in p.tasks:
            print(f"{t.index}\t{t.scenario}\t{t.size}\t{t.spec.seed}\t{t.algorithm}")
        print(f"# {len(p.tasks)} tasks, config digest {p.digest}", file=sys.stderr)
        return EXIT_OK

    def progress(rec):
        if not args.quiet:
            eps = "-" if rec.epsilon is None else "%.4f" % rec.epsilon
            print(f"[{rec.task + 1}/{len(p.tasks)}] {rec.scenario} {rec.size} seed={rec.seed} "
                  f"{rec.algorithm}: {rec.status} eps={eps} {rec.time_ms:.0f} ms", file=sys.stderr)

    records = bench.run(p, args.out, progress=progress)
    print(bench.render_tables(bench.summarize(records)))
    return EXIT_OK if all(r.status == OK for r in records) else EXIT_PARTIAL


def cmd_solve(args) -> int:
    game = read_game(args.game)
    params = {}
    if args.delta is not None:
        params["delta"] = args.delta
        params["wsne_delta"] = args.delta
    if args.iterations is not None:
        params["T"] = args.iterations
    rng = np.random.default_rng(args.seed) if args.seed is not None else None
    out = run_algorithm(args.alg, game, params, rng)
    print(f"algorithm\t{args.alg}")
    print(f"status\t{out.status}")
    if out.detail:
        print(f"detail\t{out.detail}")
    if out.profile is None:
        return EXIT_PARTIAL
    print(f"epsilon\t{out.epsilon:.17g}")
    print(f"ws_epsilon\t{out.ws_epsilon:.17g}")
    if out.pre_epsilon is not None:
        print(f"pre_mix_epsilon\t{out.pre_epsilon:.17g}")
        print(f"pre_mix_ws_epsilon\t{out.pre_ws_epsilon:.17g}")
    print("x\t" + " ".join("%.17g" % v for v in out.profile.x))
    print("y\t" + " ".join("%.17g" % v for v in out.profile.y))
    if args.profile_out:
        write_profile(out.profile, args.profile_out)
    return EXIT_OK if out.status == OK else EXIT_PARTIAL


def cmd_metrics(args) -> int:
    game = read_game(args.game)
    rep = epsilon_of(game, read_profile(args.profile), args.threshold)
    for name in ("regret_row", "regret_col", "epsilon", "ws_epsilon", "exploitability"):
        print(f"{name}\t{getattr(rep, name):.17g}")
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.family == "fixture":
        spec = GameSpec("fixture", name=args.name)
    else:
        spec = GameSpec(args.family, (args.rows or args.size, args.size), args.seed)
    write_game(generate(spec), args.out, comment=spec.label())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nashkit", description="Bimatrix game equilibrium toolkit")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="plan or run a benchmark from a config file")
    b.add_argument("action", choices=("plan", "run"))
    b.add_argument("--config", required=True)
    b.add_argument("--out", help="directory for records.csv and summary.md")
    b.add_argument("--jobs", type=int)
    b.add_argument("--timeout-floor", type=float, dest="timeout_floor")
    b.add_argument("-q", "--quiet", action="store_true")
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("solve", help="run one algorithm on a game file")
    s.add_argument("--game", required=True)
    s.add_argument("--alg", required=True, choices=sorted(ALGORITHMS))
    s.add_argument("--delta", type=float)
    s.add_argument("--seed", type=int, help="seed for random initial points")
    s.add_argument("--iterations", type=int, help="T for learning dynamics")
    s.add_argument("--profile-out", dest="profile_out")
    s.set_defaults(func=cmd_solve)

    mt = sub.add_parser("metrics", help="evaluate a profile file on a game file")
    mt.add_argument("--game", required=True)
    mt.add_argument("--profile", required=True)
    mt.add_argument("--threshold", type=float, default=1e-10, help="support threshold for ws_epsilon")
    mt.set_defaults(func=cmd_metrics)

    g = sub.add_parser("generate", help="write a generated game to a file")
    g.add_argument("--family", required=True, choices=[f for f in FAMILIES if f != "file"])
    g.add_argument("--size", type=int, default=10)
    g.add_argument("--rows", type=int, help="row count when different from --size")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--name", choices=sorted(FIXTURES), help="fixture name")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "bench" and args.action == "run" and not args.out:
        print("bench run needs --out", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NashkitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
