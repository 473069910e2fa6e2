"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, metrics
from .evaluation import BudgetExhausted, ObjectiveError
from .gp import ConditioningError
from .simulator import CacheError, SyntheticSpec, gen_synthetic, parse_grid, read_cache, write_cache
from .strategies import STRATEGIES, StrategyConfig, run_strategy

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cmd_gen(args) -> int:
    try:
        spec = SyntheticSpec(
            function=args.function,
            grid=parse_grid(args.grid),
            noise=args.noise,
            seed=args.seed,
            invalid_if=args.invalid_if,
            levels=args.levels,
            roughness=args.roughness,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    cache = gen_synthetic(spec)
    write_cache(cache, args.out)
    print(f"wrote {args.out}: {len(cache.space)} configurations, "
          f"{cache.invalid_fraction:.1%} invalid, minimum {cache.true_minimum!r}")
    return EXIT_OK


def _strategy_config(args) -> StrategyConfig:
    settings = {"strategy": args.strategy, "budget": args.budget, "n_init": args.init, "seed": args.seed}
    for item in args.set or []:
        key, _, raw = item.partition("=")
        if not _:
            raise UsageError(f"--set expects key=value, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        settings[key.replace("-", "_")] = value
    try:
        return StrategyConfig.from_dict(settings)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _cmd_tune(args) -> int:
    config = _strategy_config(args)
    cache = read_cache(args.space)
    run = run_strategy(cache.space, cache.objective(), config, np.random.default_rng(config.seed))
    result = bench.RunResult(cache.kernel_name, config.name, 0, config.seed, "ok",
                             evaluations=run.evaluations, trace=[b for _, b in run.trace],
                             invalid=run.invalid_count)
    Path(args.out).write_text(bench.trace_csv(cache.space.configs, result))
    best = cache.space.configs[run.best_index].as_dict(cache.space) if run.best_index is not None else None
    print(json.dumps({
        "strategy": config.name,
        "evaluations": run.invocations,
        "invalid": run.invalid_count,
        "best_value": run.best_value,
        "best_config": best,
        "true_minimum": cache.true_minimum,
        "mae": metrics.mae(result.trace, cache.true_minimum, 20, config.budget)
        if config.budget >= 40 else None,
    }, indent=1))
    return EXIT_OK


def _cmd_bench(args) -> int:
    try:
        plan = bench.load_plan(args.plan)
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"{args.plan}: {exc}") from exc
    tables = bench.run_experiment(plan, args.out_dir, workers=args.workers)
    _print_table(tables["mdf"])
    failed = sum(1 for row in tables["runs"][1] if row[4] != "ok")
    if failed:
        print(f"{failed} run(s) failed; see runs.csv", file=sys.stderr)
    return EXIT_OK


def _print_table(table) -> None:
    header, rows = table
    sys.stdout.write(bench.csv_text(rows, header))


def _cmd_report(args) -> int:
    plan, results, f_min = bench.read_results(args.in_dir)
    strategies = args.strategies.split(",") if args.strategies else None
    tables = bench.summarize(results, f_min, plan["checkpoint_step"], plan["budget"], strategies)
    _print_table(tables["summary"])
    if args.mdf:
        print()
        _print_table(tables["mdf"])
    if args.extended:
        if not args.reference:
            raise UsageError("--extended needs --reference")
        print()
        for space in sorted(f_min):
            by_strategy: dict[str, list] = {}
            for r in results:
                if r.space == space and r.ok and (strategies is None or r.strategy in strategies):
                    by_strategy.setdefault(r.strategy, []).append(r.trace)
            if args.reference not in by_strategy:
                raise UsageError(f"no runs of reference strategy {args.reference!r} on {space!r}")
            target, counts = metrics.extended_match(
                by_strategy[args.reference], by_strategy, args.max_budget, plan["budget"]
            )
            rows = [(space, s, target, "not reached" if c is None else c) for s, c in sorted(counts.items())]
            sys.stdout.write(bench.csv_text(rows, ["space", "strategy", "target", "evaluations"]))
    return EXIT_OK


def _cmd_validate(args) -> int:
    cache = read_cache(args.space)
    print(json.dumps({
        "kernel_name": cache.kernel_name,
        "cartesian": cache.space.cartesian_size,
        "valid": len(cache.space),
        "invalid_fraction": cache.invalid_fraction,
        "global_minimum": cache.true_minimum,
        "status": "ok",
    }, indent=1))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bayestune", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic measurement cache")
    p.add_argument("--function", required=True, choices=["rosenbrock-disc", "rastrigin-box", "step-plateau", "random-rough"])
    p.add_argument("--grid", required=True, help="grid sizes, e.g. 50x50")
    p.add_argument("--noise", type=float, default=0.0, help="log-normal noise sigma")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--invalid-if", default=None, help="expression over x0, x1, ... marking runtime-invalid points")
    p.add_argument("--levels", type=int, default=10, help="plateau count for step-plateau")
    p.add_argument("--roughness", type=float, default=0.25, help="rough component weight for random-rough")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("tune", help="run one strategy on a cache")
    p.add_argument("--space", required=True)
    p.add_argument("--strategy", required=True, choices=STRATEGIES)
    p.add_argument("--budget", type=int, default=220)
    p.add_argument("--init", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a strategy setting")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("bench", help="run an experiment plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("report", help="recompute metrics from a bench directory")
    p.add_argument("--in-dir", required=True)
    p.add_argument("--mdf", action="store_true")
    p.add_argument("--strategies", help="comma-separated strategy set for MAE/MDF")
    p.add_argument("--extended", action="store_true")
    p.add_argument("--reference")
    p.add_argument("--max-budget", type=int, default=1020)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("validate", help="check a cache file")
    p.add_argument("--space", required=True)
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"bayestune: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CacheError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"bayestune: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ObjectiveError, ConditioningError, BudgetExhausted, RuntimeError, ValueError) as exc:
        print(f"bayestune: failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
