"""Experiment runner: strategy x space x repetition grids and their reports.

Output directory layout::

    plan.json                      resolved plan
    spaces.csv                     per space: true minimum, sizes
    runs.csv                       per run: seed, status, final best, MAE
    summary.csv                    per (space, strategy): mean / std MAE
    mdf.csv                        per strategy: Mean Deviation Factor
    series.csv                     long format: evaluation, median, quartiles
    traces/<space>/<strategy>/rep<k>.csv   one row per evaluation

Every file is a pure function of the plan, so two runs with the same base
seed are byte-identical regardless of how many worker processes are used.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import yaml

from . import metrics
from .simulator import MeasurementCache, SyntheticSpec, gen_synthetic, read_cache
from .strategies import StrategyConfig, run_strategy

logger = logging.getLogger(__name__)

__all__ = [
    "SpaceSource",
    "ExperimentPlan",
    "RunResult",
    "run_experiment",
    "load_plan",
    "read_results",
    "derive_seed",
]


@dataclass(frozen=True)
class SpaceSource:
    """A cache file or a generator spec, with a display name."""

    name: str
    cache: str | None = None
    generator: SyntheticSpec | None = None

    def load(self) -> MeasurementCache:
        if self.cache is not None:
            return read_cache(self.cache)
        return gen_synthetic(self.generator)

    def to_dict(self) -> dict:
        d = {"name": self.name}
        if self.cache is not None:
            d["cache"] = self.cache
        else:
            d["generator"] = self.generator.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict | str, base: Path | None = None) -> "SpaceSource":
        if isinstance(d, str):
            d = {"cache": d}
        unknown = sorted(set(d) - {"name", "cache", "generator"})
        if unknown:
            raise ValueError(f"unknown space settings: {', '.join(unknown)}")
        if ("cache" in d) == ("generator" in d):
            raise ValueError("a space needs exactly one of 'cache' or 'generator'")
        if "cache" in d:
            path = Path(d["cache"])
            if base is not None and not path.is_absolute():
                path = base / path
            return cls(d.get("name") or path.stem, cache=str(path))
        gen = SyntheticSpec.from_dict(d["generator"])
        name = d.get("name") or f"{gen.function}-" + "x".join(map(str, gen.grid))
        return cls(name, generator=gen)


@dataclass
class ExperimentPlan:
    spaces: list[SpaceSource]
    strategies: list[StrategyConfig]
    repetitions: int = 35
    random_repetitions: int = 100
    base_seed: int = 0
    checkpoint_step: int = 20
    budget: int = 220
    n_init: int = 20
    workers: int = 1

    def __post_init__(self):
        names = [s.name for s in self.strategies]
        if len(set(names)) != len(names):
            raise ValueError(f"strategy names must be unique, got {names} (use 'label' to disambiguate)")
        snames = [s.name for s in self.spaces]
        if len(set(snames)) != len(snames):
            raise ValueError(f"space names must be unique, got {snames}")

    def reps_for(self, config: StrategyConfig) -> int:
        return self.random_repetitions if config.strategy == "random" else self.repetitions

    def to_dict(self) -> dict:
        return {
            "spaces": [s.to_dict() for s in self.spaces],
            "strategies": [s.to_dict() for s in self.strategies],
            "repetitions": self.repetitions,
            "random_repetitions": self.random_repetitions,
            "base_seed": self.base_seed,
            "checkpoint_step": self.checkpoint_step,
            "budget": self.budget,
            "n_init": self.n_init,
        }

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "ExperimentPlan":
        d = dict(d)
        known = {"spaces", "strategies", "repetitions", "random_repetitions", "base_seed",
                 "checkpoint_step", "budget", "n_init", "workers"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown plan settings: {', '.join(unknown)}")
        budget = d.get("budget", 220)
        n_init = d.get("n_init", 20)
        strategies = []
        for s in d.get("strategies", []):
            entry = {"strategy": s} if isinstance(s, str) else dict(s)
            strategies.append(StrategyConfig.from_dict({"budget": budget, "n_init": n_init, **entry}))
        if not strategies:
            raise ValueError("plan lists no strategies")
        spaces = [SpaceSource.from_dict(s, base) for s in d.get("spaces", [])]
        if not spaces:
            raise ValueError("plan lists no spaces")
        return cls(
            spaces=spaces,
            strategies=strategies,
            repetitions=d.get("repetitions", 35),
            random_repetitions=d.get("random_repetitions", 100),
            base_seed=d.get("base_seed", 0),
            checkpoint_step=d.get("checkpoint_step", 20),
            budget=budget,
            n_init=n_init,
            workers=d.get("workers", 1),
        )


def load_plan(path: str | Path) -> ExperimentPlan:
    path = Path(path)
    doc = yaml.safe_load(path.read_text())
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: plan must be a mapping")
    return ExperimentPlan.from_dict(doc, base=path.parent)


def derive_seed(base_seed: int, space: str, rep: int) -> int:
    """Seed for one repetition; shared by all strategies so runs are paired."""
    ss = np.random.SeedSequence([base_seed, zlib.crc32(space.encode()), rep])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass
class RunResult:
    space: str
    strategy: str
    rep: int
    seed: int
    status: str
    evaluations: list[tuple[int, float | None, str | None]] = field(default_factory=list)
    trace: list[float] = field(default_factory=list)
    invalid: int = 0
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def final_best(self) -> float:
        return self.trace[-1] if self.trace else math.inf


# process-local cache of loaded spaces, so workers load each space once
_LOADED: dict[str, MeasurementCache] = {}


def _load(source: SpaceSource) -> MeasurementCache:
    key = json.dumps(source.to_dict(), sort_keys=True)
    if key not in _LOADED:
        _LOADED[key] = source.load()
    return _LOADED[key]


def _execute(task: tuple[SpaceSource, StrategyConfig, int, int]) -> RunResult:
    source, config, rep, seed = task
    try:
        cache = _load(source)
        run = run_strategy(cache.space, cache.objective(), config.replace(seed=seed),
                           np.random.default_rng(seed))
    except Exception as exc:
        logger.warning("run %s/%s/%d failed: %s", source.name, config.name, rep, exc)
        return RunResult(source.name, config.name, rep, seed, "failed",
                         error=f"{type(exc).__name__}: {exc}".replace("\n", " "),
                         invalid=0)
    return RunResult(source.name, config.name, rep, seed, "ok",
                     evaluations=run.evaluations, trace=[b for _, b in run.trace],
                     invalid=run.invalid_count)


def _tasks(plan: ExperimentPlan) -> list[tuple]:
    out = []
    for source in plan.spaces:
        for config in plan.strategies:
            for rep in range(plan.reps_for(config)):
                out.append((source, config, rep, derive_seed(plan.base_seed, source.name, rep)))
    return out


def execute_plan(plan: ExperimentPlan, workers: int | None = None) -> list[RunResult]:
    tasks = _tasks(plan)
    workers = plan.workers if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_execute, tasks, chunksize=1))
    else:
        results = [_execute(t) for t in tasks]
    return sorted(results, key=lambda r: (r.space, r.strategy, r.rep))


# Writing ---------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def csv_text(rows: Iterable[Iterable], header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def trace_csv(space_configs, result: RunResult) -> str:
    rows = []
    for count, ((idx, value, reason), best) in enumerate(zip(result.evaluations, result.trace), 1):
        config = json.dumps(list(space_configs[idx].values))
        status = "valid" if value is not None else reason
        rows.append((count, idx, config, value, status, best))
    return csv_text(rows, ["evaluation", "index", "config", "value", "status", "best"])


def run_experiment(plan: ExperimentPlan, out_dir: str | Path, workers: int | None = None) -> dict:
    """Execute the plan and write traces and reports to ``out_dir``.

    Returns the tables that were written (see :func:`summarize`).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    caches = {s.name: _load(s) for s in plan.spaces}
    results = execute_plan(plan, workers)

    (out / "plan.json").write_text(json.dumps(plan.to_dict(), indent=1, sort_keys=True) + "\n")
    space_rows = [
        (name, c.true_minimum, c.space.cartesian_size, len(c.space), c.invalid_fraction)
        for name, c in caches.items()
    ]
    (out / "spaces.csv").write_text(
        csv_text(space_rows, ["space", "f_min", "cartesian", "valid", "invalid_fraction"])
    )
    for r in results:
        if not r.ok:
            continue
        path = out / "traces" / r.space / r.strategy / f"rep{r.rep:03d}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(trace_csv(caches[r.space].space.configs, r))

    f_min = {name: c.true_minimum for name, c in caches.items()}
    tables = summarize(results, f_min, plan.checkpoint_step, plan.budget,
                       strategies=[s.name for s in plan.strategies])
    write_tables(tables, out)
    return tables


def summarize(results: list[RunResult], f_min: dict[str, float], step: int, budget: int,
              strategies: list[str] | None = None) -> dict:
    """Aggregate runs into the runs / summary / mdf / series tables."""
    results = sorted(results, key=lambda r: (r.space, r.strategy, r.rep))
    if strategies is None:
        strategies = sorted({r.strategy for r in results})
    results = [r for r in results if r.strategy in strategies]

    run_rows = []
    groups: dict[tuple[str, str], list[RunResult]] = {}
    for r in results:
        score = metrics.mae(r.trace, f_min[r.space], step, budget) if r.ok else None
        run_rows.append((r.space, r.strategy, r.rep, r.seed, r.status, len(r.evaluations),
                         r.invalid, r.final_best if r.ok else None, score, r.error))
        groups.setdefault((r.space, r.strategy), []).append(r)

    summary_rows, table = [], {}
    series_rows = []
    for (space, strategy), runs in sorted(groups.items()):
        ok = [r for r in runs if r.ok]
        maes = [metrics.mae(r.trace, f_min[space], step, budget) for r in ok]
        mean = float(np.mean(maes)) if maes else None
        std = float(np.std(maes)) if maes else None
        summary_rows.append((space, strategy, len(ok), len(runs) - len(ok), mean, std, f_min[space]))
        if mean is not None:
            table.setdefault(space, {})[strategy] = mean
        if ok:
            for row in metrics.series([r.trace for r in ok], budget):
                series_rows.append((space, strategy, int(row[0]), float(row[1]), float(row[2]), float(row[3])))

    complete = {s: row for s, row in table.items() if set(row) == set(strategies)}
    mdf_rows = []
    if complete:
        for strategy, (value, spread) in sorted(metrics.mdf(complete).items()):
            mdf_rows.append((strategy, value, spread, len(complete)))
    return {
        "runs": (["space", "strategy", "rep", "seed", "status", "evaluations", "invalid",
                  "final_best", "mae", "error"], run_rows),
        "summary": (["space", "strategy", "runs", "failed", "mean_mae", "std_mae", "f_min"], summary_rows),
        "mdf": (["strategy", "mdf", "std", "spaces"], mdf_rows),
        "series": (["space", "strategy", "evaluation", "median_best", "q25", "q75"], series_rows),
    }


def write_tables(tables: dict, out: Path) -> None:
    for name, (header, rows) in tables.items():
        (out / f"{name}.csv").write_text(csv_text(rows, header))


# Reading back ----------------------------------------------------------------


def read_results(in_dir: str | Path) -> tuple[dict, list[RunResult], dict[str, float]]:
    """Load plan, runs (with traces) and true minima from a bench output directory."""
    root = Path(in_dir)
    plan = json.loads((root / "plan.json").read_text())
    f_min = {}
    with open(root / "spaces.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            f_min[row["space"]] = float(row["f_min"])
    results = []
    with open(root / "runs.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            r = RunResult(row["space"], row["strategy"], int(row["rep"]), int(row["seed"]),
                          row["status"], invalid=int(row["invalid"] or 0), error=row["error"])
            if r.ok:
                path = root / "traces" / r.space / r.strategy / f"rep{r.rep:03d}.csv"
                with open(path, newline="") as tf:
                    for t in csv.DictReader(tf):
                        value = float(t["value"]) if t["value"] else None
                        reason = None if value is not None else t["status"]
                        r.evaluations.append((int(t["index"]), value, reason))
                        r.trace.append(float(t["best"]))
            results.append(r)
    return plan, results, f_min

