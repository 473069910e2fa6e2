"""Simulation mode: objectives answered from measurement caches.

A cache is a single JSON document::

    {
      "schema_version": 1,
      "kernel_name": "...", "device_name": "...", "objective_unit": "ms",
      "parameters": [{"name": ..., "kind": ..., "values": [...]}, ...],
      "restrictions": ["block_size_x * block_size_y <= 1024", ...],
      "global_minimum": 1.625,            # optional
      "entries": {
        "0": {"config": [...], "value": 1.9},
        "1": {"config": [...], "invalid": "compile_error"},
        ...
      },
      "checksum": "sha256:..."            # optional, over the entries
    }

Entries are keyed by canonical index of the valid configurations of the
embedded search space. Synthetic generators produce caches in the same
format.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .evaluation import INVALID_REASONS, Measurement
from .restrictions import parse_restriction
from .space import Configuration, ParameterDef, SearchSpace

__all__ = [
    "SCHEMA_VERSION",
    "CacheError",
    "MeasurementCache",
    "CachedObjective",
    "load_cache",
    "read_cache",
    "write_cache",
    "GENERATORS",
    "SyntheticSpec",
    "gen_synthetic",
    "parse_grid",
]

SCHEMA_VERSION = 1
MAX_GRID_POINTS = 10**6


class CacheError(ValueError):
    """A cache file is malformed, incomplete or inconsistent."""


class PrunedConfigurationError(LookupError):
    """A configuration excluded by restrictions was queried."""


def _checksum(entries: dict[str, dict]) -> str:
    blob = json.dumps(entries, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class MeasurementCache:
    space: SearchSpace
    measurements: list[Measurement]
    kernel_name: str = "unnamed"
    device_name: str = "simulated"
    objective_unit: str = "ms"
    schema_version: int = SCHEMA_VERSION
    global_minimum: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.measurements) != len(self.space):
            raise CacheError(
                f"cache has {len(self.measurements)} entries for {len(self.space)} valid configurations"
            )
        for i, m in enumerate(self.measurements):
            if m.valid and not (math.isfinite(m.value) and m.value > 0):
                raise CacheError(f"entry {i} has non-positive or non-finite value {m.value!r}")

    @property
    def true_minimum(self) -> float:
        values = [m.value for m in self.measurements if m.valid]
        if not values:
            raise CacheError("cache has no valid entries")
        return min(values)

    @property
    def argmin(self) -> int:
        return min((m.value, i) for i, m in enumerate(self.measurements) if m.valid)[1]

    @property
    def invalid_fraction(self) -> float:
        return sum(not m.valid for m in self.measurements) / len(self.measurements)

    def objective(self) -> "CachedObjective":
        return CachedObjective(self)

    def to_document(self) -> dict:
        entries = {}
        for config, m in zip(self.space.configs, self.measurements):
            e: dict[str, Any] = {"config": list(config.values)}
            if m.valid:
                e["value"] = m.value
            else:
                e["invalid"] = m.invalid
            entries[str(config.index)] = e
        doc = {
            "schema_version": self.schema_version,
            "kernel_name": self.kernel_name,
            "device_name": self.device_name,
            "objective_unit": self.objective_unit,
            **self.space.to_dict(),
            "global_minimum": self.true_minimum,
            "entries": entries,
            "checksum": _checksum(entries),
        }
        if self.metadata:
            doc["metadata"] = self.metadata
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "MeasurementCache":
        for key in ("schema_version", "parameters", "entries"):
            if key not in doc:
                raise CacheError(f"missing field {key!r}")
        if doc["schema_version"] != SCHEMA_VERSION:
            raise CacheError(f"unsupported schema_version {doc['schema_version']!r}")
        entries = doc["entries"]
        if not isinstance(entries, dict):
            raise CacheError("'entries' must be a mapping from canonical index to entry")
        if "checksum" in doc and doc["checksum"] != _checksum(entries):
            raise CacheError("checksum mismatch")
        try:
            params = [ParameterDef.from_dict(p) for p in doc["parameters"]]
            restrictions = [parse_restriction(r, params) for r in doc.get("restrictions", [])]
            space = SearchSpace(tuple(params), tuple(restrictions))
            configs = space.configs
        except (KeyError, TypeError, ValueError) as exc:
            raise CacheError(f"invalid search space: {exc}") from exc

        measurements = []
        for config in configs:
            e = entries.get(str(config.index))
            if e is None:
                raise CacheError(f"missing entry for configuration {config.index} {list(config.values)}")
            if "config" in e and tuple(e["config"]) != config.values:
                raise CacheError(
                    f"entry {config.index} lists {e['config']} but canonical order gives {list(config.values)}"
                )
            if ("value" in e) == ("invalid" in e):
                raise CacheError(f"entry {config.index} needs exactly one of 'value' / 'invalid'")
            if "value" in e:
                v = e["value"]
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not (v > 0) or not math.isfinite(v):
                    raise CacheError(f"entry {config.index} has invalid value {v!r}")
                measurements.append(Measurement(value=float(v)))
            else:
                if e["invalid"] not in INVALID_REASONS:
                    raise CacheError(f"entry {config.index} has unknown invalid reason {e['invalid']!r}")
                measurements.append(Measurement(invalid=e["invalid"]))
        if len(entries) != len(configs):
            raise CacheError(f"cache has {len(entries)} entries but the space has {len(configs)} valid configurations")

        cache = cls(
            space,
            measurements,
            kernel_name=doc.get("kernel_name", "unnamed"),
            device_name=doc.get("device_name", "simulated"),
            objective_unit=doc.get("objective_unit", "ms"),
            global_minimum=doc.get("global_minimum"),
            metadata=doc.get("metadata", {}),
        )
        if cache.global_minimum is not None and cache.global_minimum != cache.true_minimum:
            raise CacheError(
                f"stated global minimum {cache.global_minimum} differs from minimum entry {cache.true_minimum}"
            )
        return cache


class CachedObjective:
    """Answers objective queries from a cache in O(1)."""

    def __init__(self, cache: MeasurementCache):
        self.cache = cache
        self.calls = 0

    def __call__(self, config: Configuration) -> Measurement:
        self.calls += 1
        space = self.cache.space
        index = config.index if config.index is not None else space.index_of(config.values)
        if index is None or index >= len(space) or space.configs[index].values != tuple(config.values):
            raise PrunedConfigurationError(
                f"configuration {list(config.values)} is excluded by the search space restrictions"
            )
        return self.cache.measurements[index]


def write_cache(cache: MeasurementCache, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cache.to_document(), indent=1) + "\n")


def read_cache(path: str | Path) -> MeasurementCache:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CacheError(f"{path}: not valid JSON: {exc}") from exc
    return MeasurementCache.from_document(doc)


def load_cache(path: str | Path) -> tuple[SearchSpace, CachedObjective]:
    cache = read_cache(path)
    return cache.space, cache.objective()


# Synthetic generators --------------------------------------------------------


def _rosenbrock(x: np.ndarray) -> np.ndarray:
    return np.sum(100.0 * (x[:, 1:] - x[:, :-1] ** 2) ** 2 + (1.0 - x[:, :-1]) ** 2, axis=1)


def _rastrigin(x: np.ndarray) -> np.ndarray:
    return 10.0 * x.shape[1] + np.sum(x**2 - 10.0 * np.cos(2 * np.pi * x), axis=1)


def _step_plateau(u: np.ndarray, rng: np.random.Generator, levels: int) -> np.ndarray:
    # concentric plateaus around a random centre in normalized space;
    # the lowest plateau is the single global step
    centre = rng.random(u.shape[1])
    dist = np.linalg.norm(u - centre, axis=1) / math.sqrt(u.shape[1])
    return np.floor(dist * levels)


def _random_rough(u: np.ndarray, rng: np.random.Generator, roughness: float) -> np.ndarray:
    d = u.shape[1]
    # smooth trend: a few random low-frequency Fourier features
    k = 8
    w = rng.normal(0.0, 3.0, size=(k, d))
    b = rng.uniform(0, 2 * np.pi, size=k)
    a = rng.normal(0.0, 1.0, size=k) / math.sqrt(k)
    smooth = np.cos(u @ w.T + b) @ a
    # rough component: i.i.d. per grid point
    rough = rng.normal(0.0, 1.0, size=len(u))
    return smooth + roughness * rough


GENERATORS = {
    "rosenbrock-disc": {"bounds": (-1.5, 1.5), "invalid": "radius"},
    "rastrigin-box": {"bounds": (-5.12, 5.12), "invalid": "box"},
    "step-plateau": {"bounds": (0.0, 1.0), "invalid": None},
    "random-rough": {"bounds": (0.0, 1.0), "invalid": None},
}


@dataclass
class SyntheticSpec:
    """What to generate.

    ``invalid_if`` is a restriction-style expression over the coordinate
    names ``x0, x1, ...``; matching grid points are recorded as
    runtime errors. ``None`` selects the generator's default region and the
    empty string disables invalid points.
    """

    function: str
    grid: tuple[int, ...]
    noise: float = 0.0
    seed: int = 0
    invalid_if: str | None = None
    bounds: tuple[float, float] | None = None
    levels: int = 10
    roughness: float = 0.25

    def __post_init__(self):
        if self.function not in GENERATORS:
            raise ValueError(f"unknown generator {self.function!r}; choose from {', '.join(GENERATORS)}")
        self.grid = tuple(int(g) for g in self.grid)
        if not self.grid or any(g < 1 for g in self.grid):
            raise ValueError(f"bad grid {self.grid}")
        if math.prod(self.grid) > MAX_GRID_POINTS:
            raise ValueError(f"grid of {math.prod(self.grid)} points exceeds the limit of {MAX_GRID_POINTS}")
        if self.function == "rosenbrock-disc" and len(self.grid) < 2:
            raise ValueError("rosenbrock-disc needs at least two dimensions")
        if self.noise < 0:
            raise ValueError("noise must be non-negative")

    @property
    def default_invalid(self) -> str:
        d = len(self.grid)
        lo, hi = self.effective_bounds
        kind = GENERATORS[self.function]["invalid"]
        if kind == "radius":
            # outside the disc inscribed in the box
            radius = (hi - lo) / 2
            return " + ".join(f"x{i} * x{i}" for i in range(d)) + f" > {radius * radius!r}"
        if kind == "box":
            # upper corner box covering the top quarter of the first two axes
            edge = lo + 0.75 * (hi - lo)
            return " and ".join(f"x{i} > {edge!r}" for i in range(min(d, 2)))
        return ""

    @property
    def effective_bounds(self) -> tuple[float, float]:
        return tuple(self.bounds) if self.bounds is not None else GENERATORS[self.function]["bounds"]

    @property
    def effective_invalid(self) -> str:
        return self.default_invalid if self.invalid_if is None else self.invalid_if

    def to_dict(self) -> dict:
        return {
            "function": self.function,
            "grid": list(self.grid),
            "noise": self.noise,
            "seed": self.seed,
            "invalid_if": self.effective_invalid,
            "bounds": list(self.effective_bounds),
            "levels": self.levels,
            "roughness": self.roughness,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        d = dict(d)
        known = {"function", "grid", "noise", "seed", "invalid_if", "bounds", "levels", "roughness"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown generator settings: {', '.join(unknown)}")
        if isinstance(d.get("grid"), str):
            d["grid"] = parse_grid(d["grid"])
        if d.get("bounds") is not None:
            d["bounds"] = tuple(d["bounds"])
        return cls(**d)


def parse_grid(text: str) -> tuple[int, ...]:
    """'50x50' or '10,10,10,10' -> grid sizes."""
    parts = [p for p in re.split(r"[x,×\s]+", text.strip()) if p]
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"cannot parse grid {text!r}; expected e.g. 50x50") from None


def gen_synthetic(spec: SyntheticSpec) -> MeasurementCache:
    """Evaluate a synthetic landscape on every grid point.

    Values are ``1 + f`` so that all measurements are positive, optionally
    multiplied by log-normal noise.
    """
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.effective_bounds
    d = len(spec.grid)
    axes = [np.round(np.linspace(lo, hi, n), 10) if n > 1 else np.array([(lo + hi) / 2]) for n in spec.grid]
    params = [ParameterDef(f"x{i}", tuple(float(v) for v in ax), "numeric") for i, ax in enumerate(axes)]
    space = SearchSpace(tuple(params))
    x = np.array([c.values for c in space.configs], dtype=float)
    u = space.coords

    if spec.function == "rosenbrock-disc":
        f = _rosenbrock(x)
    elif spec.function == "rastrigin-box":
        f = _rastrigin(x)
    elif spec.function == "step-plateau":
        f = _step_plateau(u, rng, spec.levels)
    else:
        f = np.exp(_random_rough(u, rng, spec.roughness)) - 1.0
    values = 1.0 + f
    if spec.noise > 0:
        values = values * np.exp(rng.normal(0.0, spec.noise, size=len(values)))

    invalid_text = spec.effective_invalid
    invalid = np.zeros(len(values), dtype=bool)
    if invalid_text:
        region = parse_restriction(invalid_text, params)
        invalid = np.array([region.evaluate(c.values) for c in space.configs])
    if invalid.all():
        raise ValueError("the invalid region covers the whole grid")

    measurements = [
        Measurement(invalid="runtime_error") if bad else Measurement(value=float(v))
        for v, bad in zip(values, invalid)
    ]
    name = f"{spec.function}-" + "x".join(str(g) for g in spec.grid)
    return MeasurementCache(
        space,
        measurements,
        kernel_name=name,
        device_name="synthetic",
        objective_unit="arbitrary",
        metadata={"generator": spec.to_dict()},
    )
