"""Discrete search spaces of tunable parameters.

Configurations are enumerated in canonical order (lexicographic over the
value indices of each parameter) and filtered by restrictions up front, so
strategies only ever see valid configurations. Each parameter is mapped to
[0, 1] by the rank of its value, which removes the distance distortion of
non-linear value sets such as powers of two.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Sequence

import numpy as np

from .restrictions import Restriction, parse_restriction

__all__ = [
    "ParameterDef",
    "Configuration",
    "SearchSpace",
    "EmptySearchSpaceError",
    "infer_kind",
]

KINDS = ("numeric", "categorical", "boolean")


class EmptySearchSpaceError(ValueError):
    """Raised when the restrictions exclude every configuration."""


def infer_kind(values: Sequence[Any]) -> str:
    if all(isinstance(v, bool) for v in values):
        return "boolean"
    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        return "numeric"
    return "categorical"


@dataclass(frozen=True)
class ParameterDef:
    name: str
    values: tuple
    kind: str = ""

    def __post_init__(self):
        values = tuple(self.values)
        object.__setattr__(self, "values", values)
        if not self.name.isidentifier():
            raise ValueError(f"parameter name {self.name!r} is not an identifier")
        if not values:
            raise ValueError(f"parameter {self.name!r} has no values")
        if not self.kind:
            object.__setattr__(self, "kind", infer_kind(values))
        if self.kind not in KINDS:
            raise ValueError(f"parameter {self.name!r}: unknown kind {self.kind!r}")
        # 1 == 1.0 == True in Python, so compare on (type-class, value)
        keys = [(type(v) is bool, v) for v in values]
        if len(set(keys)) != len(keys):
            raise ValueError(f"parameter {self.name!r} has duplicate values")
        if self.kind == "numeric":
            for v in values:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ValueError(f"numeric parameter {self.name!r} has value {v!r}")
                if not math.isfinite(v):
                    raise ValueError(f"numeric parameter {self.name!r} has non-finite value {v!r}")
        if self.kind == "boolean" and not all(isinstance(v, bool) for v in values):
            raise ValueError(f"boolean parameter {self.name!r} has non-boolean values")

    def __len__(self):
        return len(self.values)

    def rank(self, value) -> int:
        for i, v in enumerate(self.values):
            if v == value and isinstance(v, bool) == isinstance(value, bool):
                return i
        raise ValueError(f"{value!r} is not a value of parameter {self.name!r}")

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "values": list(self.values)}

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterDef":
        return cls(name=d["name"], values=tuple(d["values"]), kind=d.get("kind", ""))


@dataclass(frozen=True)
class Configuration:
    """One point of the search space.

    ``index`` is the position in the canonical enumeration of *valid*
    configurations, or ``None`` for a configuration pruned by restrictions.
    """

    values: tuple
    index: int | None = None

    def as_dict(self, space: "SearchSpace") -> dict:
        return dict(zip(space.names, self.values))


@dataclass(frozen=True, eq=False)
class SearchSpace:
    params: tuple[ParameterDef, ...]
    restrictions: tuple[Restriction, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "restrictions", tuple(self.restrictions))
        if not self.params:
            raise ValueError("a search space needs at least one parameter")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names in {names}")
        for r in self.restrictions:
            if r.param_names != tuple(names):
                raise ValueError(f"restriction {r.source!r} was parsed for a different parameter list")

    @classmethod
    def build(cls, params: Iterable, restrictions: Iterable[str] = ()) -> "SearchSpace":
        """Construct from parameter definitions (or dicts / (name, values) pairs)
        and restriction source strings."""
        defs = []
        for p in params:
            if isinstance(p, ParameterDef):
                defs.append(p)
            elif isinstance(p, dict):
                defs.append(ParameterDef.from_dict(p))
            else:
                name, values = p
                defs.append(ParameterDef(name, tuple(values)))
        parsed = tuple(parse_restriction(text, defs) for text in restrictions)
        return cls(tuple(defs), parsed)

    @property
    def dimension(self) -> int:
        return len(self.params)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    @property
    def cartesian_size(self) -> int:
        return math.prod(len(p) for p in self.params)

    @property
    def restriction_sources(self) -> tuple[str, ...]:
        return tuple(r.source for r in self.restrictions)

    def is_allowed(self, values: Sequence[Any]) -> bool:
        return all(r.evaluate(values) for r in self.restrictions)

    @cached_property
    def _valid_ranks(self) -> np.ndarray:
        ranges = [range(len(p)) for p in self.params]
        rows = []
        for ranks in itertools.product(*ranges):
            values = tuple(p.values[r] for p, r in zip(self.params, ranks))
            if self.is_allowed(values):
                rows.append(ranks)
        if not rows:
            raise EmptySearchSpaceError(
                f"restrictions {list(self.restriction_sources)} exclude all "
                f"{self.cartesian_size} configurations"
            )
        return np.array(rows, dtype=np.int64).reshape(len(rows), self.dimension)

    def enumerate_valid(self) -> list[Configuration]:
        """All configurations satisfying every restriction, in canonical order."""
        return list(self.configs)

    @cached_property
    def configs(self) -> tuple[Configuration, ...]:
        return tuple(
            Configuration(tuple(p.values[r] for p, r in zip(self.params, row)), i)
            for i, row in enumerate(self._valid_ranks.tolist())
        )

    def __len__(self) -> int:
        return len(self._valid_ranks)

    @cached_property
    def _index_by_ranks(self) -> dict[tuple, int]:
        return {tuple(row): i for i, row in enumerate(self._valid_ranks.tolist())}

    @cached_property
    def coords(self) -> np.ndarray:
        """Normalized coordinates of all valid configurations, shape (N, d)."""
        denom = np.array([max(len(p) - 1, 1) for p in self.params], dtype=float)
        return self._valid_ranks / denom

    @property
    def ranks(self) -> np.ndarray:
        return self._valid_ranks

    def ranks_of(self, values: Sequence[Any]) -> tuple[int, ...]:
        if len(values) != self.dimension:
            raise ValueError(f"expected {self.dimension} values, got {len(values)}")
        return tuple(p.rank(v) for p, v in zip(self.params, values))

    def index_of_ranks(self, ranks: Sequence[int]) -> int | None:
        return self._index_by_ranks.get(tuple(ranks))

    def index_of(self, values: Sequence[Any]) -> int | None:
        """Canonical index of a configuration, ``None`` if pruned by restrictions."""
        return self.index_of_ranks(self.ranks_of(values))

    def configuration(self, values: Sequence[Any]) -> Configuration:
        values = tuple(values)
        return Configuration(values, self.index_of(values))

    def normalize_value(self, dim: int, value) -> float:
        p = self.params[dim]
        return p.rank(value) / (len(p) - 1) if len(p) > 1 else 0.0

    def normalize(self, config: Configuration | Sequence[Any]) -> np.ndarray:
        values = config.values if isinstance(config, Configuration) else config
        if len(values) != self.dimension:
            raise ValueError(f"expected {self.dimension} values, got {len(values)}")
        return np.array([self.normalize_value(i, v) for i, v in enumerate(values)])

    def denormalize(self, point: Sequence[float]) -> Configuration:
        """Snap each coordinate to the nearest rank; exact ties go to the lower rank."""
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dimension,):
            raise ValueError(f"expected a point of dimension {self.dimension}")
        if np.any(~np.isfinite(point)) or np.any(point < 0.0) or np.any(point > 1.0):
            raise ValueError(f"coordinates must lie in [0, 1], got {point.tolist()}")
        ranks = []
        for p, c in zip(self.params, point):
            scaled = c * (len(p) - 1)
            ranks.append(min(int(math.ceil(scaled - 0.5)), len(p) - 1))
        values = tuple(p.values[r] for p, r in zip(self.params, ranks))
        return Configuration(values, self.index_of_ranks(ranks))

    def neighbors(self, index: int) -> list[int]:
        """Valid configurations differing by one rank step in a single parameter."""
        row = self._valid_ranks[index]
        out = []
        for dim, p in enumerate(self.params):
            for step in (-1, 1):
                r = row[dim] + step
                if 0 <= r < len(p):
                    cand = list(row)
                    cand[dim] = r
                    j = self.index_of_ranks(cand)
                    if j is not None:
                        out.append(j)
        return out

    def to_dict(self) -> dict:
        return {
            "parameters": [p.to_dict() for p in self.params],
            "restrictions": list(self.restriction_sources),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SearchSpace":
        return cls.build(d["parameters"], d.get("restrictions", ()))
