"""Strategy identifiers and their tunable settings."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

__all__ = ["STRATEGIES", "BO_STRATEGIES", "StrategyConfig"]

BO_STRATEGIES = ("bo-advanced-multi", "bo-multi", "bo-ei", "bo-poi", "bo-lcb")
STRATEGIES = BO_STRATEGIES + ("random", "sa", "ga", "mls")


@dataclass(frozen=True)
class StrategyConfig:
    """Settings for one strategy. Defaults are the tuned values for the BO
    strategies; baseline settings only apply to their own strategy.

    ``lengthscale`` and ``gamma`` default to ``None``, meaning "pick the
    tuned value for the exploration mode / portfolio in use".
    """

    strategy: str = "bo-advanced-multi"
    budget: int = 220
    n_init: int = 20
    seed: int = 0
    invalid_costs: bool = True
    # surrogate
    nu: float = 1.5
    lengthscale: float | None = None
    noise: float = 0.0
    jitter: float = 1e-6
    # acquisition
    exploration: str | float = "contextual"
    gamma: float | None = None
    required_improvement: float = 0.1
    skip_threshold: int = 5
    afs: tuple[str, ...] = ("ei", "poi", "lcb")
    lhs_restarts: int = 50
    # baselines
    sa_t0: float = 1.0
    sa_cooling: float = 0.995
    ga_population: int = 20
    ga_tournament: int = 3
    ga_crossover: float = 0.7
    ga_mutation: float = 0.1
    ga_rerolls: int = 5
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {', '.join(STRATEGIES)}")
        if isinstance(self.exploration, str) and self.exploration != "contextual":
            try:
                object.__setattr__(self, "exploration", float(self.exploration))
            except ValueError:
                raise ValueError(f"exploration must be 'contextual' or a number, got {self.exploration!r}")
        if not isinstance(self.exploration, str) and self.exploration < 0:
            raise ValueError("a constant exploration factor must be >= 0")
        object.__setattr__(self, "afs", tuple(self.afs))
        if self.budget < 1:
            raise ValueError("budget must be positive")

    @property
    def name(self) -> str:
        return self.label or self.strategy

    @property
    def contextual(self) -> bool:
        return self.exploration == "contextual"

    @property
    def effective_lengthscale(self) -> float:
        if self.lengthscale is not None:
            return self.lengthscale
        return 1.5 if self.contextual else 2.0

    @property
    def effective_gamma(self) -> float:
        if self.gamma is not None:
            return self.gamma
        return 0.65 if self.strategy == "bo-multi" else 0.75

    @classmethod
    def from_dict(cls, d: dict) -> "StrategyConfig":
        """Build from a mapping, rejecting keys that are not settings."""
        d = dict(d)
        if "id" in d:
            d["strategy"] = d.pop("id")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown strategy settings: {', '.join(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "StrategyConfig":
        known = {f.name for f in dataclasses.fields(self)}
        unknown = sorted(set(changes) - known)
        if unknown:
            raise ValueError(f"unknown strategy settings: {', '.join(unknown)}")
        return dataclasses.replace(self, **changes)
