import numpy as np
import pytest

from bayestune.evaluation import Measurement
from bayestune.simulator import MeasurementCache, SyntheticSpec, gen_synthetic
from bayestune.space import SearchSpace


def with_random_invalid(cache: MeasurementCache, fraction: float, seed: int = 0) -> MeasurementCache:
    """Copy of ``cache`` with an exact ``fraction`` of entries marked runtime-invalid,
    never touching the global minimum."""
    rng = np.random.default_rng(seed)
    n = len(cache.measurements)
    count = int(round(fraction * n))
    keep = cache.argmin
    pool = np.array([i for i in range(n) if i != keep])
    bad = set(rng.choice(pool, size=count, replace=False).tolist())
    measurements = [
        Measurement(invalid="runtime_error") if i in bad else m
        for i, m in enumerate(cache.measurements)
    ]
    return MeasurementCache(cache.space, measurements, kernel_name=cache.kernel_name + "-holes")


@pytest.fixture(scope="session")
def rosen_small():
    return gen_synthetic(SyntheticSpec("rosenbrock-disc", (20, 20)))


@pytest.fixture(scope="session")
def rough_small():
    return gen_synthetic(SyntheticSpec("random-rough", (8, 8, 8), seed=3))


@pytest.fixture(scope="session")
def holey_cache():
    base = gen_synthetic(SyntheticSpec("random-rough", (12, 12, 12), seed=11))
    return with_random_invalid(base, 0.385, seed=5)


@pytest.fixture
def small_space():
    return SearchSpace.build([("p", [1, 2, 4]), ("q", ["a", "b"])], ["not (p == 4 and q == 'b')"])


# Acceptance verdicts, printed once at the end of the session ------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
