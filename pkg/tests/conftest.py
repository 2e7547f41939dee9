from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from sparse_ucb import validate_instance

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_instance(rng: np.random.Generator, d_max: int = 8):
    """Zero bad arms, mu1 in [0.2, 1], distinct positive gaps among the good arms."""
    d = int(rng.integers(1, d_max + 1))
    s = int(rng.integers(1, d + 1))
    mu1 = float(rng.uniform(0.2, 1.0))
    others = np.sort(rng.uniform(0.0, mu1, size=s - 1))[::-1]
    others = others[(others > 0.0) & (others < mu1)]
    if others.size != s - 1 or np.unique(others).size != s - 1:
        return random_instance(rng, d_max)
    means = np.concatenate([[mu1], others, np.zeros(d - s)])
    return validate_instance(rng.permutation(means), s)


@st.composite
def sparse_instances(draw, d_max: int = 8):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_instance(np.random.default_rng(seed), d_max)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    def report(criterion: str, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
