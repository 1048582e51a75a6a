from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

ROOT = Path(__file__).resolve().parents[1]

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


def repo_config() -> dict:
    with open(ROOT / "pyproject.toml", "rb") as fh:
        return tomllib.load(fh).get("tool", {}).get("sear", {})


@pytest.fixture(scope="session")
def sag_step_constant() -> float:
    return float(repo_config()["sag_step_constant"])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_separated(rng, n, k=2, min_dist=2.0, spread=None):
    """n points with pairwise distance >= min_dist, by plain rejection."""
    spread = spread if spread is not None else min_dist * (1.0 + np.sqrt(n)) * 1.5
    pts = []
    while len(pts) < n:
        c = rng.uniform(-spread, spread, size=k)
        if all(np.linalg.norm(c - q) >= min_dist for q in pts):
            pts.append(c)
    return np.array(pts)


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
