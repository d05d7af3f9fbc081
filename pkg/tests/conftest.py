"""Shared fixtures and the acceptance-summary terminal hook."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import st_simdiff as s

settings.register_profile(
    "default",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def one_cut_grid() -> s.TokenGrid:
    """Canonical one-cut fixture: defaults (8x4x4, d=16), scene cut at frame 4."""
    return s.generate_synthetic(s.SyntheticSpec(cuts=(4,)))


@pytest.fixture(scope="session")
def static_grid() -> s.TokenGrid:
    """No cuts, no noise: every temporal edge weight is exactly 1.0."""
    return s.generate_synthetic(s.SyntheticSpec())


@pytest.fixture
def random_grid():
    """Factory for seeded random grids of a given shape."""

    def make(frames=4, height=3, width=3, dim=8, seed=0) -> s.TokenGrid:
        rng = np.random.default_rng(seed)
        feats = rng.normal(size=(frames, height, width, dim)).astype(np.float32)
        return s.TokenGrid.from_array(feats)

    return make


# ---- acceptance criterion reporting -------------------------------------

_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        _acceptance_results[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    try:
        from tests.test_acceptance import CRITERIA
    except ImportError:
        from test_acceptance import CRITERIA
    terminalreporter.section("acceptance criteria")
    for name, label in CRITERIA.items():
        outcome = _acceptance_results.get(name)
        if outcome is None:
            continue
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {label}")
