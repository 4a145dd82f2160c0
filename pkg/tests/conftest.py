import numpy as np
import pytest

from qdtree import ModelParams


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical checks")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["deterministic", "random"])
def variant(request):
    return request.param


@pytest.fixture
def params_small(variant):
    return ModelParams(0.3, variant, 1)


def disk_points(rng, n, r_max=1.0):
    """Uniform points in the disk of radius r_max."""
    r = r_max * np.sqrt(rng.random(n))
    a = rng.uniform(0, 2 * np.pi, n)
    return r * np.cos(a), r * np.sin(a)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[n]
        terminalreporter.write_line(mod._line(n, ok, detail))
