import numpy as np
import pytest

from deltachain import sampling
from deltachain.transfer import ModelConfig


@pytest.fixture
def certified():
    """c = (1, 0, 1), Bernoulli{0,1} on channels 1 and 3, channel 2 frozen at 0."""
    cfg = ModelConfig((1.0, 0.0, 1.0), "lifted")
    spec = sampling.bernoulli(3, 0.0, 1.0, 0.5, frozen={1: 0.0})
    return cfg, spec


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] #{n:<2d} {line}")
