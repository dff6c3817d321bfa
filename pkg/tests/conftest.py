import numpy as np
import pytest

from ltavg.model import OscillatorParams


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def base():
    return OscillatorParams()


_RESULTS: list = []


def record(criterion: int, passed: bool, detail: str) -> None:
    line = f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    _RESULTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria")
