import numpy as np
import pytest
from scipy import ndimage

from elreg.image import ImageGrid
from elreg.synth import phantom


def smooth_random(size=16, seed=0, sigma=2.0, height=None):
    """Band-limited random texture scaled to roughly [0, 100]."""
    rng = np.random.default_rng(seed)
    raw = ndimage.gaussian_filter(rng.normal(size=(height or size, size)), sigma, mode="reflect")
    raw = (raw - raw.min()) / (raw.max() - raw.min())
    return ImageGrid(100.0 * raw)


@pytest.fixture(scope="session")
def phantom256():
    return phantom(256, seed=0)


@pytest.fixture(scope="session")
def phantom64():
    return phantom(64, seed=0)


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def report_criterion():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number: int, title: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES[number] = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}"
        print(ACCEPTANCE_LINES[number])
        assert passed, ACCEPTANCE_LINES[number]

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
