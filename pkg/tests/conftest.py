import numpy as np
import pytest

from bnsynth.dataset import BinaryDataset

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def four_rows():
    return BinaryDataset(np.array([[1, 1], [1, 0], [0, 1], [0, 0]]))


def random_dataset(rng, n, d, p=0.5):
    return BinaryDataset((rng.random((n, d)) < p).astype(np.uint8))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
