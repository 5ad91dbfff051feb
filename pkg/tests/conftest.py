import math

import numpy as np
import pytest

from wtp.model import SpongeSpec, canonical_weights

MCMULLEN_DIGITS = [(0, 0), (0, 2), (1, 1)]
# log(1 + 2^(log2/log3)) / log2, evaluated independently of the package
MCMULLEN_DIM = math.log(1 + 2 ** (math.log(2) / math.log(3))) / math.log(2)
# a1 log3 + a2 H(2/3, 1/3) for the uniform measure
UNIFORM_WEIGHTED_ENTROPY = math.log(3) / math.log(3) + (1 / math.log(2) - 1 / math.log(3)) * (
    math.log(3) - 2 / 3 * math.log(2)
)
MCMULLEN_BOX = 1 + math.log(1.5) / math.log(3)

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def carpet():
    return SpongeSpec((2, 3), MCMULLEN_DIGITS)


@pytest.fixture
def carpet_weights(carpet):
    return canonical_weights(carpet)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
