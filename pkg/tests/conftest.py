import os

import numpy as np
import pytest

from edr.measurement import MarginalPovm, ProjectiveBasis
from edr.operators import inverse_sqrt, random_unitary

SEED = int(os.environ.get("EDR_SEED", "0"))

# filled by tests/test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


def random_marginal(n: int, rng: np.random.Generator, outcomes: int | None = None) -> np.ndarray:
    """Effects ``T^{-1/2} G_a T^{-1/2}`` from Gaussian factors; always a valid POVM."""
    k = n if outcomes is None else outcomes
    c = rng.normal(size=(k, n, n)) + 1j * rng.normal(size=(k, n, n))
    g = np.swapaxes(c.conj(), -1, -2) @ c
    t = inverse_sqrt(g.sum(axis=0))
    return t @ g @ t


def random_marginal_povm(n, rng):
    return MarginalPovm(random_marginal(n, rng))


def random_basis(n, rng):
    return ProjectiveBasis.from_columns(random_unitary(n, rng))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
