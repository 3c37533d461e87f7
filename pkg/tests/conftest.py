import numpy as np
import pytest

from eigentomo import measurement as ms
from eigentomo import states as st

#: One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    mat = g @ g.conj().T
    return mat / np.trace(mat).real


def random_pure(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


@pytest.fixture(scope="session")
def bell_rho() -> st.DensityMatrix:
    return ms.bell_mixture()


@pytest.fixture(scope="session")
def bell_dataset(bell_rho) -> ms.MeasurementDataset:
    return ms.exact_dataset(bell_rho, ms.generate_basis_set(2, "full"))


@pytest.fixture(scope="session")
def w4_rho() -> st.DensityMatrix:
    return ms.make_w_mixture(4, [0.860, 0.063, 0.037], seed=7)
