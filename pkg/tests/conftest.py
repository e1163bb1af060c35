import numpy as np
import pytest

from bivou.core import BivariateSample, Params, SamplingGrid
from bivou.simulate import SimConfig, make_rng, simulate_recursive


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow Monte Carlo tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def psi0():
    return Params.of(1.0, 1.0, 0.5, 15.0)


def draw(psi: Params, n: int, seed: int = 7, grid: str = "uniform") -> BivariateSample:
    """Seeded sample on a uniform (sorted) or equispaced grid."""
    g = SamplingGrid.equispaced(n) if grid == "equispaced" else SamplingGrid.uniform(n, make_rng(seed, (1,)))
    return simulate_recursive(SimConfig(params=psi, grid=g, seed=seed))


def random_params(rng, theta=(1.0, 30.0), sigma_sq=(0.3, 3.0), rho=(-0.8, 0.8)) -> Params:
    return Params.of(
        float(np.exp(rng.uniform(*np.log(sigma_sq)))),
        float(np.exp(rng.uniform(*np.log(sigma_sq)))),
        float(rng.uniform(*rho)),
        float(np.exp(rng.uniform(*np.log(theta)))),
    )


def replaced(psi: Params, **changes) -> Params:
    """Copy of psi with some fields changed, validated again."""
    return Params(**{**psi.model_dump(), **changes})
