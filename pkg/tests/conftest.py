import logging

import numpy as np
import pytest

from multiphasetorsion.radial import PhaseConfig
from multiphasetorsion.settings import DEFAULTS, SolverSettings

# sample points and random fields are drawn from this seed only
SEED = 20240607


@pytest.fixture(autouse=True)
def restore_package_logger():
    # the command line replaces handlers and stops propagation
    logger = logging.getLogger("multiphasetorsion")
    state = (logger.handlers[:], logger.level, logger.propagate)
    yield
    logger.handlers, logger.level, logger.propagate = state


@pytest.fixture
def settings():
    return SolverSettings({}, DEFAULTS)


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def benchmark_config():
    return PhaseConfig((0.5, 1.0, 1.5), (2.0, 1.0, 3.0))


def disk_points(rng, radius, count):
    """
    Points uniformly distributed in the open disk of the given radius.
    """
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, count)) * (1.0 - 1e-9)
    theta = rng.uniform(0.0, 2.0 * np.pi, count)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


@pytest.fixture(scope="session")
def constructed():
    """
    The benchmark construction ``eta = 0.03 cos(3 theta)`` at the default
    truncation, shared because every call runs a full Newton solve.
    """
    from multiphasetorsion.constructor import ConstructionParams, construct
    from multiphasetorsion.fields import FourierField

    params = ConstructionParams.from_layers((0.5, 1.0, 1.5), (2.0, 1.0, 3.0))
    return construct(FourierField.mode(3, 0.03), params, SolverSettings({}, DEFAULTS))
