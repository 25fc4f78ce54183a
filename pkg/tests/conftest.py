import pytest

from pmedipole.config import config_from_dict
from pmedipole.experiment import run_experiment

HAT_RUN = {
    "m": 2.0,
    "initial": {"hat": {"peak": 1.0, "x1": 0.5, "x2": 1.5}},
    "t_end": 1280.0,
    "dx": 0.02,
    "checkpoints": {"first": 20.0, "ratio": 4.0},
}


@pytest.fixture(scope="session")
def hat_run():
    """A short m = 2 evolution from hat data, shared across test modules."""
    return run_experiment(config_from_dict(HAT_RUN))
