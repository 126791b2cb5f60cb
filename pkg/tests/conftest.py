import numpy as np
import pytest

from seqconic import RocketParams, solve_landing


def envelope_point(rng: np.random.Generator):
    """Random state/control inside the powered-flight envelope."""
    x = np.array(
        [
            rng.uniform(86e3, 100e3),
            rng.uniform(0.0, 1200.0),
            rng.uniform(-200.0, 200.0),
            rng.uniform(-120.0, 120.0),
            rng.uniform(-40.0, 40.0),
            rng.uniform(-1.8, 1.8),
            rng.uniform(-0.3, 0.3),
        ]
    )
    # keep the speed away from the aero cutoff so derivatives are smooth
    if np.hypot(x[3], x[4]) < 5.0:
        x[3] += 10.0
    u = np.array([rng.uniform(0.0, 6.6e6), rng.uniform(-0.18, 0.18)])
    return x, u


@pytest.fixture(scope="session")
def default_params() -> RocketParams:
    return RocketParams()


@pytest.fixture(scope="session")
def default_landing():
    """One full default solve shared by the end-to-end tests."""
    return solve_landing()


@pytest.fixture(scope="session")
def run_dir(tmp_path_factory):
    """One CLI default run shared across the CLI, acceptance, and plot tests."""
    from seqconic.cli import main

    out = tmp_path_factory.mktemp("cli_run")
    code = main(["run", "--default", "--out", str(out)])
    assert code == 0
    return out
