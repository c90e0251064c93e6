import pytest

from dme_driver.config import ModelConfig
from dme_driver.dataset import build_vocabulary
from dme_driver.models.logic import DecisionCategory
from dme_driver.models.scene import EgoStatus, GridSpec, Lane, Scene, Trajectory
from dme_driver.sim.generator import generate_scene
from dme_driver.sim.raster import occupancy_series

STRAIGHT_LANE = Lane(((-9.0, 0.0), (0.0, 0.0), (48.0, 0.0)))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run tests marked slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def vocab():
    return build_vocabulary()


@pytest.fixture
def small_model():
    return ModelConfig(dim=8, num_heads=2, hidden=8, max_len=64)


@pytest.fixture
def make_scene():
    """Hand-built scene on the default grid; the expert drives straight at the ego speed unless given."""

    def _make(agents=(), tag=DecisionCategory.FORWARD, speed=5.0, expert=None, seed=0, lane=STRAIGHT_LANE):
        agents = tuple(agents)
        spec = GridSpec()
        if expert is None:
            expert = [(speed * 0.5 * (k + 1), 0.0) for k in range(6)]
        return Scene(
            seed=seed,
            ego=EgoStatus(speed),
            agents=agents,
            lane=lane,
            tag=tag,
            expert=Trajectory.from_points(expert),
            occupancy=occupancy_series(agents, spec),
            grid=spec,
        )

    return _make


@pytest.fixture(scope="session")
def generated_scenes():
    return [generate_scene(seed) for seed in range(1, 7)]
