import pytest

from navsim.procgen import AreaSpec, EnvironmentSpec, generate_environment


def fetch_spec(seed: int = 7) -> EnvironmentSpec:
    """The canonical single-area fetch-and-deliver setup: one orange ball,
    red and green zones, five obstacles, one agent in a 10x10 room."""
    return EnvironmentSpec(seed=seed, areas=(
        AreaSpec(10, 10, obstacle_count=5, balls={"Orange": 1},
                 zones={"Red": 1, "Green": 1}, agents=1),))


@pytest.fixture(scope="session")
def demo_world():
    return generate_environment(fetch_spec())


@pytest.fixture
def demo_spec():
    return fetch_spec()
