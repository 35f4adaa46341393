import math

import numpy as np
import pytest

from src.agent.models import AgentConfig
from src.dynamics.models import ModelCoefficients
from src.harness.models import RunConfig
from src.main import main
from src.neural import service as neural
from src.neural.models import Activation, LayerSpec, MlpNetwork, NetworkSpec

RUDDER_LIMIT = 13.6 * math.pi / 180.0


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long training acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="function")
def remus():
    return ModelCoefficients()


@pytest.fixture(scope="function")
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="function")
def tiny_actor(rng):
    return neural.init_network(neural.actor_spec(10, 2, (8, 6)), rng, lr=1e-3)


@pytest.fixture(scope="function")
def tiny_critic(rng):
    return neural.init_network(neural.critic_spec(10, 2, (8, 6)), rng, lr=1e-3, l2=0.0)


@pytest.fixture(scope="function")
def small_agent_config():
    return AgentConfig(n_actors=3, m_critics=3, hidden=(16, 16), minibatch=8, warmup=8, buffer_capacity=200)


@pytest.fixture(scope="function")
def run_config(tmp_path):
    return RunConfig(
        episodes=3,
        steps_per_episode=20,
        hidden=(16, 16),
        minibatch=8,
        warmup=8,
        buffer_capacity=500,
        seed=7,
        out_dir=tmp_path / "run",
    )


def constant_actor(value, state_dim: int = 10) -> MlpNetwork:
    """Single tanh layer whose output is `value` for every state."""
    value = np.asarray(value, dtype=np.float64)
    spec = NetworkSpec(layers=(LayerSpec(input_width=state_dim, output_width=len(value),
                                         activation=Activation.tanh),))
    return MlpNetwork(spec, [np.zeros((state_dim, len(value)))], [np.arctanh(value)])


def constant_critic(value: float, state_dim: int = 10, action_dim: int = 2) -> MlpNetwork:
    spec = neural.critic_spec(state_dim, action_dim, (4, 4))
    weights = [np.zeros((layer.input_width, layer.output_width)) for layer in spec.layers]
    biases = [np.zeros(layer.output_width) for layer in spec.layers]
    biases[-1][:] = value
    return MlpNetwork(spec, weights, biases, l2=0.0)


def thrust_critic(thrust_limit: float = 86.0) -> MlpNetwork:
    """Q(s, a) = 2 + thrust / thrust_limit for |thrust| <= thrust_limit."""
    spec = neural.critic_spec(10, 2, (1, 1))
    weights = [np.zeros((layer.input_width, layer.output_width)) for layer in spec.layers]
    biases = [np.zeros(layer.output_width) for layer in spec.layers]
    weights[1][1, 0] = 1.0 / thrust_limit
    biases[1][0] = 2.0
    weights[2][0, 0] = 1.0
    return MlpNetwork(spec, weights, biases, l2=0.0)


@pytest.fixture(scope="function")
def cli():
    return main


@pytest.fixture(scope="function")
def smoke_config_file(tmp_path):
    path = tmp_path / "smoke.cfg"
    path.write_text("hidden = 16,16\nminibatch = 8\nwarmup = 8\nbuffer_capacity = 500\nsteps_per_episode = 20\n")
    return path
