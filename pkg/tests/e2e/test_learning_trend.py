import numpy as np
import pytest

from src.harness import service as harness_service
from src.harness.models import RunConfig

SEEDS = (0, 1, 2, 3, 4)


def smoke_rewards(tmp_path, algorithm: str, seed: int) -> np.ndarray:
    config = RunConfig(algorithm=algorithm, trajectory="rt1", n_actors=2, m_critics=2, hidden=(64, 64),
                       episodes=150, steps_per_episode=200, seed=seed,
                       out_dir=tmp_path / algorithm / f"seed_{seed}")
    return np.array([record.total_reward for record in harness_service.train(config).records])


@pytest.mark.slow
def test_mpq_dpg_smoke_run_improves(tmp_path):
    improved = 0
    for seed in SEEDS:
        rewards = smoke_rewards(tmp_path, "mpq-dpg", seed)
        if rewards[-20:].mean() > rewards[:20].mean():
            improved += 1
    assert improved >= 4


@pytest.mark.slow
def test_mpq_dpg_is_steadier_than_ddpg(tmp_path):
    steadier = 0
    for seed in SEEDS:
        ensemble = smoke_rewards(tmp_path, "mpq-dpg", seed)
        baseline = smoke_rewards(tmp_path, "ddpg", seed)
        tail = len(ensemble) // 3
        if np.std(ensemble[-tail:]) < np.std(baseline[-tail:]):
            steadier += 1
    assert steadier > len(SEEDS) // 2
