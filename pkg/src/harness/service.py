import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from dotenv import dotenv_values
from pydantic import ValidationError

from src.agent import service as agent_service
from src.agent.models import Algorithm, DdpgAgent, EnsembleAgent, LearnReport, Transition
from src.dynamics import service as dynamics
from src.dynamics.models import ControlInput, VehicleState
from src.env.models import ACTION_DIM, STATE_DIM, MdpState, ReferenceTrajectory, StepResult
from src.env.service import ROLLOUT_COLUMNS, TrackingEnv, rollout_row
from src.exceptions import (ArtifactIOError, CheckpointVersionError, CsvParseError, InvalidRunConfigError,
                            StatsWindowError, UsageError)
from src.log_config import attach_log_file, detach_log_file
from src.neural import checkpoint
from src.neural.models import MlpNetwork
from .models import EpisodeRecord, EvaluationSummary, RunConfig, TrainResult, TrialStats

logger = logging.getLogger(__name__)

TRAINING_COLUMNS = ["episode", "total_reward", "steps", "seconds"]
SIMULATION_COLUMNS = ["step", "t", "x", "y", "psi", "u", "v", "r"]
GENERATOR_NAMES = ("init", "env", "noise", "learn")
DEFAULT_WINDOW = (500, 1500)


# --- configuration ---

def load_run_config(path: Path | None = None, **overrides) -> RunConfig:
    """Defaults, then the `key = value` file, then explicit overrides."""
    values = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ArtifactIOError(path, "config file not found")
        file_values = dotenv_values(path)
        unknown = sorted(set(file_values) - set(RunConfig.model_fields))
        if unknown:
            logger.error(f"Unknown keys in {path}: {unknown}")
            raise InvalidRunConfigError(f"unknown keys {unknown} in {path}")
        values.update({key: value for key, value in file_values.items() if value is not None})
    values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return RunConfig(**values)
    except ValidationError as e:
        logger.error(f"Run configuration rejected: {str(e)}")
        raise InvalidRunConfigError(str(e))


def make_generators(seed: int) -> dict[str, np.random.Generator]:
    """Independent streams per concern so that changing one consumer never shifts another."""
    children = np.random.SeedSequence(seed).spawn(len(GENERATOR_NAMES))
    return {name: np.random.default_rng(child) for name, child in zip(GENERATOR_NAMES, children)}


def build_agent(config: RunConfig, rng: np.random.Generator) -> EnsembleAgent | DdpgAgent:
    if config.algorithm == Algorithm.DDPG:
        return agent_service.build_ddpg_agent(config.agent_config(), rng)
    return agent_service.build_ensemble_agent(config.agent_config(), rng)


def build_env(config: RunConfig) -> TrackingEnv:
    return TrackingEnv(ReferenceTrajectory(kind=config.trajectory), config.episode_config())


# --- training ---

def training_step(agent: EnsembleAgent | DdpgAgent, env: TrackingEnv, state: MdpState,
                  rngs: dict[str, np.random.Generator],
                  trace: list[str] | None = None) -> tuple[StepResult, LearnReport | None]:
    action = agent_service.act(agent, state.normalized, explore=True, rng=rngs["noise"])
    if trace is not None:
        trace.append("act")
    result = env.step(action)
    if trace is not None:
        trace.append("env_step")
    agent_service.store(agent.buffer, Transition(s=state.normalized, a=result.action.to_array(),
                                                 r=result.reward, s_next=result.state.normalized))
    if trace is not None:
        trace.append("store")
    if isinstance(agent, EnsembleAgent):
        report = agent_service.learn(agent, rngs["learn"], trace)
    else:
        report = agent_service.ddpg_learn(agent, rngs["learn"], trace)
    return result, report


def run_episode(agent: EnsembleAgent | DdpgAgent, env: TrackingEnv, rngs: dict[str, np.random.Generator],
                episode: int) -> EpisodeRecord:
    started = time.perf_counter()
    agent_service.ou_reset(agent.noise)
    state = env.reset(rngs["env"])
    total = 0.0
    while not env.exhausted:
        result, _ = training_step(agent, env, state, rngs)
        total += result.reward
        state = result.state
    return EpisodeRecord(episode=episode, total_reward=total, steps=env.k,
                         wall_seconds=time.perf_counter() - started, explore=True)


def save_checkpoint(path: Path, agent: EnsembleAgent | DdpgAgent) -> Path:
    return checkpoint.save_networks(path, agent.networks)


def load_checkpoint(path: Path) -> list[MlpNetwork]:
    return checkpoint.load_networks(path)


def train(config: RunConfig) -> TrainResult:
    out_dir = Path(config.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ArtifactIOError(out_dir, str(e))
    csv_path = out_dir / "train.csv"
    final_path = out_dir / "final.ckpt"
    best_path = out_dir / "best.ckpt"
    handler = attach_log_file(out_dir / "train.log")

    try:
        (out_dir / "config.json").write_text(config.model_dump_json(indent=2))
        logger.info(f"Training {config.algorithm} on {config.trajectory} for {config.episodes} episodes, "
                    f"seed={config.seed}, out={out_dir}")
        rngs = make_generators(config.seed)
        agent = build_agent(config, rngs["init"])
        env = build_env(config)

        records: list[EpisodeRecord] = []
        best_reward = -math.inf
        with csv_path.open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(TRAINING_COLUMNS)
            f.flush()
            for episode in range(1, config.episodes + 1):
                record = run_episode(agent, env, rngs, episode)
                records.append(record)
                writer.writerow([record.episode, record.total_reward, record.steps,
                                 round(record.steps * config.ts, 9)])
                f.flush()
                if record.total_reward > best_reward:
                    best_reward = record.total_reward
                    save_checkpoint(best_path, agent)
                if episode == 1 or episode % config.log_every == 0:
                    logger.info(f"Episode {episode}/{config.episodes}: total reward {record.total_reward:.2f} "
                                f"({record.wall_seconds:.1f}s)")
    except OSError as e:
        logger.error(f"Training I/O failed in {out_dir}. Error: {str(e)}")
        raise ArtifactIOError(out_dir, str(e))
    finally:
        detach_log_file(handler)

    save_checkpoint(final_path, agent)
    logger.info(f"Finished training: {len(records)} episodes, best total reward {best_reward:.2f}")
    return TrainResult(records=records, final_checkpoint=final_path,
                       best_checkpoint=best_path if records else None, csv_path=csv_path)


def trial_configs(config: RunConfig, trials: int) -> list[RunConfig]:
    base = Path(config.out_dir)
    return [config.model_copy(update={"seed": config.seed + i, "out_dir": base / f"seed_{config.seed + i}"})
            for i in range(trials)]


def train_trials(config: RunConfig, trials: int, workers: int = 1) -> list[TrainResult]:
    """Independent seeds seed, seed+1, ...; each run is isolated in its own directory."""
    configs = trial_configs(config, trials)
    if workers <= 1 or trials == 1:
        return [train(trial) for trial in configs]
    logger.info(f"Dispatching {trials} trials over {workers} worker processes")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(train, configs))


# --- evaluation ---

def policy_actors(nets: list[MlpNetwork], source: Path) -> list[MlpNetwork]:
    actors = [net for net in nets if not net.spec.is_critic]
    if not actors:
        raise CheckpointVersionError(source, "no actor networks found")
    for actor in actors:
        if actor.spec.input_width != STATE_DIM or actor.spec.output_width != ACTION_DIM:
            raise CheckpointVersionError(
                source, f"actor maps {actor.spec.input_width} -> {actor.spec.output_width}, "
                        f"expected {STATE_DIM} -> {ACTION_DIM}")
    return actors


def write_rows(path: Path, columns: list[str], rows: list[dict]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=columns)
            writer.writeheader()
            writer.writerows(rows)
    except OSError as e:
        logger.error(f"Failed to write {path}. Error: {str(e)}")
        raise ArtifactIOError(path, str(e))
    return path


def evaluate(checkpoint_path: Path, config: RunConfig, out_dir: Path | None = None,
             initial: VehicleState | None = None) -> EvaluationSummary:
    """One noise-free episode under the average policy of the checkpoint's actors."""
    checkpoint_path = Path(checkpoint_path)
    actors = policy_actors(load_checkpoint(checkpoint_path), checkpoint_path)
    out_dir = Path(out_dir or config.out_dir)
    action_scale = config.agent_config().action_scale()

    env = build_env(config)
    state = env.reset(make_generators(config.seed)["env"], initial)
    rows, total = [], 0.0
    while not env.exhausted:
        action = agent_service.to_physical(agent_service.average_policy(actors, state.normalized), action_scale)
        result = env.step(action)
        rows.append(rollout_row(result, config.ts))
        total += result.reward
        state = result.state

    rms_error = math.sqrt(float(np.mean([row["err_norm"] ** 2 for row in rows])))
    rollout_csv = write_rows(out_dir / "rollout.csv", ROLLOUT_COLUMNS, rows)
    summary = EvaluationSummary(trajectory=config.trajectory, steps=len(rows), total_reward=total,
                                rms_error=rms_error, checkpoint=checkpoint_path, rollout_csv=rollout_csv)
    try:
        (out_dir / "summary.json").write_text(summary.model_dump_json(indent=2))
    except OSError as e:
        raise ArtifactIOError(out_dir / "summary.json", str(e))
    logger.info(f"Evaluated {checkpoint_path} on {config.trajectory}: total reward {total:.2f}, "
                f"RMS error {rms_error:.4f} m")
    return summary


# --- statistics ---

def read_training_csv(path: Path) -> np.ndarray:
    path = Path(path)
    rewards = []
    try:
        with path.open(newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or "total_reward" not in reader.fieldnames:
                raise CsvParseError(path, 1, "missing total_reward column")
            for row_number, row in enumerate(reader, start=2):
                try:
                    rewards.append(float(row["total_reward"]))
                except (TypeError, ValueError):
                    raise CsvParseError(path, row_number, f"bad total_reward {row.get('total_reward')!r}")
    except OSError as e:
        logger.error(f"Failed to read {path}. Error: {str(e)}")
        raise ArtifactIOError(path, str(e))
    return np.array(rewards)


def stats(sequences, window: tuple[int, int] = DEFAULT_WINDOW, baseline_r_av: float | None = None) -> TrialStats:
    """Table statistics over the trial-averaged reward sequence; the window is 1-based and inclusive."""
    sequences = [np.asarray(sequence, dtype=np.float64) for sequence in sequences]
    if not sequences:
        raise UsageError("stats needs at least one reward sequence")
    lengths = {len(sequence) for sequence in sequences}
    if len(lengths) != 1:
        raise UsageError(f"reward sequences differ in length: {sorted(lengths)}")
    averaged = np.mean(np.stack(sequences), axis=0)

    start, end = window
    if start < 1 or start > end or end > len(averaged):
        raise StatsWindowError(window, len(averaged))
    segment = averaged[start - 1:end]
    r_av = float(np.mean(segment))

    ir_n = None
    if baseline_r_av is not None:
        if baseline_r_av == 0:
            raise UsageError("baseline R_av must be non-zero")
        ir_n = 1.0 - r_av / baseline_r_av
    return TrialStats(r_best=float(np.max(averaged)), r_av=r_av, std_dev_r=float(np.std(segment)),
                      ir_n=ir_n, window=(start, end), trials=len(sequences))


def stats_from_csvs(paths: list[Path], window: tuple[int, int] = DEFAULT_WINDOW,
                    baseline_paths: list[Path] | None = None, baseline_r_av: float | None = None) -> TrialStats:
    if baseline_paths:
        baseline_r_av = stats([read_training_csv(p) for p in baseline_paths], window).r_av
        logger.info(f"Baseline R_av over {window}: {baseline_r_av:.3f}")
    return stats([read_training_csv(p) for p in paths], window, baseline_r_av)


# --- open-loop simulation ---

def simulate_open_loop(thrust: float, rudder: float, duration: float, ts: float = 0.1,
                       initial: VehicleState | None = None) -> list[dict]:
    states = dynamics.simulate(initial or VehicleState(), ControlInput(thrust=thrust, rudder=rudder),
                               duration, ts=ts)
    return [{"step": k, "t": k * ts, **{name: getattr(s, name) for name in SIMULATION_COLUMNS[2:]}}
            for k, s in enumerate(states)]


def summary_json(model) -> str:
    return json.dumps(model.model_dump(mode="json"), indent=2)
