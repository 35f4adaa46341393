import logging
import math

import numpy as np

from src.dynamics import service as dynamics
from src.dynamics.models import ControlInput, ModelCoefficients, VehicleState
from src.exceptions import ConfigurationError, EpisodeExhaustedError, UsageError
from .models import (EpisodeConfig, MdpState, NormalizationBounds, ReferenceTrajectory, StepResult,
                     TrajectoryKind)

logger = logging.getLogger(__name__)

ROLLOUT_COLUMNS = ["step", "t", "x", "y", "x_d", "y_d", "err_norm", "thrust", "rudder", "reward"]


def reference_point(traj: ReferenceTrajectory, t: float) -> tuple[float, float]:
    if traj.kind == TrajectoryKind.RT1:
        radius = 15.0 - 0.1 * t
        angle = math.pi / 20.0 * t
        return radius * math.cos(angle), radius * math.sin(angle)
    return 0.8 * t - 40.0, 10.0 * math.sin(math.pi / 25.0 * t)


def state_bounds(bounds: NormalizationBounds) -> tuple[np.ndarray, np.ndarray]:
    half = bounds.half_widths()
    return -half, half


def normalize(raw: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    """Componentwise affine map of [low, high] onto [-1, 1], clipped."""
    low = np.asarray(low, dtype=np.float64)
    high = np.asarray(high, dtype=np.float64)
    width = high - low
    if not (np.all(np.isfinite(width)) and np.all(width > 0)):
        raise ConfigurationError("Normalization bounds must be finite with positive width")
    scaled = 2.0 * (np.asarray(raw, dtype=np.float64) - low) / width - 1.0
    return np.clip(scaled, -1.0, 1.0)


def build_state(vehicle: VehicleState, traj: ReferenceTrajectory, k: int, config: EpisodeConfig) -> MdpState:
    d_k = reference_point(traj, k * config.ts)
    d_next = reference_point(traj, (k + 1) * config.ts)
    raw = np.concatenate([vehicle.to_array(), d_k, d_next])
    low, high = state_bounds(config.bounds)
    return MdpState(raw=raw, normalized=normalize(raw, low, high))


def reward(state: MdpState, action: ControlInput, H: np.ndarray) -> float:
    error = state.tracking_error
    a = action.to_array()
    return -float(error @ error + a @ np.asarray(H) @ a)


def performance(errors: np.ndarray, actions: np.ndarray, H: np.ndarray, gamma: float) -> float:
    """Discounted sum of quadratic tracking and control costs from the first sample on."""
    errors = np.atleast_2d(np.asarray(errors, dtype=np.float64))
    actions = np.atleast_2d(np.asarray(actions, dtype=np.float64))
    costs = np.einsum("ij,ij->i", errors, errors) + np.einsum("ij,jk,ik->i", actions, np.asarray(H), actions)
    discounts = gamma ** np.arange(len(costs))
    return float(np.sum(discounts * costs))


def discounted_return(rewards, gamma: float) -> float:
    rewards = np.asarray(rewards, dtype=np.float64)
    return float(np.sum(gamma ** np.arange(len(rewards)) * rewards))


def sample_initial_vehicle(traj: ReferenceTrajectory, config: EpisodeConfig, rng: np.random.Generator) -> VehicleState:
    ranges = config.initial_ranges[traj.kind]
    return VehicleState.from_array(rng.uniform(ranges.low(), ranges.high()))


class TrackingEnv:
    """Fixed-horizon trajectory tracking task around the REMUS dynamics."""

    def __init__(self, traj: ReferenceTrajectory, config: EpisodeConfig = EpisodeConfig(),
                 coeffs: ModelCoefficients = dynamics.REMUS):
        self.traj = traj
        self.config = config
        self.coeffs = coeffs
        self.H = config.weight_matrix()
        self.vehicle: VehicleState | None = None
        self.state: MdpState | None = None
        self.k = 0

    def reset(self, rng: np.random.Generator, initial: VehicleState | None = None) -> MdpState:
        if initial is None:
            initial = sample_initial_vehicle(self.traj, self.config, rng)
        self.vehicle = VehicleState(initial.x, initial.y, dynamics.wrap_angle(initial.psi),
                                    initial.u, initial.v, initial.r)
        self.k = 0
        self.state = build_state(self.vehicle, self.traj, 0, self.config)
        logger.debug(f"Reset {self.traj.kind} episode at {self.vehicle}")
        return self.state

    @property
    def exhausted(self) -> bool:
        return self.k >= self.config.steps_per_episode

    def step(self, action) -> StepResult:
        if self.state is None:
            raise UsageError("Environment must be reset before stepping")
        if self.exhausted:
            raise EpisodeExhaustedError(self.config.steps_per_episode)

        tau = dynamics.saturate_input(ControlInput.from_array(action), self.config.thrust_limit,
                                      self.config.rudder_limit)
        previous = self.state
        r = reward(previous, tau, self.H)

        self.vehicle = dynamics.step(self.vehicle, tau, self.coeffs, self.config.ts)
        self.k += 1
        self.state = build_state(self.vehicle, self.traj, self.k, self.config)
        return StepResult(state=self.state, reward=r, step_index=self.k, previous=previous,
                          action=tau, vehicle=self.vehicle)


def rollout_row(result: StepResult, ts: float) -> dict:
    k = result.step_index - 1
    x, y = result.previous.position
    x_d, y_d = result.previous.reference
    return {
        "step": k,
        "t": k * ts,
        "x": float(x),
        "y": float(y),
        "x_d": float(x_d),
        "y_d": float(y_d),
        "err_norm": float(np.linalg.norm(result.previous.tracking_error)),
        "thrust": result.action.thrust,
        "rudder": result.action.rudder,
        "reward": result.reward,
    }
