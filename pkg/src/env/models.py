import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.dynamics.models import ControlInput, VehicleState
from src.dynamics.service import RUDDER_LIMIT, THRUST_LIMIT

STATE_DIM = 10
ACTION_DIM = 2


class TrajectoryKind(StrEnum):
    RT1 = "rt1"  # shrinking circle
    RT2 = "rt2"  # sine wave along x


class ReferenceTrajectory(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: TrajectoryKind = TrajectoryKind.RT1


class InitialStateRanges(BaseModel):
    """Uniform sampling ranges (low, high) for each vehicle state component at reset."""

    model_config = ConfigDict(frozen=True)

    x: tuple[float, float]
    y: tuple[float, float] = (-1.0, 1.0)
    psi: tuple[float, float] = (math.pi / 4, 3 * math.pi / 4)
    u: tuple[float, float] = (1.0, 1.5)
    v: tuple[float, float] = (-0.3, 0.3)
    r: tuple[float, float] = (-0.2, 0.2)

    @field_validator("x", "y", "psi", "u", "v", "r")
    @classmethod
    def validate_range(cls, value):
        low, high = value
        if not (math.isfinite(low) and math.isfinite(high)) or low > high:
            raise ValueError(f"range must be finite with low <= high, got {value}")
        return value

    def low(self) -> np.ndarray:
        return np.array([self.x[0], self.y[0], self.psi[0], self.u[0], self.v[0], self.r[0]])

    def high(self) -> np.ndarray:
        return np.array([self.x[1], self.y[1], self.psi[1], self.u[1], self.v[1], self.r[1]])


def default_initial_ranges() -> dict[TrajectoryKind, InitialStateRanges]:
    return {
        TrajectoryKind.RT1: InitialStateRanges(x=(14.0, 16.0)),
        TrajectoryKind.RT2: InitialStateRanges(x=(-41.0, -39.0)),
    }


class NormalizationBounds(BaseModel):
    """Symmetric half-widths used to map the raw MDP state into [-1, 1]."""

    model_config = ConfigDict(frozen=True)

    position_bound: float = Field(60.0, gt=0, description="x, y, x^d, y^d (m)")
    yaw_bound: float = Field(math.pi, gt=0, description="psi (rad)")
    velocity_bound: float = Field(3.0, gt=0, description="u, v (m/s)")
    yaw_rate_bound: float = Field(2.0, gt=0, description="r (rad/s)")

    def half_widths(self) -> np.ndarray:
        p, w = self.position_bound, self.velocity_bound
        return np.array([p, p, self.yaw_bound, w, w, self.yaw_rate_bound, p, p, p, p])


class EpisodeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    ts: float = Field(0.1, gt=0, description="Sampling interval (s)")
    steps_per_episode: int = Field(1000, ge=1)
    H: tuple[tuple[float, float], tuple[float, float]] = ((0.001, 0.0), (0.0, 0.001))
    gamma: float = Field(0.99, gt=0, le=1)
    thrust_limit: float = Field(THRUST_LIMIT, gt=0)
    rudder_limit: float = Field(RUDDER_LIMIT, gt=0)
    initial_ranges: dict[TrajectoryKind, InitialStateRanges] = Field(default_factory=default_initial_ranges)
    bounds: NormalizationBounds = Field(default_factory=NormalizationBounds)

    @field_validator("H")
    @classmethod
    def validate_weight_matrix(cls, value):
        H = np.array(value, dtype=np.float64)
        if not np.allclose(H, H.T):
            raise ValueError("reward weight H must be symmetric")
        if np.any(np.linalg.eigvalsh(H) <= 0):
            raise ValueError("reward weight H must be positive definite")
        return value

    def weight_matrix(self) -> np.ndarray:
        return np.array(self.H, dtype=np.float64)


@dataclass(frozen=True, slots=True)
class MdpState:
    raw: np.ndarray  # [x, y, psi, u, v, r, x^d_k, y^d_k, x^d_k+1, y^d_k+1]
    normalized: np.ndarray

    @property
    def position(self) -> np.ndarray:
        return self.raw[0:2]

    @property
    def reference(self) -> np.ndarray:
        return self.raw[6:8]

    @property
    def tracking_error(self) -> np.ndarray:
        return self.raw[0:2] - self.raw[6:8]


@dataclass(frozen=True, slots=True)
class StepResult:
    state: MdpState
    reward: float
    step_index: int
    previous: MdpState
    action: ControlInput  # saturated, as executed
    vehicle: VehicleState  # post-step
