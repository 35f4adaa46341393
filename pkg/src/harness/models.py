from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.agent.models import AgentConfig, Algorithm, CriticRule
from src.dynamics.service import RUDDER_LIMIT, THRUST_LIMIT
from src.env.models import EpisodeConfig, NormalizationBounds, TrajectoryKind


class RunConfig(BaseModel):
    """Every knob of one training or evaluation run; defaults follow the published setup."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    algorithm: Algorithm = Algorithm.MPQ_DPG
    trajectory: TrajectoryKind = TrajectoryKind.RT1
    n_actors: int = Field(2, ge=1)
    m_critics: int = Field(2, ge=1)
    critic_rule: CriticRule = CriticRule.EABE
    episodes: int = Field(1500, ge=0)
    steps_per_episode: int = Field(1000, ge=1)
    seed: int = Field(0, ge=0)

    lr_actor: float = Field(1e-4, gt=0)
    lr_critic: float = Field(1e-3, gt=0)
    l2: float = Field(1e-2, ge=0)
    gamma: float = Field(0.99, gt=0, le=1)
    buffer_capacity: int = Field(10000, ge=1)
    minibatch: int = Field(64, ge=1)
    warmup: int = Field(64, ge=1)
    hidden: tuple[int, ...] = (400, 300)
    ou_theta: float = Field(0.15, ge=0)
    ou_sigma: float = Field(0.32, ge=0)
    tau_soft: float = Field(0.001, ge=0, le=1)

    ts: float = Field(0.1, gt=0)
    h_thrust: float = Field(0.001, gt=0)
    h_rudder: float = Field(0.001, gt=0)
    thrust_limit: float = Field(THRUST_LIMIT, gt=0)
    rudder_limit: float = Field(RUDDER_LIMIT, gt=0)
    position_bound: float = Field(60.0, gt=0)
    velocity_bound: float = Field(3.0, gt=0)
    yaw_rate_bound: float = Field(2.0, gt=0)

    out_dir: Path = Path("runs")
    log_every: int = Field(10, ge=1)

    @field_validator("hidden", mode="before")
    @classmethod
    def parse_hidden(cls, value):
        if isinstance(value, str):
            return tuple(int(part) for part in value.replace(" ", "").split(",") if part)
        return value

    @field_validator("hidden")
    @classmethod
    def validate_hidden(cls, value):
        if len(value) < 2 or any(width <= 0 for width in value):
            raise ValueError("hidden needs at least two positive widths")
        return value

    @model_validator(mode="after")
    def validate_ensemble(self):
        if self.algorithm == Algorithm.MPQ_DPG and self.m_critics < 2:
            raise ValueError(f"mpq-dpg requires m_critics >= 2, got {self.m_critics}")
        return self

    def agent_config(self) -> AgentConfig:
        return AgentConfig(
            n_actors=self.n_actors if self.algorithm == Algorithm.MPQ_DPG else 1,
            m_critics=self.m_critics if self.algorithm == Algorithm.MPQ_DPG else 1,
            critic_rule=self.critic_rule,
            hidden=self.hidden,
            lr_actor=self.lr_actor,
            lr_critic=self.lr_critic,
            l2=self.l2,
            gamma=self.gamma,
            buffer_capacity=self.buffer_capacity,
            minibatch=self.minibatch,
            warmup=self.warmup,
            ou_theta=self.ou_theta,
            ou_sigma=self.ou_sigma,
            tau_soft=self.tau_soft,
            thrust_limit=self.thrust_limit,
            rudder_limit=self.rudder_limit,
        )

    def episode_config(self) -> EpisodeConfig:
        return EpisodeConfig(
            ts=self.ts,
            steps_per_episode=self.steps_per_episode,
            H=((self.h_thrust, 0.0), (0.0, self.h_rudder)),
            gamma=self.gamma,
            thrust_limit=self.thrust_limit,
            rudder_limit=self.rudder_limit,
            bounds=NormalizationBounds(
                position_bound=self.position_bound,
                velocity_bound=self.velocity_bound,
                yaw_rate_bound=self.yaw_rate_bound,
            ),
        )


class EpisodeRecord(BaseModel):
    episode: int = Field(..., ge=1)
    total_reward: float = Field(..., le=0)
    steps: int
    wall_seconds: float
    explore: bool = True


class TrainResult(BaseModel):
    records: list[EpisodeRecord]
    final_checkpoint: Path
    best_checkpoint: Path | None = None
    csv_path: Path


class TrialStats(BaseModel):
    r_best: float
    r_av: float
    std_dev_r: float
    ir_n: float | None = None
    window: tuple[int, int]
    trials: int


class EvaluationSummary(BaseModel):
    trajectory: TrajectoryKind
    steps: int
    total_reward: float
    rms_error: float
    checkpoint: Path
    rollout_csv: Path
