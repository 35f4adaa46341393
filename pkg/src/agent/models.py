from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.dynamics.service import RUDDER_LIMIT, THRUST_LIMIT
from src.env.models import ACTION_DIM, STATE_DIM
from src.neural.models import MlpNetwork


class Algorithm(StrEnum):
    MPQ_DPG = "mpq-dpg"
    DDPG = "ddpg"


class CriticRule(StrEnum):
    EABE = "eabe"  # update the critic with the largest Bellman residual
    RANDOM = "random"  # update a uniformly drawn critic


class AgentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_actors: int = Field(2, ge=1)
    m_critics: int = Field(2, ge=1)
    critic_rule: CriticRule = CriticRule.EABE
    hidden: tuple[int, ...] = (400, 300)
    lr_actor: float = Field(1e-4, gt=0)
    lr_critic: float = Field(1e-3, gt=0)
    l2: float = Field(1e-2, ge=0)
    gamma: float = Field(0.99, gt=0, le=1)
    buffer_capacity: int = Field(10000, ge=1)
    minibatch: int = Field(64, ge=1)
    warmup: int = Field(64, ge=1, description="Buffer size required before any update")
    ou_theta: float = Field(0.15, ge=0)
    ou_sigma: float = Field(0.32, ge=0)
    tau_soft: float = Field(0.001, ge=0, le=1)
    thrust_limit: float = Field(THRUST_LIMIT, gt=0)
    rudder_limit: float = Field(RUDDER_LIMIT, gt=0)

    def action_scale(self) -> np.ndarray:
        return np.array([self.thrust_limit, self.rudder_limit])


@dataclass(frozen=True, slots=True)
class Transition:
    s: np.ndarray  # normalized state
    a: np.ndarray  # saturated physical action
    r: float
    s_next: np.ndarray


@dataclass(frozen=True, slots=True)
class Minibatch:
    states: np.ndarray  # (N, state_dim)
    actions: np.ndarray  # (N, action_dim)
    rewards: np.ndarray  # (N,)
    next_states: np.ndarray

    def __len__(self):
        return len(self.rewards)


class ReplayBuffer:
    """Bounded FIFO of transitions kept in preallocated ring arrays."""

    def __init__(self, capacity: int = 10000, state_dim: int = STATE_DIM, action_dim: int = ACTION_DIM):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def transitions(self) -> list[Transition]:
        """Current contents, oldest first."""
        start = self.cursor - self.size
        order = [(start + i) % self.capacity for i in range(self.size)]
        return [Transition(self.states[i].copy(), self.actions[i].copy(), float(self.rewards[i]),
                           self.next_states[i].copy()) for i in order]


@dataclass(slots=True)
class OuNoise:
    state: np.ndarray = field(default_factory=lambda: np.zeros(ACTION_DIM))
    theta: float = 0.15
    sigma: float = 0.32
    mean: float = 0.0
    dt: float = 1.0


class EnsembleAgent:
    """n actors and m critics trained without target networks."""

    def __init__(self, actors: list[MlpNetwork], critics: list[MlpNetwork], config: AgentConfig,
                 last_actor: int = 0):
        self.actors = actors
        self.critics = critics
        self.config = config
        self.buffer = ReplayBuffer(config.buffer_capacity)
        self.noise = OuNoise(theta=config.ou_theta, sigma=config.ou_sigma)
        self.last_actor = last_actor
        self.action_scale = config.action_scale()

    @property
    def networks(self) -> list[MlpNetwork]:
        return [*self.actors, *self.critics]


class DdpgAgent:
    def __init__(self, actor: MlpNetwork, critic: MlpNetwork, actor_target: MlpNetwork,
                 critic_target: MlpNetwork, config: AgentConfig):
        self.actor = actor
        self.critic = critic
        self.actor_target = actor_target
        self.critic_target = critic_target
        self.config = config
        self.tau_soft = config.tau_soft
        self.buffer = ReplayBuffer(config.buffer_capacity)
        self.noise = OuNoise(theta=config.ou_theta, sigma=config.ou_sigma)
        self.action_scale = config.action_scale()

    @property
    def actors(self) -> list[MlpNetwork]:
        return [self.actor]

    @property
    def networks(self) -> list[MlpNetwork]:
        return [self.actor, self.critic]


@dataclass(frozen=True, slots=True)
class LearnReport:
    critic: int
    actor: int
    critic_loss: float
    actor_objective: float
    eabe: np.ndarray | None = None
