import logging

import numpy as np

from src.dynamics import service as dynamics
from src.dynamics.models import ControlInput
from src.env.models import ACTION_DIM, STATE_DIM
from src.exceptions import EmptyBufferError, EmptyMinibatchError, EnsembleSizeError, NonFiniteLossError
from src.neural import service as neural
from src.neural.models import MlpNetwork
from .models import (AgentConfig, CriticRule, DdpgAgent, EnsembleAgent, LearnReport, Minibatch, OuNoise,
                     ReplayBuffer, Transition)

logger = logging.getLogger(__name__)


def build_ensemble_agent(config: AgentConfig, rng: np.random.Generator) -> EnsembleAgent:
    actor_spec = neural.actor_spec(STATE_DIM, ACTION_DIM, config.hidden)
    critic_spec = neural.critic_spec(STATE_DIM, ACTION_DIM, config.hidden)
    critics = [neural.init_network(critic_spec, rng, lr=config.lr_critic, l2=config.l2)
               for _ in range(config.m_critics)]
    actors = [neural.init_network(actor_spec, rng, lr=config.lr_actor) for _ in range(config.n_actors)]
    last_actor = int(rng.integers(config.n_actors))
    logger.info(f"Built ensemble agent with {config.n_actors} actors and {config.m_critics} critics, "
                f"hidden={config.hidden}")
    return EnsembleAgent(actors, critics, config, last_actor=last_actor)


def build_ddpg_agent(config: AgentConfig, rng: np.random.Generator) -> DdpgAgent:
    critic = neural.init_network(neural.critic_spec(STATE_DIM, ACTION_DIM, config.hidden), rng,
                                 lr=config.lr_critic, l2=config.l2)
    actor = neural.init_network(neural.actor_spec(STATE_DIM, ACTION_DIM, config.hidden), rng,
                                lr=config.lr_actor)
    logger.info(f"Built DDPG agent, hidden={config.hidden}, tau_soft={config.tau_soft}")
    return DdpgAgent(actor, critic, neural.copy_network(actor), neural.copy_network(critic), config)


# --- replay buffer and exploration noise ---

def store(buffer: ReplayBuffer, transition: Transition) -> None:
    i = buffer.cursor
    buffer.states[i] = transition.s
    buffer.actions[i] = transition.a
    buffer.rewards[i] = transition.r
    buffer.next_states[i] = transition.s_next
    buffer.cursor = (i + 1) % buffer.capacity
    buffer.size = min(buffer.size + 1, buffer.capacity)


def sample(buffer: ReplayBuffer, n: int, rng: np.random.Generator) -> Minibatch:
    """Uniform sampling with replacement over the current contents."""
    if buffer.size == 0:
        raise EmptyBufferError()
    # live slots are always 0..size-1: the ring only wraps once it is full
    rows = rng.integers(buffer.size, size=n)
    return Minibatch(
        states=buffer.states[rows].copy(),
        actions=buffer.actions[rows].copy(),
        rewards=buffer.rewards[rows].copy(),
        next_states=buffer.next_states[rows].copy(),
    )


def ou_sample(noise: OuNoise, rng: np.random.Generator) -> np.ndarray:
    zeta = rng.standard_normal(noise.state.shape)
    noise.state = (noise.state + noise.theta * (noise.mean - noise.state) * noise.dt
                   + noise.sigma * np.sqrt(noise.dt) * zeta)
    return noise.state.copy()


def ou_reset(noise: OuNoise) -> None:
    noise.state = np.full_like(noise.state, noise.mean)


# --- acting ---

def scale_action(normalized: np.ndarray, action_scale: np.ndarray) -> np.ndarray:
    """Affine map of [-1, 1] onto [-bound, bound] per component."""
    return np.asarray(normalized) * action_scale


def average_policy(actors: list[MlpNetwork], s: np.ndarray) -> np.ndarray:
    outputs = [neural.forward(actor, s)[0] for actor in actors]
    return np.mean(outputs, axis=0)


def to_physical(normalized: np.ndarray, action_scale: np.ndarray) -> np.ndarray:
    tau = dynamics.saturate_input(ControlInput.from_array(scale_action(normalized, action_scale)),
                                  *action_scale)
    return tau.to_array()


def act(agent: EnsembleAgent | DdpgAgent, s: np.ndarray, explore: bool, rng: np.random.Generator) -> np.ndarray:
    a = average_policy(agent.actors, s)
    if explore:
        a = a + ou_sample(agent.noise, rng)
    return to_physical(a, agent.action_scale)


# --- MPQ-DPG building blocks ---

def q_values(critic: MlpNetwork, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    q, _ = neural.forward(critic, states, actions)
    return q[:, 0]


def eabe(critics: list[MlpNetwork], batch: Minibatch, actor: MlpNetwork, gamma: float,
         action_scale: np.ndarray) -> np.ndarray:
    """Mean absolute Bellman residual of each critic under the last-updated actor."""
    if len(batch) == 0:
        raise EmptyMinibatchError()
    next_actions = scale_action(neural.forward(actor, batch.next_states)[0], action_scale)
    values = []
    for critic in critics:
        residual = (q_values(critic, batch.states, batch.actions) - batch.rewards
                    - gamma * q_values(critic, batch.next_states, next_actions))
        values.append(np.mean(np.abs(residual)))
    return np.array(values)


def select_worst_critic(eabe_values: np.ndarray) -> int:
    return int(np.argmax(eabe_values))


def select_random_critic(m: int, rng: np.random.Generator) -> int:
    if m < 2:
        raise EnsembleSizeError(m)
    return int(rng.integers(m))


def sub_greedy(critic: MlpNetwork, actors: list[MlpNetwork], s_next: np.ndarray,
               action_scale: np.ndarray) -> np.ndarray:
    """Per state, the actor proposal the critic values highest (lowest actor index on ties)."""
    s_next = np.asarray(s_next, dtype=np.float64)
    single = s_next.ndim == 1
    states = np.atleast_2d(s_next)
    candidates = np.stack([scale_action(neural.forward(actor, states)[0], action_scale) for actor in actors])
    if len(actors) == 1:
        chosen = candidates[0]
    else:
        n, rows = candidates.shape[0], states.shape[0]
        q = q_values(critic, np.tile(states, (n, 1)), candidates.reshape(n * rows, -1)).reshape(n, rows)
        best = np.argmax(q, axis=0)
        chosen = candidates[best, np.arange(rows)]
    return chosen[0] if single else chosen


def mpq_target(critics: list[MlpNetwork], c: int, batch: Minibatch, next_actions: np.ndarray,
               gamma: float) -> np.ndarray:
    """r + gamma times the mean next-state value of every critic except c."""
    m = len(critics)
    if m < 2:
        raise EnsembleSizeError(m)
    next_actions = np.atleast_2d(next_actions)
    total = np.zeros(len(batch))
    for j, critic in enumerate(critics):
        if j != c:
            total += q_values(critic, batch.next_states, next_actions)
    return batch.rewards + gamma / (m - 1) * total


def critic_loss(critic: MlpNetwork, batch: Minibatch, targets: np.ndarray) -> float:
    diff = q_values(critic, batch.states, batch.actions) - targets
    return float(np.mean(diff ** 2))


def update_critic(critic: MlpNetwork, batch: Minibatch, targets: np.ndarray) -> float:
    """One Adam step on the squared error to fixed targets; returns the pre-step loss."""
    n = len(batch)
    q, cache = neural.forward(critic, batch.states, batch.actions)
    diff = q[:, 0] - targets
    loss = float(np.mean(diff ** 2))
    if not np.isfinite(loss):
        logger.error(f"Critic loss became non-finite: {loss}")
        raise NonFiniteLossError("critic", loss)
    grads = neural.backward_params(critic, cache, (2.0 / n * diff)[:, None])
    neural.adam_step(critic, grads)
    return loss


def actor_objective(actor: MlpNetwork, critic: MlpNetwork, states: np.ndarray, action_scale: np.ndarray) -> float:
    actions = scale_action(neural.forward(actor, states)[0], action_scale)
    return float(np.mean(q_values(critic, states, actions)))


def policy_gradient(actor: MlpNetwork, critic: MlpNetwork, states: np.ndarray,
                    action_scale: np.ndarray) -> tuple[neural.Gradients, float]:
    """Gradient of mean Q(s, scale * mu(s)) w.r.t. the actor parameters, chained through the action scaling."""
    n = states.shape[0]
    normalized, actor_cache = neural.forward(actor, states)
    q, critic_cache = neural.forward(critic, states, scale_action(normalized, action_scale))
    dq = neural.backward_input(critic, critic_cache, np.full((n, 1), 1.0 / n))
    grads = neural.backward_params(actor, actor_cache, dq.action * action_scale)
    return grads, float(np.mean(q))


def update_actor(actor: MlpNetwork, critic: MlpNetwork, batch: Minibatch, action_scale: np.ndarray) -> float:
    """One Adam ascent step along the deterministic policy gradient; returns the pre-step objective."""
    grads, objective = policy_gradient(actor, critic, batch.states, action_scale)
    if not np.isfinite(objective):
        logger.error(f"Actor objective became non-finite: {objective}")
        raise NonFiniteLossError("actor", objective)
    neural.adam_step(actor, neural.negate(grads), weight_decay_l2=0.0)
    return objective


def resample_actor(agent: EnsembleAgent, rng: np.random.Generator) -> int:
    agent.last_actor = int(rng.integers(len(agent.actors)))
    return agent.last_actor


def ready(agent: EnsembleAgent | DdpgAgent) -> bool:
    return len(agent.buffer) >= max(agent.config.warmup, 1)


def learn(agent: EnsembleAgent, rng: np.random.Generator, trace: list[str] | None = None) -> LearnReport | None:
    """Learning half of one MPQ-DPG iteration, run after the transition has been stored."""
    if not ready(agent):
        return None
    config = agent.config

    def mark(name: str):
        if trace is not None:
            trace.append(name)

    batch = sample(agent.buffer, config.minibatch, rng)
    mark("sample")
    if config.critic_rule == CriticRule.RANDOM:
        values = None
        c = select_random_critic(len(agent.critics), rng)
    else:
        values = eabe(agent.critics, batch, agent.actors[agent.last_actor], config.gamma, agent.action_scale)
        mark("eabe")
        c = select_worst_critic(values)
    mark("select_critic")
    critic = agent.critics[c]
    next_actions = sub_greedy(critic, agent.actors, batch.next_states, agent.action_scale)
    mark("sub_greedy")
    targets = mpq_target(agent.critics, c, batch, next_actions, config.gamma)
    mark("targets")
    loss = update_critic(critic, batch, targets)
    mark("critic_update")
    a = resample_actor(agent, rng)
    mark("resample_actor")
    objective = update_actor(agent.actors[a], critic, batch, agent.action_scale)
    mark("actor_update")
    logger.debug(f"EABE={values}, critic={c}, loss={loss:.6g}, actor={a}, objective={objective:.6g}")
    return LearnReport(critic=c, actor=a, critic_loss=loss, actor_objective=objective, eabe=values)


# --- DDPG baseline ---

def ddpg_update(agent: DdpgAgent, batch: Minibatch) -> LearnReport:
    config = agent.config
    target_actions = scale_action(neural.forward(agent.actor_target, batch.next_states)[0], agent.action_scale)
    targets = batch.rewards + config.gamma * q_values(agent.critic_target, batch.next_states, target_actions)
    loss = update_critic(agent.critic, batch, targets)
    objective = update_actor(agent.actor, agent.critic, batch, agent.action_scale)
    neural.soft_update(agent.critic_target, agent.critic, agent.tau_soft)
    neural.soft_update(agent.actor_target, agent.actor, agent.tau_soft)
    return LearnReport(critic=0, actor=0, critic_loss=loss, actor_objective=objective)


def ddpg_learn(agent: DdpgAgent, rng: np.random.Generator, trace: list[str] | None = None) -> LearnReport | None:
    if not ready(agent):
        return None
    batch = sample(agent.buffer, agent.config.minibatch, rng)
    if trace is not None:
        trace.append("sample")
    report = ddpg_update(agent, batch)
    if trace is not None:
        trace.append("ddpg_update")
    return report
