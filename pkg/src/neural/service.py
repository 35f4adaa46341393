import logging
import math

import numpy as np

from src.exceptions import NetworkShapeError
from .models import (Activation, ForwardCache, Gradients, InputGradient, LayerSpec, MlpNetwork,
                     NetworkSpec)

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8
FINAL_LAYER_RANGE = 3e-3


def actor_spec(state_dim: int, action_dim: int, hidden: tuple[int, ...] = (400, 300)) -> NetworkSpec:
    widths = [state_dim, *hidden]
    layers = [LayerSpec(input_width=a, output_width=b, activation=Activation.relu)
              for a, b in zip(widths[:-1], widths[1:])]
    layers.append(LayerSpec(input_width=widths[-1], output_width=action_dim, activation=Activation.tanh))
    return NetworkSpec(layers=tuple(layers))


def critic_spec(state_dim: int, action_dim: int, hidden: tuple[int, ...] = (400, 300)) -> NetworkSpec:
    """Q(s, a) with the action concatenated onto the first hidden layer's output."""
    if len(hidden) < 2:
        raise NetworkShapeError(expected="at least 2 hidden layers", got=len(hidden), what="critic topology")
    layers = [LayerSpec(input_width=state_dim, output_width=hidden[0], activation=Activation.relu)]
    layers.append(LayerSpec(input_width=hidden[0] + action_dim, output_width=hidden[1],
                            activation=Activation.relu))
    for a, b in zip(hidden[1:-1], hidden[2:]):
        layers.append(LayerSpec(input_width=a, output_width=b, activation=Activation.relu))
    layers.append(LayerSpec(input_width=hidden[-1], output_width=1, activation=Activation.linear))
    return NetworkSpec(layers=tuple(layers), action_layer=1, action_width=action_dim)


def init_network(spec: NetworkSpec, rng: np.random.Generator, lr: float = 1e-3, l2: float = 0.0) -> MlpNetwork:
    weights, biases = [], []
    last = len(spec.layers) - 1
    for i, layer in enumerate(spec.layers):
        limit = FINAL_LAYER_RANGE if i == last else 1.0 / math.sqrt(layer.input_width)
        weights.append(rng.uniform(-limit, limit, size=(layer.input_width, layer.output_width)))
        biases.append(rng.uniform(-limit, limit, size=layer.output_width))
    return MlpNetwork(spec, weights, biases, lr=lr, l2=l2)


def copy_network(net: MlpNetwork) -> MlpNetwork:
    clone = MlpNetwork(net.spec, [w.copy() for w in net.weights], [b.copy() for b in net.biases],
                       lr=net.lr, l2=net.l2)
    return clone


def _activate(activation: Activation, z: np.ndarray) -> np.ndarray:
    if activation == Activation.relu:
        return np.maximum(z, 0.0)
    if activation == Activation.tanh:
        return np.tanh(z)
    return z


def forward(net: MlpNetwork, x: np.ndarray, action: np.ndarray | None = None) -> tuple[np.ndarray, ForwardCache]:
    spec = net.spec
    x = np.asarray(x, dtype=np.float64)
    batched = x.ndim == 2
    h = np.atleast_2d(x)
    if h.shape[1] != spec.input_width:
        raise NetworkShapeError(expected=spec.input_width, got=h.shape[1])

    if spec.is_critic:
        if action is None:
            raise NetworkShapeError(expected=spec.action_width, got=None, what="action")
        action = np.atleast_2d(np.asarray(action, dtype=np.float64))
        if action.shape != (h.shape[0], spec.action_width):
            raise NetworkShapeError(expected=(h.shape[0], spec.action_width), got=action.shape, what="action")

    cache = ForwardCache(batched=batched)
    for i, layer in enumerate(spec.layers):
        if i == spec.action_layer:
            h = np.concatenate([h, action], axis=1)
        z = h @ net.weights[i] + net.biases[i]
        cache.inputs.append(h)
        cache.pre_activations.append(z)
        h = _activate(layer.activation, z)
        cache.outputs.append(h)

    return (h if batched else h[0]), cache


def _backward(net: MlpNetwork, cache: ForwardCache, upstream: np.ndarray):
    spec = net.spec
    delta = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
    expected = (cache.outputs[-1].shape[0], spec.output_width)
    if delta.shape != expected:
        raise NetworkShapeError(expected=expected, got=delta.shape, what="upstream gradient")

    grad_weights = [np.empty(0)] * len(spec.layers)
    grad_biases = [np.empty(0)] * len(spec.layers)
    action_grad = None
    for i in reversed(range(len(spec.layers))):
        activation = spec.layers[i].activation
        if activation == Activation.relu:
            delta = delta * (cache.pre_activations[i] > 0.0)
        elif activation == Activation.tanh:
            delta = delta * (1.0 - cache.outputs[i] ** 2)
        grad_weights[i] = cache.inputs[i].T @ delta
        grad_biases[i] = delta.sum(axis=0)
        delta = delta @ net.weights[i].T
        if i == spec.action_layer:
            split = delta.shape[1] - spec.action_width
            action_grad = delta[:, split:]
            delta = delta[:, :split]
    return Gradients(weights=grad_weights, biases=grad_biases), delta, action_grad


def backward_params(net: MlpNetwork, cache: ForwardCache, upstream: np.ndarray) -> Gradients:
    """Gradients of sum(output * upstream) w.r.t. every weight and bias, summed over the batch."""
    grads, _, _ = _backward(net, cache, upstream)
    return grads


def backward_input(net: MlpNetwork, cache: ForwardCache, upstream: np.ndarray) -> InputGradient:
    _, state_grad, action_grad = _backward(net, cache, upstream)
    if not cache.batched:
        state_grad = state_grad[0]
        action_grad = None if action_grad is None else action_grad[0]
    return InputGradient(state=state_grad, action=action_grad)


def adam_step(net: MlpNetwork, grads: Gradients, weight_decay_l2: float | None = None) -> None:
    """One bias-corrected Adam step; L2 decay is added to weight gradients only."""
    l2 = net.l2 if weight_decay_l2 is None else weight_decay_l2
    if len(grads.weights) != len(net.weights) or len(grads.biases) != len(net.biases):
        raise NetworkShapeError(expected=len(net.weights), got=len(grads.weights), what="gradient layer count")

    net.step_count += 1
    t = net.step_count
    correction1 = 1.0 - ADAM_BETA1 ** t
    correction2 = 1.0 - ADAM_BETA2 ** t

    def update(param, grad, m, v):
        if grad.shape != param.shape:
            raise NetworkShapeError(expected=param.shape, got=grad.shape, what="gradient")
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * grad
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * grad * grad
        param -= net.lr * (m / correction1) / (np.sqrt(v / correction2) + ADAM_EPSILON)

    for i in range(len(net.weights)):
        grad_w = grads.weights[i] + l2 * net.weights[i] if l2 else grads.weights[i]
        update(net.weights[i], grad_w, net.m_weights[i], net.v_weights[i])
        update(net.biases[i], grads.biases[i], net.m_biases[i], net.v_biases[i])


def soft_update(target: MlpNetwork, source: MlpNetwork, tau: float) -> None:
    """target <- tau * source + (1 - tau) * target, parameter by parameter."""
    for t_param, s_param in zip(target.parameters(), source.parameters()):
        t_param *= 1.0 - tau
        t_param += tau * s_param


def negate(grads: Gradients) -> Gradients:
    return Gradients(weights=[-g for g in grads.weights], biases=[-g for g in grads.biases])
