import numpy as np
import pytest

from src.exceptions import NetworkShapeError
from src.neural import service as neural_service
from src.neural.models import Activation, Gradients, LayerSpec, MlpNetwork, NetworkSpec

H = 1e-6


def close(analytic: float, numeric: float) -> bool:
    return abs(analytic - numeric) <= 1e-4 * max(abs(analytic) + abs(numeric), 1e-3)


def random_network(rng) -> MlpNetwork:
    """Up to three layers of width <= 16; about half are critics with an injected action."""
    if rng.random() < 0.5:
        hidden = tuple(int(w) for w in rng.integers(1, 17, size=2))
        spec = neural_service.critic_spec(int(rng.integers(1, 17)), int(rng.integers(1, 4)), hidden)
    else:
        widths = [int(w) for w in rng.integers(1, 17, size=int(rng.integers(2, 5)))]
        activations = list(Activation)
        spec = NetworkSpec(layers=tuple(
            LayerSpec(input_width=a, output_width=b, activation=activations[int(rng.integers(len(activations)))])
            for a, b in zip(widths[:-1], widths[1:])
        ))
    weights = [rng.normal(scale=0.5, size=(layer.input_width, layer.output_width)) for layer in spec.layers]
    biases = [rng.normal(scale=0.3, size=layer.output_width) for layer in spec.layers]
    return MlpNetwork(spec, weights, biases)


def random_inputs(net: MlpNetwork, rng, batch: int = 3):
    x = rng.normal(size=(batch, net.spec.input_width))
    action = rng.normal(size=(batch, net.spec.action_width)) if net.spec.is_critic else None
    return x, action


def scalar_output(net: MlpNetwork, x, action, upstream) -> float:
    output, _ = neural_service.forward(net, x, action)
    return float(np.sum(output * upstream))


def naive_forward(net: MlpNetwork, x: np.ndarray, action: np.ndarray | None) -> np.ndarray:
    h = x
    for i, layer in enumerate(net.spec.layers):
        if i == net.spec.action_layer:
            h = np.hstack([h, action])
        z = np.array([[sum(h[row, k] * net.weights[i][k, j] for k in range(h.shape[1])) + net.biases[i][j]
                       for j in range(layer.output_width)] for row in range(h.shape[0])])
        if layer.activation == Activation.relu:
            h = np.where(z > 0, z, 0.0)
        elif layer.activation == Activation.tanh:
            h = np.tanh(z)
        else:
            h = z
    return h


def single_linear(weight: float = 0.0, bias: float = 0.0, lr: float = 1e-3) -> MlpNetwork:
    spec = NetworkSpec(layers=(LayerSpec(input_width=1, output_width=1, activation=Activation.linear),))
    return MlpNetwork(spec, [np.array([[weight]])], [np.array([bias])], lr=lr)


class TestInitNetwork:
    def test_final_layer_range(self, rng):
        net = neural_service.init_network(neural_service.critic_spec(10, 2, (64, 48)), rng)
        assert np.all(np.abs(net.weights[-1]) <= 3e-3)
        assert np.all(np.abs(net.biases[-1]) <= 3e-3)

    def test_hidden_layer_uses_fan_in(self, rng):
        net = neural_service.init_network(neural_service.actor_spec(400, 2, (30, 20)), rng)
        assert np.all(np.abs(net.weights[0]) <= 0.05)
        assert np.all(np.abs(net.biases[0]) <= 0.05)
        assert np.max(np.abs(net.weights[0])) > 0.04

    def test_same_seed_same_network(self):
        spec = neural_service.actor_spec(10, 2, (16, 16))
        first = neural_service.init_network(spec, np.random.default_rng(1))
        second = neural_service.init_network(spec, np.random.default_rng(1))
        for a, b in zip(first.parameters(), second.parameters()):
            np.testing.assert_array_equal(a, b)

    def test_adam_moments_start_at_zero(self, tiny_critic):
        assert tiny_critic.step_count == 0
        assert all(not np.any(m) for m in tiny_critic.m_weights + tiny_critic.v_biases)

    def test_critic_topology(self):
        spec = neural_service.critic_spec(10, 2, (400, 300))
        assert [(layer.input_width, layer.output_width) for layer in spec.layers] == [(10, 400), (402, 300), (300, 1)]
        assert spec.action_layer == 1

    def test_critic_needs_two_hidden_layers(self):
        with pytest.raises(NetworkShapeError):
            neural_service.critic_spec(10, 2, (64,))


class TestForward:
    def test_zero_network_outputs_zero(self):
        spec = neural_service.actor_spec(10, 2, (8,))
        net = MlpNetwork(spec, [np.zeros((layer.input_width, layer.output_width)) for layer in spec.layers],
                         [np.zeros(layer.output_width) for layer in spec.layers])
        output, _ = neural_service.forward(net, np.arange(10.0))
        np.testing.assert_array_equal(output, np.zeros(2))

    def test_identity_layer(self):
        spec = NetworkSpec(layers=(LayerSpec(input_width=3, output_width=3, activation=Activation.linear),))
        net = MlpNetwork(spec, [np.eye(3)], [np.zeros(3)])
        output, _ = neural_service.forward(net, np.array([1.5, -2.0, 0.25]))
        np.testing.assert_array_equal(output, [1.5, -2.0, 0.25])

    def test_matches_naive_oracle(self, rng):
        for _ in range(20):
            net = random_network(rng)
            x, action = random_inputs(net, rng)
            output, _ = neural_service.forward(net, x, action)
            np.testing.assert_allclose(output, naive_forward(net, x, action), rtol=0, atol=1e-12)

    def test_unbatched_input_returns_vector(self, tiny_actor):
        output, cache = neural_service.forward(tiny_actor, np.zeros(10))
        assert output.shape == (2,)
        assert not cache.batched

    def test_forward_is_deterministic(self, tiny_critic, rng):
        x, a = rng.normal(size=(5, 10)), rng.normal(size=(5, 2))
        first, _ = neural_service.forward(tiny_critic, x, a)
        second, _ = neural_service.forward(tiny_critic, x, a)
        np.testing.assert_array_equal(first, second)

    def test_actor_outputs_inside_unit_box(self, tiny_actor, rng):
        output, _ = neural_service.forward(tiny_actor, rng.normal(scale=50.0, size=(200, 10)))
        assert np.all(np.abs(output) < 1.0)

    def test_width_mismatch(self, tiny_actor):
        with pytest.raises(NetworkShapeError):
            neural_service.forward(tiny_actor, np.zeros(9))

    def test_critic_requires_action(self, tiny_critic):
        with pytest.raises(NetworkShapeError):
            neural_service.forward(tiny_critic, np.zeros(10))
        with pytest.raises(NetworkShapeError):
            neural_service.forward(tiny_critic, np.zeros((4, 10)), np.zeros((3, 2)))


class TestBackward:
    def test_single_linear_neuron(self):
        net = single_linear(weight=0.7, bias=0.1)
        _, cache = neural_service.forward(net, np.array([2.0]))
        grads = neural_service.backward_params(net, cache, np.array([1.0]))
        assert grads.weights[0][0, 0] == 2.0
        assert grads.biases[0][0] == 1.0

    def test_zero_upstream_gives_zero_gradients(self, tiny_critic, rng):
        _, cache = neural_service.forward(tiny_critic, rng.normal(size=(4, 10)), rng.normal(size=(4, 2)))
        grads = neural_service.backward_params(tiny_critic, cache, np.zeros((4, 1)))
        assert all(not np.any(g) for g in grads.weights + grads.biases)

    def test_linear_layer_input_gradient(self, rng):
        W = rng.normal(size=(4, 3))
        spec = NetworkSpec(layers=(LayerSpec(input_width=4, output_width=3, activation=Activation.linear),))
        net = MlpNetwork(spec, [W], [np.zeros(3)])
        upstream = rng.normal(size=3)
        _, cache = neural_service.forward(net, rng.normal(size=4))
        # weights are stored (in, out), so y = x @ W and dy/dx . g = W @ g
        np.testing.assert_allclose(neural_service.backward_input(net, cache, upstream).state, W @ upstream)

    def test_dead_relu_blocks_input_gradient(self):
        spec = NetworkSpec(layers=(
            LayerSpec(input_width=3, output_width=4, activation=Activation.relu),
            LayerSpec(input_width=4, output_width=1, activation=Activation.linear),
        ))
        net = MlpNetwork(spec, [np.ones((3, 4)), np.ones((4, 1))], [np.full(4, -100.0), np.zeros(1)])
        _, cache = neural_service.forward(net, np.array([0.5, -0.2, 0.1]))
        gradient = neural_service.backward_input(net, cache, np.array([1.0]))
        np.testing.assert_array_equal(gradient.state, np.zeros(3))

    def test_upstream_shape_mismatch(self, tiny_actor):
        _, cache = neural_service.forward(tiny_actor, np.zeros((2, 10)))
        with pytest.raises(NetworkShapeError):
            neural_service.backward_params(tiny_actor, cache, np.zeros((2, 3)))

    def test_parameter_gradients_match_finite_differences(self, rng):
        for _ in range(50):
            net = random_network(rng)
            x, action = random_inputs(net, rng)
            upstream = rng.normal(size=(x.shape[0], net.spec.output_width))
            _, cache = neural_service.forward(net, x, action)
            grads = neural_service.backward_params(net, cache, upstream)
            for param, grad in zip(net.parameters(), grads.weights + grads.biases):
                for index in np.ndindex(param.shape):
                    original = param[index]
                    param[index] = original + H
                    plus = scalar_output(net, x, action, upstream)
                    param[index] = original - H
                    minus = scalar_output(net, x, action, upstream)
                    param[index] = original
                    assert close(grad[index], (plus - minus) / (2 * H)), (net, index)

    def test_input_gradients_match_finite_differences(self, rng):
        for _ in range(50):
            net = random_network(rng)
            x, action = random_inputs(net, rng)
            upstream = rng.normal(size=(x.shape[0], net.spec.output_width))
            _, cache = neural_service.forward(net, x, action)
            gradient = neural_service.backward_input(net, cache, upstream)
            checks = [(x, gradient.state)] + ([(action, gradient.action)] if net.spec.is_critic else [])
            for values, analytic in checks:
                for index in np.ndindex(values.shape):
                    original = values[index]
                    values[index] = original + H
                    plus = scalar_output(net, x, action, upstream)
                    values[index] = original - H
                    minus = scalar_output(net, x, action, upstream)
                    values[index] = original
                    assert close(analytic[index], (plus - minus) / (2 * H)), (net, index)

    def test_critic_action_gradient_single_sample(self, tiny_critic, rng):
        s, a = rng.normal(size=10), rng.normal(scale=20.0, size=2)
        _, cache = neural_service.forward(tiny_critic, s, a)
        gradient = neural_service.backward_input(tiny_critic, cache, np.array([1.0]))
        assert gradient.action.shape == (2,)
        for i in range(2):
            step = np.zeros(2)
            step[i] = H
            plus = neural_service.forward(tiny_critic, s, a + step)[0][0]
            minus = neural_service.forward(tiny_critic, s, a - step)[0][0]
            assert close(gradient.action[i], (plus - minus) / (2 * H))


class TestAdamStep:
    def test_first_step_moves_by_learning_rate(self):
        net = single_linear(weight=0.5)
        neural_service.adam_step(net, Gradients(weights=[np.array([[1.0]])], biases=[np.array([0.0])]), 0.0)
        assert net.weights[0][0, 0] - 0.5 == pytest.approx(-1e-3, rel=1e-6)
        assert net.biases[0][0] == 0.0
        assert net.step_count == 1

    def test_zero_gradient_without_decay_is_a_no_op(self, tiny_critic):
        before = [p.copy() for p in tiny_critic.parameters()]
        zeros = Gradients(weights=[np.zeros_like(w) for w in tiny_critic.weights],
                          biases=[np.zeros_like(b) for b in tiny_critic.biases])
        for _ in range(3):
            neural_service.adam_step(tiny_critic, zeros, weight_decay_l2=0.0)
        for a, b in zip(before, tiny_critic.parameters()):
            np.testing.assert_array_equal(a, b)

    def test_weight_decay_acts_as_gradient(self):
        net = single_linear(weight=2.0, bias=2.0)
        neural_service.adam_step(net, Gradients(weights=[np.zeros((1, 1))], biases=[np.zeros(1)]), 0.01)
        assert net.weights[0][0, 0] - 2.0 == pytest.approx(-1e-3, rel=1e-5)
        # biases are not decayed
        assert net.biases[0][0] == 2.0

    def test_network_l2_is_the_default(self):
        net = single_linear(weight=2.0)
        net.l2 = 0.01
        neural_service.adam_step(net, Gradients(weights=[np.zeros((1, 1))], biases=[np.zeros(1)]))
        assert net.weights[0][0, 0] < 2.0

    def test_gradient_shape_mismatch(self, tiny_actor):
        bad = Gradients(weights=[np.zeros((1, 1))] * len(tiny_actor.weights),
                        biases=[np.zeros_like(b) for b in tiny_actor.biases])
        with pytest.raises(NetworkShapeError):
            neural_service.adam_step(tiny_actor, bad)


class TestSoftUpdate:
    def test_tau_one_snaps_to_source(self, tiny_actor, rng):
        target = neural_service.init_network(tiny_actor.spec, rng)
        neural_service.soft_update(target, tiny_actor, 1.0)
        for a, b in zip(target.parameters(), tiny_actor.parameters()):
            np.testing.assert_array_equal(a, b)

    def test_tau_zero_freezes_target(self, tiny_actor, rng):
        target = neural_service.init_network(tiny_actor.spec, rng)
        before = [p.copy() for p in target.parameters()]
        neural_service.soft_update(target, tiny_actor, 0.0)
        for a, b in zip(target.parameters(), before):
            np.testing.assert_array_equal(a, b)

    def test_update_is_convex(self, tiny_actor, rng):
        target = neural_service.init_network(tiny_actor.spec, rng)
        before = [p.copy() for p in target.parameters()]
        neural_service.soft_update(target, tiny_actor, 0.3)
        for old, new, live in zip(before, target.parameters(), tiny_actor.parameters()):
            assert np.all(new >= np.minimum(old, live) - 1e-15)
            assert np.all(new <= np.maximum(old, live) + 1e-15)


def test_copy_network_is_independent(tiny_critic):
    clone = neural_service.copy_network(tiny_critic)
    clone.weights[0][0, 0] += 1.0
    assert clone.weights[0][0, 0] != tiny_critic.weights[0][0, 0]
    assert clone.spec == tiny_critic.spec
