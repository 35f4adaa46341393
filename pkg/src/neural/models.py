from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Activation(StrEnum):
    relu = "relu"
    tanh = "tanh"
    linear = "linear"


ACTIVATION_CODES = {Activation.linear: 0, Activation.relu: 1, Activation.tanh: 2}
ACTIVATIONS_BY_CODE = {code: activation for activation, code in ACTIVATION_CODES.items()}


class LayerSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    input_width: int = Field(..., gt=0)
    output_width: int = Field(..., gt=0)
    activation: Activation = Activation.relu


class NetworkSpec(BaseModel):
    """Layer chain; critics inject the action vector into the input of `action_layer`."""

    model_config = ConfigDict(frozen=True)

    layers: tuple[LayerSpec, ...]
    action_layer: int | None = None
    action_width: int = Field(0, ge=0)

    @model_validator(mode="after")
    def validate_chain(self):
        if not self.layers:
            raise ValueError("network needs at least one layer")
        if self.action_layer is not None:
            if not 0 < self.action_layer < len(self.layers):
                raise ValueError(f"action layer {self.action_layer} must be a hidden layer index")
            if self.action_width <= 0:
                raise ValueError("action injection needs a positive action width")
        for i in range(1, len(self.layers)):
            expected = self.layers[i - 1].output_width
            if i == self.action_layer:
                expected += self.action_width
            if self.layers[i].input_width != expected:
                raise ValueError(f"layer {i} expects input width {expected}, got {self.layers[i].input_width}")
        return self

    @property
    def input_width(self) -> int:
        return self.layers[0].input_width

    @property
    def output_width(self) -> int:
        return self.layers[-1].output_width

    @property
    def is_critic(self) -> bool:
        return self.action_layer is not None


class MlpNetwork:
    """Weights, biases and Adam moment buffers of one actor or critic."""

    def __init__(self, spec: NetworkSpec, weights: list[np.ndarray], biases: list[np.ndarray],
                 lr: float = 1e-3, l2: float = 0.0):
        self.spec = spec
        self.weights = weights  # each (input_width, output_width)
        self.biases = biases
        self.lr = lr
        self.l2 = l2
        self.step_count = 0
        self.m_weights = [np.zeros_like(w) for w in weights]
        self.v_weights = [np.zeros_like(w) for w in weights]
        self.m_biases = [np.zeros_like(b) for b in biases]
        self.v_biases = [np.zeros_like(b) for b in biases]

    def parameters(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def __repr__(self):
        widths = [self.spec.input_width] + [layer.output_width for layer in self.spec.layers]
        kind = "critic" if self.spec.is_critic else "actor"
        return f"<MlpNetwork({kind}, widths={widths}, step={self.step_count})>"


@dataclass(slots=True)
class ForwardCache:
    inputs: list[np.ndarray] = field(default_factory=list)  # input of each layer (batch, in)
    pre_activations: list[np.ndarray] = field(default_factory=list)
    outputs: list[np.ndarray] = field(default_factory=list)
    batched: bool = True


@dataclass(slots=True)
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass(slots=True)
class InputGradient:
    state: np.ndarray
    action: np.ndarray | None = None
