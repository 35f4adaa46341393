import logging
import math
from functools import lru_cache

import numpy as np

from src.exceptions import ConfigurationError, CorruptedStateError, ModelConfigurationError
from .models import ControlInput, ModelCoefficients, ModelMatrices, VehicleState

logger = logging.getLogger(__name__)

THRUST_LIMIT = 86.0  # N
RUDDER_LIMIT = 13.6 * math.pi / 180.0  # rad
SINGULAR_TOLERANCE = 1e-9

REMUS = ModelCoefficients()


def saturate(value: float, bound: float) -> float:
    if not math.isfinite(value):
        logger.error(f"Refusing to saturate non-finite value {value}")
        raise CorruptedStateError("saturation input")
    if not bound > 0:
        raise ConfigurationError(f"Saturation bound must be positive, got {bound}")
    return min(max(float(value), -bound), bound)


def saturate_input(tau: ControlInput, thrust_limit: float = THRUST_LIMIT,
                   rudder_limit: float = RUDDER_LIMIT) -> ControlInput:
    return ControlInput(
        thrust=saturate(tau.thrust, thrust_limit),
        rudder=saturate(tau.rudder, rudder_limit),
    )


def wrap_angle(psi: float) -> float:
    """Map an angle into [-pi, pi)."""
    wrapped = math.fmod(psi + math.pi, 2.0 * math.pi)
    if wrapped < 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def transform(psi: float) -> np.ndarray:
    if not math.isfinite(psi):
        raise CorruptedStateError("yaw angle")
    c, s = math.cos(psi), math.sin(psi)
    return np.array([
        [c, -s, 0.0],
        [s, c, 0.0],
        [0.0, 0.0, 1.0],
    ])


def inertia_matrix(coeffs: ModelCoefficients) -> np.ndarray:
    m1 = coeffs.m - coeffs.X_udot
    m2 = coeffs.m - coeffs.Y_vdot
    m3 = coeffs.m * coeffs.x_g - coeffs.Y_rdot
    m4 = coeffs.m * coeffs.x_g - coeffs.N_vdot
    m5 = coeffs.I_zz - coeffs.N_rdot
    M = np.array([
        [m1, 0.0, 0.0],
        [0.0, m2, m3],
        [0.0, m4, m5],
    ])
    if not np.all(np.isfinite(M)):
        raise CorruptedStateError("model coefficients")
    determinant = float(np.linalg.det(M))
    if abs(determinant) < SINGULAR_TOLERANCE:
        logger.error(f"Inertia matrix built from coefficients is singular: det={determinant}")
        raise ModelConfigurationError(determinant)
    return M


@lru_cache(maxsize=16)
def inverse_inertia(coeffs: ModelCoefficients) -> np.ndarray:
    """M is velocity independent, so its inverse is computed once per coefficient set."""
    M_inv = np.linalg.inv(inertia_matrix(coeffs))
    M_inv.setflags(write=False)
    return M_inv


def build_matrices(coeffs: ModelCoefficients, phi) -> ModelMatrices:
    u, v, r = (float(value) for value in phi)
    if not all(math.isfinite(value) for value in (u, v, r)):
        raise CorruptedStateError("body velocities")
    M = inertia_matrix(coeffs)

    c1 = -coeffs.m * v - coeffs.m * coeffs.x_g * r + coeffs.Y_vdot * v + coeffs.Y_rdot * r
    c2 = coeffs.m * u - coeffs.X_udot * u
    C = np.array([
        [0.0, 0.0, c1],
        [0.0, 0.0, c2],
        [-c1, -c2, 0.0],
    ])

    d1 = -coeffs.X_u - coeffs.X_uu * abs(u)
    d2 = -coeffs.Y_v - coeffs.Y_uv * u - coeffs.Y_vv * abs(v)
    d3 = -coeffs.Y_r - coeffs.Y_ur * u - coeffs.Y_rr * abs(r)
    d4 = -coeffs.N_v - coeffs.N_uv * u - coeffs.N_vv * abs(v)
    d5 = -coeffs.N_r - coeffs.N_ur * u - coeffs.N_rr * abs(r)
    D = np.array([
        [d1, 0.0, 0.0],
        [0.0, d2, d3],
        [0.0, d4, d5],
    ])

    G = np.array([
        [1.0, 0.0],
        [0.0, coeffs.Y_uudelta * u * u],
        [0.0, coeffs.N_uudelta * u * u],
    ])
    return ModelMatrices(M=M, C=C, D=D, G=G)


def generalized_force(matrices: ModelMatrices, phi: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """F(tau, phi) = G tau - C phi - D phi."""
    return matrices.G @ tau - matrices.C @ phi - matrices.D @ phi


def derivative(state: VehicleState, tau: ControlInput, coeffs: ModelCoefficients = REMUS) -> np.ndarray:
    values = state.to_array()
    if not np.all(np.isfinite(values)):
        logger.error(f"Vehicle state contains non-finite values: {values}")
        raise CorruptedStateError("vehicle state")
    tau_vec = tau.to_array()
    if not np.all(np.isfinite(tau_vec)):
        raise CorruptedStateError("control input")

    phi = values[3:]
    matrices = build_matrices(coeffs, phi)
    eta_dot = transform(state.psi) @ phi
    phi_dot = inverse_inertia(coeffs) @ generalized_force(matrices, phi, tau_vec)
    return np.concatenate([eta_dot, phi_dot])


def step(state: VehicleState, tau: ControlInput, coeffs: ModelCoefficients = REMUS,
         ts: float = 0.1) -> VehicleState:
    """Explicit first-order update of pose and velocities over one sampling interval."""
    if not ts > 0:
        raise ConfigurationError(f"Sampling time must be positive, got {ts}")
    rates = derivative(state, tau, coeffs)
    values = state.to_array() + ts * rates
    if not np.all(np.isfinite(values)):
        logger.error(f"Integration produced non-finite state from {state} with input {tau}")
        raise CorruptedStateError("integrated vehicle state")
    values[2] = wrap_angle(values[2])
    return VehicleState.from_array(values)


def simulate(state: VehicleState, tau: ControlInput, duration: float, coeffs: ModelCoefficients = REMUS,
             ts: float = 0.1) -> list[VehicleState]:
    """Open-loop rollout under a constant saturated input; returns the states including the initial one."""
    if not ts > 0:
        raise ConfigurationError(f"Sampling time must be positive, got {ts}")
    if not (math.isfinite(duration) and duration >= 0):
        raise ConfigurationError(f"Duration must be finite and non-negative, got {duration}")
    tau = saturate_input(tau)
    steps = int(round(duration / ts))
    states = [state]
    for _ in range(steps):
        state = step(state, tau, coeffs, ts)
        states.append(state)
    logger.info(f"Simulated {steps} steps of open-loop dynamics under thrust={tau.thrust}, rudder={tau.rudder}")
    return states
