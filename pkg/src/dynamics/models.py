from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


@dataclass(frozen=True, slots=True)
class VehicleState:
    """Earth-fixed pose (x, y, psi) and body-fixed velocities (u, v, r)."""

    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0
    u: float = 0.0
    v: float = 0.0
    r: float = 0.0

    @property
    def eta(self) -> np.ndarray:
        return np.array([self.x, self.y, self.psi], dtype=np.float64)

    @property
    def phi(self) -> np.ndarray:
        return np.array([self.u, self.v, self.r], dtype=np.float64)

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.psi, self.u, self.v, self.r], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "VehicleState":
        x, y, psi, u, v, r = (float(value) for value in values)
        return cls(x=x, y=y, psi=psi, u=u, v=v, r=r)


@dataclass(frozen=True, slots=True)
class ControlInput:
    thrust: float = 0.0  # N
    rudder: float = 0.0  # rad

    def to_array(self) -> np.ndarray:
        return np.array([self.thrust, self.rudder], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "ControlInput":
        thrust, rudder = (float(value) for value in values)
        return cls(thrust=thrust, rudder=rudder)


class ModelCoefficients(BaseModel):
    """REMUS rigid-body and hydrodynamic coefficients for the horizontal plane."""

    model_config = ConfigDict(frozen=True)

    m: float = Field(30.48, description="Mass (kg)")
    x_g: float = Field(0.0, description="x-position of the center of gravity (m)")
    I_zz: float = Field(3.45, description="Yaw moment of inertia (kg m^2)")

    X_u: float = 0.0
    X_uu: float = Field(-1.62, description="X_{u|u|} (kg/m)")
    X_udot: float = Field(-0.93, description="Added mass in surge (kg)")

    Y_v: float = 0.0
    Y_r: float = 0.0
    Y_vv: float = Field(-1310.0, description="Y_{v|v|} (kg/m)")
    Y_rr: float = Field(0.632, description="Y_{r|r|} (kg m/rad^2)")
    Y_uv: float = Field(-28.6, description="(kg/m)")
    Y_vdot: float = Field(-35.5, description="(kg)")
    Y_rdot: float = Field(1.93, description="(kg m/rad)")
    Y_ur: float = Field(6.15, description="(kg/rad)")
    Y_uudelta: float = Field(9.64, description="Rudder lift in sway (kg/(m rad))")

    N_v: float = 0.0
    N_r: float = 0.0
    N_vv: float = Field(-3.18, description="N_{v|v|} (kg)")
    N_rr: float = Field(-94.0, description="N_{r|r|} (kg m^2/rad^2)")
    N_uv: float = Field(10.62, description="(kg)")
    N_vdot: float = Field(1.93, description="(kg m)")
    N_rdot: float = Field(-4.88, description="(kg m^2/rad)")
    N_ur: float = Field(-3.93, description="(kg m/rad)")
    N_uudelta: float = Field(-6.15, description="Rudder moment in yaw (kg/rad)")


@dataclass(frozen=True, slots=True)
class ModelMatrices:
    M: np.ndarray  # 3x3 inertia incl. added mass
    C: np.ndarray  # 3x3 Coriolis-centripetal
    D: np.ndarray  # 3x3 damping
    G: np.ndarray  # 3x2 input matrix
