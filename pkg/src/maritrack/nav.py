"""Constant-acceleration localization filter fusing GPS position and IMU acceleration."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .linalg import joseph_update, symmetrize

I3 = np.eye(3)
Z3 = np.zeros((3, 3))
H_GPS = np.hstack([I3, Z3, Z3])
H_IMU = np.hstack([Z3, Z3, I3])


@dataclass(frozen=True)
class NavNoiseConfig:
    process_psd: float = 0.5       # jerk PSD per axis, m^2/s^5
    gps_std: float = 0.3           # m
    imu_std: float = 0.1           # m/s^2
    inflation: float = 4.0         # process-noise multiplier during aggressive maneuvers
    init_pos_var: float = 100.0
    init_vel_var: float = 4.0
    init_acc_var: float = 1.0

    def __post_init__(self):
        for name in ("process_psd", "gps_std", "imu_std", "init_pos_var", "init_vel_var", "init_acc_var"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.inflation < 1.0:
            raise ValueError("inflation must be >= 1")


@dataclass(frozen=True)
class NavState:
    mean: np.ndarray         # [p, v, a]
    covariance: np.ndarray   # 9x9
    timestamp: float

    @property
    def position(self) -> np.ndarray:
        return self.mean[:3]

    @property
    def velocity(self) -> np.ndarray:
        return self.mean[3:6]

    @property
    def acceleration(self) -> np.ndarray:
        return self.mean[6:9]


def ca_transition(dt: float) -> np.ndarray:
    F = np.eye(9)
    F[0:3, 3:6] = dt * I3
    F[0:3, 6:9] = 0.5 * dt * dt * I3
    F[3:6, 6:9] = dt * I3
    return F


def ca_process_noise(dt: float, psd: float) -> np.ndarray:
    """Discretized continuous white-noise-jerk covariance."""
    q = np.array([
        [dt**5 / 20, dt**4 / 8, dt**3 / 6],
        [dt**4 / 8, dt**3 / 3, dt**2 / 2],
        [dt**3 / 6, dt**2 / 2, dt],
    ]) * psd
    return np.kron(q, I3)


def nav_init(z_gps, noise: NavNoiseConfig, timestamp: float = 0.0) -> NavState:
    z = np.asarray(z_gps, dtype=float).reshape(3)
    if not np.all(np.isfinite(z)):
        raise ValueError("GPS fix must be finite")
    mean = np.concatenate([z, np.zeros(6)])
    cov = np.diag(np.repeat([noise.init_pos_var, noise.init_vel_var, noise.init_acc_var], 3))
    return NavState(mean, cov, float(timestamp))


def nav_predict(s: NavState, dt: float, noise: NavNoiseConfig | None = None,
                aggressive: bool = False) -> NavState:
    """Propagate ``dt`` seconds.  With ``noise=None`` no process noise is added."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    F = ca_transition(dt)
    P = F @ s.covariance @ F.T
    if noise is not None:
        psd = noise.process_psd * (noise.inflation if aggressive else 1.0)
        P = P + ca_process_noise(dt, psd)
    return NavState(F @ s.mean, symmetrize(P), s.timestamp + dt)


def nav_update(s: NavState, z, kind: str, noise: NavNoiseConfig) -> NavState:
    """Linear Kalman update from a GPS (``kind="gps"``) or IMU (``kind="imu"``) sample."""
    z = np.asarray(z, dtype=float).reshape(3)
    if not np.all(np.isfinite(z)):
        raise ValueError("measurement must be finite")
    if kind == "gps":
        H, std = H_GPS, noise.gps_std
    elif kind == "imu":
        H, std = H_IMU, noise.imu_std
    else:
        raise ValueError(f"unknown measurement kind {kind!r}")
    mean, cov = joseph_update(s.mean, s.covariance, z, H, std * std * I3)
    return replace(s, mean=mean, covariance=cov)


class NavFilter:
    """Per-agent filter wrapper used by the simulator.

    The first GPS sample initializes the state; aggressive-maneuver
    inflation applies to the prediction of the tick it is flagged on.
    """

    def __init__(self, noise: NavNoiseConfig):
        self.noise = noise
        self.state: NavState | None = None

    @property
    def initialized(self) -> bool:
        return self.state is not None

    def predict(self, dt: float, aggressive: bool = False) -> None:
        if self.state is not None:
            self.state = nav_predict(self.state, dt, self.noise, aggressive)

    def gps(self, z, timestamp: float) -> None:
        if self.state is None:
            self.state = nav_init(z, self.noise, timestamp)
        else:
            self.state = nav_update(self.state, z, "gps", self.noise)

    def imu(self, z) -> None:
        if self.state is not None:
            self.state = nav_update(self.state, z, "imu", self.noise)
