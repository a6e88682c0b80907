"""Constant-velocity Kalman baseline operating directly in degree space.

State x = (lat, lon, v_lat, v_lon) with velocities in degrees/second.
Working in degrees mirrors the transition model the baseline is meant
to reproduce and accepts the latitude-dependent metric distortion that
comes with it; it is a fidelity limit of the baseline, not of the
evaluation (metrics convert to metres).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "KalmanConfig",
    "KalmanState",
    "InsufficientContextError",
    "ForecastConfigError",
    "kf_fit",
    "kf_forecast",
]


class InsufficientContextError(ValueError):
    """Fitting needs at least two observations."""


class ForecastConfigError(ValueError):
    """Forecast horizon must be at least one step."""


@dataclass(frozen=True)
class KalmanConfig:
    dt_s: float = 60.0
    process_noise: float = 1e-3      # Q = process_noise * I4
    obs_noise: float = 1e-5          # R = obs_noise * I2
    initial_covariance: float = 1.0  # P0 = initial_covariance * I4

    def transition(self) -> np.ndarray:
        dt = self.dt_s
        return np.array(
            [
                [1.0, 0.0, dt, 0.0],
                [0.0, 1.0, 0.0, dt],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )


class KalmanState(NamedTuple):
    x: np.ndarray  # shape (4,)
    P: np.ndarray  # shape (4, 4)


# Observation model: positions only. The source transition/process
# matrices need an observation pair to run updates at all; a direct
# position selector with small noise is the minimal completion.
_H = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])


def kf_fit(context, cfg: KalmanConfig = KalmanConfig()) -> KalmanState:
    """Run predict/update cycles over the context observations.

    The state is initialised at the first point with velocity from the
    first finite difference; every later point is an update.
    """
    pts = np.asarray(context, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 2:
        raise InsufficientContextError(
            f"need >= 2 context points, got {len(pts)}"
        )
    dt = cfg.dt_s
    F = cfg.transition()
    Q = cfg.process_noise * np.eye(4)
    R = cfg.obs_noise * np.eye(2)

    v0 = (pts[1] - pts[0]) / dt
    x = np.array([pts[0, 0], pts[0, 1], v0[0], v0[1]])
    P = cfg.initial_covariance * np.eye(4)

    for z in pts[1:]:
        x = F @ x
        P = F @ P @ F.T + Q
        y = z - _H @ x
        S = _H @ P @ _H.T + R
        K = P @ _H.T @ np.linalg.inv(S)
        x = x + K @ y
        P = (np.eye(4) - K @ _H) @ P
    return KalmanState(x, P)


def kf_forecast(state: KalmanState, tau: int, cfg: KalmanConfig = KalmanConfig()) -> np.ndarray:
    """Predict-only rollout; returns the (tau, 2) matrix of positions."""
    if tau < 1:
        raise ForecastConfigError(f"horizon must be >= 1 step, got {tau}")
    F = cfg.transition()
    Q = cfg.process_noise * np.eye(4)
    x = state.x.copy()
    P = state.P.copy()
    out = np.empty((tau, 2), dtype=np.float64)
    for i in range(tau):
        x = F @ x
        P = F @ P @ F.T + Q
        out[i, 0] = x[0]
        out[i, 1] = x[1]
    return out
