"""Constant-velocity Kalman filter over bounding boxes.

State is the SORT convention: (cx, cy, a, h, vcx, vcy, va, vh) where a is
the aspect ratio w/h. Noise scales follow the usual height-relative
weighting so large boxes tolerate larger pixel errors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BoundingBox

_STD_WEIGHT_POSITION = 1.0 / 20
_STD_WEIGHT_VELOCITY = 1.0 / 160


@dataclass
class MotionState:
    mean: np.ndarray        # shape (8,)
    covariance: np.ndarray  # shape (8, 8), symmetric PSD


def box_to_measurement(box: BoundingBox) -> np.ndarray:
    cx, cy = box.center
    return np.array([cx, cy, box.width / box.height, box.height], dtype=np.float64)


def state_to_box(state: MotionState) -> BoundingBox:
    cx, cy, a, h = state.mean[:4]
    h = max(h, 1e-3)
    w = max(a * h, 1e-3)
    return BoundingBox(cx - w / 2.0, cy - h / 2.0, w, h)


def initiate(box: BoundingBox) -> MotionState:
    """New track state from an unassociated measurement, zero velocity."""
    z = box_to_measurement(box)
    mean = np.concatenate([z, np.zeros(4)])
    h = z[3]
    std = [
        2 * _STD_WEIGHT_POSITION * h,
        2 * _STD_WEIGHT_POSITION * h,
        1e-2,
        2 * _STD_WEIGHT_POSITION * h,
        10 * _STD_WEIGHT_VELOCITY * h,
        10 * _STD_WEIGHT_VELOCITY * h,
        1e-5,
        10 * _STD_WEIGHT_VELOCITY * h,
    ]
    covariance = np.diag(np.square(std))
    return MotionState(mean, covariance)


def _transition_matrix() -> np.ndarray:
    F = np.eye(8)
    for i in range(4):
        F[i, i + 4] = 1.0
    return F


def predict(state: MotionState) -> MotionState:
    """Advance one frame under constant velocity; grow covariance by
    process noise."""
    F = _transition_matrix()
    h = state.mean[3]
    std = [
        _STD_WEIGHT_POSITION * h,
        _STD_WEIGHT_POSITION * h,
        1e-2,
        _STD_WEIGHT_POSITION * h,
        _STD_WEIGHT_VELOCITY * h,
        _STD_WEIGHT_VELOCITY * h,
        1e-5,
        _STD_WEIGHT_VELOCITY * h,
    ]
    Q = np.diag(np.square(std))
    mean = F @ state.mean
    covariance = F @ state.covariance @ F.T + Q
    covariance = 0.5 * (covariance + covariance.T)
    return MotionState(mean, covariance)


def kf_update(state: MotionState, observation: BoundingBox) -> MotionState:
    """Standard Kalman correction with a box measurement."""
    z = box_to_measurement(observation)
    H = np.zeros((4, 8))
    H[:4, :4] = np.eye(4)
    h = state.mean[3]
    std = [
        _STD_WEIGHT_POSITION * h,
        _STD_WEIGHT_POSITION * h,
        1e-1,
        _STD_WEIGHT_POSITION * h,
    ]
    R = np.diag(np.square(std))

    S = H @ state.covariance @ H.T + R
    K = np.linalg.solve(S.T, (state.covariance @ H.T).T).T
    innovation = z - H @ state.mean
    mean = state.mean + K @ innovation
    # Joseph form keeps the posterior covariance symmetric PSD
    I_KH = np.eye(8) - K @ H
    covariance = I_KH @ state.covariance @ I_KH.T + K @ R @ K.T
    covariance = 0.5 * (covariance + covariance.T)
    return MotionState(mean, covariance)
