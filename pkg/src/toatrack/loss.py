"""Per-time-step range least-squares loss with analytic derivatives.

The loss bound to sensors a_1..a_m and a measurement frame r_1..r_m is

    f(x) = sum_i (||x - a_i|| - r_i)^2.

It is defined everywhere but non-differentiable at the sensor positions, so
the gradient and Hessian guard a small exclusion radius around each sensor
and raise AnchorProximityError inside it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import MeasurementFrame, SensorArray


class AnchorProximityError(ValueError):
    """Query point is within the guard radius of a sensor position."""

    def __init__(self, sensor_index: int, distance: float, guard: float):
        self.sensor_index = int(sensor_index)
        self.distance = float(distance)
        self.guard = float(guard)
        super().__init__(
            f"point is within {guard:g} of sensor {sensor_index} "
            f"(distance {distance:.3e}); derivatives are undefined there"
        )


@dataclass(frozen=True, eq=False)
class LossSnapshot:
    """The loss at one time step: sensors plus the frame observed then."""

    sensors: SensorArray
    frame: MeasurementFrame
    anchor_guard: float = 1e-9

    def __post_init__(self):
        if self.frame.m != self.sensors.m:
            raise ValueError(
                f"frame has {self.frame.m} ranges but the array has {self.sensors.m} sensors"
            )
        if self.anchor_guard <= 0:
            raise ValueError("anchor_guard must be > 0")


def _diffs_dists(s: LossSnapshot, x) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    diffs = x - s.sensors.positions
    dists = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
    return diffs, dists


def _check_smooth(s: LossSnapshot, dists: np.ndarray) -> None:
    i = int(np.argmin(dists))
    if dists[i] <= s.anchor_guard:
        raise AnchorProximityError(i, dists[i], s.anchor_guard)


def distances_and_residuals(s: LossSnapshot, x) -> tuple[np.ndarray, np.ndarray]:
    """Diagnostic view: (||x - a_i||, ||x - a_i|| - r_i) for every sensor."""
    _, dists = _diffs_dists(s, x)
    return dists, dists - s.frame.ranges


def loss_value(s: LossSnapshot, x) -> float:
    """f(x) = sum of squared range residuals; defined everywhere, >= 0."""
    _, dists = _diffs_dists(s, x)
    resid = dists - s.frame.ranges
    return float(resid @ resid)


def loss_gradient(s: LossSnapshot, x) -> np.ndarray:
    """Analytic gradient 2 sum_i (1 - r_i/||x-a_i||)(x - a_i).

    Raises AnchorProximityError within anchor_guard of any sensor.
    """
    diffs, dists = _diffs_dists(s, x)
    _check_smooth(s, dists)
    resid = dists - s.frame.ranges
    return 2.0 * ((resid / dists) @ diffs)


def loss_hessian(s: LossSnapshot, x) -> np.ndarray:
    """Analytic Hessian 2 sum_i { (r_i/||x-a_i||^3) d_i d_i^T + (1 - r_i/||x-a_i||) I }
    with d_i = x - a_i; exactly symmetric by construction.
    """
    _, hess = _gradient_hessian(s, x, need_gradient=False)
    return hess


def loss_gradient_hessian(s: LossSnapshot, x) -> tuple[np.ndarray, np.ndarray]:
    """Gradient and Hessian from one fused pass over the sensors."""
    return _gradient_hessian(s, x, need_gradient=True)


def _gradient_hessian(s: LossSnapshot, x, need_gradient: bool):
    diffs, dists = _diffs_dists(s, x)
    _check_smooth(s, dists)
    r = s.frame.ranges
    ratio = r / dists
    grad = 2.0 * (((dists - r) / dists) @ diffs) if need_gradient else None
    n = diffs.shape[1]
    # accumulate per-sensor rank-one terms with np.outer: commutativity of the
    # elementwise products keeps H exactly symmetric, bit for bit
    acc = np.sum(1.0 - ratio) * np.eye(n)
    w = ratio / dists**2
    for i in range(diffs.shape[0]):
        acc += w[i] * np.outer(diffs[i], diffs[i])
    return grad, 2.0 * acc
