"""Online trackers and the batch least-squares oracle.

Two online methods step once per time step: OGD applies a single gradient
step, ONM a single Newton step. The batch oracle runs constant-step gradient
descent to (approximate) stationarity and is used to compute reference
minimizers. The OLS initializer solves the linearized squared-range system
in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .geometry import MeasurementFrame, SensorArray
from .loss import AnchorProximityError, LossSnapshot, loss_gradient, loss_gradient_hessian

OGD = "ogd"
ONM = "onm"
METHODS = (OGD, ONM)

# Above this Hessian condition number a Newton step is numerically
# meaningless; ONM falls back to a gradient step and counts it.
NEWTON_CONDITION_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class TrackerState:
    """Current estimate of one online tracker, passed linearly through time."""

    estimate: np.ndarray
    step_size: float
    method: str = OGD
    fallback_count: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")
        est = np.array(self.estimate, dtype=float)
        est.setflags(write=False)
        object.__setattr__(self, "estimate", est)


@dataclass(frozen=True)
class OracleConfig:
    """Protocol for computing reference minimizers by gradient descent.

    step_size None means the conventional 1/m default, resolved per snapshot.
    """

    step_size: Optional[float] = None
    gradient_tolerance: float = 1e-8
    max_iterations: int = 5000

    def __post_init__(self):
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError("step_size must be > 0")
        if self.gradient_tolerance <= 0:
            raise ValueError("gradient_tolerance must be > 0")
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be > 0")


class OracleResult(NamedTuple):
    point: np.ndarray
    gradient_norm: float
    iterations: int
    converged: bool = False
    anchor_failure: Optional[int] = None
    path: Optional[np.ndarray] = None


def ogd_step(
    state: TrackerState, s: LossSnapshot, step_size: Optional[float] = None
) -> TrackerState:
    """One online gradient step: x <- x - eta * grad f_t(x).

    Exactly one gradient evaluation; anchor proximity propagates. step_size
    overrides the state's constant step for this call (the schedule hook);
    everything shipped here uses the constant step.
    """
    eta = state.step_size if step_size is None else step_size
    g = loss_gradient(s, state.estimate)
    return replace(state, estimate=state.estimate - eta * g)


def onm_step(
    state: TrackerState, s: LossSnapshot, step_size: Optional[float] = None
) -> TrackerState:
    """One online Newton step: x <- x - (hess f_t(x))^{-1} grad f_t(x).

    The Newton system is solved, never inverted. If the Hessian condition
    number exceeds NEWTON_CONDITION_LIMIT (or the solve produces non-finite
    values), the step degrades to a gradient step (using the state's step
    size, or the step_size override) and fallback_count grows.
    """
    eta = state.step_size if step_size is None else step_size
    g, H = loss_gradient_hessian(s, state.estimate)
    cond = np.linalg.cond(H)
    if np.isfinite(cond) and cond <= NEWTON_CONDITION_LIMIT:
        direction = np.linalg.solve(H, g)
        if np.isfinite(direction).all():
            return replace(state, estimate=state.estimate - direction)
    return replace(
        state,
        estimate=state.estimate - eta * g,
        fallback_count=state.fallback_count + 1,
    )


def ols_initialize(sensors: SensorArray, frame: MeasurementFrame) -> np.ndarray:
    """Closed-form position estimate from squared-range differences.

    Subtracting consecutive squared-range equations ||x - a_i||^2 ~ r_i^2
    gives the linear system A x ~ b with rows (a_{i+1} - a_i)^T and
    b_i = (||a_{i+1}||^2 - ||a_i||^2 + r_i^2 - r_{i+1}^2) / 2, solved in the
    least-squares sense. Exact at zero noise.
    """
    a = sensors.positions
    r = frame.ranges
    if frame.m != sensors.m:
        raise ValueError("frame/sensor count mismatch")
    A = a[1:] - a[:-1]
    sq = np.einsum("ij,ij->i", a, a)
    b = 0.5 * (sq[1:] - sq[:-1] + r[:-1] ** 2 - r[1:] ** 2)
    sol, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < sensors.n:
        raise ValueError("consecutive sensor differences are rank deficient")
    return sol


def batch_least_squares(
    s: LossSnapshot,
    init,
    cfg: OracleConfig = OracleConfig(),
    trace: bool = False,
) -> OracleResult:
    """Constant-step gradient descent until the gradient norm drops below
    cfg.gradient_tolerance or cfg.max_iterations steps have been taken.

    Anchor proximity mid-run aborts with partial diagnostics rather than
    raising: the result carries the offending sensor index, the iterate
    count, and (with trace=True) the path walked so far.
    """
    eta = cfg.step_size if cfg.step_size is not None else 1.0 / s.sensors.m
    x = np.asarray(init, dtype=float).copy()
    path = [x.copy()] if trace else None

    def result(point, gnorm, iters, converged, failure=None):
        return OracleResult(
            point=point,
            gradient_norm=float(gnorm),
            iterations=iters,
            converged=converged,
            anchor_failure=failure,
            path=np.asarray(path) if trace else None,
        )

    try:
        g = loss_gradient(s, x)
    except AnchorProximityError as err:
        return result(x, np.nan, 0, False, err.sensor_index)
    for k in range(cfg.max_iterations):
        gnorm = np.linalg.norm(g)
        if gnorm < cfg.gradient_tolerance:
            return result(x, gnorm, k, True)
        x = x - eta * g
        if trace:
            path.append(x.copy())
        try:
            g = loss_gradient(s, x)
        except AnchorProximityError as err:
            return result(x, np.nan, k + 1, False, err.sensor_index)
    gnorm = np.linalg.norm(g)
    return result(x, gnorm, cfg.max_iterations, bool(gnorm < cfg.gradient_tolerance))
