"""Tracking-performance metrics: cumulative tracking error, path lengths,
and noise cumulants."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import Trajectory


@dataclass(frozen=True, eq=False)
class RunMetrics:
    """Metrics of one tracking run (or the pointwise mean over many runs)."""

    per_step_error: np.ndarray
    ctte: float
    ctte_series: np.ndarray
    path_length_V: float
    N1: float
    N2: float
    oracle_gap: Optional[np.ndarray] = None
    optimal_path_length_Vprime: Optional[float] = None
    dynamic_regret: Optional[np.ndarray] = None  # debug series, never headline
    wall_time_per_step: float = 0.0
    max_noise_ratio: float = 0.0

    def __post_init__(self):
        if np.any(self.per_step_error < 0):
            raise ValueError("per-step errors must be >= 0")
        total = float(np.sum(self.per_step_error))
        if abs(self.ctte - total) > 1e-12 * max(1.0, abs(total)):
            raise ValueError("ctte must equal the sum of per-step errors")

    @classmethod
    def from_run(
        cls,
        estimates: np.ndarray,
        truth: Trajectory,
        sigmas: np.ndarray,
        oracle_estimates: Optional[np.ndarray] = None,
        dynamic_regret: Optional[np.ndarray] = None,
        wall_time_per_step: float = 0.0,
        max_noise_ratio: float = 0.0,
    ) -> "RunMetrics":
        errors = np.linalg.norm(np.asarray(estimates, dtype=float) - truth.positions, axis=1)
        total, series = ctte(estimates, truth)
        n1, n2 = noise_cumulants(sigmas)
        gap = None
        vprime = None
        if oracle_estimates is not None:
            gap = np.linalg.norm(np.asarray(estimates) - oracle_estimates, axis=1)
            vprime = path_length(oracle_estimates)
        return cls(
            per_step_error=errors,
            ctte=total,
            ctte_series=series,
            path_length_V=path_length(truth.positions),
            N1=n1,
            N2=n2,
            oracle_gap=gap,
            optimal_path_length_Vprime=vprime,
            dynamic_regret=dynamic_regret,
            wall_time_per_step=wall_time_per_step,
            max_noise_ratio=max_noise_ratio,
        )


def ctte(estimates, truth: Trajectory) -> tuple[float, np.ndarray]:
    """Cumulative target tracking error sum_t ||x_t - x_t*||.

    Returns the total and the running partial sums; the total equals the
    final cumulative entry exactly.
    """
    est = np.asarray(estimates, dtype=float)
    if est.shape != truth.positions.shape:
        raise ValueError(
            f"estimate series shape {est.shape} does not match trajectory {truth.positions.shape}"
        )
    errors = np.linalg.norm(est - truth.positions, axis=1)
    series = np.cumsum(errors)
    return float(series[-1]), series


def path_length(points) -> float:
    """Total variation sum_t ||p_{t+1} - p_t||; zero for a single point."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("need at least one point")
    if pts.shape[0] == 1:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def noise_cumulants(sigmas) -> tuple[float, float]:
    """Cumulative noise standard deviation N1 = sum sigma_t and cumulative
    noise variance N2 = sum sigma_t^2, sanity-checked against the
    Cauchy-Schwarz relation N1 <= sqrt(T * N2)."""
    s = np.asarray(sigmas, dtype=float)
    if np.any(s < 0):
        raise ValueError("noise levels must be >= 0")
    n1 = float(np.sum(s))
    n2 = float(np.sum(s**2))
    bound = np.sqrt(len(s) * n2)
    # absolute slack covers sigma**2 underflowing to zero for sigma < ~1e-154
    assert n1 <= bound * (1.0 + 1e-12) + 1e-150 * len(s), "Cauchy-Schwarz violated"
    return n1, n2


def growth_profile(cumulative, window: int) -> np.ndarray:
    """Average increment of a cumulative series over consecutive windows.

    Slopes near a constant indicate linear growth; decreasing slopes indicate
    sublinear growth. The trailing partial window is dropped.
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    c = np.asarray(cumulative, dtype=float)
    increments = np.diff(c)
    k = increments.size // window
    if k == 0:
        raise ValueError(f"window {window} exceeds series increment count {increments.size}")
    return increments[: k * window].reshape(k, window).mean(axis=1)
