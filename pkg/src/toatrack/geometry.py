"""Sensor geometry, target trajectories, and the noisy range-measurement model.

All types are immutable after construction (arrays are marked read-only) and
safe to share across threads. Randomness always enters through an explicit
``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Ratio of smallest to largest singular value below which the sensor
# difference matrix is treated as rank deficient.
RANK_TOLERANCE = 1e-10


class SensorCountError(ValueError):
    """Fewer sensors than the ambient dimension allows (m < n + 1)."""


class SensorRankError(ValueError):
    """Sensor difference vectors do not span the ambient space."""


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SensorArray:
    """Fixed anchor positions a_1..a_m in R^n whose differences span R^n."""

    positions: np.ndarray

    def __post_init__(self):
        pos = _frozen_array(self.positions)
        if pos.ndim != 2:
            raise ValueError("sensor positions must be a list of equal-dimension points")
        if not np.isfinite(pos).all():
            raise ValueError("sensor positions must be finite")
        m, n = pos.shape
        if m < n + 1:
            raise SensorCountError(
                f"need at least n+1={n + 1} sensors to span R^{n}, got m={m}"
            )
        diffs = pos[1:] - pos[0]
        svals = np.linalg.svd(diffs, compute_uv=False)
        if svals[-1] <= RANK_TOLERANCE * svals[0]:
            raise SensorRankError(
                f"sensor difference vectors span only {int(np.sum(svals > RANK_TOLERANCE * svals[0]))} "
                f"of {n} dimensions (singular values {svals})"
            )
        object.__setattr__(self, "positions", pos)

    @property
    def m(self) -> int:
        return self.positions.shape[0]

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    def distances(self, x: np.ndarray) -> np.ndarray:
        """Euclidean distances from point x to every sensor."""
        diffs = np.asarray(x, dtype=float) - self.positions
        return np.sqrt(np.einsum("ij,ij->i", diffs, diffs))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """True target path x_1*, ..., x_T* over a horizon of T steps."""

    positions: np.ndarray

    def __post_init__(self):
        pos = _frozen_array(self.positions)
        if pos.ndim != 2 or pos.shape[0] < 1:
            raise ValueError("trajectory needs at least one point")
        if not np.isfinite(pos).all():
            raise ValueError("trajectory positions must be finite")
        object.__setattr__(self, "positions", pos)

    @property
    def T(self) -> int:
        return self.positions.shape[0]

    @property
    def n(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step measurement noise level sigma_t, plus the high-probability
    norm constant c0 (Gaussian noise keeps ||w|| <= c0*sqrt(m)*sigma with
    overwhelming probability for c0 = 3).

    Kinds:
      constant            sigma_t = c
      inverse-sqrt        sigma_t = c / sqrt(t)
      scaled-inverse-sqrt sigma_t = c / sqrt(2 t)
    """

    kind: str
    c: float
    c0: float = 3.0

    KINDS = ("constant", "inverse-sqrt", "scaled-inverse-sqrt")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {self.KINDS}")
        if self.c < 0:
            raise ValueError("noise scale c must be >= 0")
        if self.c0 <= 0:
            raise ValueError("norm constant c0 must be > 0")

    @classmethod
    def constant(cls, sigma: float, c0: float = 3.0) -> "NoiseSchedule":
        return cls("constant", sigma, c0)

    @classmethod
    def inverse_sqrt(cls, c: float, c0: float = 3.0) -> "NoiseSchedule":
        return cls("inverse-sqrt", c, c0)

    @classmethod
    def scaled_inverse_sqrt(cls, c: float, c0: float = 3.0) -> "NoiseSchedule":
        return cls("scaled-inverse-sqrt", c, c0)

    def sigma(self, t: int) -> float:
        """Noise standard deviation at (1-based) time step t."""
        if t < 1:
            raise ValueError("time index is 1-based")
        if self.kind == "constant":
            return self.c
        if self.kind == "inverse-sqrt":
            return self.c / np.sqrt(t)
        return self.c / np.sqrt(2.0 * t)

    def sigmas(self, T: int) -> np.ndarray:
        """Vector of sigma_t for t = 1..T."""
        t = np.arange(1, T + 1, dtype=float)
        if self.kind == "constant":
            return np.full(T, self.c)
        if self.kind == "inverse-sqrt":
            return self.c / np.sqrt(t)
        return self.c / np.sqrt(2.0 * t)


@dataclass(frozen=True, eq=False)
class MeasurementFrame:
    """Noisy ranges r_1..r_m observed at one time step."""

    t: int
    ranges: np.ndarray
    sigma_t: float

    def __post_init__(self):
        r = _frozen_array(self.ranges)
        if r.ndim != 1:
            raise ValueError("ranges must be a flat vector")
        if not np.isfinite(r).all():
            raise ValueError("ranges must be finite")
        object.__setattr__(self, "ranges", r)

    @property
    def m(self) -> int:
        return self.ranges.shape[0]


def validate_sensor_array(points) -> SensorArray:
    """Validate and wrap a list of sensor positions.

    Raises SensorCountError if m < n + 1 and SensorRankError if the
    difference vectors {a_i - a_1} are (numerically) rank deficient.
    """
    return SensorArray(np.asarray(points, dtype=float))


def random_walk_trajectory(
    x1, T: int, step_scale: float, rng: np.random.Generator
) -> Trajectory:
    """Random-walk target path: x_{t+1} = x_t + step_scale/sqrt(2(t+1)) * u_t
    with u_t uniform on the unit sphere (t is 1-based).

    The increment norm is exactly step_scale/sqrt(2(t+1)); directions are
    sampled as normalized standard Gaussian vectors, which is uniform on the
    sphere in any dimension.
    """
    if T < 1:
        raise ValueError("horizon T must be >= 1")
    if step_scale < 0:
        raise ValueError("step_scale must be >= 0")
    x1 = np.asarray(x1, dtype=float)
    n = x1.shape[0]
    pos = np.empty((T, n))
    pos[0] = x1
    for i in range(1, T):
        z = rng.standard_normal(n)
        norm = np.linalg.norm(z)
        while norm == 0.0:  # probability-zero guard
            z = rng.standard_normal(n)
            norm = np.linalg.norm(z)
        # 1-based step index t = i, creating position t+1 = i+1
        pos[i] = pos[i - 1] + (step_scale / np.sqrt(2.0 * (i + 1))) * (z / norm)
    return Trajectory(pos)


def fixed_trajectory(points) -> Trajectory:
    """Wrap an explicit list of positions as a Trajectory."""
    return Trajectory(np.asarray(points, dtype=float))


def measure(
    sensors: SensorArray,
    x_true,
    sigma_t: float,
    rng: np.random.Generator,
    t: int = 1,
) -> MeasurementFrame:
    """Draw one frame of noisy ranges r_i = ||x_true - a_i|| + w_i with
    w_i ~ N(0, sigma_t^2) i.i.d. across sensors.

    Exactly m standard-normal draws are consumed regardless of sigma_t, so
    stream alignment does not depend on the noise level. Negative ranges are
    passed through unmodified.
    """
    if sigma_t < 0:
        raise ValueError("sigma_t must be >= 0")
    dists = sensors.distances(x_true)
    w = sigma_t * rng.standard_normal(sensors.m)
    return MeasurementFrame(t=t, ranges=dists + w, sigma_t=float(sigma_t))


def noiseless_frame(sensors: SensorArray, x_true, t: int = 1) -> MeasurementFrame:
    """Frame whose ranges are the exact distances to x_true (sigma = 0)."""
    return MeasurementFrame(t=t, ranges=sensors.distances(x_true), sigma_t=0.0)
