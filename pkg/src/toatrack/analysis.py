"""Loss-landscape diagnostics for range least-squares tracking.

Quantifies when the non-convex loss is locally strongly convex around its
minimizer and whether an online gradient tracker stays inside that region:

* ``direction_gram_min_eig`` -- the geometric conditioning constant (smallest
  eigenvalue of the unit-direction Gram sum from target to sensors);
* ``kappa`` -- the radius of the strong-convexity ball implied by the
  conditioning, the noise level, and the estimation-error constants;
* ball sampling of Hessian eigenvalues to verify positivity and estimate the
  strong-convexity / gradient-Lipschitz constants (mu, L);
* ``contraction_factor`` -- the per-step distance contraction of constant-step
  gradient descent under those constants;
* ``check_tracking_conditions`` -- the end-to-end feasibility report for a
  scenario (noise, trajectory variation, step size, initialization);
* closed-form eigenvalue / unit-vector utilities backing the above, exposed
  with independent oracles in mind;
* ``estimation_error_scaling`` -- Monte Carlo regression of the minimizer's
  estimation error against the two-term noise model, the operational way to
  fill in the otherwise existential constants K1, K2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .estimators import OracleConfig, batch_least_squares
from .geometry import NoiseSchedule, SensorArray, Trajectory, measure, noiseless_frame
from .loss import AnchorProximityError, LossSnapshot, loss_hessian


class AnchorInBallError(ValueError):
    """Sampling ball reaches a sensor position, where the loss is non-smooth."""


class LinearDependenceError(ValueError):
    """Vectors are (numerically) linearly dependent."""


@dataclass(frozen=True)
class ConvexityConfig:
    """Constants used by the tracking-condition checks.

    K1, K2 are the estimation-error constants (distance per sigma and per
    sigma^2). They exist but are not constructed by the theory; use
    estimation_error_scaling to fit them empirically, or leave both at 0 for
    the idealized (noise-free-bound) mode.
    """

    delta: float = 0.5
    c0: float = 3.0
    K1: float = 0.0
    K2: float = 0.0
    eig_samples: int = 200

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if self.c0 <= 0:
            raise ValueError("c0 must be > 0")
        if self.K1 < 0 or self.K2 < 0:
            raise ValueError("K1, K2 must be >= 0")
        if self.eig_samples < 1:
            raise ValueError("eig_samples must be >= 1")

    @property
    def mode(self) -> str:
        return "idealized" if (self.K1 == 0.0 and self.K2 == 0.0) else "empirical"

    def error_bound(self, m: int, sigma: float) -> float:
        """Estimation-error bound K1*sqrt(m)*sigma + K2*m*sigma^2."""
        return self.K1 * np.sqrt(m) * sigma + self.K2 * m * sigma**2


@dataclass(frozen=True)
class ConvexityReport:
    """Outcome of the tracking-condition checks for one scenario.

    mu_hat / L_hat / rho are None when not estimable (e.g. kappa <= 0, or a
    sampled Hessian was not positive definite). mode records whether K1, K2
    were empirical fits or the idealized zeros.
    """

    Lambda: float
    kappa: float
    mu_hat: Optional[float]
    L_hat: Optional[float]
    rho: Optional[float]
    dist_condition_ok: bool
    kappa_positive: bool
    radius_condition_ok: bool
    init_condition_ok: bool
    mode: str
    sigma_max: float
    v_max: float
    error_bound: float
    min_anchor_distance: float
    min_sampled_eig: Optional[float] = None

    def __post_init__(self):
        if self.mu_hat is not None and self.L_hat is not None:
            if not (0 <= self.mu_hat <= self.L_hat):
                raise ValueError("need 0 <= mu_hat <= L_hat when reported")
        if self.rho is not None and not (0 < self.rho < 1):
            raise ValueError("rho must lie in (0, 1) when reported")

    def to_dict(self) -> dict:
        return {
            "Lambda": self.Lambda,
            "kappa": self.kappa,
            "mu_hat": self.mu_hat,
            "L_hat": self.L_hat,
            "rho": self.rho,
            "dist_condition_ok": self.dist_condition_ok,
            "kappa_positive": self.kappa_positive,
            "radius_condition_ok": self.radius_condition_ok,
            "init_condition_ok": self.init_condition_ok,
            "mode": self.mode,
            "sigma_max": self.sigma_max,
            "v_max": self.v_max,
            "error_bound": self.error_bound,
            "min_anchor_distance": self.min_anchor_distance,
            "min_sampled_eig": self.min_sampled_eig,
        }


def direction_gram_min_eig(sensors: SensorArray, x) -> float:
    """Smallest eigenvalue of sum_i u_i u_i^T with u_i the unit vector from
    sensor i to x. Strictly positive whenever the sensors span and x is not a
    sensor position."""
    x = np.asarray(x, dtype=float)
    diffs = x - sensors.positions
    dists = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
    if np.any(dists == 0.0):
        raise AnchorProximityError(int(np.argmin(dists)), 0.0, 0.0)
    units = diffs / dists[:, None]
    gram = units.T @ units
    return float(np.linalg.eigvalsh(gram)[0])


def kappa(cfg: ConvexityConfig, m: int, Lambda: float, sigma: float) -> float:
    """Radius of the guaranteed strong-convexity ball:

        kappa = (delta / 10m) * Lambda - (K1*sqrt(m)*sigma + K2*m*sigma^2)
                - 4*c0*sigma/5.

    May be <= 0, which signals that the conditions fail at this noise level.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    return float(
        (cfg.delta / (10.0 * m)) * Lambda - cfg.error_bound(m, sigma) - 0.8 * cfg.c0 * sigma
    )


def _ball_points(center: np.ndarray, radius: float, samples: int, rng) -> np.ndarray:
    """Deterministic probes (center, axis-aligned boundary) plus uniform
    draws from the ball. Degenerates to the center alone at radius 0."""
    n = center.shape[0]
    probes = [center]
    for j in range(n):
        e = np.zeros(n)
        e[j] = radius
        probes.append(center + e)
        probes.append(center - e)
    z = rng.standard_normal((samples, n))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radii = radius * rng.random(samples) ** (1.0 / n)
    draws = center + z / norms * radii[:, None]
    return np.vstack([probes, draws])


def _check_ball_clear(s: LossSnapshot, center: np.ndarray, radius: float) -> None:
    dists = s.sensors.distances(center)
    i = int(np.argmin(dists))
    if dists[i] <= radius + s.anchor_guard:
        raise AnchorInBallError(
            f"sensor {i} at distance {dists[i]:.3e} lies inside the sampling "
            f"ball of radius {radius:g} (plus guard {s.anchor_guard:g})"
        )


def verify_local_strong_convexity(
    s: LossSnapshot, center, radius: float, samples: int, rng: np.random.Generator
) -> tuple[float, bool]:
    """Sample Hessian eigenvalues over the ball B(center, radius).

    Returns (minimum sampled eigenvalue, all-positive flag). The ball must
    exclude every sensor position.
    """
    center = np.asarray(center, dtype=float)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    _check_ball_clear(s, center, radius)
    min_eig = np.inf
    for p in _ball_points(center, radius, samples, rng):
        eig = np.linalg.eigvalsh(loss_hessian(s, p))[0]
        min_eig = min(min_eig, eig)
    return float(min_eig), bool(min_eig > 0.0)


def estimate_strong_convexity_constants(
    s: LossSnapshot, center, radius: float, samples: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Empirical (mu, L): extreme Hessian eigenvalues over a ball sample.

    mu_hat is the smallest sampled eigenvalue, L_hat the largest; the same
    probe set feeds both, so mu_hat <= L_hat always.
    """
    center = np.asarray(center, dtype=float)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    _check_ball_clear(s, center, radius)
    lo, hi = np.inf, -np.inf
    for p in _ball_points(center, radius, samples, rng):
        eigs = np.linalg.eigvalsh(loss_hessian(s, p))
        lo = min(lo, eigs[0])
        hi = max(hi, eigs[-1])
    return float(lo), float(hi)


def contraction_factor(eta: float, mu: float, L: float) -> float:
    """Per-step distance contraction of gradient descent on a mu-strongly
    convex, L-gradient-Lipschitz function:

        rho = sqrt(1 - 2*eta*mu*L/(mu + L)),   valid for 0 < eta <= 2/(mu+L).
    """
    if not (0 < mu <= L):
        raise ValueError("need 0 < mu <= L")
    if not (0 < eta <= 2.0 / (mu + L)):
        raise ValueError(f"step size must lie in (0, {2.0 / (mu + L):g}]")
    return float(np.sqrt(max(0.0, 1.0 - 2.0 * eta * mu * L / (mu + L))))


def rank_one_diff_min_eig(u, v) -> float:
    """Closed-form smallest eigenvalue of u u^T - v v^T for linearly
    independent u, v:

        (||u||^2 - ||v||^2 - ||u - v||*||u + v||) / 2.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise LinearDependenceError("zero vector")
    uhat = u / nu
    sin_angle = np.linalg.norm(v / nv - (uhat @ (v / nv)) * uhat)
    if sin_angle <= 1e-12:
        raise LinearDependenceError(f"vectors are numerically parallel (sin angle {sin_angle:.2e})")
    return float((nu**2 - nv**2 - np.linalg.norm(u - v) * np.linalg.norm(u + v)) / 2.0)


def unit_diff_bound_holds(x, y) -> tuple[float, float, bool]:
    """Evaluate || x/||x|| - y/||y|| || <= ||x - y|| / min(||x||, ||y||).

    Returns (lhs, rhs, holds). The inequality is an identity in exact
    arithmetic (with equality iff the norms agree), so the flag only allows
    rounding slack at the equality boundary.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        raise ValueError("zero vector has no direction")
    lhs = float(np.linalg.norm(x / nx - y / ny))
    rhs = float(np.linalg.norm(x - y) / min(nx, ny))
    holds = lhs <= rhs + 1e-12 * max(1.0, rhs)
    return lhs, rhs, bool(holds)


@dataclass(frozen=True, eq=False)
class ScalingReport:
    """Fit of mean estimation error against K1*sqrt(m)*sigma + K2*m*sigma^2."""

    sigma_grid: np.ndarray
    mean_errors: np.ndarray
    K1_hat: float
    K2_hat: float
    r_squared: float
    residuals: np.ndarray
    failures: np.ndarray
    runs_per_sigma: int
    m: int

    def to_dict(self) -> dict:
        return {
            "sigma_grid": self.sigma_grid.tolist(),
            "mean_errors": self.mean_errors.tolist(),
            "K1_hat": self.K1_hat,
            "K2_hat": self.K2_hat,
            "r_squared": self.r_squared,
            "residuals": self.residuals.tolist(),
            "failures": self.failures.tolist(),
            "runs_per_sigma": self.runs_per_sigma,
            "m": self.m,
        }


def estimation_error_scaling(
    sensors: SensorArray,
    x_true,
    sigma_grid,
    runs_per_sigma: int,
    oracle_cfg: OracleConfig = OracleConfig(),
    rng: Optional[np.random.Generator] = None,
) -> ScalingReport:
    """Monte Carlo estimate of how the minimizer's distance to the true
    position scales with the noise level.

    For each sigma, draws measurement frames, computes the minimizer with the
    batch oracle initialized at the true position, and averages the error
    norm. Oracle failures are counted and excluded from the per-sigma mean.
    The two-term model (sqrt(m)*sigma, m*sigma^2) is then fit by least
    squares.
    """
    x_true = np.asarray(x_true, dtype=float)
    sigma_grid = np.asarray(sigma_grid, dtype=float)
    if sigma_grid.size == 0 or np.any(sigma_grid < 0):
        raise ValueError("sigma grid must be non-empty and nonnegative")
    if np.any(np.diff(sigma_grid) < 0):
        raise ValueError("sigma grid must be ascending")
    if rng is None:
        rng = np.random.default_rng(0)
    streams = rng.spawn(sigma_grid.size * runs_per_sigma)

    m = sensors.m
    mean_errors = np.empty(sigma_grid.size)
    failures = np.zeros(sigma_grid.size, dtype=int)
    for i, sigma in enumerate(sigma_grid):
        errs = []
        for j in range(runs_per_sigma):
            frame = measure(sensors, x_true, sigma, streams[i * runs_per_sigma + j])
            res = batch_least_squares(LossSnapshot(sensors, frame), x_true, oracle_cfg)
            if res.converged:
                errs.append(np.linalg.norm(res.point - x_true))
            else:
                failures[i] += 1
        mean_errors[i] = np.mean(errs) if errs else np.nan

    design = np.column_stack([np.sqrt(m) * sigma_grid, m * sigma_grid**2])
    ok = np.isfinite(mean_errors)
    coef, *_ = np.linalg.lstsq(design[ok], mean_errors[ok], rcond=None)
    fitted = design @ coef
    resid = mean_errors - fitted
    centered = mean_errors[ok] - mean_errors[ok].mean()
    ss_tot = float(centered @ centered)
    ss_res = float(resid[ok] @ resid[ok])
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ScalingReport(
        sigma_grid=sigma_grid,
        mean_errors=mean_errors,
        K1_hat=float(coef[0]),
        K2_hat=float(coef[1]),
        r_squared=r2,
        residuals=resid,
        failures=failures,
        runs_per_sigma=runs_per_sigma,
        m=m,
    )


def check_tracking_conditions(
    cfg: ConvexityConfig,
    sensors: SensorArray,
    trajectory: Trajectory,
    noise: NoiseSchedule,
    eta: float,
    x0,
    rng: Optional[np.random.Generator] = None,
) -> ConvexityReport:
    """Evaluate the scenario-level tracking conditions and report all numbers.

    Uses the worst case over the horizon: sigma = max_t sigma_t, v = max_t
    ||x_{t+1}* - x_t*||, Lambda = min_t conditioning at x_t*. The constants
    mu_hat, L_hat are sampled from noise-free Hessians over balls of radius
    max(kappa, 0) around trajectory points. Reports, never raises.
    """
    x0 = np.asarray(x0, dtype=float)
    if rng is None:
        rng = np.random.default_rng(0)
    pts = trajectory.positions
    T, m = trajectory.T, sensors.m

    sig = noise.sigmas(T)
    sigma = float(np.max(sig))
    steps = np.diff(pts, axis=0)
    v = float(np.max(np.linalg.norm(steps, axis=1))) if T > 1 else 0.0
    err_bound = cfg.error_bound(m, sigma)

    all_dists = np.linalg.norm(pts[:, None, :] - sensors.positions[None, :, :], axis=2)
    min_dist = float(np.min(all_dists))
    dist_ok = min_dist > err_bound + cfg.delta

    Lambda = min(direction_gram_min_eig(sensors, p) for p in pts)
    kap = kappa(cfg, m, Lambda, sigma)
    kappa_ok = kap > 0.0

    mu_hat = L_hat = rho = None
    min_eig = None
    radius_ok = False
    if kappa_ok:
        radius = kap
        # uniform constants over the trajectory region, sampled at a spread
        # of trajectory points (exact for the discrete paths we simulate)
        idx = np.unique(np.linspace(0, T - 1, min(T, 25)).astype(int))
        lo, hi = np.inf, -np.inf
        try:
            for k in idx:
                snap = LossSnapshot(sensors, noiseless_frame(sensors, pts[k], t=int(k) + 1))
                a, b = estimate_strong_convexity_constants(
                    snap, pts[k], radius, cfg.eig_samples, rng
                )
                lo, hi = min(lo, a), max(hi, b)
            min_eig = lo
            if 0.0 < lo <= hi:
                mu_hat, L_hat = lo, hi
                if 0.0 < eta <= 2.0 / (lo + hi):
                    r = contraction_factor(eta, lo, hi)
                    if 0.0 < r < 1.0:
                        rho = r
                        radius_ok = kap >= (2.0 * err_bound + v) / (1.0 - r)
        except AnchorInBallError:
            pass

    init_ok = bool(np.linalg.norm(x0 - pts[0]) <= err_bound)
    return ConvexityReport(
        Lambda=float(Lambda),
        kappa=kap,
        mu_hat=mu_hat,
        L_hat=L_hat,
        rho=rho,
        dist_condition_ok=bool(dist_ok),
        kappa_positive=bool(kappa_ok),
        radius_condition_ok=bool(radius_ok),
        init_condition_ok=init_ok,
        mode=cfg.mode,
        sigma_max=sigma,
        v_max=v,
        error_bound=float(err_bound),
        min_anchor_distance=min_dist,
        min_sampled_eig=min_eig,
    )
