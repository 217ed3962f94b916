"""Scenario configuration, Monte Carlo orchestration, and file emission.

A scenario bundles geometry, trajectory model, noise schedule, tracker
settings, and Monte Carlo parameters. Every random draw derives from
(root_seed, run index, stream tag[, time step]), so results are bit-identical
across repeated runs and across thread counts; aggregation reduces runs in
index order to fix floating-point summation order.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import ConvexityConfig, ConvexityReport, check_tracking_conditions
from .estimators import (
    METHODS,
    OGD,
    ONM,
    OracleConfig,
    TrackerState,
    batch_least_squares,
    ogd_step,
    ols_initialize,
    onm_step,
)
from .geometry import (
    NoiseSchedule,
    SensorArray,
    Trajectory,
    fixed_trajectory,
    measure,
    random_walk_trajectory,
    validate_sensor_array,
)
from .loss import AnchorProximityError, LossSnapshot, loss_value
from .metrics import RunMetrics
from .streams import STREAM_FRAME, STREAM_TRAJECTORY, substream

REFERENCE_SENSORS = ((0.5, 0.5), (0.0, 0.5), (0.5, 0.0))

PRESET_NAMES = ("A1", "A2", "A3", "B0", "B1", "B2", "C1", "C2")


class ScenarioError(RuntimeError):
    """Scenario-level failure (e.g. too many failed Monte Carlo runs)."""


@dataclass(frozen=True)
class TrajectorySpec:
    """Target path model: a seeded random walk or an explicit point list."""

    kind: str = "random-walk"
    step_scale: float = 0.0
    points: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("random-walk", "fixed"):
            raise ValueError("trajectory kind must be 'random-walk' or 'fixed'")
        if self.kind == "fixed" and self.points is None:
            raise ValueError("fixed trajectory needs points")
        if self.step_scale < 0:
            raise ValueError("step_scale must be >= 0")

    def realize(self, x1, T: int, rng) -> Trajectory:
        if self.kind == "fixed":
            traj = fixed_trajectory(self.points)
            if traj.T != T:
                raise ValueError(f"fixed trajectory has {traj.T} points, config says T={T}")
            return traj
        return random_walk_trajectory(x1, T, self.step_scale, rng)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "step_scale": self.step_scale}
        if self.points is not None:
            d["points"] = [list(p) for p in self.points]
        return d


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    T: int
    sensors: tuple
    x1_true: tuple
    trajectory: TrajectorySpec
    noise: NoiseSchedule
    methods: tuple = (OGD, ONM)
    eta: float = 0.1
    init: str = "exact"
    mc_runs: int = 100
    root_seed: int = 0
    oracle: Optional[OracleConfig] = None
    analysis: Optional[ConvexityConfig] = None

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.mc_runs < 1:
            raise ValueError("mc_runs must be >= 1")
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if self.init not in ("exact", "ols"):
            raise ValueError("init must be 'exact' or 'ols'")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ValueError(f"methods must be a nonempty subset of {METHODS}")
        object.__setattr__(self, "sensors", tuple(tuple(float(v) for v in p) for p in self.sensors))
        object.__setattr__(self, "x1_true", tuple(float(v) for v in self.x1_true))
        object.__setattr__(self, "methods", tuple(self.methods))

    def sensor_array(self) -> SensorArray:
        return validate_sensor_array(self.sensors)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "T": self.T,
            "sensors": [list(p) for p in self.sensors],
            "x1_true": list(self.x1_true),
            "trajectory": self.trajectory.to_dict(),
            "noise": {"kind": self.noise.kind, "c": self.noise.c, "c0": self.noise.c0},
            "methods": list(self.methods),
            "eta": self.eta,
            "init": self.init,
            "mc_runs": self.mc_runs,
            "root_seed": self.root_seed,
        }
        if self.oracle is not None:
            d["oracle"] = {
                "step_size": self.oracle.step_size,
                "gradient_tolerance": self.oracle.gradient_tolerance,
                "max_iterations": self.oracle.max_iterations,
            }
        if self.analysis is not None:
            d["analysis"] = {
                "delta": self.analysis.delta,
                "c0": self.analysis.c0,
                "K1": self.analysis.K1,
                "K2": self.analysis.K2,
                "eig_samples": self.analysis.eig_samples,
            }
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        traj = d.get("trajectory", {})
        spec = TrajectorySpec(
            kind=traj.get("kind", "random-walk"),
            step_scale=float(traj.get("step_scale", 0.0)),
            points=tuple(tuple(p) for p in traj["points"]) if "points" in traj else None,
        )
        noise = d.get("noise", {})
        schedule = NoiseSchedule(
            kind=noise.get("kind", "constant"),
            c=float(noise.get("c", 0.0)),
            c0=float(noise.get("c0", 3.0)),
        )
        oracle = None
        if "oracle" in d:
            o = d["oracle"]
            oracle = OracleConfig(
                step_size=o.get("step_size"),
                gradient_tolerance=float(o.get("gradient_tolerance", 1e-8)),
                max_iterations=int(o.get("max_iterations", 5000)),
            )
        analysis = None
        if "analysis" in d:
            a = d["analysis"]
            analysis = ConvexityConfig(
                delta=float(a.get("delta", 0.5)),
                c0=float(a.get("c0", 3.0)),
                K1=float(a.get("K1", 0.0)),
                K2=float(a.get("K2", 0.0)),
                eig_samples=int(a.get("eig_samples", 200)),
            )
        return cls(
            name=str(d["name"]),
            T=int(d["T"]),
            sensors=tuple(tuple(p) for p in d["sensors"]),
            x1_true=tuple(d["x1_true"]),
            trajectory=spec,
            noise=schedule,
            methods=tuple(d.get("methods", list(METHODS))),
            eta=float(d.get("eta", 0.1)),
            init=str(d.get("init", "exact")),
            mc_runs=int(d.get("mc_runs", 100)),
            root_seed=int(d.get("root_seed", 0)),
            oracle=oracle,
            analysis=analysis,
        )


def load_config(path) -> ScenarioConfig:
    """Read a scenario from a TOML file whose keys mirror ScenarioConfig."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python 3.10
        import tomli as tomllib
    with open(path, "rb") as fh:
        return ScenarioConfig.from_dict(tomllib.load(fh))


def preset(name: str) -> ScenarioConfig:
    """Built-in scenarios.

    A1/A2/A3: T=500 random walk (scale 0.005) at constant noise 1e-4,
    constant 0.01, and diminishing 0.01/sqrt(t). B0: A1 stretched to
    T=10000. B1/B2: T=10000 with noise c/sqrt(2t) for c=0.005 and 0.008
    (noise-to-variation ratios 1 and 1.6). C1/C2: T=500 with large noise
    and/or variation (scale 0.1 with noise 0.1/sqrt(2t); scale 0.5 with
    noise 0.001/sqrt(2t)).
    """
    base = dict(
        T=500,
        sensors=REFERENCE_SENSORS,
        x1_true=(2.0, 1.0),
        trajectory=TrajectorySpec("random-walk", 0.005),
        eta=0.1,
        init="exact",
        mc_runs=100,
        root_seed=0,
    )
    table = {
        "A1": dict(noise=NoiseSchedule.constant(0.0001)),
        "A2": dict(noise=NoiseSchedule.constant(0.01)),
        "A3": dict(noise=NoiseSchedule.inverse_sqrt(0.01)),
        "B0": dict(T=10000, noise=NoiseSchedule.constant(0.0001)),
        "B1": dict(T=10000, noise=NoiseSchedule.scaled_inverse_sqrt(0.005)),
        "B2": dict(T=10000, noise=NoiseSchedule.scaled_inverse_sqrt(0.008)),
        "C1": dict(
            trajectory=TrajectorySpec("random-walk", 0.1),
            noise=NoiseSchedule.scaled_inverse_sqrt(0.1),
        ),
        "C2": dict(
            trajectory=TrajectorySpec("random-walk", 0.5),
            noise=NoiseSchedule.scaled_inverse_sqrt(0.001),
        ),
    }
    if name not in table:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    return ScenarioConfig(name=name, **{**base, **table[name]})


@dataclass(frozen=True, eq=False)
class MethodRun:
    """One tracker's outcome within a single Monte Carlo run."""

    metrics: Optional[RunMetrics]
    estimates: Optional[np.ndarray]
    failed: bool = False
    failure_step: Optional[int] = None
    fallback_count: int = 0


@dataclass(frozen=True, eq=False)
class SingleRunResult:
    run_index: int
    trajectory: Trajectory
    methods: dict
    measurement_checksum: str
    max_noise_ratio: float
    xhat: Optional[np.ndarray] = None


def run_single(config: ScenarioConfig, run_index: int) -> SingleRunResult:
    """Execute one Monte Carlo run: draw a trajectory and measurement stream
    from seeds derived from (root_seed, run_index), then step every
    configured method through t = 1..T over the same frames.

    A method hitting anchor proximity is marked failed at that step; the
    other methods are unaffected.
    """
    sensors = config.sensor_array()
    traj_rng = substream(config.root_seed, run_index, STREAM_TRAJECTORY)
    trajectory = config.trajectory.realize(config.x1_true, config.T, traj_rng)
    sigmas = config.noise.sigmas(config.T)

    frames = [
        measure(
            sensors,
            trajectory.positions[t - 1],
            sigmas[t - 1],
            substream(config.root_seed, run_index, STREAM_FRAME, t),
            t=t,
        )
        for t in range(1, config.T + 1)
    ]
    digest = hashlib.sha256()
    for f in frames:
        digest.update(f.ranges.tobytes())
    checksum = digest.hexdigest()

    # diagnostic for the small-noise regime assumption: max |w| / distance
    dists = np.linalg.norm(
        trajectory.positions[:, None, :] - sensors.positions[None, :, :], axis=2
    )
    ranges = np.array([f.ranges for f in frames])
    clear = dists > 0
    max_ratio = (
        float(np.max(np.abs(ranges - dists)[clear] / dists[clear]))
        if clear.any()
        else float("inf")
    )

    snapshots = [LossSnapshot(sensors, f) for f in frames]
    if config.init == "exact":
        x0 = np.asarray(config.x1_true, dtype=float)
    else:
        x0 = ols_initialize(sensors, frames[0])

    xhat = None
    if config.oracle is not None:
        xhat = np.empty_like(trajectory.positions)
        for t in range(config.T):
            res = batch_least_squares(snapshots[t], trajectory.positions[t], config.oracle)
            xhat[t] = res.point

    step_fn = {OGD: ogd_step, ONM: onm_step}
    methods = {}
    for method in config.methods:
        state = TrackerState(estimate=x0, step_size=config.eta, method=method)
        estimates = np.empty_like(trajectory.positions)
        failed_at = None
        t0 = time.perf_counter()
        for t in range(config.T):
            try:
                state = step_fn[method](state, snapshots[t])
            except AnchorProximityError:
                failed_at = t + 1
                break
            estimates[t] = state.estimate
        elapsed = time.perf_counter() - t0
        if failed_at is not None:
            methods[method] = MethodRun(
                metrics=None,
                estimates=None,
                failed=True,
                failure_step=failed_at,
                fallback_count=state.fallback_count,
            )
            continue
        regret = None
        if xhat is not None:
            regret = np.array(
                [
                    loss_value(snapshots[t], estimates[t]) - loss_value(snapshots[t], xhat[t])
                    for t in range(config.T)
                ]
            )
        metrics = RunMetrics.from_run(
            estimates,
            trajectory,
            sigmas,
            oracle_estimates=xhat,
            dynamic_regret=regret,
            wall_time_per_step=elapsed / config.T,
            max_noise_ratio=max_ratio,
        )
        methods[method] = MethodRun(
            metrics=metrics,
            estimates=estimates,
            failed=False,
            fallback_count=state.fallback_count,
        )
    return SingleRunResult(
        run_index=run_index,
        trajectory=trajectory,
        methods=methods,
        measurement_checksum=checksum,
        max_noise_ratio=max_ratio,
        xhat=xhat,
    )


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    config: ScenarioConfig
    mean_metrics: dict
    failures: dict
    fallbacks: dict
    timing: dict
    provenance: dict
    run0: SingleRunResult
    convexity: Optional[ConvexityReport] = None
    raw: Optional[list] = None


def _mean_metrics(runs: list[RunMetrics]) -> RunMetrics:
    errors = np.mean([r.per_step_error for r in runs], axis=0)
    series = np.cumsum(errors)
    gaps = [r.oracle_gap for r in runs if r.oracle_gap is not None]
    vprimes = [r.optimal_path_length_Vprime for r in runs if r.optimal_path_length_Vprime is not None]
    regrets = [r.dynamic_regret for r in runs if r.dynamic_regret is not None]
    return RunMetrics(
        per_step_error=errors,
        ctte=float(series[-1]),
        ctte_series=series,
        path_length_V=float(np.mean([r.path_length_V for r in runs])),
        N1=runs[0].N1,
        N2=runs[0].N2,
        oracle_gap=np.mean(gaps, axis=0) if gaps else None,
        optimal_path_length_Vprime=float(np.mean(vprimes)) if vprimes else None,
        dynamic_regret=np.mean(regrets, axis=0) if regrets else None,
        wall_time_per_step=float(np.mean([r.wall_time_per_step for r in runs])),
        max_noise_ratio=float(np.max([r.max_noise_ratio for r in runs])),
    )


def run_monte_carlo(
    config: ScenarioConfig, threads: int = 1, keep_raw: bool = False
) -> ScenarioResult:
    """Execute config.mc_runs independent runs and average their metrics.

    Runs may execute on a thread pool; the reduction is ordered by run index,
    so the result is identical for any thread count. The scenario fails only
    if more than 10% of runs failed for some configured method.
    """
    indices = list(range(config.mc_runs))
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: run_single(config, r), indices))
    else:
        results = [run_single(config, r) for r in indices]

    mean_metrics, failures, fallbacks, timing = {}, {}, {}, {}
    for method in config.methods:
        per_run = [res.methods[method] for res in results]
        failed = sum(1 for mr in per_run if mr.failed)
        failures[method] = failed
        fallbacks[method] = sum(mr.fallback_count for mr in per_run)
        if failed > 0.1 * config.mc_runs:
            raise ScenarioError(
                f"{method}: {failed}/{config.mc_runs} runs failed "
                f"(first failure steps: "
                f"{[mr.failure_step for mr in per_run if mr.failed][:5]})"
            )
        ok = [mr.metrics for mr in per_run if not mr.failed]
        mean_metrics[method] = _mean_metrics(ok)
        timing[method] = mean_metrics[method].wall_time_per_step

    convexity = None
    if config.analysis is not None:
        run0 = results[0]
        x0 = (
            np.asarray(config.x1_true, dtype=float)
            if config.init == "exact"
            else ols_initialize(config.sensor_array(), measure(
                config.sensor_array(),
                run0.trajectory.positions[0],
                config.noise.sigma(1),
                substream(config.root_seed, 0, STREAM_FRAME, 1),
                t=1,
            ))
        )
        convexity = check_tracking_conditions(
            config.analysis,
            config.sensor_array(),
            run0.trajectory,
            config.noise,
            config.eta,
            x0,
        )

    provenance = {
        "config_hash": config.config_hash(),
        "root_seed": config.root_seed,
        "version": __version__,
    }
    return ScenarioResult(
        config=config,
        mean_metrics=mean_metrics,
        failures=failures,
        fallbacks=fallbacks,
        timing=timing,
        provenance=provenance,
        run0=results[0],
        convexity=convexity,
        raw=results if keep_raw else None,
    )


def benchmark_per_iteration(
    config: ScenarioConfig, iterations: int = 2000, warmup: int = 100
) -> dict:
    """Median wall-clock time of one tracker step per method.

    All methods are timed on identical snapshots and from the same state, so
    the comparison isolates per-step computational cost.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    sensors = config.sensor_array()
    x = np.asarray(config.x1_true, dtype=float)
    frame = measure(
        sensors, x, config.noise.sigma(1), substream(config.root_seed, 0, STREAM_FRAME, 1), t=1
    )
    snap = LossSnapshot(sensors, frame)
    step_fn = {OGD: ogd_step, ONM: onm_step}
    table = {"name": config.name, "iterations": iterations, "methods": {}}
    for method in config.methods:
        state = TrackerState(estimate=x, step_size=config.eta, method=method)
        for _ in range(warmup):
            step_fn[method](state, snap)
        samples = np.empty(iterations)
        for i in range(iterations):
            t0 = time.perf_counter_ns()
            step_fn[method](state, snap)
            samples[i] = time.perf_counter_ns() - t0
        table["methods"][method] = float(np.median(samples) * 1e-9)
    if OGD in table["methods"] and ONM in table["methods"]:
        table["onm_over_ogd"] = table["methods"][ONM] / table["methods"][OGD]
    return table


# ---------------------------------------------------------------------------
# emission

CSV_FLOAT = "{:.17g}"


def _csv_rows(result: ScenarioResult) -> tuple[list[str], list[list[float]]]:
    config = result.config
    run0 = result.run0
    n = run0.trajectory.n
    header = ["t"]
    header += [f"true_{j + 1}" for j in range(n)]
    for method in config.methods:
        header += [f"{method}_{j + 1}" for j in range(n)]
    for method in config.methods:
        header.append(f"err_{method}")
    for method in config.methods:
        header.append(f"ctte_{method}")
    if run0.xhat is not None:
        header += [f"xhat_{j + 1}" for j in range(n)]
        # dynamic regret is a debug column only, present in oracle mode
        header += [f"regret_{method}" for method in config.methods]

    rows = []
    for t in range(config.T):
        row = [float(t + 1)]
        row += list(run0.trajectory.positions[t])
        for method in config.methods:
            est = run0.methods[method].estimates
            row += list(est[t]) if est is not None else [np.nan] * n
        for method in config.methods:
            row.append(result.mean_metrics[method].per_step_error[t])
        for method in config.methods:
            row.append(result.mean_metrics[method].ctte_series[t])
        if run0.xhat is not None:
            row += list(run0.xhat[t])
            for method in config.methods:
                regret = result.mean_metrics[method].dynamic_regret
                row.append(regret[t] if regret is not None else np.nan)
        rows.append(row)
    return header, rows


def _report_dict(result: ScenarioResult) -> dict:
    summary = {}
    for method, m in result.mean_metrics.items():
        summary[method] = {
            "ctte": m.ctte,
            "final_error": float(m.per_step_error[-1]),
            "path_length_V": m.path_length_V,
            "N1": m.N1,
            "N2": m.N2,
            "optimal_path_length_Vprime": m.optimal_path_length_Vprime,
            "max_noise_ratio": m.max_noise_ratio,
            "failures": result.failures[method],
            "fallback_steps": result.fallbacks[method],
        }
    return {
        "config": result.config.to_dict(),
        "provenance": result.provenance,
        "methods": summary,
        "convexity": result.convexity.to_dict() if result.convexity else None,
    }


def emit(result: ScenarioResult, out_dir) -> list[dict]:
    """Write CSV, report, timing, and SVG plot files; return the manifest.

    Every emitted byte except the timing file is a pure function of
    (config, root_seed). The timing file is listed in the manifest without a
    checksum for that reason.
    """
    from .svgplot import PALETTE, LinePlot

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OSError(f"cannot create output directory {out}: {err}") from err
    name = result.config.name
    manifest = []

    def write(filename: str, text: str, checksum: bool = True, record: bool = True):
        path = out / filename
        try:
            path.write_text(text)
        except OSError as err:
            raise OSError(f"cannot write {path}: {err}") from err
        if record:
            manifest.append(
                {
                    "name": filename,
                    "bytes": len(text.encode()),
                    "sha256": hashlib.sha256(text.encode()).hexdigest() if checksum else None,
                }
            )
        return path

    header, rows = _csv_rows(result)
    csv_lines = [",".join(header)]
    for row in rows:
        csv_lines.append(",".join(CSV_FLOAT.format(v) for v in row))
    write(f"{name}_steps.csv", "\n".join(csv_lines) + "\n")

    write(
        f"{name}_report.json",
        json.dumps(_report_dict(result), indent=2, sort_keys=True) + "\n",
    )
    write(
        f"{name}_timing.json",
        json.dumps(
            {"wall_time_per_step": result.timing, "note": "nondeterministic"},
            indent=2,
            sort_keys=True,
        )
        + "\n",
        checksum=False,
    )

    t_axis = np.arange(1, result.config.T + 1)
    ctte_plot = LinePlot(f"{name}: cumulative tracking error", "t", "CTTE")
    for method in result.config.methods:
        ctte_plot.add_line(
            method.upper(), t_axis, result.mean_metrics[method].ctte_series, PALETTE[method]
        )
    write(f"{name}_ctte.svg", ctte_plot.render())

    run0 = result.run0
    traj_plot = LinePlot(f"{name}: trajectories (run 0)", "x", "y")
    traj_plot.add_line("truth", run0.trajectory.positions[:, 0], run0.trajectory.positions[:, 1],
                       PALETTE["truth"])
    for method in result.config.methods:
        est = run0.methods[method].estimates
        if est is not None:
            traj_plot.add_line(method.upper(), est[:, 0], est[:, 1], PALETTE[method])
    if run0.xhat is not None:
        traj_plot.add_line("minimizer", run0.xhat[:, 0], run0.xhat[:, 1],
                           PALETTE["xhat"], dashed=True)
    sensors = np.asarray(result.config.sensors)
    traj_plot.add_markers(sensors[:, 0], sensors[:, 1], PALETTE["sensors"])
    write(f"{name}_trajectory.svg", traj_plot.render())

    write(
        f"{name}_manifest.json",
        json.dumps({"files": manifest}, indent=2, sort_keys=True) + "\n",
        record=False,
    )
    return manifest
