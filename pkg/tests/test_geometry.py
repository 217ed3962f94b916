import concurrent.futures

import numpy as np
import pytest

import toatrack as tt


def test_reference_sensor_array_is_valid(reference_sensors):
    assert reference_sensors.m == 3
    assert reference_sensors.n == 2


def test_collinear_sensors_rejected():
    with pytest.raises(tt.SensorRankError):
        tt.validate_sensor_array([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])


def test_too_few_sensors_rejected():
    with pytest.raises(tt.SensorCountError):
        tt.validate_sensor_array([(0.0, 0.0), (1.0, 0.0)])


@pytest.mark.parametrize(
    "points,valid",
    [
        ([(0.5, 0.5), (0.0, 0.5), (0.5, 0.0)], True),
        ([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)], True),
        ([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)], False),
        ([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)], True),
        ([(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)], False),
    ],
)
def test_spanning_check_agrees_with_matrix_rank(points, valid):
    pts = np.asarray(points, dtype=float)
    brute = np.linalg.matrix_rank(pts[1:] - pts[0]) == pts.shape[1]
    assert brute == valid
    if valid:
        tt.validate_sensor_array(points)
    else:
        with pytest.raises(tt.SensorRankError):
            tt.validate_sensor_array(points)


def test_positions_are_immutable(reference_sensors):
    with pytest.raises(ValueError):
        reference_sensors.positions[0, 0] = 9.9


def test_zero_step_scale_gives_constant_trajectory():
    traj = tt.random_walk_trajectory([2.0, 1.0], 50, 0.0, np.random.default_rng(3))
    assert np.all(traj.positions == traj.positions[0])


def test_random_walk_increment_norm_law():
    traj = tt.random_walk_trajectory([2.0, 1.0], 200, 0.005, np.random.default_rng(11))
    steps = np.diff(traj.positions, axis=0)
    norms = np.linalg.norm(steps, axis=1)
    # step t -> t+1 has norm step_scale / sqrt(2(t+1)), t = 1..T-1
    t = np.arange(1, 200)
    recovered = norms * np.sqrt(2.0 * (t + 1))
    assert np.max(np.abs(recovered - 0.005)) < 1e-12 * 0.005 + 1e-15


def test_random_walk_seed_determinism():
    a = tt.random_walk_trajectory([0.0, 0.0], 100, 0.01, np.random.default_rng(77))
    b = tt.random_walk_trajectory([0.0, 0.0], 100, 0.01, np.random.default_rng(77))
    assert np.array_equal(a.positions, b.positions)


def test_random_walk_rejects_bad_args():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        tt.random_walk_trajectory([0.0, 0.0], 0, 0.01, rng)
    with pytest.raises(ValueError):
        tt.random_walk_trajectory([0.0, 0.0], 5, -1.0, rng)


def test_measure_zero_noise_matches_exact_distances(reference_sensors):
    frame = tt.measure(reference_sensors, [2.0, 1.0], 0.0, np.random.default_rng(1))
    expected = np.sqrt([2.5, 4.25, 3.25])
    assert np.allclose(frame.ranges, expected, rtol=0, atol=1e-15)
    assert np.allclose(frame.ranges, [1.58114, 2.06155, 1.80278], atol=1e-5)


def test_measure_noise_has_zero_mean():
    # one big spanning array gives 1e5 independent draws in a single frame
    rng = np.random.default_rng(5)
    pts = rng.random((100_000, 2)) * 10.0
    sensors = tt.validate_sensor_array(pts)
    x = np.array([20.0, 20.0])
    frame = tt.measure(sensors, x, 0.01, np.random.default_rng(123))
    noise = frame.ranges - sensors.distances(x)
    assert abs(noise.mean()) < 3e-4


def test_measure_reproducible_across_runs_and_threads(reference_sensors):
    def draw(_):
        rng = tt.substream(9, 4, tt.streams.STREAM_FRAME, 17)
        return tt.measure(reference_sensors, [2.0, 1.0], 0.01, rng).ranges

    base = draw(None)
    again = draw(None)
    with concurrent.futures.ThreadPoolExecutor(4) as pool:
        threaded = list(pool.map(draw, range(8)))
    assert np.array_equal(base, again)
    for r in threaded:
        assert np.array_equal(base, r)


def test_measure_rejects_negative_sigma(reference_sensors):
    with pytest.raises(ValueError):
        tt.measure(reference_sensors, [2.0, 1.0], -0.1, np.random.default_rng(0))


@pytest.mark.parametrize(
    "schedule,expected",
    [
        (tt.NoiseSchedule.constant(0.01), [0.01, 0.01, 0.01, 0.01]),
        (tt.NoiseSchedule.inverse_sqrt(0.01), [0.01, 0.01 / np.sqrt(2), 0.01 / np.sqrt(3), 0.005]),
        (tt.NoiseSchedule.scaled_inverse_sqrt(0.01),
         [0.01 / np.sqrt(2), 0.005, 0.01 / np.sqrt(6), 0.01 / np.sqrt(8)]),
    ],
)
def test_noise_schedule_values(schedule, expected):
    assert np.allclose(schedule.sigmas(4), expected, rtol=1e-15)
    assert np.allclose([schedule.sigma(t) for t in (1, 2, 3, 4)], expected, rtol=1e-15)


def test_noise_schedule_validation():
    with pytest.raises(ValueError):
        tt.NoiseSchedule("linear", 0.1)
    with pytest.raises(ValueError):
        tt.NoiseSchedule.constant(-0.1)
    with pytest.raises(ValueError):
        tt.NoiseSchedule.constant(0.1, c0=0.0)


def test_trajectory_rejects_non_finite():
    with pytest.raises(ValueError):
        tt.fixed_trajectory([[0.0, 0.0], [np.inf, 1.0]])
