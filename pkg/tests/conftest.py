import numpy as np
import pytest

import toatrack as tt

REFERENCE_SENSOR_POINTS = [(0.5, 0.5), (0.0, 0.5), (0.5, 0.0)]


@pytest.fixture(scope="session")
def reference_sensors():
    return tt.validate_sensor_array(REFERENCE_SENSOR_POINTS)


@pytest.fixture(scope="session")
def reference_instance(reference_sensors):
    """Zero-noise snapshot for the reference geometry with target at (2, 1)."""
    x_true = np.array([2.0, 1.0])
    snap = tt.LossSnapshot(reference_sensors, tt.noiseless_frame(reference_sensors, x_true))
    return reference_sensors, x_true, snap


class ScenarioCache:
    """Runs each full-size preset scenario at most once per session."""

    def __init__(self):
        self._results = {}

    def get(self, name):
        if name not in self._results:
            self._results[name] = tt.run_monte_carlo(tt.preset(name))
        return self._results[name]


@pytest.fixture(scope="session")
def scenario_cache():
    return ScenarioCache()


def random_smooth_points(sensors, rng, count, box=((-1.0, 4.0), (-1.0, 4.0)), min_dist=0.05):
    """Sample query points in a box, rejecting anything close to a sensor."""
    pts = []
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    while len(pts) < count:
        x = lo + (hi - lo) * rng.random(len(box))
        if np.min(sensors.distances(x)) > min_dist:
            pts.append(x)
    return pts
