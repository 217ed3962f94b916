import numpy as np
import pytest

import toatrack as tt
from oracles import sym2x2_eigs


# --- geometric conditioning ----------------------------------------------


def test_direction_gram_reference_value(reference_sensors):
    x = np.array([2.0, 1.0])
    lam = tt.direction_gram_min_eig(reference_sensors, x)
    diffs = x - reference_sensors.positions
    units = diffs / np.linalg.norm(diffs, axis=1, keepdims=True)
    gram = units.T @ units
    assert np.allclose(gram, [[2.53349, 0.99683], [0.99683, 0.46652]], atol=1e-5)
    lo, _ = sym2x2_eigs(gram)
    assert lam == pytest.approx(lo, rel=1e-12)
    assert lam == pytest.approx(0.0641, abs=1e-3)


def test_direction_gram_orthogonal_pairs():
    sensors = tt.validate_sensor_array([(1, 0), (2, 0), (0, 1), (0, 2)])
    assert tt.direction_gram_min_eig(sensors, [0.0, 0.0]) == pytest.approx(2.0, rel=1e-12)


def test_direction_gram_near_collinear_matches_oracle():
    sensors = tt.validate_sensor_array([(0.0, 0.0), (1.0, 0.0), (2.0, 1e-5)])
    x = np.array([5.0, 0.0])
    lam = tt.direction_gram_min_eig(sensors, x)
    diffs = x - sensors.positions
    units = diffs / np.linalg.norm(diffs, axis=1, keepdims=True)
    lo, _ = sym2x2_eigs(units.T @ units)
    assert lam < 1e-3
    assert lam == pytest.approx(lo, abs=1e-10)


def test_direction_gram_anchor_coincidence(reference_sensors):
    with pytest.raises(tt.AnchorProximityError):
        tt.direction_gram_min_eig(reference_sensors, [0.5, 0.5])


def test_direction_gram_positive_for_valid_arrays():
    rng = np.random.default_rng(31)
    for _ in range(50):
        try:
            sensors = tt.validate_sensor_array(rng.random((4, 2)) * 2)
        except ValueError:
            continue
        x = rng.random(2) * 4 + 2.5
        assert tt.direction_gram_min_eig(sensors, x) > 0


# --- kappa ----------------------------------------------------------------


def test_kappa_sigma_zero_reduction():
    cfg = tt.ConvexityConfig(delta=1.0, K1=5.0, K2=7.0)
    assert tt.kappa(cfg, 3, 0.0641, 0.0) == pytest.approx(1.0 * 0.0641 / 30.0, rel=1e-12)
    assert tt.kappa(cfg, 3, 0.0641, 0.0) == pytest.approx(0.0021367, abs=1e-7)


def test_kappa_negative_for_large_noise():
    cfg = tt.ConvexityConfig(delta=1.0, K1=1.0, K2=0.0)
    assert tt.kappa(cfg, 3, 0.0641, 1.0) < 0


def test_kappa_monotone():
    cfg = tt.ConvexityConfig(delta=0.5, K1=1.0, K2=2.0)
    sigmas = np.linspace(0, 0.5, 30)
    vals = [tt.kappa(cfg, 3, 0.0641, s) for s in sigmas]
    assert np.all(np.diff(vals) <= 0)
    deltas = np.linspace(0.1, 2.0, 30)
    vals = [tt.kappa(tt.ConvexityConfig(delta=d, K1=1.0, K2=2.0), 3, 0.0641, 0.01) for d in deltas]
    assert np.all(np.diff(vals) > 0)
    lams = np.linspace(0.01, 1.0, 30)
    vals = [tt.kappa(cfg, 3, lam, 0.01) for lam in lams]
    assert np.all(np.diff(vals) > 0)


# --- ball sampling ----------------------------------------------------------


def test_verify_radius_zero_is_center_eigenvalue(reference_instance):
    _, x_true, snap = reference_instance
    min_eig, positive = tt.verify_local_strong_convexity(
        snap, x_true, 0.0, 5, np.random.default_rng(0)
    )
    center = np.linalg.eigvalsh(tt.loss_hessian(snap, x_true))[0]
    assert min_eig == pytest.approx(center, rel=1e-12)
    assert positive


def test_verify_positive_on_kappa_ball(reference_instance):
    sensors, x_true, snap = reference_instance
    lam = tt.direction_gram_min_eig(sensors, x_true)
    radius = tt.kappa(tt.ConvexityConfig(delta=0.5), sensors.m, lam, 0.0)
    assert radius > 0
    min_eig, positive = tt.verify_local_strong_convexity(
        snap, x_true, radius, 300, np.random.default_rng(2)
    )
    assert positive
    assert min_eig > 0


def test_verify_anchor_in_ball_error(reference_sensors):
    snap = tt.LossSnapshot(reference_sensors, tt.noiseless_frame(reference_sensors, [2.0, 1.0]))
    center = np.array([0.25, 0.5])  # midway between the first two sensors
    with pytest.raises(tt.AnchorInBallError):
        tt.verify_local_strong_convexity(snap, center, 0.3, 10, np.random.default_rng(0))


def test_estimate_constants_radius_zero(reference_instance):
    sensors, x_true, snap = reference_instance
    mu, L = tt.estimate_strong_convexity_constants(
        snap, x_true, 0.0, 1, np.random.default_rng(0)
    )
    diffs = x_true - sensors.positions
    units = diffs / np.linalg.norm(diffs, axis=1, keepdims=True)
    lo, hi = sym2x2_eigs(units.T @ units)
    assert mu == pytest.approx(2.0 * lo, rel=1e-12)
    assert L == pytest.approx(2.0 * hi, rel=1e-12)
    assert mu == pytest.approx(0.1282, abs=2e-4)


def test_estimate_constants_shrink_with_radius(reference_instance):
    _, x_true, snap = reference_instance
    rng = np.random.default_rng(3)
    mu0, L0 = tt.estimate_strong_convexity_constants(snap, x_true, 0.0, 1, rng)
    mu1, L1 = tt.estimate_strong_convexity_constants(snap, x_true, 0.05, 300, rng)
    assert mu1 <= mu0
    assert L1 >= L0


# --- contraction factor -----------------------------------------------------


def test_contraction_reference_value():
    assert tt.contraction_factor(0.1, 1.0, 4.0) == pytest.approx(np.sqrt(0.84), rel=1e-12)
    assert tt.contraction_factor(0.1, 1.0, 4.0) == pytest.approx(0.91652, abs=1e-5)


def test_contraction_zero_at_equal_constants():
    mu = 2.5
    assert tt.contraction_factor(2.0 / (2 * mu), mu, mu) == 0.0


def test_contraction_step_size_guard():
    with pytest.raises(ValueError):
        tt.contraction_factor(0.5, 1.0, 4.0)
    with pytest.raises(ValueError):
        tt.contraction_factor(0.1, 4.0, 1.0)


def test_contraction_decreasing_in_eta():
    etas = np.linspace(0.01, 2.0 / 5.0, 40)
    vals = [tt.contraction_factor(e, 1.0, 4.0) for e in etas]
    assert np.all(np.diff(vals) < 0)
    assert all(0 <= v < 1 for v in vals)


# --- closed-form lemmas ------------------------------------------------------


def test_rank_one_orthonormal_case():
    val = tt.rank_one_diff_min_eig([1.0, 0.0], [0.0, 1.0])
    assert val == pytest.approx(-1.0, rel=1e-14)
    dense = np.linalg.eigvalsh(np.diag([1.0, -1.0]))[0]
    assert val == pytest.approx(dense, rel=1e-14)


def test_rank_one_reference_pair():
    val = tt.rank_one_diff_min_eig([2.0, 0.0], [1.0, 1.0])
    assert val == pytest.approx(1.0 - np.sqrt(5.0), rel=1e-14)
    dense = np.linalg.eigvalsh(np.array([[3.0, -1.0], [-1.0, -1.0]]))[0]
    assert val == pytest.approx(dense, rel=1e-12)


def test_rank_one_random_pairs_match_eigensolver():
    rng = np.random.default_rng(14)
    for _ in range(300):
        n = int(rng.integers(2, 6))
        u, v = rng.standard_normal(n), rng.standard_normal(n)
        closed = tt.rank_one_diff_min_eig(u, v)
        dense = np.linalg.eigvalsh(np.outer(u, u) - np.outer(v, v))[0]
        assert abs(closed - dense) < 1e-10


def test_rank_one_rejects_dependent_vectors():
    with pytest.raises(tt.LinearDependenceError):
        tt.rank_one_diff_min_eig([1.0, 2.0], [2.0, 4.0])
    with pytest.raises(tt.LinearDependenceError):
        tt.rank_one_diff_min_eig([0.0, 0.0], [1.0, 0.0])


def test_unit_diff_equal_norm_equality():
    lhs, rhs, holds = tt.unit_diff_bound_holds([1.0, 0.0], [0.0, 1.0])
    assert holds
    assert lhs == pytest.approx(np.sqrt(2.0), rel=1e-14)
    assert rhs == pytest.approx(np.sqrt(2.0), rel=1e-14)


def test_unit_diff_reference_pair():
    lhs, rhs, holds = tt.unit_diff_bound_holds([2.0, 0.0], [0.0, 1.0])
    assert holds
    assert lhs == pytest.approx(np.sqrt(2.0), rel=1e-14)
    assert rhs == pytest.approx(np.sqrt(5.0), rel=1e-14)


def test_unit_diff_random_pairs():
    rng = np.random.default_rng(15)
    for _ in range(2000):
        n = int(rng.integers(2, 6))
        x, y = rng.standard_normal(n), rng.standard_normal(n)
        _, _, holds = tt.unit_diff_bound_holds(x, y)
        assert holds


def test_unit_diff_zero_vector_error():
    with pytest.raises(ValueError):
        tt.unit_diff_bound_holds([0.0, 0.0], [1.0, 0.0])


# --- tracking conditions -----------------------------------------------------


def test_tracking_conditions_static_zero_noise(reference_sensors):
    cfg = tt.ConvexityConfig(delta=0.5, eig_samples=100)
    traj = tt.fixed_trajectory([[2.0, 1.0]] * 5)
    noise = tt.NoiseSchedule.constant(0.0)
    report = tt.check_tracking_conditions(cfg, reference_sensors, traj, noise, 0.1, [2.0, 1.0])
    assert report.dist_condition_ok
    assert report.kappa_positive
    assert report.init_condition_ok
    assert report.radius_condition_ok  # reduces to kappa >= 0
    assert report.mode == "idealized"
    assert report.v_max == 0.0
    assert 0 < report.mu_hat <= report.L_hat
    assert 0 < report.rho < 1


def test_tracking_conditions_huge_variation(reference_sensors):
    cfg = tt.ConvexityConfig(delta=0.5, eig_samples=50)
    traj = tt.random_walk_trajectory([2.0, 1.0], 30, 10.0, np.random.default_rng(1))
    noise = tt.NoiseSchedule.constant(0.0)
    report = tt.check_tracking_conditions(cfg, reference_sensors, traj, noise, 0.1, [2.0, 1.0])
    assert not report.radius_condition_ok


def test_tracking_conditions_delta_too_large(reference_sensors):
    # min sensor-target distance ~1.58, so delta=2 breaks the distance condition
    cfg = tt.ConvexityConfig(delta=2.0, eig_samples=50)
    traj = tt.fixed_trajectory([[2.0, 1.0]])
    report = tt.check_tracking_conditions(
        cfg, reference_sensors, traj, tt.NoiseSchedule.constant(0.0), 0.1, [2.0, 1.0]
    )
    assert not report.dist_condition_ok


def test_tracking_conditions_empirical_mode_label(reference_sensors):
    cfg = tt.ConvexityConfig(delta=0.5, K1=2.0, K2=8.0, eig_samples=50)
    traj = tt.fixed_trajectory([[2.0, 1.0]])
    report = tt.check_tracking_conditions(
        cfg, reference_sensors, traj, tt.NoiseSchedule.constant(0.001), 0.1, [2.0, 1.0]
    )
    assert report.mode == "empirical"
    assert report.error_bound > 0


# --- estimation-error scaling ------------------------------------------------


def test_scaling_zero_noise_floor(reference_sensors):
    rep = tt.estimation_error_scaling(
        reference_sensors, [2.0, 1.0], [0.0], 10, rng=np.random.default_rng(0)
    )
    assert rep.mean_errors[0] < 1e-6
    assert rep.failures[0] == 0


def test_scaling_monotone_small_grid(reference_sensors):
    rep = tt.estimation_error_scaling(
        reference_sensors, [2.0, 1.0], [1e-3, 1e-2], 60, rng=np.random.default_rng(1)
    )
    assert rep.mean_errors[0] < rep.mean_errors[1]
    assert rep.K1_hat > 0


def test_scaling_rejects_bad_grid(reference_sensors):
    with pytest.raises(ValueError):
        tt.estimation_error_scaling(reference_sensors, [2.0, 1.0], [], 5)
    with pytest.raises(ValueError):
        tt.estimation_error_scaling(reference_sensors, [2.0, 1.0], [1e-2, 1e-3], 5)
