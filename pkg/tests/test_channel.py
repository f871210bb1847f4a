"""Channel generation, beamspace transform, and motion model tests."""

import numpy as np
import pytest

from beamtrack.channel import (
    ArrayGeometry,
    ClusterConfig,
    MotionDynamics,
    MotionFeatureState,
    PathSet,
    assemble_channel,
    beamspace_transform,
    channel_gain_scale,
    dft_matrix,
    evolve_motion_state,
    generate_paths,
    generate_trajectory,
    grid_angles,
    nearest_grid_index,
    redraw_gain_phases,
    steering_vector,
    wrap_interval,
)


class TestSteeringVector:
    def test_zero_phase(self):
        np.testing.assert_allclose(steering_vector(0.0, 4), 0.5 * np.ones(4))

    def test_half_angle_two_elements(self):
        # e^{-j*pi} = -1
        expected = np.array([1.0, -1.0]) / np.sqrt(2)
        np.testing.assert_allclose(steering_vector(0.5, 2), expected, atol=1e-15)

    def test_unit_norm_battery(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            phi = rng.uniform(-3, 3)
            n = int(rng.integers(1, 128))
            assert abs(np.linalg.norm(steering_vector(phi, n)) - 1.0) < 1e-12

    def test_rejects_zero_length(self):
        with pytest.raises(ValueError):
            steering_vector(0.1, 0)


class TestDftMatrix:
    def test_grid_symmetric_about_zero(self):
        g = grid_angles(4)
        np.testing.assert_allclose(g, [-0.375, -0.125, 0.125, 0.375])
        np.testing.assert_allclose(g + g[::-1], np.zeros(4), atol=1e-15)

    @pytest.mark.parametrize("n", [1, 2, 3, 16, 64])
    def test_unitary(self, n):
        u = dft_matrix(n)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(n), atol=1e-12)

    def test_rows_conjugate_grid_steering(self):
        n = 8
        u = dft_matrix(n)
        for k, phi in enumerate(grid_angles(n)):
            np.testing.assert_allclose(
                u[k], steering_vector(phi, n).conj(), atol=1e-14
            )

    def test_on_grid_path_maps_to_its_beam(self):
        n = 16
        u = dft_matrix(n)
        for k, phi in enumerate(grid_angles(n)):
            e = u @ steering_vector(phi, n)
            expected = np.zeros(n)
            expected[k] = 1.0
            np.testing.assert_allclose(np.abs(e), expected, atol=1e-12)


class TestNearestGridIndex:
    def test_exact_grid_points(self):
        for n in (4, 16, 64):
            for k, phi in enumerate(grid_angles(n)):
                assert nearest_grid_index(phi, n) == k

    def test_midpoint_goes_to_lower_index(self):
        n = 8
        g = grid_angles(n)
        mid = 0.5 * (g[2] + g[3])
        assert nearest_grid_index(mid, n) == 2

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            n = int(rng.integers(2, 40))
            phi = rng.uniform(-0.5, 0.5)
            best, best_d = 0, np.inf
            for k, g in enumerate(grid_angles(n)):
                d = abs(g - phi) % 1.0
                d = min(d, 1.0 - d)
                if d < best_d - 1e-15:
                    best, best_d = k, d
            assert nearest_grid_index(phi, n) == best


class TestWrap:
    def test_forced_wrap_example(self):
        assert wrap_interval(0.495 + 0.01, -0.5, 0.5) == pytest.approx(-0.495)

    def test_identity_inside_domain(self):
        x = np.linspace(-0.499, 0.499, 23)
        np.testing.assert_allclose(wrap_interval(x, -0.5, 0.5), x, atol=1e-15)

    def test_rejects_empty_interval(self):
        with pytest.raises(ValueError):
            wrap_interval(0.0, 0.5, 0.5)


class TestGeneratePaths:
    def test_path_count(self):
        rng = np.random.default_rng(0)
        paths = generate_paths(ClusterConfig(n_clusters=8, n_rays=6), rng)
        assert paths.n_paths == 48

    def test_gain_moments(self):
        # 1e5 draws: mean within 3*sigma/sqrt(n), variance within 5%
        rng = np.random.default_rng(3)
        cfg = ClusterConfig(n_clusters=100, n_rays=10)
        gains = np.concatenate(
            [generate_paths(cfg, rng).gains for _ in range(100)]
        )
        n = gains.size
        assert n == 100_000
        assert abs(gains.mean()) < 3.0 / np.sqrt(n)
        assert abs(np.mean(np.abs(gains) ** 2) - 1.0) < 0.05

    def test_angles_inside_domain(self):
        rng = np.random.default_rng(5)
        cfg = ClusterConfig()
        for _ in range(50):
            p = generate_paths(cfg, rng)
            assert np.all(p.aod >= cfg.angle_low) and np.all(p.aod < cfg.angle_high)
            assert np.all(p.aoa >= cfg.angle_low) and np.all(p.aoa < cfg.angle_high)


class TestAssembleChannel:
    def test_gamma_value(self):
        assert channel_gain_scale(64, 16, 48) == pytest.approx(
            np.sqrt(1024.0 / 48.0)
        )
        assert channel_gain_scale(64, 16, 48) == pytest.approx(4.6188, abs=5e-5)

    def test_single_path_all_ones(self):
        paths = PathSet(aod=[0.0], aoa=[0.0], gains=[1.0 + 0j])
        h = assemble_channel(paths, ArrayGeometry(n_tx=2, n_rx=2))
        # gamma = sqrt(4/1) = 2, steering entries all 1/sqrt(2)
        np.testing.assert_allclose(h, np.ones((2, 2)), atol=1e-14)

    def test_linear_in_gains(self):
        rng = np.random.default_rng(9)
        geom = ArrayGeometry(n_tx=8, n_rx=4)
        paths = generate_paths(ClusterConfig(n_clusters=2, n_rays=3), rng)
        doubled = PathSet(aod=paths.aod, aoa=paths.aoa, gains=2.0 * paths.gains)
        np.testing.assert_allclose(
            assemble_channel(doubled, geom),
            2.0 * assemble_channel(paths, geom),
            atol=1e-12,
        )

    def test_mean_frobenius_energy(self):
        # E||H||_F^2 ~= n_tx*n_rx within 5% over 1e4 draws
        rng = np.random.default_rng(17)
        geom = ArrayGeometry(n_tx=16, n_rx=8)
        cfg = ClusterConfig(n_clusters=4, n_rays=3)
        total = 0.0
        n_draws = 10_000
        for _ in range(n_draws):
            h = assemble_channel(generate_paths(cfg, rng), geom)
            total += np.linalg.norm(h) ** 2
        assert abs(total / n_draws / (geom.n_tx * geom.n_rx) - 1.0) < 0.05

    def test_matches_naive_sum_oracle(self):
        rng = np.random.default_rng(21)
        geom = ArrayGeometry(n_tx=6, n_rx=5)
        paths = generate_paths(ClusterConfig(n_clusters=3, n_rays=2), rng)
        gamma = channel_gain_scale(6, 5, paths.n_paths)
        h_ref = np.zeros((5, 6), dtype=complex)
        for a_t, a_r, g in zip(paths.aod, paths.aoa, paths.gains):
            h_ref += g * np.outer(
                steering_vector(a_r, 5), steering_vector(a_t, 6).conj()
            )
        h_ref *= gamma
        np.testing.assert_allclose(assemble_channel(paths, geom), h_ref, atol=1e-12)


class TestBeamspaceTransform:
    def test_scalar_geometry_is_identity(self):
        geom = ArrayGeometry(n_tx=1, n_rx=1)
        h = np.array([[2.0 - 1.0j]])
        np.testing.assert_allclose(beamspace_transform(h, geom), h, atol=1e-15)

    def test_norm_preserved(self):
        rng = np.random.default_rng(2)
        geom = ArrayGeometry(n_tx=64, n_rx=16)
        cfg = ClusterConfig()
        for _ in range(100):
            h = assemble_channel(generate_paths(cfg, rng), geom)
            hb = beamspace_transform(h, geom)
            assert abs(np.linalg.norm(hb) - np.linalg.norm(h)) < 1e-10

    def test_on_grid_path_concentrates(self):
        geom = ArrayGeometry(n_tx=8, n_rx=4)
        phi_t = grid_angles(8)[5]
        phi_r = grid_angles(4)[2]
        paths = PathSet(aod=[phi_t], aoa=[phi_r], gains=[1.0 + 0j])
        hb = beamspace_transform(assemble_channel(paths, geom), geom)
        gamma = channel_gain_scale(8, 4, 1)
        assert abs(abs(hb[2, 5]) - gamma) < 1e-10
        off = hb.copy()
        off[2, 5] = 0.0
        assert np.linalg.norm(off) < 1e-10

    def test_matches_dense_product_oracle(self):
        rng = np.random.default_rng(4)
        geom = ArrayGeometry(n_tx=8, n_rx=4)
        h = rng.standard_normal((4, 8)) + 1j * rng.standard_normal((4, 8))
        u_r = dft_matrix(4)
        u_t = dft_matrix(8)
        ref = np.zeros((4, 8), dtype=complex)
        for i in range(4):
            for j in range(8):
                for a in range(4):
                    for b in range(8):
                        ref[i, j] += u_r[i, a] * h[a, b] * np.conj(u_t[j, b])
        np.testing.assert_allclose(beamspace_transform(h, geom), ref, atol=1e-11)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            beamspace_transform(np.ones((3, 3)), ArrayGeometry(n_tx=4, n_rx=3))


class TestMotion:
    def test_frozen_dynamics(self):
        rng = np.random.default_rng(0)
        prev = MotionFeatureState(aod=[0.1, -0.2], aoa=[0.3, 0.0], timestamp=4)
        nxt = evolve_motion_state(prev, MotionDynamics(drift=0.0, sigma=0.0), rng)
        np.testing.assert_allclose(nxt.aod, prev.aod)
        np.testing.assert_allclose(nxt.aoa, prev.aoa)
        assert nxt.timestamp == 5

    def test_drift_wraps(self):
        rng = np.random.default_rng(0)
        prev = MotionFeatureState(aod=[0.495], aoa=[0.0])
        nxt = evolve_motion_state(prev, MotionDynamics(drift=0.01, sigma=0.0), rng)
        assert nxt.aod[0] == pytest.approx(-0.495)

    def test_long_run_stays_in_domain(self):
        rng = np.random.default_rng(13)
        dyn = MotionDynamics(drift=0.0, sigma=0.005)
        state = MotionFeatureState(aod=np.zeros(4), aoa=np.zeros(4))
        for _ in range(10_000):
            state = evolve_motion_state(state, dyn, rng)
            assert np.all(state.aod >= -0.5) and np.all(state.aod < 0.5)
            assert np.all(state.aoa >= -0.5) and np.all(state.aoa < 0.5)

    def test_trajectory_reproducible(self):
        cfg = ClusterConfig(n_clusters=2, n_rays=2)
        dyn = MotionDynamics()

        def run():
            states, paths = generate_trajectory(
                cfg, dyn, 50, np.random.default_rng(99)
            )
            return np.stack([s.features() for s in states]), paths.gains

        f1, g1 = run()
        f2, g2 = run()
        assert np.array_equal(f1, f2)
        assert np.array_equal(g1, g2)

    def test_phase_redraw_keeps_magnitudes(self):
        rng = np.random.default_rng(1)
        gains = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        fresh = redraw_gain_phases(gains, rng)
        np.testing.assert_allclose(np.abs(fresh), np.abs(gains), atol=1e-12)
        assert not np.allclose(fresh, gains)
