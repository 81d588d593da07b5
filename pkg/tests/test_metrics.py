"""Error-metric tests; explicit matrix inversion is the e_t- oracle."""

import numpy as np
import pytest

from lcalign import RigidTransform, compute_errors


def random_transform(rng):
    return RigidTransform.from_euler_translation(
        rng.uniform(-170, 170, 3) * [1, 0.5, 1], rng.uniform(-2, 2, 3)
    )


class TestComputeErrors:
    def test_identical_transforms_zero(self):
        t = RigidTransform.from_euler_translation((10, 20, 30), (1, 2, 3))
        err = compute_errors(t, t)
        np.testing.assert_array_equal(err.e_r_vec, 0)
        np.testing.assert_array_equal(err.e_t_plus_vec, 0)
        np.testing.assert_array_equal(err.e_t_minus_vec, 0)
        assert err.e_r == err.e_t_plus == err.e_t_minus == 0.0

    def test_translation_offset(self):
        truth = RigidTransform.from_euler_translation((40, 10, -25), (0, 0, 0))
        est = RigidTransform(truth.rotation, np.array([0.1, 0.0, 0.0]))
        err = compute_errors(truth, est)
        np.testing.assert_allclose(err.e_t_plus_vec, [0.1, 0, 0], atol=1e-15)
        # rotation does not cancel in the anchored form
        expected = np.abs(truth.rotation.T @ np.array([0.1, 0.0, 0.0]))
        np.testing.assert_allclose(err.e_t_minus_vec, expected, atol=1e-12)

    def test_yaw_wraparound(self):
        truth = RigidTransform.from_euler_translation((0, 0, 179), (0, 0, 0))
        est = RigidTransform.from_euler_translation((0, 0, -179), (0, 0, 0))
        err = compute_errors(truth, est)
        assert err.e_r_vec[2] == pytest.approx(2.0, abs=1e-9)

    def test_magnitudes_are_norms(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            err = compute_errors(random_transform(rng), random_transform(rng))
            assert err.e_r == pytest.approx(np.linalg.norm(err.e_r_vec), abs=1e-12)
            assert err.e_t_plus == pytest.approx(np.linalg.norm(err.e_t_plus_vec), abs=1e-12)
            assert err.e_t_minus == pytest.approx(np.linalg.norm(err.e_t_minus_vec), abs=1e-12)
            assert np.all(err.e_r_vec >= 0)
            assert np.all(err.e_t_plus_vec >= 0)
            assert np.all(err.e_t_minus_vec >= 0)

    def test_e_t_minus_against_explicit_inverse_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            a = random_transform(rng)
            b = random_transform(rng)
            err = compute_errors(a, b)
            oracle = np.abs(
                np.linalg.inv(a.rotation) @ a.translation
                - np.linalg.inv(b.rotation) @ b.translation
            )
            np.testing.assert_allclose(err.e_t_minus_vec, oracle, atol=1e-12)

    def test_e_t_plus_symmetry(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            a = random_transform(rng)
            b = random_transform(rng)
            ab = compute_errors(a, b)
            ba = compute_errors(b, a)
            np.testing.assert_allclose(ab.e_t_plus_vec, ba.e_t_plus_vec, atol=1e-15)

    def test_table_row_layout(self):
        truth = RigidTransform.from_euler_translation((1, 2, 3), (4, 5, 6))
        row = compute_errors(truth, truth).as_row()
        assert set(row) == {
            "roll_deg", "pitch_deg", "yaw_deg", "x_m", "y_m", "z_m",
            "e_r_deg", "e_t_plus_m", "e_t_minus_m",
        }
