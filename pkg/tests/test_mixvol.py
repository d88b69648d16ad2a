import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import ellipe

from croftonlab import (
    ContractViolation,
    Ellipsoid,
    Frame,
    QuadForm,
    ellipsoid_volume,
    eval_d_m,
    gaussian_absdet_mean,
    gram_volume,
    mixed_area_2d,
    mixed_volume,
    mixed_volume_gauss,
    mixed_volume_oracle,
    unit_ball_volume,
)


def random_psd(rng, d, scale=1.0):
    a = rng.standard_normal((d, d)) * scale
    return QuadForm(a @ a.T)


def ellipse_perimeter(a, b):
    """Perimeter of the ellipse with semi-axes a >= b (complete elliptic integral)."""
    e2 = 1.0 - (b / a) ** 2
    return 4.0 * a * ellipe(e2)


class TestBasics:
    def test_unit_ball_volume(self):
        assert unit_ball_volume(1) == pytest.approx(2.0)
        assert unit_ball_volume(2) == pytest.approx(math.pi)
        assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)
        assert unit_ball_volume(4) == pytest.approx(math.pi ** 2 / 2.0)

    def test_gaussian_absdet_mean(self):
        # m = 1: E|N(0,1)| = sqrt(2/pi); m = 2: E|det| = 1
        assert gaussian_absdet_mean(1) == pytest.approx(math.sqrt(2.0 / math.pi))
        assert gaussian_absdet_mean(2) == pytest.approx(1.0)

    def test_ellipsoid_volume(self):
        q = QuadForm.diagonal([4.0, 1.0])  # semi-axes 2, 1
        assert ellipsoid_volume(q) == pytest.approx(2.0 * math.pi)


class TestMixedArea2D:
    def test_disk_with_disk_is_area(self):
        b = QuadForm.identity(2)
        assert mixed_area_2d(b, b).value == pytest.approx(math.pi, rel=1e-10)

    def test_self_mixed_area_is_area(self):
        rng = np.random.default_rng(0)
        q = random_psd(rng, 2)
        assert mixed_area_2d(q, q).value == pytest.approx(
            ellipsoid_volume(q), rel=1e-8)

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        q1, q2 = random_psd(rng, 2), random_psd(rng, 2)
        assert mixed_area_2d(q1, q2).value == pytest.approx(
            mixed_area_2d(q2, q1).value, rel=1e-12)

    def test_scaling(self):
        rng = np.random.default_rng(2)
        q1, q2 = random_psd(rng, 2), random_psd(rng, 2)
        scaled = QuadForm(4.0 * q1.matrix)  # body scaled by 2
        assert mixed_area_2d(scaled, q2).value == pytest.approx(
            2.0 * mixed_area_2d(q1, q2).value, rel=1e-10)

    def test_ellipse_disk_elliptic_integral(self):
        # V(K, B) = Perimeter(K) / 2 in the polarization normalization
        q = QuadForm.diagonal([4.0, 1.0])
        expected = ellipse_perimeter(2.0, 1.0) / 2.0
        assert mixed_area_2d(q, QuadForm.identity(2)).value == pytest.approx(
            expected, rel=1e-8)

    def test_two_segments(self):
        # degenerate ellipsoids: segments [-a, a], [-b, b]; V = 2 |a x b|
        a, b = np.array([1.0, 0.0]), np.array([1.0, 2.0])
        qa, qb = QuadForm(np.outer(a, a)), QuadForm(np.outer(b, b))
        assert mixed_area_2d(qa, qb).value == pytest.approx(4.0, rel=1e-12)

    def test_parallel_segments(self):
        a = np.array([1.0, 1.0])
        q = QuadForm(np.outer(a, a))
        assert mixed_area_2d(q, q).value == pytest.approx(0.0, abs=1e-12)

    def test_segment_with_disk(self):
        # V(segment [-a, a], B) = 2 |a| h_B(normal) = 2 |a|
        a = np.array([3.0, 4.0])
        q = QuadForm(np.outer(a, a))
        assert mixed_area_2d(q, QuadForm.identity(2)).value == pytest.approx(
            10.0, rel=1e-10)

    def test_point_gives_zero(self):
        assert mixed_area_2d(QuadForm.zero(2), QuadForm.identity(2)).value == 0.0

    def test_exact_route_has_zero_stderr(self):
        assert mixed_area_2d(QuadForm.identity(2), QuadForm.identity(2)).stderr == 0.0


class TestGaussEstimator:
    def test_matches_exact_2d(self):
        rng = np.random.default_rng(3)
        for i in range(5):
            q1, q2 = random_psd(rng, 2), random_psd(rng, 2)
            exact = mixed_area_2d(q1, q2).value
            g = mixed_volume_gauss([q1, q2], n_samples=200_000, seed=50 + i)
            assert abs(g.value - exact) <= 4.0 * g.stderr

    def test_ball_volume_3d(self):
        b = QuadForm.identity(3)
        g = mixed_volume_gauss([b, b, b], n_samples=200_000, seed=9)
        assert abs(g.value - unit_ball_volume(3)) <= 4.0 * g.stderr

    def test_deterministic_in_seed(self):
        rng = np.random.default_rng(4)
        qs = [random_psd(rng, 3) for _ in range(3)]
        a = mixed_volume_gauss(qs, n_samples=50_000, seed=77)
        b = mixed_volume_gauss(qs, n_samples=50_000, seed=77)
        assert a.value == b.value and a.stderr == b.stderr

    def test_stderr_scales(self):
        rng = np.random.default_rng(5)
        qs = [random_psd(rng, 3) for _ in range(3)]
        small = mixed_volume_gauss(qs, n_samples=65_536, seed=1)
        big = mixed_volume_gauss(qs, n_samples=4 * 65_536, seed=1)
        assert big.stderr == pytest.approx(small.stderr / 2.0, rel=0.15)


class TestOracle:
    def test_matches_exact_2d(self):
        rng = np.random.default_rng(6)
        for i in range(3):
            q1, q2 = random_psd(rng, 2), random_psd(rng, 2)
            exact = mixed_area_2d(q1, q2).value
            o = mixed_volume_oracle([q1, q2], n_membership_samples=20_000, seed=80 + i)
            assert abs(o.value - exact) <= 3.0 * o.stderr + 1e-12

    def test_ball_volume(self):
        b = QuadForm.identity(2)
        o = mixed_volume_oracle([b, b], n_membership_samples=40_000, seed=5)
        assert abs(o.value - math.pi) <= 3.0 * o.stderr


class TestDispatcher:
    def test_m1_is_width(self):
        q = QuadForm.diagonal([9.0])
        assert mixed_volume([q]).value == pytest.approx(6.0)

    def test_m2_uses_exact(self):
        r = mixed_volume([QuadForm.identity(2), QuadForm.identity(2)])
        assert r.method == "exact2d" and r.stderr == 0.0


class TestEvalDm:
    def test_rank_deficient_frame_zero(self):
        f = Frame(np.array([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]))
        e = Ellipsoid.unit_ball(3)
        assert eval_d_m([e, e], f) == 0.0

    def test_permutation_symmetry(self):
        rng = np.random.default_rng(7)
        es = [Ellipsoid(random_psd(rng, 3)) for _ in range(2)]
        f = Frame(rng.standard_normal((2, 3)))
        vals = {round(eval_d_m(list(p), f), 12) for p in itertools.permutations(es)}
        assert len(vals) == 1

    def test_frame_homogeneity(self):
        # d_m is 1-homogeneous in each frame vector
        rng = np.random.default_rng(8)
        es = [Ellipsoid(random_psd(rng, 3)) for _ in range(2)]
        v = rng.standard_normal((2, 3))
        base = eval_d_m(es, Frame(v))
        v2 = v.copy()
        v2[1] *= 2.5
        assert eval_d_m(es, Frame(v2)) == pytest.approx(2.5 * base, rel=1e-8)

    def test_body_scaling(self):
        rng = np.random.default_rng(9)
        g = random_psd(rng, 3)
        f = Frame(rng.standard_normal((2, 3)))
        e = Ellipsoid(g)
        e2 = Ellipsoid(QuadForm(4.0 * g.matrix))
        assert eval_d_m([e2, e], f) == pytest.approx(
            2.0 * eval_d_m([e, e], f), rel=1e-8)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_diagonal_identity_m2(self, seed):
        # d_m(T_g, ..., T_g)(f) = v_m * gram_volume(g, f)
        rng = np.random.default_rng(seed)
        g = random_psd(rng, 3)
        f = Frame(rng.standard_normal((2, 3)))
        lhs = eval_d_m([Ellipsoid(g), Ellipsoid(g)], f)
        rhs = unit_ball_volume(2) * gram_volume(g, f)
        assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)

    def test_monotonicity(self):
        # enlarging a body does not decrease the mixed volume
        rng = np.random.default_rng(10)
        g = random_psd(rng, 3)
        big = QuadForm(g.matrix + 0.5 * np.eye(3))
        f = Frame(rng.standard_normal((2, 3)))
        other = Ellipsoid(random_psd(rng, 3))
        assert eval_d_m([Ellipsoid(big), other], f) >= eval_d_m(
            [Ellipsoid(g), other], f) - 1e-10

    def test_wrong_frame_size_raises(self):
        e = Ellipsoid.unit_ball(3)
        with pytest.raises(ContractViolation):
            eval_d_m([e, e], Frame(np.eye(3)))
