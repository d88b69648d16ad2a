import math

import numpy as np
import pytest

from croftonlab import (
    ContractViolation,
    DegenerateSample,
    circle,
    count_curve_hyperplane,
    estimate_crofton,
    euclid_data,
    great_circle,
    kappa,
    kappa_mc,
    latitude_circle,
    predict_product,
    product_data,
    sample_euclid_hyperplane,
    sample_great_subsphere,
    sphere_data,
    torus_embedded,
)


class TestKappa:
    def test_closed_forms(self):
        assert kappa(2) == pytest.approx(2.0 / math.pi)
        assert kappa(3) == pytest.approx(0.5)

    def test_mc_agreement(self):
        for d in (2, 4):
            est, err = kappa_mc(d, n_samples=100_000, seed=d)
            assert abs(est - kappa(d)) <= 5.0 * err


class TestSamplers:
    def test_euclid_hyperplane(self):
        rng = np.random.default_rng(0)
        u, c = sample_euclid_hyperplane(3, 2.0, rng)
        assert np.linalg.norm(u) == pytest.approx(1.0)
        assert abs(c) <= 2.0

    def test_great_subsphere(self):
        rng = np.random.default_rng(1)
        u = sample_great_subsphere(4, rng)
        assert np.linalg.norm(u) == pytest.approx(1.0)


class TestCounting:
    def test_circle_line_counts(self):
        m = circle(1.0)
        u = np.array([1.0, 0.0])
        assert count_curve_hyperplane(m, u, 0.5) == 2
        assert count_curve_hyperplane(m, u, 1.5) == 0
        assert count_curve_hyperplane(m, np.array([0.0, 1.0]), -0.25) == 2

    def test_tangent_line_degenerate(self):
        m = circle(1.0)
        with pytest.raises(DegenerateSample):
            count_curve_hyperplane(m, np.array([1.0, 0.0]), 1.0)

    def test_high_frequency_curve(self):
        # a wiggly closed curve: r(t) = 2 + 0.5 sin(12 t); the ray x = 2
        # picks up many crossings that a coarse grid alone would miss
        from croftonlab import Chart, ParamManifold

        def imm(ts):
            t = np.atleast_2d(ts)[:, 0]
            r = 2.0 + 0.5 * np.sin(12.0 * t)
            return np.stack([r * np.cos(t), r * np.sin(t)], axis=1)

        m = ParamManifold([Chart(box=np.array([[0.0, 2.0 * math.pi]]),
                                 immersion=imm, periodic=(True,))], ambient_dim=2)
        n = count_curve_hyperplane(m, np.array([1.0, 0.0]), 0.1)
        assert n >= 2 and n % 2 == 0  # closed curve: even crossing parity


class TestCroftonData:
    def test_euclid_mass(self):
        data = euclid_data(2, 3.0)
        assert data.mass == pytest.approx(2.0 * 3.0 / kappa(2))

    def test_sphere_mass(self):
        assert sphere_data(3).mass == pytest.approx(1.0)

    def test_invalid_radius(self):
        with pytest.raises(ContractViolation):
            euclid_data(2, 0.0)

    def test_manifold_outside_ball_rejected(self):
        data = euclid_data(2, 0.5)
        with pytest.raises(ContractViolation):
            estimate_crofton(circle(1.0), data, 10, compute_prediction=False)


class TestEstimates:
    def test_circle_exact(self):
        # every line meeting the R = r ball crosses the circle twice
        rep = estimate_crofton(circle(1.0), euclid_data(2, 1.0), 2_000, seed=0)
        assert rep.estimate == pytest.approx(2.0 * math.pi, rel=1e-12)
        assert rep.stderr == 0.0
        assert abs(rep.estimate - rep.prediction) < 1e-10

    def test_circle_larger_ball(self):
        # enlarging R changes mass and hit rate but not the estimate's mean
        rep = estimate_crofton(circle(1.0), euclid_data(2, 2.0), 40_000, seed=1)
        assert abs(rep.estimate - 2.0 * math.pi) <= 4.0 * rep.stderr

    def test_great_circle_deterministic(self):
        rep = estimate_crofton(great_circle(), sphere_data(3), 500, seed=2)
        assert rep.estimate == pytest.approx(2.0, rel=1e-12)
        assert rep.stderr == 0.0
        assert rep.prediction == pytest.approx(2.0, rel=1e-10)

    def test_latitude_circle(self):
        rep = estimate_crofton(latitude_circle(math.pi / 6), sphere_data(3),
                               20_000, seed=3)
        assert rep.prediction == pytest.approx(1.0, rel=1e-10)
        assert abs(rep.estimate - 1.0) <= 4.0 * rep.stderr

    def test_seed_determinism_across_threads(self):
        m = latitude_circle(math.pi / 4)
        data = sphere_data(3)
        a = estimate_crofton(m, data, 8_192, seed=7, threads=1,
                             compute_prediction=False)
        b = estimate_crofton(m, data, 8_192, seed=7, threads=4,
                             compute_prediction=False)
        assert a.estimate == b.estimate
        assert a.stderr == b.stderr

    def test_different_seeds_differ(self):
        m = latitude_circle(math.pi / 4)
        data = sphere_data(3)
        a = estimate_crofton(m, data, 4_096, seed=1, compute_prediction=False)
        b = estimate_crofton(m, data, 4_096, seed=2, compute_prediction=False)
        assert a.estimate != b.estimate


class TestProducts:
    def test_torus_prediction_fubini(self):
        m = torus_embedded(1.0, 0.5)
        datas = [euclid_data(2, 1.0), euclid_data(2, 0.5)]
        pred = predict_product(m, datas)
        assert pred == pytest.approx(2.0 * math.pi ** 2, rel=1e-8)

    def test_torus_estimate(self):
        m = torus_embedded(1.0, 0.5)
        datas = [euclid_data(2, 1.0), euclid_data(2, 0.5)]
        data = product_data(datas)
        rep = estimate_crofton(m, data, 5_000, seed=4, compute_prediction=False)
        assert abs(rep.estimate - 2.0 * math.pi ** 2) <= 4.0 * rep.stderr + 1e-10

    def test_sphere_product_prediction(self):
        from croftonlab import product_of_circles_on_spheres

        t1, t2 = math.pi / 3, math.pi / 4
        m = product_of_circles_on_spheres(t1, t2)
        pred = predict_product(m, [sphere_data(3), sphere_data(3)])
        expected = (1.0 / math.pi ** 2) * (2.0 * math.pi * math.sin(t1)) * \
            (2.0 * math.pi * math.sin(t2))
        assert pred == pytest.approx(expected, rel=1e-8)
