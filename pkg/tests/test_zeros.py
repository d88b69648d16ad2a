import math

import numpy as np
import pytest

from croftonlab import (
    ContractViolation,
    FunctionSpace,
    QuadForm,
    build_eval_map,
    circle_manifold,
    empirical_zeros,
    fourier_space,
    linear_coords_space,
    predict_zeros,
    sphere2,
    torus_manifold,
)


class TestFunctionSpace:
    def test_rejects_singular_gram(self):
        sp = fourier_space(1)
        with pytest.raises(ContractViolation):
            FunctionSpace(dim=2, basis_values=sp.basis_values,
                          basis_grads=sp.basis_grads, gram=QuadForm.zero(2),
                          depends_on=sp.depends_on)

    def test_invalid_frequency(self):
        with pytest.raises(ContractViolation):
            fourier_space(0)


class TestPredictions:
    def test_fourier_scaling(self):
        x = circle_manifold()
        for k in (1, 2, 3, 5):
            em = build_eval_map(fourier_space(k), x)
            assert predict_zeros([em]) == pytest.approx(2.0 * math.pi * k, rel=1e-8)

    def test_basis_invariance(self):
        # rescaling the basis while adjusting the gram leaves theta unchanged
        x = circle_manifold()
        sp = fourier_space(2)

        def values(ts):
            return 3.0 * sp.basis_values(ts)

        def grads(ts):
            return 3.0 * sp.basis_grads(ts)

        scaled = FunctionSpace(dim=2, basis_values=values, basis_grads=grads,
                               gram=QuadForm(9.0 * np.eye(2)),
                               depends_on=sp.depends_on)
        a = predict_zeros([build_eval_map(sp, x)])
        b = predict_zeros([build_eval_map(scaled, x)])
        assert a == pytest.approx(b, rel=1e-10)

    def test_torus_separable_product(self):
        x = torus_manifold()
        m1 = build_eval_map(fourier_space(1, axis=0, total_axes=2), x)
        m2 = build_eval_map(fourier_space(2, axis=1, total_axes=2), x)
        joint = predict_zeros([m1, m2])
        assert joint == pytest.approx((2.0 * math.pi) * (4.0 * math.pi), rel=1e-8)

    def test_linear_coords_sphere(self):
        # pairs of affine equations <x, u_i> = c_i on S^2: the solutions are
        # the points where the line {x . u_1 = c_1, x . u_2 = c_2} pierces the
        # sphere.  Independent oracle: mass^2 * E[2 * 1{dist(line, 0) < 1}]
        # with mass = 2 R / kappa_3 = 4 per equation.
        x = sphere2()
        em = build_eval_map(linear_coords_space(), x)
        em2 = build_eval_map(linear_coords_space(), x)
        pred = predict_zeros([em, em2], resolution=128)

        rng = np.random.default_rng(12345)
        n = 200_000
        u = rng.standard_normal((n, 2, 3))
        u /= np.linalg.norm(u, axis=2, keepdims=True)
        c = rng.uniform(-1.0, 1.0, (n, 2))
        # nearest point of the line to the origin: x = A^T (A A^T)^{-1} c
        gram = np.einsum("nik,njk->nij", u, u)
        sol = np.linalg.solve(gram, c[..., None])[..., 0]
        x0 = np.einsum("ni,nik->nk", sol, u)
        counts = 2.0 * (np.linalg.norm(x0, axis=1) < 1.0)
        est = 16.0 * counts.mean()
        err = 16.0 * counts.std(ddof=1) / math.sqrt(n)
        assert abs(pred - est) <= 4.0 * err
        # closed form of the density route: (pi/2) * area(S^2) = 2 pi^2
        assert pred == pytest.approx(2.0 * math.pi ** 2, rel=1e-4)


class TestEmpirical:
    def test_fourier_circle(self):
        x = circle_manifold()
        em = build_eval_map(fourier_space(1), x)
        rep = empirical_zeros([em], 20_000, seed=0,
                              prediction=predict_zeros([em]))
        assert abs(rep.estimate - 2.0 * math.pi) <= 4.0 * rep.stderr + 1e-10

    def test_torus_separable(self):
        x = torus_manifold()
        m1 = build_eval_map(fourier_space(1, axis=0, total_axes=2), x)
        m2 = build_eval_map(fourier_space(2, axis=1, total_axes=2), x)
        rep = empirical_zeros([m1, m2], 5_000, seed=1)
        assert abs(rep.estimate - 8.0 * math.pi ** 2) <= 4.0 * rep.stderr + 1e-10

    def test_determinism(self):
        x = circle_manifold()
        em = build_eval_map(fourier_space(2), x)
        a = empirical_zeros([em], 4_096, seed=5)
        b = empirical_zeros([em], 4_096, seed=5, threads=4)
        assert a.estimate == b.estimate
