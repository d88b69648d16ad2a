"""Average number of common zeros of random function systems.

Given finite-dimensional inner-product spaces of smooth functions on a
compact manifold X, the predicted average number of solutions of
f_1 - c_1 = ... = f_n - c_n = 0 is the integral over X of the ring
product of the length densities of the pullback metrics h_i, evaluated
through the mixed volume of the metric ellipsoids.  The empirical side
samples random hyperplanes in the dual spaces and counts solutions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geomcore import ContractViolation, QuadForm
from .densities import (
    Chart,
    EllipsoidDensity,
    FinslerField,
    ParamManifold,
    flat_box,
    integrate_density,
    mixed_riemannian_density,
)
from .croftonsim import (
    CroftonData,
    EstimateReport,
    estimate_crofton,
    kappa,
    product_data,
)
from .mixvol import unit_ball_volume

__all__ = [
    "FunctionSpace",
    "EvalMap",
    "build_eval_map",
    "predict_zeros",
    "empirical_zeros",
    "fourier_space",
    "linear_coords_space",
    "circle_manifold",
    "torus_manifold",
]


@dataclass
class FunctionSpace:
    """A finite-dimensional space of smooth functions on chart coordinates.

    basis_values maps (N, k) parameter arrays to (N, dim) basis
    evaluations; basis_grads maps (N, k) to (N, dim, k) chart gradients.
    gram is the inner product of the chosen basis.  depends_on, when set,
    lists the chart axes the functions actually depend on (used to
    factorize counting on product domains).
    """

    dim: int
    basis_values: Callable[[np.ndarray], np.ndarray]
    basis_grads: Callable[[np.ndarray], np.ndarray]
    gram: QuadForm
    name: str = ""
    depends_on: Optional[tuple] = None

    def __post_init__(self):
        if self.gram.dim != self.dim:
            raise ContractViolation("gram dimension must match the basis size")
        if np.min(np.linalg.eigvalsh(self.gram.matrix)) <= 0.0:
            raise ContractViolation("gram matrix must be positive definite")


@dataclass
class EvalMap:
    """The evaluation map theta: X -> V* in orthonormal dual coordinates."""

    space: FunctionSpace
    manifold: ParamManifold
    theta: Callable[[np.ndarray], np.ndarray]
    dtheta: Callable[[np.ndarray], np.ndarray]
    radius: float

    def pullback_metric(self) -> FinslerField:
        """h = theta* g as a field on the chart (g the dual inner product)."""

        def func(ts):
            d = self.dtheta(np.atleast_2d(ts))
            return np.einsum("ndi,ndk->nik", d, d)

        return FinslerField(func, dim=self.manifold.param_dim,
                            name=f"pullback({self.space.name})")


def build_eval_map(space: FunctionSpace, x: ParamManifold) -> EvalMap:
    """Orthonormalize the basis and assemble theta and its chart Jacobian."""
    chol = np.linalg.cholesky(space.gram.matrix)
    inv = np.linalg.inv(chol)

    def theta(ts):
        return space.basis_values(np.atleast_2d(ts)) @ inv.T

    def dtheta(ts):
        g = space.basis_grads(np.atleast_2d(ts))
        return np.einsum("ij,njk->nik", inv, g)

    radius = 0.0
    for ts, _w, _x, _d in x.quadrature(min(x.base_resolution, 256)):
        radius = max(radius, float(np.max(np.linalg.norm(theta(ts), axis=1))))
    if radius <= 0.0:
        raise ContractViolation("evaluation map vanishes identically")
    return EvalMap(space=space, manifold=x, theta=theta, dtheta=dtheta, radius=radius)


def predict_zeros(maps: Sequence[EvalMap], resolution: Optional[int] = None,
                  rel_tol: float = 1e-6) -> float:
    """Predicted average zero count: integral of the ring product of the
    length densities of the pullback metrics.

    The equivalent mixed-Riemannian and Finsler mixed-volume forms are
    evaluated as well and must agree within quadrature tolerance.
    """
    maps = list(maps)
    x = maps[0].manifold
    n = x.param_dim
    if len(maps) != n or any(mp.manifold is not x for mp in maps):
        raise ContractViolation("need n evaluation maps on one n-dimensional manifold")
    fields = [mp.pullback_metric() for mp in maps]

    # ring product of vol_{1,h_i}: (n!/2^n) d_n pointwise
    ring = None
    for fld in fields:
        factor = EllipsoidDensity((fld,), 0.5)
        ring = factor if ring is None else ring * factor
    domain = flat_box(x.charts[0].box, periodic=x.charts[0].periodic,
                      base_resolution=x.base_resolution)
    main = integrate_density(domain, ring, resolution=resolution).value

    # (ii) mixed volume of the metric ellipsoids times n!/2^n
    mixed_bodies = integrate_density(
        domain, EllipsoidDensity(tuple(fields), 1.0), resolution=resolution).value
    form_ii = (math.factorial(n) / 2.0 ** n) * mixed_bodies
    # (i) mixed Riemannian volume times n! v_n / 2^n
    mixed_riem = integrate_density(
        domain, mixed_riemannian_density(fields), resolution=resolution).value
    form_i = (math.factorial(n) * unit_ball_volume(n) / 2.0 ** n) * mixed_riem

    scale = max(abs(main), 1e-300)
    for other in (form_i, form_ii):
        if abs(other - main) > rel_tol * scale:
            raise RuntimeError(f"equivalent zero-count forms disagree: {main!r} vs {other!r}")
    return main


def _theta_curve(mp: EvalMap) -> ParamManifold:
    """The image curve of theta, for 1-parameter hyperplane counting."""
    x = mp.manifold
    chart = x.charts[0]
    curve_chart = Chart(box=chart.box, immersion=mp.theta, differential=mp.dtheta,
                        periodic=chart.periodic)
    return ParamManifold([curve_chart], ambient_dim=mp.space.dim,
                         base_resolution=x.base_resolution)


def _factor_curve(mp: EvalMap, axis: int) -> ParamManifold:
    """Theta restricted to a single chart axis (separable spaces on products)."""
    x = mp.manifold
    chart = x.charts[0]
    k = chart.param_dim

    def imm(ts, axis=axis):
        ts = np.atleast_2d(ts)
        full = np.zeros((ts.shape[0], k))
        full[:, axis] = ts[:, 0]
        return mp.theta(full)

    def diff(ts, axis=axis):
        ts = np.atleast_2d(ts)
        full = np.zeros((ts.shape[0], k))
        full[:, axis] = ts[:, 0]
        return mp.dtheta(full)[:, :, axis:axis + 1]

    curve_chart = Chart(box=chart.box[axis:axis + 1], immersion=imm, differential=diff,
                        periodic=(chart.periodic[axis],))
    return ParamManifold([curve_chart], ambient_dim=mp.space.dim,
                         base_resolution=mp.manifold.base_resolution)


def _hyperplane_data_for_map(mp: EvalMap, curve: ParamManifold) -> CroftonData:
    from . import croftonsim

    # R must match sup |theta| as closely as possible: the estimate scales
    # with R, and for constant-count systems (e.g. trigonometric circles)
    # any padding becomes a bias that the zero sampling variance cannot
    # absorb.  The grid max is exact for norm-constant maps; hyperplanes
    # near the tangent distance are handled by degenerate-sample resampling.
    big_r = max(mp.radius, curve.bounding_radius(512), curve.bounding_radius(4096))
    data = croftonsim.euclid_data(mp.space.dim, big_r)
    data.validate_manifold(curve)
    return data


def empirical_zeros(maps: Sequence[EvalMap], n_samples: int, seed: int = 0,
                    threads: int = 1, prediction: Optional[float] = None) -> EstimateReport:
    """Empirical average zero count from random hyperplane sampling.

    For each space V_i a hyperplane meeting the ball of radius
    R_i = max |theta_i| is drawn (the restriction is exact: hyperplanes
    outside contribute no solutions); solutions of the joint system are
    counted over X.  Built-in counters cover n = 1 and n = 2.
    """
    maps = list(maps)
    x = maps[0].manifold
    n = x.param_dim
    if len(maps) != n:
        raise ContractViolation("need n evaluation maps on an n-dimensional manifold")
    if n not in (1, 2):
        raise ContractViolation("built-in counters support n in {1, 2}")
    if prediction is None:
        prediction = predict_zeros(maps)

    from . import croftonsim

    if n == 1:
        curve = _theta_curve(maps[0])
        data = _hyperplane_data_for_map(maps[0], curve)
        return croftonsim.estimate_crofton(curve, data, n_samples, seed=seed,
                                           threads=threads, prediction=prediction)

    axes = [mp.space.depends_on for mp in maps]
    if (axes[0] is not None and axes[1] is not None
            and len(axes[0]) == len(axes[1]) == 1 and axes[0] != axes[1]):
        from .densities import ProductManifold

        curves = [_factor_curve(mp, ax[0]) for mp, ax in zip(maps, axes)]
        datas = [_hyperplane_data_for_map(mp, c) for mp, c in zip(maps, curves)]
        joint = product_data(datas)
        prod = ProductManifold(curves)
        return croftonsim.estimate_crofton(prod, joint, n_samples, seed=seed,
                                           threads=threads, prediction=prediction)

    # generic two-equation counting on the chart
    datas = [_hyperplane_data_for_map(mp, _theta_curve_2d_stub(mp)) for mp in maps]
    joint = _generic_joint_data(maps, datas)
    domain = flat_box(x.charts[0].box, periodic=x.charts[0].periodic,
                      base_resolution=x.base_resolution)
    return croftonsim.estimate_crofton(domain, joint, n_samples, seed=seed,
                                       threads=threads, prediction=prediction)


def _theta_curve_2d_stub(mp: EvalMap) -> ParamManifold:
    """Bounding-radius carrier for R_i validation on 2-d domains."""
    x = mp.manifold
    chart = x.charts[0]
    curve_chart = Chart(box=chart.box, immersion=mp.theta, differential=mp.dtheta,
                        periodic=chart.periodic)
    return ParamManifold([curve_chart], ambient_dim=mp.space.dim,
                         base_resolution=min(x.base_resolution, 64))


def _generic_joint_data(maps, datas) -> CroftonData:
    from . import croftonsim

    mass = float(np.prod([d.mass for d in datas]))
    dims = [mp.space.dim for mp in maps]

    def sample_batch(rng, size):
        return {"factors": [d.sample_batch(rng, size) for d in datas]}

    def count_batch(domain, params):
        size = params["factors"][0]["u"].shape[0]
        counts = np.zeros(size, dtype=np.int64)
        degenerate = np.zeros(size, dtype=bool)
        for i in range(size):
            eqs = []
            grads = []
            for j, mp in enumerate(maps):
                u = params["factors"][j]["u"][i]
                c = params["factors"][j]["c"][i]

                def eq(ts, mp=mp, u=u, c=c):
                    return mp.theta(np.atleast_2d(ts)) @ u - c

                def grad(ts, mp=mp, u=u):
                    return np.einsum("d,ndk->nk", u, mp.dtheta(np.atleast_2d(ts)))

                eqs.append(eq)
                grads.append(grad)
            try:
                counts[i] = croftonsim.count_surface_system(domain, eqs, grads, grid=128)
            except croftonsim.DegenerateSample:
                degenerate[i] = True
        return counts, degenerate

    return CroftonData(kind="product", codim=2, mass=mass, sample_batch=sample_batch,
                       count_batch=count_batch, density=None)


# ---------------------------------------------------------------------------
# Built-in domains and function spaces
# ---------------------------------------------------------------------------


def circle_manifold(base_resolution: int = 512) -> ParamManifold:
    """S^1 as the periodic chart [0, 2 pi)."""
    return flat_box([[0.0, 2.0 * np.pi]], periodic=(True,),
                    base_resolution=base_resolution, name="S1")


def torus_manifold(base_resolution: int = 256) -> ParamManifold:
    """S^1 x S^1 as the doubly periodic chart [0, 2 pi)^2."""
    return flat_box([[0.0, 2.0 * np.pi], [0.0, 2.0 * np.pi]], periodic=(True, True),
                    base_resolution=base_resolution, name="T2")


def fourier_space(k: int, axis: int = 0, total_axes: int = 1) -> FunctionSpace:
    """span{cos(k t), sin(k t)} on one chart axis, orthonormal gram."""
    if k < 1:
        raise ContractViolation("frequency k must be a positive integer")

    def values(ts):
        t = np.atleast_2d(ts)[:, axis]
        return np.stack([np.cos(k * t), np.sin(k * t)], axis=1)

    def grads(ts):
        ts = np.atleast_2d(ts)
        t = ts[:, axis]
        g = np.zeros((ts.shape[0], 2, ts.shape[1]))
        g[:, 0, axis] = -k * np.sin(k * t)
        g[:, 1, axis] = k * np.cos(k * t)
        return g

    return FunctionSpace(dim=2, basis_values=values, basis_grads=grads,
                         gram=QuadForm.identity(2), name=f"fourier({k})",
                         depends_on=(axis,))


def linear_coords_space() -> FunctionSpace:
    """Restrictions of the linear coordinates of R^3 to S^2 (spherical chart)."""

    def values(ts):
        ts = np.atleast_2d(ts)
        th, ph = ts[:, 0], ts[:, 1]
        return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph),
                         np.cos(th)], axis=1)

    def grads(ts):
        ts = np.atleast_2d(ts)
        th, ph = ts[:, 0], ts[:, 1]
        g = np.zeros((ts.shape[0], 3, 2))
        g[:, 0, 0] = np.cos(th) * np.cos(ph)
        g[:, 0, 1] = -np.sin(th) * np.sin(ph)
        g[:, 1, 0] = np.cos(th) * np.sin(ph)
        g[:, 1, 1] = np.sin(th) * np.cos(ph)
        g[:, 2, 0] = -np.sin(th)
        return g

    return FunctionSpace(dim=3, basis_values=values, basis_grads=grads,
                         gram=QuadForm.identity(3), name="linear_coords")
