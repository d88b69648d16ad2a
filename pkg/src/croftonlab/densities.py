"""Densities on chart-based manifolds.

Evaluation of the length density of a metric, ring products of
ellipsoid-type 1-densities, the mixed Riemannian density, Finsler fields,
and quadrature integration over parametrized submanifolds.  Manifolds are
given by explicit charts with analytic differentials; a central
finite-difference fallback is available and flagged in results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geomcore import ContractViolation, Ellipsoid, Frame, QuadForm
from .mixvol import mixed_area_2d_batch, mixed_volume_gauss, unit_ball_volume

__all__ = [
    "Chart",
    "ParamManifold",
    "ProductManifold",
    "FinslerField",
    "EllipsoidDensity",
    "QuadratureResult",
    "eval_vol1",
    "vol1_density",
    "ring_product_eval",
    "mixed_riemannian_density",
    "integrate_density",
    "pullback_field",
    "circle",
    "latitude_circle",
    "great_circle",
    "sphere2",
    "torus_embedded",
    "product_manifold",
    "product_of_circles_on_spheres",
    "graph_surface",
    "flat_box",
]

_FD_STEP_REL = 1e-6


def _fd_differential(immersion, box):
    steps = _FD_STEP_REL * (box[:, 1] - box[:, 0])

    def diff(ts: np.ndarray) -> np.ndarray:
        ts = np.atleast_2d(ts)
        cols = []
        for j in range(ts.shape[1]):
            e = np.zeros(ts.shape[1])
            e[j] = steps[j]
            cols.append((immersion(ts + e) - immersion(ts - e)) / (2.0 * steps[j]))
        return np.stack(cols, axis=2)

    return diff


@dataclass
class Chart:
    """One parameter box with a vectorized immersion and its differential.

    immersion maps (N, k) parameter arrays to (N, d) points; differential
    maps (N, k) to (N, d, k).  If differential is None a central
    finite-difference fallback is installed and flagged.
    """

    box: np.ndarray                      # (k, 2)
    immersion: Callable[[np.ndarray], np.ndarray]
    differential: Optional[Callable[[np.ndarray], np.ndarray]] = None
    periodic: tuple = ()

    fd_differential: bool = field(init=False, default=False)

    def __post_init__(self):
        self.box = np.asarray(self.box, dtype=float).reshape(-1, 2)
        if not self.periodic:
            self.periodic = tuple(False for _ in range(self.box.shape[0]))
        if self.differential is None:
            self.differential = _fd_differential(self.immersion, self.box)
            self.fd_differential = True

    @property
    def param_dim(self) -> int:
        return self.box.shape[0]


class ParamManifold:
    """A compact k-submanifold of R^d given by charts that partition it.

    The differential is required to have rank k at all quadrature nodes of
    the base grid; this is checked at construction.
    """

    def __init__(self, charts: Sequence[Chart], ambient_dim: int,
                 base_resolution: int = 256, name: str = ""):
        self.charts = list(charts)
        if not self.charts:
            raise ContractViolation("manifold needs at least one chart")
        self.param_dim = self.charts[0].param_dim
        if any(c.param_dim != self.param_dim for c in self.charts):
            raise ContractViolation("all charts must share the parameter dimension")
        self.ambient_dim = ambient_dim
        self.base_resolution = base_resolution
        self.name = name
        self._curve_cache: dict = {}
        for chart, (ts, _w) in zip(self.charts, self._nodes(min(base_resolution, 32))):
            d = chart.differential(ts)
            if d.shape != (ts.shape[0], ambient_dim, self.param_dim):
                raise ContractViolation(
                    f"differential returned shape {d.shape}, expected "
                    f"{(ts.shape[0], ambient_dim, self.param_dim)}"
                )
            s = np.linalg.svd(d, compute_uv=False)
            if np.any(s[:, -1] <= 1e-12 * np.maximum(s[:, 0], 1e-300)):
                raise ContractViolation("differential is rank-deficient at a quadrature node")

    @property
    def uses_fd_differential(self) -> bool:
        return any(c.fd_differential for c in self.charts)

    def _nodes(self, resolution: int):
        """Per chart, midpoint tensor grid: (params (N, k), weights (N,))."""
        out = []
        for chart in self.charts:
            axes = []
            weights = []
            for lo, hi in chart.box:
                step = (hi - lo) / resolution
                axes.append(lo + step * (np.arange(resolution) + 0.5))
                weights.append(np.full(resolution, step))
            mesh = np.meshgrid(*axes, indexing="ij")
            ts = np.stack([m.ravel() for m in mesh], axis=1)
            wmesh = np.meshgrid(*weights, indexing="ij")
            w = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1)
            out.append((ts, w))
        return out

    def quadrature(self, resolution: Optional[int] = None):
        """Per chart: (params, weights, points, differentials)."""
        resolution = resolution or self.base_resolution
        out = []
        for chart, (ts, w) in zip(self.charts, self._nodes(resolution)):
            out.append((ts, w, chart.immersion(ts), chart.differential(ts)))
        return out

    def bounding_radius(self, resolution: int = 512) -> float:
        r = 0.0
        for _ts, _w, x, _d in self.quadrature(resolution):
            r = max(r, float(np.max(np.linalg.norm(x, axis=1))))
        return r

    # Curve-specific helpers (param_dim == 1) -------------------------------

    def is_closed_curve(self) -> bool:
        return self.param_dim == 1 and len(self.charts) == 1 and self.charts[0].periodic[0]

    def curve_points(self, resolution: int) -> np.ndarray:
        """Uniform closed/open grid of points along a one-chart curve, cached.

        Uses endpoint grid t_j = a + j (b - a) / n so dyadic resolutions nest.
        """
        if self.param_dim != 1 or len(self.charts) != 1:
            raise ContractViolation("curve_points requires a single-chart curve")
        if resolution not in self._curve_cache:
            chart = self.charts[0]
            lo, hi = chart.box[0]
            if chart.periodic[0]:
                t = lo + (hi - lo) * np.arange(resolution) / resolution
            else:
                t = np.linspace(lo, hi, resolution + 1)
            self._curve_cache[resolution] = chart.immersion(t[:, None])
        return self._curve_cache[resolution]


class ProductManifold(ParamManifold):
    """Product of single-chart manifolds, embedded in the product ambient space."""

    def __init__(self, factors: Sequence[ParamManifold], base_resolution: int = 256,
                 name: str = ""):
        factors = list(factors)
        if any(len(m.charts) != 1 for m in factors):
            raise ContractViolation("product factors must be single-chart manifolds")
        self.factors = factors
        dims = [m.param_dim for m in factors]
        adims = [m.ambient_dim for m in factors]
        offsets_p = np.cumsum([0] + dims)
        offsets_a = np.cumsum([0] + adims)
        box = np.vstack([m.charts[0].box for m in factors])
        periodic = tuple(p for m in factors for p in m.charts[0].periodic)

        def immersion(ts):
            ts = np.atleast_2d(ts)
            parts = [
                m.charts[0].immersion(ts[:, offsets_p[i]:offsets_p[i + 1]])
                for i, m in enumerate(factors)
            ]
            return np.concatenate(parts, axis=1)

        def differential(ts):
            ts = np.atleast_2d(ts)
            n = ts.shape[0]
            d = np.zeros((n, offsets_a[-1], offsets_p[-1]))
            for i, m in enumerate(factors):
                block = m.charts[0].differential(ts[:, offsets_p[i]:offsets_p[i + 1]])
                d[:, offsets_a[i]:offsets_a[i + 1], offsets_p[i]:offsets_p[i + 1]] = block
            return d

        chart = Chart(box=box, immersion=immersion, differential=differential,
                      periodic=periodic)
        super().__init__([chart], ambient_dim=int(offsets_a[-1]),
                         base_resolution=base_resolution, name=name)
        self.factor_ambient_offsets = offsets_a


class FinslerField:
    """A continuous field of ellipsoids in the (chart-identified) cotangent
    spaces, realized as point -> PSD matrix."""

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], dim: int, name: str = ""):
        self.func = func
        self.dim = dim
        self.name = name

    @staticmethod
    def constant(q: QuadForm, name: str = "") -> "FinslerField":
        mat = q.matrix

        def func(xs):
            xs = np.atleast_2d(xs)
            return np.broadcast_to(mat, (xs.shape[0],) + mat.shape).copy()

        return FinslerField(func, dim=q.dim, name=name)

    def matrices(self, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_2d(xs)
        out = np.asarray(self.func(xs), dtype=float)
        if out.shape != (xs.shape[0], self.dim, self.dim):
            raise ContractViolation(f"field returned shape {out.shape}")
        return out

    def form_at(self, x) -> QuadForm:
        return QuadForm(self.matrices(np.atleast_2d(x))[0])

    def ellipsoid_at(self, x) -> Ellipsoid:
        return Ellipsoid(self.form_at(x))

    def max_difference_step(self, m: ParamManifold, resolution: int = 64) -> float:
        """Largest entrywise jump between neighbouring quadrature nodes
        (finite-difference continuity bound along the grid)."""
        worst = 0.0
        for ts, _w, x, _d in m.quadrature(resolution):
            mats = self.matrices(x)
            n = resolution
            grid = mats.reshape((n,) * m.param_dim + mats.shape[1:])
            for axis in range(m.param_dim):
                jump = np.abs(np.diff(grid, axis=axis)).max()
                worst = max(worst, float(jump))
        return worst


@dataclass(frozen=True)
class EllipsoidDensity:
    """scalar * d_m(E_1(x), ..., E_m(x)) in factored form.

    Equivalently scalar * (1/m!) * D_1(E_1) ... D_1(E_m) in the ring of
    normal densities, so products of these densities stay in the class and
    are exact: scalars multiply with the binomial ((p+q) choose p).
    """

    factors: tuple
    scalar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ContractViolation("density needs at least one factor field")

    @property
    def degree(self) -> int:
        return len(self.factors)

    @property
    def ambient_dim(self) -> int:
        return self.factors[0].dim

    def __mul__(self, other: "EllipsoidDensity") -> "EllipsoidDensity":
        p, q = self.degree, other.degree
        scalar = self.scalar * other.scalar * math.comb(p + q, p)
        return EllipsoidDensity(self.factors + other.factors, scalar)

    def value(self, x, f: Frame, n_samples: int = 200_000, seed: int = 0) -> float:
        from .mixvol import eval_d_m

        bodies = [Ellipsoid(fld.form_at(x)) for fld in self.factors]
        return self.scalar * eval_d_m(bodies, f, n_samples=n_samples, seed=seed)

    def value_batch(self, xs: np.ndarray, frames: np.ndarray,
                    n_theta: int = 4096, n_samples: int = 200_000, seed: int = 0) -> np.ndarray:
        """Values on a batch of points (N, d) and frames (N, d, m)."""
        xs = np.atleast_2d(xs)
        m = self.degree
        if frames.shape[2] != m:
            raise ContractViolation("frame size must equal the density degree")
        restricted = []
        for fld in self.factors:
            h = fld.matrices(xs)                                # (N, d, d)
            restricted.append(np.einsum("ndi,nde,nek->nik", frames, h, frames))
        if m == 1:
            vals = 2.0 * np.sqrt(np.clip(restricted[0][:, 0, 0], 0.0, None))
        elif m == 2:
            vals = mixed_area_2d_batch(restricted[0], restricted[1], n_theta=n_theta)
        else:
            vals = np.empty(xs.shape[0])
            for i in range(xs.shape[0]):
                qs = [QuadForm(r[i]) for r in restricted]
                frame_rank = np.linalg.matrix_rank(frames[i])
                if frame_rank < m:
                    vals[i] = 0.0
                else:
                    vals[i] = mixed_volume_gauss(qs, n_samples=n_samples, seed=seed).value
        return self.scalar * vals


def eval_vol1(g: FinslerField, x, xi) -> float:
    """The length density of a metric field: sqrt(g_x(xi, xi))."""
    mat = g.form_at(x).matrix
    xi = np.asarray(xi, dtype=float)
    return float(np.sqrt(max(xi @ mat @ xi, 0.0)))


def vol1_density(g: FinslerField) -> EllipsoidDensity:
    """vol_{1,g} as an ellipsoid-type density: half the width of the g-ball."""
    return EllipsoidDensity((g,), 0.5)


def ring_product_eval(d: EllipsoidDensity, x, f: Frame,
                      n_samples: int = 200_000, seed: int = 0) -> float:
    """Evaluate a factored ring product at a point on a frame."""
    if f.size != d.degree:
        raise ContractViolation("frame size must equal the density degree")
    return d.value(x, f, n_samples=n_samples, seed=seed)


def mixed_riemannian_density(gs: Sequence[FinslerField]) -> EllipsoidDensity:
    """The density (2^n / n! v_n) vol_{1,g_1} ... vol_{1,g_n}.

    Its value on a frame is d_n of the metric ellipsoids divided by v_n;
    its integral is the mixed Riemannian volume.
    """
    gs = list(gs)
    n = len(gs)
    return EllipsoidDensity(tuple(gs), 1.0 / unit_ball_volume(n))


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    resolution: int
    fd_differential: bool = False

    def __float__(self):
        return self.value


def _integrate_at(m: ParamManifold, d: EllipsoidDensity, resolution: int,
                  n_theta: int, n_samples: int, seed: int) -> float:
    total = 0.0
    for ts, w, x, diff in m.quadrature(resolution):
        s = np.linalg.svd(diff, compute_uv=False)
        if np.any(s[:, -1] <= 1e-12 * np.maximum(s[:, 0], 1e-300)):
            raise ContractViolation("differential rank-deficient at a quadrature node")
        vals = d.value_batch(x, diff, n_theta=n_theta, n_samples=n_samples, seed=seed)
        total += float(np.dot(w, vals))
    return total


def integrate_density(m: ParamManifold, d: EllipsoidDensity,
                      resolution: Optional[int] = None, n_theta: int = 4096,
                      n_samples: int = 200_000, seed: int = 0) -> QuadratureResult:
    """Integrate a degree-k density over a k-manifold by midpoint quadrature.

    The error estimate is a Richardson comparison against the half
    resolution grid; the returned value uses the full resolution.
    """
    if d.degree != m.param_dim:
        raise ContractViolation(
            f"density degree {d.degree} != manifold parameter dimension {m.param_dim}"
        )
    resolution = resolution or m.base_resolution
    coarse = _integrate_at(m, d, max(resolution // 2, 2), n_theta, n_samples, seed)
    fine = _integrate_at(m, d, resolution, n_theta, n_samples, seed)
    err = abs(fine - coarse) / 3.0  # midpoint rule is second order
    return QuadratureResult(value=fine, error_estimate=err, resolution=resolution,
                            fd_differential=m.uses_fd_differential)


def pullback_field(f: FinslerField, m: ParamManifold, chart_index: int = 0) -> FinslerField:
    """Pull a cotangent field back along a chart immersion.

    (pullback h)(t) = Dx(t)^T h(x(t)) Dx(t); operates at the matrix level,
    matching the inverse image of Finsler convex sets.
    """
    if f.dim != m.ambient_dim:
        raise ContractViolation("field and manifold ambient dimensions differ")
    chart = m.charts[chart_index]

    def func(ts):
        ts = np.atleast_2d(ts)
        x = chart.immersion(ts)
        dx = chart.differential(ts)
        h = f.matrices(x)
        return np.einsum("ndi,nde,nek->nik", dx, h, dx)

    return FinslerField(func, dim=m.param_dim, name=f"pullback({f.name})")


# ---------------------------------------------------------------------------
# Built-in manifolds
# ---------------------------------------------------------------------------


def circle(r: float, center=(0.0, 0.0), base_resolution: int = 512) -> ParamManifold:
    """Circle of radius r in R^2."""
    c = np.asarray(center, dtype=float)

    def imm(ts):
        t = np.atleast_2d(ts)[:, 0]
        return np.stack([c[0] + r * np.cos(t), c[1] + r * np.sin(t)], axis=1)

    def diff(ts):
        t = np.atleast_2d(ts)[:, 0]
        return np.stack([-r * np.sin(t), r * np.cos(t)], axis=1)[:, :, None]

    chart = Chart(box=[[0.0, 2.0 * np.pi]], immersion=imm, differential=diff,
                  periodic=(True,))
    return ParamManifold([chart], ambient_dim=2, base_resolution=base_resolution,
                         name=f"circle(r={r})")


def latitude_circle(theta0: float, base_resolution: int = 512) -> ParamManifold:
    """Latitude circle on the unit sphere S^2 at polar angle theta0."""
    s, c = math.sin(theta0), math.cos(theta0)
    if s <= 0.0:
        raise ContractViolation("latitude circle degenerates at the poles")

    def imm(ts):
        t = np.atleast_2d(ts)[:, 0]
        return np.stack([s * np.cos(t), s * np.sin(t), np.full_like(t, c)], axis=1)

    def diff(ts):
        t = np.atleast_2d(ts)[:, 0]
        return np.stack([-s * np.sin(t), s * np.cos(t), np.zeros_like(t)], axis=1)[:, :, None]

    chart = Chart(box=[[0.0, 2.0 * np.pi]], immersion=imm, differential=diff,
                  periodic=(True,))
    return ParamManifold([chart], ambient_dim=3, base_resolution=base_resolution,
                         name=f"latitude(theta0={theta0})")


def great_circle(base_resolution: int = 512) -> ParamManifold:
    """The equator of S^2."""
    return latitude_circle(math.pi / 2.0, base_resolution=base_resolution)


def sphere2(base_resolution: int = 256) -> ParamManifold:
    """The unit sphere S^2 in spherical chart (theta, phi).

    The midpoint grid never touches the poles, so the chart differential
    is full rank at all quadrature nodes.
    """

    def imm(ts):
        ts = np.atleast_2d(ts)
        th, ph = ts[:, 0], ts[:, 1]
        return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)

    def diff(ts):
        ts = np.atleast_2d(ts)
        th, ph = ts[:, 0], ts[:, 1]
        d_th = np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=1)
        d_ph = np.stack([-np.sin(th) * np.sin(ph), np.sin(th) * np.cos(ph),
                         np.zeros_like(th)], axis=1)
        return np.stack([d_th, d_ph], axis=2)

    chart = Chart(box=[[0.0, np.pi], [0.0, 2.0 * np.pi]], immersion=imm,
                  differential=diff, periodic=(False, True))
    return ParamManifold([chart], ambient_dim=3, base_resolution=base_resolution,
                         name="S2")


def torus_embedded(r1: float, r2: float, base_resolution: int = 256) -> ProductManifold:
    """The torus C_1 x C_2 in R^2 x R^2 = R^4."""
    return ProductManifold([circle(r1), circle(r2)], base_resolution=base_resolution,
                           name=f"torus({r1},{r2})")


def product_manifold(factors: Sequence[ParamManifold],
                     base_resolution: int = 256) -> ProductManifold:
    return ProductManifold(factors, base_resolution=base_resolution)


def product_of_circles_on_spheres(theta1: float, theta2: float,
                                  base_resolution: int = 256) -> ProductManifold:
    """Product of latitude circles on S^2 x S^2 in R^6."""
    return ProductManifold([latitude_circle(theta1), latitude_circle(theta2)],
                           base_resolution=base_resolution,
                           name=f"circles_on_spheres({theta1},{theta2})")


def graph_surface(a: np.ndarray, box=((-1.0, 1.0), (-1.0, 1.0)),
                  base_resolution: int = 128) -> ParamManifold:
    """The linear graph surface t -> (t, A t) in R^2 x R^2."""
    a = np.asarray(a, dtype=float).reshape(2, 2)

    def imm(ts):
        ts = np.atleast_2d(ts)
        return np.concatenate([ts, ts @ a.T], axis=1)

    def diff(ts):
        ts = np.atleast_2d(ts)
        d = np.vstack([np.eye(2), a])
        return np.broadcast_to(d, (ts.shape[0], 4, 2)).copy()

    chart = Chart(box=np.asarray(box, dtype=float), immersion=imm, differential=diff)
    return ParamManifold([chart], ambient_dim=4, base_resolution=base_resolution,
                         name="graph_surface")


def flat_box(box, periodic=None, base_resolution: int = 256, name: str = "") -> ParamManifold:
    """A parameter box with the identity immersion (chart coordinates)."""
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    k = box.shape[0]
    periodic = tuple(periodic) if periodic is not None else tuple(True for _ in range(k))

    def imm(ts):
        return np.atleast_2d(np.asarray(ts, dtype=float))

    def diff(ts):
        ts = np.atleast_2d(ts)
        return np.broadcast_to(np.eye(k), (ts.shape[0], k, k)).copy()

    chart = Chart(box=box, immersion=imm, differential=diff, periodic=periodic)
    return ParamManifold([chart], ambient_dim=k, base_resolution=base_resolution, name=name)
