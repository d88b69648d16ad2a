"""Crofton data as executable objects.

Samplers for random affine hyperplanes, great subspheres and products;
intersection counters against parametrized manifolds; Monte Carlo
estimators of the average intersection count with confidence intervals;
and closed-form predictions for products.

The translation-invariant hyperplane measure on R^d is normalized so the
set of hyperplanes meeting a unit segment has measure 1; restricted to
hyperplanes meeting the ball of radius R it becomes sampleable with total
mass 2R / kappa_d, kappa_d the mean of |<u, e>| over the unit sphere.
"""
from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gamma

from .geomcore import ContractViolation, QuadForm
from .densities import (
    EllipsoidDensity,
    FinslerField,
    ParamManifold,
    ProductManifold,
    integrate_density,
    mixed_riemannian_density,
    vol1_density,
)
from .mixvol import unit_ball_volume

__all__ = [
    "DegenerateSample",
    "CountingFailure",
    "UnsupportedPrediction",
    "EstimateReport",
    "CroftonData",
    "kappa",
    "kappa_mc",
    "sample_euclid_hyperplane",
    "sample_great_subsphere",
    "count_curve_hyperplane",
    "count_surface_system",
    "euclid_data",
    "sphere_data",
    "product_data",
    "estimate_crofton",
    "predict_product",
]

_TANGENCY_EPS = 1e-9
_CHUNK = 4096


class DegenerateSample(RuntimeError):
    """Near-tangent sample (a measure-zero event); the caller resamples."""


class CountingFailure(RuntimeError):
    """Root counting did not stabilize under grid refinement."""


class UnsupportedPrediction(RuntimeError):
    """No closed-form Crofton density is known for this data."""


def kappa(d: int) -> float:
    """Mean of |<u, e>| over the unit sphere S^{d-1}: Gamma(d/2) / (sqrt(pi) Gamma((d+1)/2))."""
    return float(gamma(d / 2.0) / (math.sqrt(math.pi) * gamma((d + 1) / 2.0)))


def kappa_mc(d: int, n_samples: int = 200_000, seed: int = 1234) -> tuple:
    """Monte Carlo estimate of kappa_d with its standard error (validation oracle)."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n_samples, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    a = np.abs(u[:, 0])
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(n_samples))


@functools.lru_cache(maxsize=None)
def _validate_kappa(d: int) -> None:
    est, err = kappa_mc(d, n_samples=100_000)
    if abs(est - kappa(d)) > 6.0 * err:
        raise RuntimeError(f"kappa({d}) closed form disagrees with Monte Carlo oracle")


def sample_euclid_hyperplane(d: int, big_r: float, rng: np.random.Generator):
    """One hyperplane <x, u> = c from the ball-restricted invariant measure."""
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    c = rng.uniform(-big_r, big_r)
    return u, c


def sample_great_subsphere(d: int, rng: np.random.Generator) -> np.ndarray:
    """Unit normal of a great subsphere of S^{d-1}, uniform on the sphere."""
    if d < 2:
        raise ContractViolation("spheres require d >= 2")
    u = rng.standard_normal(d)
    return u / np.linalg.norm(u)


@dataclass
class EstimateReport:
    estimate: float
    stderr: float
    n_samples: int
    seed: int
    degenerate_events: int = 0
    prediction: Optional[float] = None
    prediction_error: Optional[float] = None
    flagged: bool = False

    def __post_init__(self):
        if self.n_samples > 0 and self.degenerate_events / self.n_samples >= 1e-3:
            self.flagged = True


@dataclass
class CroftonData:
    """A sampler of parameters with a restricted-measure mass, a counter,
    and (when known) a closed-form Crofton density."""

    kind: str                                # euclid | sphere | product
    codim: int                               # total codimension n
    mass: float
    sample_batch: Callable                   # (rng, size) -> parameter arrays
    count_batch: Callable                    # (M, params) -> (counts, degenerate mask)
    density: Optional[EllipsoidDensity]      # closed-form Crofton density on Y
    density_constant: Optional[float] = None  # the C factor of the classical formula
    metric_field: Optional[FinslerField] = None  # the lifted metric g of the factor
    factors: tuple = ()
    big_r: float = 0.0

    def validate_manifold(self, m: ParamManifold) -> None:
        if self.kind == "euclid" and m.bounding_radius() > self.big_r * (1.0 + 1e-9):
            raise ContractViolation(
                f"R={self.big_r} is smaller than the manifold bounding radius "
                f"{m.bounding_radius():.6g}"
            )
        if self.kind == "product" and isinstance(m, ProductManifold):
            for f, fm in zip(self.factors, m.factors):
                f.validate_manifold(fm)


# ---------------------------------------------------------------------------
# Curve / hyperplane counting
# ---------------------------------------------------------------------------


def _sign_change_count(s: np.ndarray, closed: bool) -> int:
    if closed:
        s = np.concatenate([s, s[:1]])
    return int(np.count_nonzero(np.signbit(s[:-1]) != np.signbit(s[1:])))


def _near_tangency(s: np.ndarray, scale: float, closed: bool = False) -> bool:
    small = np.abs(s) < _TANGENCY_EPS * max(scale, 1.0)
    if not small.any():
        return False
    # only grid extrema of s matter: an ordinary crossing through ~0 is fine
    extremum = np.zeros_like(small)
    if closed:
        d = np.diff(np.concatenate([s[-1:], s, s[:1]]))
        extremum[:] = d[:-1] * d[1:] <= 0.0
    else:
        d = np.diff(s)
        extremum[1:-1] = d[:-1] * d[1:] <= 0.0
    return bool((small & extremum).any())


def _refine_bisect(f: Callable[[float], float], a: float, b: float,
                   tol: float = 1e-12) -> float:
    fa = f(a)
    for _ in range(200):
        mid = 0.5 * (a + b)
        if b - a < tol:
            return mid
        fm = f(mid)
        if (fa < 0.0) == (fm < 0.0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def count_curve_hyperplane(curve: ParamManifold, u, c: float,
                           grid: int = 4096, max_grid: int = 1 << 17) -> int:
    """Number of intersections of a curve with the hyperplane <x, u> = c.

    Counts sign changes of s(t) = <x(t), u> - c on a dense grid, each
    crossing refined by bisection; the count must stabilize under two
    successive grid doublings.  Near-tangencies raise DegenerateSample so
    the caller can resample the hyperplane.
    """
    if curve.param_dim != 1:
        raise ContractViolation("count_curve_hyperplane requires a curve")
    u = np.asarray(u, dtype=float)
    closed = curve.is_closed_curve()
    chart = curve.charts[0]
    lo, hi = chart.box[0]

    def s_at(t: float) -> float:
        return float(chart.immersion(np.array([[t]]))[0] @ u - c)

    counts = []
    n = max(grid // 4, 64)
    scale = None
    while n <= max_grid:
        pts = curve.curve_points(n)
        s = pts @ u - c
        if scale is None:
            scale = float(np.max(np.abs(pts))) or 1.0
        if _near_tangency(s, scale, closed):
            raise DegenerateSample("near-tangent hyperplane")
        counts.append(_sign_change_count(s, closed))
        if len(counts) >= 3 and counts[-1] == counts[-2] == counts[-3]:
            break
        n *= 2
    else:
        raise CountingFailure("sign-change count did not stabilize under refinement")

    count = counts[-1]
    if not closed and (abs(s_at(lo)) < _TANGENCY_EPS * scale
                       or abs(s_at(hi)) < _TANGENCY_EPS * scale):
        raise DegenerateSample("curve endpoint on the hyperplane")
    # refine each bracket (root positions; the count is already stable)
    ts = lo + (hi - lo) * np.arange(n) / n if closed else np.linspace(lo, hi, n + 1)
    pts = curve.curve_points(n)
    s = pts @ u - c
    s_ext = np.concatenate([s, s[:1]]) if closed else s
    t_ext = np.concatenate([ts, [hi]]) if closed else ts
    for i in np.nonzero(np.signbit(s_ext[:-1]) != np.signbit(s_ext[1:]))[0]:
        _refine_bisect(s_at, float(t_ext[i]), float(t_ext[i + 1]))
    return count


def _count_hyperplane_batch(curve: ParamManifold, us: np.ndarray, cs: np.ndarray,
                            grid: int = 2048):
    """Vectorized intersection counts for a batch of hyperplanes.

    Counts on strided sub-grids (grid/4, grid/2, grid); unstable or
    near-tangent columns fall back to the scalar counter / resampling.
    """
    closed = curve.is_closed_curve()
    pts = curve.curve_points(grid)                       # (grid[, +1], d)
    scale = float(np.max(np.abs(pts))) or 1.0
    s = pts @ us.T - cs[None, :]                         # (grid, B)

    def counts_at(stride: int) -> np.ndarray:
        sub = s[::stride]
        if closed:
            sub = np.vstack([sub, sub[:1]])
        return np.count_nonzero(np.signbit(sub[:-1]) != np.signbit(sub[1:]), axis=0)

    c1, c2, c4 = counts_at(4), counts_at(2), counts_at(1)
    stable = (c1 == c2) & (c2 == c4)
    degenerate = np.min(np.abs(s), axis=0) < _TANGENCY_EPS * scale
    counts = c4.astype(np.int64)
    for j in np.nonzero(~stable & ~degenerate)[0]:
        try:
            counts[j] = count_curve_hyperplane(curve, us[j], float(cs[j]), grid=2 * grid)
        except DegenerateSample:
            degenerate[j] = True
    return counts, degenerate


# ---------------------------------------------------------------------------
# Two-equation systems on surfaces
# ---------------------------------------------------------------------------


def _segment_intersection(p1, p2, p3, p4):
    """Intersection point of segments p1-p2 and p3-p4, or None."""
    d1 = p2 - p1
    d2 = p4 - p3
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) < 1e-30:
        return None
    rhs = p3 - p1
    t = (rhs[0] * d2[1] - rhs[1] * d2[0]) / denom
    srel = (rhs[0] * d1[1] - rhs[1] * d1[0]) / denom
    if -1e-9 <= t <= 1.0 + 1e-9 and -1e-9 <= srel <= 1.0 + 1e-9:
        return p1 + t * d1
    return None


def _contour_segments(values: np.ndarray, box: np.ndarray, grid: int):
    from skimage import measure

    lo = box[:, 0]
    span = box[:, 1] - box[:, 0]
    segs = []
    for contour in measure.find_contours(values, 0.0):
        pts = lo + contour / grid * span
        for i in range(len(pts) - 1):
            segs.append((pts[i], pts[i + 1]))
    return segs


def _count_zeros_once(equations, gradients, box, grid: int, periodic) -> int:
    k = box.shape[0]
    axes = [np.linspace(box[j, 0], box[j, 1], grid + 1) for j in range(k)]
    mesh = np.meshgrid(*axes, indexing="ij")
    ts = np.stack([m.ravel() for m in mesh], axis=1)
    f1 = equations[0](ts).reshape(grid + 1, grid + 1)
    f2 = equations[1](ts).reshape(grid + 1, grid + 1)
    segs1 = _contour_segments(f1, box, grid)
    segs2 = _contour_segments(f2, box, grid)
    if not segs1 or not segs2:
        return 0

    # bucket segments of the second family by grid cell for candidate search
    span = box[:, 1] - box[:, 0]
    cell = span / grid

    def cells_of(seg):
        p, q = seg
        i0 = np.floor((np.minimum(p, q) - box[:, 0]) / cell).astype(int)
        i1 = np.floor((np.maximum(p, q) - box[:, 0]) / cell).astype(int)
        for a in range(max(i0[0], 0), min(i1[0], grid - 1) + 1):
            for b in range(max(i0[1], 0), min(i1[1], grid - 1) + 1):
                yield (a, b)

    buckets: dict = {}
    for idx, seg in enumerate(segs2):
        for key in cells_of(seg):
            buckets.setdefault(key, []).append(idx)

    candidates = []
    for seg in segs1:
        tried = set()
        for key in cells_of(seg):
            for idx in buckets.get(key, ()):
                if idx in tried:
                    continue
                tried.add(idx)
                pt = _segment_intersection(seg[0], seg[1], *segs2[idx])
                if pt is not None:
                    candidates.append(pt)
    if not candidates:
        return 0

    # Newton refinement of each candidate on the 2x2 system
    roots = []
    for pt in candidates:
        t = np.array(pt, dtype=float)
        ok = False
        for _ in range(60):
            f = np.array([equations[0](t[None])[0], equations[1](t[None])[0]])
            if np.max(np.abs(f)) < 1e-10:
                ok = True
                break
            j = np.vstack([gradients[0](t[None])[0], gradients[1](t[None])[0]])
            try:
                step = np.linalg.solve(j, f)
            except np.linalg.LinAlgError:
                break
            t = t - step
            for ax in range(k):
                if periodic[ax]:
                    width = box[ax, 1] - box[ax, 0]
                    t[ax] = box[ax, 0] + (t[ax] - box[ax, 0]) % width
                else:
                    t[ax] = min(max(t[ax], box[ax, 0] - 0.05 * span[ax]),
                                box[ax, 1] + 0.05 * span[ax])
        if not ok:
            raise DegenerateSample("Newton refinement did not converge on a candidate root")
        inside = all(
            periodic[ax] or (box[ax, 0] - 1e-9 * span[ax] <= t[ax] <= box[ax, 1] + 1e-9 * span[ax])
            for ax in range(k)
        )
        if inside:
            roots.append(t)

    # deduplicate (periodic metric on periodic axes)
    dedup_tol = 1e-6 * float(np.max(span))
    unique = []
    for t in roots:
        dup = False
        for s in unique:
            delta = np.abs(t - s)
            for ax in range(k):
                if periodic[ax]:
                    width = box[ax, 1] - box[ax, 0]
                    delta[ax] = min(delta[ax], width - delta[ax])
            if np.max(delta) < dedup_tol:
                dup = True
                break
        if not dup:
            unique.append(t)
    return len(unique)


def count_surface_system(m: ParamManifold, equations, gradients=None,
                         grid: int = 512, max_grid: int = 4096) -> int:
    """Common zeros of two scalar equations on a 2-parameter chart.

    Zero curves are extracted by marching squares, intersection candidates
    come from segment crossings, and each candidate is polished by Newton
    to residual < 1e-10; the count must stabilize under two successive
    grid doublings.
    """
    if m.param_dim != 2 or len(m.charts) != 1:
        raise ContractViolation("count_surface_system requires a single-chart surface")
    chart = m.charts[0]
    if gradients is None:
        gradients = [_fd_gradient(eq, chart.box) for eq in equations]
    n = max(grid // 4, 32)
    counts = []
    while n <= max_grid:
        counts.append(_count_zeros_once(equations, gradients, chart.box, n, chart.periodic))
        if len(counts) >= 3 and counts[-1] == counts[-2] == counts[-3]:
            return counts[-1]
        n *= 2
    raise CountingFailure("zero count did not stabilize under grid refinement")


def _fd_gradient(eq, box):
    steps = 1e-6 * (box[:, 1] - box[:, 0])

    def grad(ts):
        ts = np.atleast_2d(ts)
        cols = []
        for j in range(ts.shape[1]):
            e = np.zeros(ts.shape[1])
            e[j] = steps[j]
            cols.append((eq(ts + e) - eq(ts - e)) / (2.0 * steps[j]))
        return np.stack(cols, axis=1)

    return grad


# ---------------------------------------------------------------------------
# Crofton data constructors
# ---------------------------------------------------------------------------


def euclid_data(d: int, big_r: float) -> CroftonData:
    """Hyperplanes in R^d meeting the ball of radius R, unit-segment normalization."""
    if big_r <= 0.0:
        raise ContractViolation("R must be positive")
    _validate_kappa(d)
    mass = 2.0 * big_r / kappa(d)
    metric = FinslerField.constant(QuadForm.identity(d), name="euclidean")
    density = vol1_density(metric)  # C = 1

    def sample_batch(rng, size):
        u = rng.standard_normal((size, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        c = rng.uniform(-big_r, big_r, size)
        return {"u": u, "c": c}

    def count_batch(m, params):
        return _count_hyperplane_batch(m, params["u"], params["c"])

    return CroftonData(kind="euclid", codim=1, mass=mass, sample_batch=sample_batch,
                       count_batch=count_batch, density=density, density_constant=1.0,
                       metric_field=metric, big_r=big_r)


def sphere_data(d: int) -> CroftonData:
    """Great subspheres of S^{d-1} under the probability Haar measure."""
    if d < 2:
        raise ContractViolation("spheres require d >= 2")
    metric = FinslerField.constant(QuadForm.identity(d), name="round")
    density = EllipsoidDensity((metric,), 0.5 / math.pi)  # C = 1/pi

    def sample_batch(rng, size):
        u = rng.standard_normal((size, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return {"u": u, "c": np.zeros(size)}

    def count_batch(m, params):
        return _count_hyperplane_batch(m, params["u"], params["c"])

    return CroftonData(kind="sphere", codim=1, mass=1.0, sample_batch=sample_batch,
                       count_batch=count_batch, density=density,
                       density_constant=1.0 / math.pi, metric_field=metric)


def _lift_field(metric: FinslerField, offset: int, total_dim: int) -> FinslerField:
    block = np.zeros((total_dim, total_dim))
    block[offset:offset + metric.dim, offset:offset + metric.dim] = \
        metric.matrices(np.zeros((1, metric.dim)))[0]
    return FinslerField.constant(QuadForm(block), name=f"lift({metric.name})")


def product_data(factors: Sequence[CroftonData]) -> CroftonData:
    """Product Crofton data: independent pair sampler, joint-solution counter.

    The closed-form density is the ring product of the lifted factor
    densities.  Factors must carry constant metric fields (Euclidean or
    round-sphere data).
    """
    factors = list(factors)
    if any(f.codim != 1 for f in factors):
        raise ContractViolation("product factors must have codimension 1")
    dims = [f.metric_field.dim for f in factors]
    total = sum(dims)
    offsets = np.cumsum([0] + dims)

    density = None
    for i, f in enumerate(factors):
        lifted = EllipsoidDensity((_lift_field(f.metric_field, int(offsets[i]), total),),
                                  f.density.scalar)
        density = lifted if density is None else density * lifted

    mass = float(np.prod([f.mass for f in factors]))

    def sample_batch(rng, size):
        return {"factors": [f.sample_batch(rng, size) for f in factors]}

    def count_batch(m, params):
        if isinstance(m, ProductManifold) and all(
            fm.param_dim == 1 for fm in m.factors
        ) and len(m.factors) == len(factors):
            counts = None
            degenerate = None
            for f, fm, p in zip(factors, m.factors, params["factors"]):
                c, dg = f.count_batch(fm, p)
                counts = c if counts is None else counts * c
                degenerate = dg if degenerate is None else degenerate | dg
            return counts, degenerate
        if len(factors) != 2:
            raise ContractViolation("generic joint counting supports 2 factors")
        return _count_joint_surface_batch(m, factors, params)

    return CroftonData(kind="product", codim=len(factors), mass=mass,
                       sample_batch=sample_batch, count_batch=count_batch,
                       density=density, factors=tuple(factors))


def _count_joint_surface_batch(m: ParamManifold, factors, params):
    chart = m.charts[0]
    dims = [f.metric_field.dim for f in factors]
    offsets = np.cumsum([0] + dims)
    size = params["factors"][0]["u"].shape[0]
    counts = np.zeros(size, dtype=np.int64)
    degenerate = np.zeros(size, dtype=bool)
    for i in range(size):
        eqs = []
        grads = []
        for j, f in enumerate(factors):
            u = params["factors"][j]["u"][i]
            c = params["factors"][j]["c"][i]
            sl = slice(int(offsets[j]), int(offsets[j + 1]))

            def eq(ts, u=u, c=c, sl=sl):
                return chart.immersion(np.atleast_2d(ts))[:, sl] @ u - c

            def grad(ts, u=u, sl=sl):
                d = chart.differential(np.atleast_2d(ts))
                return np.einsum("d,ndk->nk", u, d[:, sl, :])

            eqs.append(eq)
            grads.append(grad)
        try:
            counts[i] = count_surface_system(m, eqs, grads, grid=128)
        except DegenerateSample:
            degenerate[i] = True
    return counts, degenerate


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------


def estimate_crofton(m: ParamManifold, data: CroftonData, n_samples: int,
                     seed: int = 0, threads: int = 1,
                     prediction: Optional[float] = None,
                     compute_prediction: bool = True,
                     prediction_resolution: Optional[int] = None) -> EstimateReport:
    """Monte Carlo estimate of the average intersection count, with the
    closed-form prediction when the data carries a density.

    Deterministic for fixed (seed, n_samples) regardless of thread count:
    trials are processed in fixed chunks with per-chunk substreams and
    reduced in chunk order with compensated summation.
    """
    if m.param_dim != data.codim:
        raise ContractViolation("manifold dimension must equal the data codimension")
    data.validate_manifold(m)

    n_chunks = (n_samples + _CHUNK - 1) // _CHUNK
    children = np.random.SeedSequence(seed).spawn(n_chunks)

    def run_chunk(i: int):
        size = min(_CHUNK, n_samples - i * _CHUNK)
        rng = np.random.default_rng(children[i])
        params = data.sample_batch(rng, size)
        counts, degenerate = data.count_batch(m, params)
        n_degen = 0
        tries = 0
        while degenerate.any():
            n_degen += int(degenerate.sum())
            tries += 1
            if tries > 64:
                raise CountingFailure("persistent degenerate samples")
            fresh = data.sample_batch(rng, int(degenerate.sum()))
            new_counts, new_degen = data.count_batch(m, fresh)
            idx = np.nonzero(degenerate)[0]
            counts[idx] = new_counts
            mask = np.zeros_like(degenerate)
            mask[idx[new_degen]] = True
            degenerate = mask
        c = counts.astype(float)
        return float(c.sum()), float((c * c).sum()), n_degen

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_chunk, range(n_chunks)))
    else:
        results = [run_chunk(i) for i in range(n_chunks)]

    s1 = s2 = 0.0
    comp1 = comp2 = 0.0
    degen = 0
    for a, b, dg in results:  # fixed chunk order -> bit-identical reductions
        y = a - comp1
        t = s1 + y
        comp1 = (t - s1) - y
        s1 = t
        y = b - comp2
        t = s2 + y
        comp2 = (t - s2) - y
        s2 = t
        degen += dg

    mean = s1 / n_samples
    var = max(s2 / n_samples - mean * mean, 0.0) * n_samples / max(n_samples - 1, 1)
    estimate = data.mass * mean
    stderr = data.mass * math.sqrt(var / n_samples)

    report = EstimateReport(estimate=estimate, stderr=stderr, n_samples=n_samples,
                            seed=seed, degenerate_events=degen)
    if prediction is None and compute_prediction and data.density is not None:
        prediction = integrate_density(m, data.density,
                                       resolution=prediction_resolution).value
    if prediction is not None:
        report.prediction = float(prediction)
        report.prediction_error = abs(estimate - prediction)
    return report


def predict_product(m: ParamManifold, datas: Sequence[CroftonData],
                    resolution: Optional[int] = None, rel_tol: float = 1e-6) -> float:
    """Closed-form prediction for product data, computed two ways.

    Route 1 integrates the ring product of the lifted factor densities;
    route 2 uses the explicit constant C_1...C_m n! v_n / prod(n_i! v_{n_i})
    times the mixed Riemannian volume of M under the lifted metrics.  The
    routes must agree within quadrature tolerance.
    """
    datas = list(datas)
    for d in datas:
        if d.density is None or d.metric_field is None or d.density_constant is None:
            raise UnsupportedPrediction("factor without a closed-form Crofton density")
    dims = [d.metric_field.dim for d in datas]
    total = sum(dims)
    offsets = np.cumsum([0] + dims)
    n = len(datas)  # all factors have codimension 1 here

    fields = [_lift_field(d.metric_field, int(offsets[i]), total)
              for i, d in enumerate(datas)]

    ring = None
    for d, fld in zip(datas, fields):
        factor_density = EllipsoidDensity((fld,), d.density.scalar)
        ring = factor_density if ring is None else ring * factor_density
    route1 = integrate_density(m, ring, resolution=resolution).value

    c_prod = float(np.prod([d.density_constant for d in datas]))
    constant = c_prod * math.factorial(n) * unit_ball_volume(n) / (
        math.factorial(1) * unit_ball_volume(1)) ** n
    mixed_vol = integrate_density(m, mixed_riemannian_density(fields),
                                  resolution=resolution).value
    route2 = constant * mixed_vol

    scale = max(abs(route1), abs(route2), 1e-300)
    if abs(route1 - route2) > rel_tol * scale:
        raise RuntimeError(
            f"product prediction routes disagree: {route1!r} vs {route2!r}"
        )
    return route1
