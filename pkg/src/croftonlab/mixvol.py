"""Mixed volumes of ellipsoids and the density d_m.

Exact routes in dimensions 1 and 2, a calibrated Gaussian-determinant
estimator in general dimension, and an independent brute-force oracle
(Monte Carlo membership sampling + volume-polynomial fit).  The density
d_m(A_1, ..., A_m) on a frame is the mixed m-volume of the bodies
projected onto the span of the frame, in frame-normalized coordinates.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from .geomcore import ContractViolation, Ellipsoid, Frame, QuadForm, restrict_form

__all__ = [
    "MixedVolumeResult",
    "OracleFailure",
    "unit_ball_volume",
    "gaussian_absdet_mean",
    "ellipsoid_volume",
    "mixed_area_2d",
    "mixed_area_2d_batch",
    "mixed_volume_gauss",
    "mixed_volume_oracle",
    "mixed_volume",
    "eval_d_m",
]

_RANK_TOL = 1e-12


class OracleFailure(RuntimeError):
    """The brute-force oracle could not produce a trustworthy value."""


@dataclass(frozen=True)
class MixedVolumeResult:
    value: float
    stderr: float
    method: str  # exact1d | exact2d | gauss_estimator | oracle_polyfit

    def __post_init__(self):
        if self.method in ("exact1d", "exact2d") and self.stderr != 0.0:
            raise ValueError("exact routes must report stderr 0")


def unit_ball_volume(k: int) -> float:
    """Volume of the unit ball in R^k (v_0 = 1)."""
    return float(np.pi ** (k / 2.0) / gamma(k / 2.0 + 1.0))


def gaussian_absdet_mean(m: int) -> float:
    """E|det G| for an m x m matrix of iid standard normals.

    Via the QR decomposition |det G| is a product of independent chi
    variables with m, m-1, ..., 1 degrees of freedom; the chi means
    telescope to 2^(m/2) * Gamma((m+1)/2) / sqrt(pi).
    """
    return float(2.0 ** (m / 2.0) * gamma((m + 1) / 2.0) / math.sqrt(math.pi))


def ellipsoid_volume(q: QuadForm) -> float:
    """Volume v_m * sqrt(det Q) of the body with support function sqrt(u^T Q u)."""
    m = q.dim
    det = max(np.linalg.det(q.matrix), 0.0)
    return unit_ball_volume(m) * float(np.sqrt(det))


def _principal_axis(mat: np.ndarray) -> np.ndarray:
    """For a rank-1 PSD 2x2 matrix a a^T, recover a (up to sign)."""
    w, v = np.linalg.eigh(mat)
    return v[:, -1] * np.sqrt(max(w[-1], 0.0))


def mixed_area_2d_batch(q1: np.ndarray, q2: np.ndarray, n_theta: int = 4096) -> np.ndarray:
    """Mixed areas V(E(Q1_i), E(Q2_i)) for stacks of 2x2 PSD matrices.

    Normalization: Area(K + L) = Area(K) + 2 V(K, L) + Area(L).

    Full-rank pairs go through the support-function quadrature
    A = 1/2 * int(h^2 - h'^2) dtheta on a composite-trapezoid grid; the
    integrand is analytic and periodic there, so the grid converges
    spectrally.  Pairs involving a segment or the point body are handled
    in closed form (a segment sweeps the other body), which keeps
    degenerate ellipsoids exact.
    """
    q1 = np.asarray(q1, dtype=float).reshape(-1, 2, 2)
    q2 = np.asarray(q2, dtype=float).reshape(-1, 2, 2)
    if q1.shape != q2.shape:
        raise ContractViolation("matrix stacks must have equal shapes")
    n = q1.shape[0]
    out = np.zeros(n)

    w1 = np.clip(np.linalg.eigvalsh(q1), 0.0, None)
    w2 = np.clip(np.linalg.eigvalsh(q2), 0.0, None)
    scale1 = np.maximum(w1[:, 1], 1e-300)
    scale2 = np.maximum(w2[:, 1], 1e-300)
    rank1 = (w1[:, 1] > 0).astype(int) + (w1[:, 0] > _RANK_TOL * scale1).astype(int)
    rank2 = (w2[:, 1] > 0).astype(int) + (w2[:, 0] > _RANK_TOL * scale2).astype(int)

    # Point body in either slot: mixed area 0 (already zeroed).
    both_full = (rank1 == 2) & (rank2 == 2)
    seg_any = (rank1 >= 1) & (rank2 >= 1) & ~both_full

    for i in np.nonzero(seg_any)[0]:
        if rank1[i] == 1:
            a = _principal_axis(q1[i])
            other = q2[i]
        else:
            a = _principal_axis(q2[i])
            other = q1[i]
        nrm = np.linalg.norm(a)
        perp = np.array([-a[1], a[0]]) / nrm
        # Segment [-a, a] sweeps the other body: V = |a| * h_other(perp-hat) * 2 / ... =
        # 1/2 * (length 2|a|) * (width 2 h(perp)) / 2 = 2 |a| h(perp).
        out[i] = 2.0 * nrm * np.sqrt(max(perp @ other @ perp, 0.0))

    idx = np.nonzero(both_full)[0]
    if idx.size:
        theta = np.arange(n_theta) * (2.0 * np.pi / n_theta)
        u = np.stack([np.cos(theta), np.sin(theta)], axis=1)       # (T, 2)
        du = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
        det1 = w1[idx, 0] * w1[idx, 1]
        det2 = w2[idx, 0] * w2[idx, 1]
        # Chunk over items to bound the (items x angles) workspace.
        chunk = max(1, int(4e6 // n_theta))
        for s in range(0, idx.size, chunk):
            sub = idx[s:s + chunk]
            a1 = q1[sub]
            a2 = q2[sub]
            h1 = np.sqrt(np.einsum("ti,nij,tj->nt", u, a1, u))
            h2 = np.sqrt(np.einsum("ti,nij,tj->nt", u, a2, u))
            h1p = np.einsum("ti,nij,tj->nt", u, a1, du) / h1
            h2p = np.einsum("ti,nij,tj->nt", u, a2, du) / h2
            h = h1 + h2
            hp = h1p + h2p
            area_sum = 0.5 * (h * h - hp * hp).mean(axis=1) * 2.0 * np.pi
            out[sub] = 0.5 * (
                area_sum
                - np.pi * np.sqrt(det1[s:s + chunk])
                - np.pi * np.sqrt(det2[s:s + chunk])
            )
    return out


def mixed_area_2d(q1: QuadForm, q2: QuadForm, n_theta: int = 4096) -> MixedVolumeResult:
    """Mixed area V(E1, E2) of two (possibly degenerate) ellipses."""
    if q1.dim != 2 or q2.dim != 2:
        raise ContractViolation("mixed_area_2d requires 2x2 forms")
    if n_theta < 16:
        raise ContractViolation("n_theta too small")
    v = mixed_area_2d_batch(q1.matrix[None], q2.matrix[None], n_theta=n_theta)[0]
    return MixedVolumeResult(value=float(max(v, 0.0)), stderr=0.0, method="exact2d")


def _gauss_chunks(n_samples: int, chunk: int = 65536):
    start = 0
    index = 0
    while start < n_samples:
        yield index, min(chunk, n_samples - start)
        start += chunk
        index += 1


def mixed_volume_gauss(qs, n_samples: int = 200_000, seed: int = 0) -> MixedVolumeResult:
    """Mixed volume of m ellipsoids in R^m via Gaussian determinants.

    With X_i centered Gaussian of covariance Q_i, E|det(X_1, ..., X_m)| is
    proportional to V(E_1, ..., E_m); the constant c_m is calibrated from
    the unit-ball identity V(B, ..., B) = v_m rather than transcribed.
    Deterministic for a fixed seed, independent of chunking/workers.
    """
    qs = list(qs)
    m = qs[0].dim
    if any(q.dim != m for q in qs) or len(qs) != m:
        raise ContractViolation("need m PSD forms of common dimension m")
    if n_samples < 100:
        raise ContractViolation("n_samples < 100: estimator meaningless")
    factors = np.stack([q.sqrt_factor() for q in qs])  # (m, m, m)
    c_m = unit_ball_volume(m) / gaussian_absdet_mean(m)

    children = np.random.SeedSequence(seed).spawn(sum(1 for _ in _gauss_chunks(n_samples)))
    s1 = s2 = 0.0
    c1 = c2 = 0.0  # Kahan compensations
    for index, size in _gauss_chunks(n_samples):
        rng = np.random.default_rng(children[index])
        z = rng.standard_normal((size, m, m))
        # column i of each sample matrix: factor_i @ z[..., i]
        x = np.einsum("ikl,nli->nki", factors, z)
        d = np.abs(np.linalg.det(x))
        y = float(d.sum()) - c1
        t = s1 + y
        c1 = (t - s1) - y
        s1 = t
        y = float((d * d).sum()) - c2
        t = s2 + y
        c2 = (t - s2) - y
        s2 = t
    mean = s1 / n_samples
    var = max(s2 / n_samples - mean * mean, 0.0) * n_samples / max(n_samples - 1, 1)
    stderr = c_m * math.sqrt(var / n_samples)
    return MixedVolumeResult(value=c_m * mean, stderr=stderr, method="gauss_estimator")


def _sphere_directions(dim: int, count: int) -> np.ndarray:
    """A low-discrepancy set of unit directions (deterministic)."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        t = np.arange(count) * (2.0 * np.pi / count)
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    if dim == 3:
        # Fibonacci sphere
        i = np.arange(count) + 0.5
        phi = np.pi * (1.0 + math.sqrt(5.0)) * i
        z = 1.0 - 2.0 * i / count
        r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    raise ContractViolation("direction sets implemented only for dim <= 3")


def _homogeneous_exponents(m: int):
    """All multi-indices alpha with |alpha| = m in m variables."""
    out = []
    for combo in itertools.combinations_with_replacement(range(m), m):
        alpha = [0] * m
        for j in combo:
            alpha[j] += 1
        out.append(tuple(alpha))
    return sorted(set(out))


def mixed_volume_oracle(
    qs,
    grid_size: int = 4,
    n_membership_samples: int = 8000,
    seed: int = 0,
    n_directions: int = 10_000,
) -> MixedVolumeResult:
    """Ground-truth oracle: fit the volume polynomial of lam_1 E_1 + ... + lam_m E_m.

    Volumes on a grid of lambda are estimated by Monte Carlo membership
    sampling (x lies in the Minkowski sum iff <x,u> <= sum lam_i h_i(u)
    for every direction u of a dense low-discrepancy set); the degree-m
    volume polynomial is fit by least squares and the lam_1...lam_m
    coefficient divided by m! is the mixed volume.  Independent of the
    quadrature and Gaussian routes.
    """
    qs = list(qs)
    m = qs[0].dim
    if len(qs) != m or any(q.dim != m for q in qs):
        raise ContractViolation("need m PSD forms of common dimension m")
    if m > 3:
        raise ContractViolation("oracle supports m <= 3 only")
    if grid_size < m + 1:
        raise ContractViolation("grid_size must be at least m + 1 per axis")

    dirs = _sphere_directions(m, n_directions)                 # (K, m)
    hs = np.stack(
        [np.sqrt(np.clip(np.einsum("ki,ij,kj->k", dirs, q.matrix, dirs), 0.0, None)) for q in qs]
    )                                                          # (m, K)
    half_widths = np.stack([np.sqrt(np.clip(np.diag(q.matrix), 0.0, None)) for q in qs])  # (m, m)

    lam_axis = np.linspace(0.5, 1.5, grid_size)
    combos = np.array(list(itertools.product(lam_axis, repeat=m)))  # (C, m)
    exponents = _homogeneous_exponents(m)
    design = np.stack([np.prod(combos ** np.array(a), axis=1) for a in exponents], axis=1)
    if np.linalg.cond(design) > 1e8:
        raise OracleFailure("volume-polynomial fit is ill-conditioned")

    children = np.random.SeedSequence(seed).spawn(len(combos))
    vols = np.zeros(len(combos))
    variances = np.zeros(len(combos))
    for c, lam in enumerate(combos):
        w = lam @ half_widths                                  # bounding-box half widths
        if np.all(w <= 0.0):
            continue
        w = np.maximum(w, 1e-300)
        box_vol = float(np.prod(2.0 * w))
        rng = np.random.default_rng(children[c])
        x = rng.uniform(-w, w, size=(n_membership_samples, m))
        h_tot = lam @ hs                                       # (K,)
        inside = np.ones(n_membership_samples, dtype=bool)
        chunk = max(1, int(4e6 // n_directions))
        for s in range(0, n_membership_samples, chunk):
            xu = x[s:s + chunk] @ dirs.T
            inside[s:s + chunk] = np.all(xu <= h_tot, axis=1)
        p = inside.mean()
        vols[c] = box_vol * p
        variances[c] = box_vol * box_vol * p * (1.0 - p) / n_membership_samples

    coef, *_ = np.linalg.lstsq(design, vols, rcond=None)
    pinv = np.linalg.pinv(design)
    cov = pinv @ np.diag(variances) @ pinv.T
    target = exponents.index(tuple([1] * m))
    value = coef[target] / math.factorial(m)
    stderr = math.sqrt(max(cov[target, target], 0.0)) / math.factorial(m)
    return MixedVolumeResult(value=float(value), stderr=float(stderr), method="oracle_polyfit")


def mixed_volume(qs, n_samples: int = 200_000, seed: int = 0) -> MixedVolumeResult:
    """Mixed volume of m ellipsoids in R^m, by the best available route.

    Exact in 1D (segment length) and 2D (support quadrature); the
    calibrated Gaussian estimator otherwise.
    """
    qs = list(qs)
    m = qs[0].dim
    if len(qs) != m or any(q.dim != m for q in qs):
        raise ContractViolation("need m PSD forms of common dimension m")
    if m == 1:
        val = 2.0 * math.sqrt(max(qs[0].matrix[0, 0], 0.0))
        return MixedVolumeResult(value=val, stderr=0.0, method="exact1d")
    if m == 2:
        return mixed_area_2d(qs[0], qs[1])
    return mixed_volume_gauss(qs, n_samples=n_samples, seed=seed)


def eval_d_m(ellipsoids, f: Frame, n_samples: int = 200_000, seed: int = 0) -> float:
    """The density d_m(A_1, ..., A_m) evaluated on a frame.

    Restricts each body to the span of the frame (frame-normalized
    coordinates) and takes the mixed m-volume of the projections.  Zero
    on rank-deficient frames.
    """
    bodies = [e if isinstance(e, Ellipsoid) else Ellipsoid(e) for e in ellipsoids]
    m = len(bodies)
    if f.size != m:
        raise ContractViolation(f"{m} bodies but frame of {f.size} vectors")
    if any(b.dim != f.ambient_dim for b in bodies):
        raise ContractViolation("bodies and frame must share the ambient dimension")
    if f.rank() < m:
        return 0.0
    restricted = [restrict_form(b.Q, f) for b in bodies]
    return float(mixed_volume(restricted, n_samples=n_samples, seed=seed).value)
