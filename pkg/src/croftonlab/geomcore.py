"""Small-dimension exact linear algebra: frames, PSD quadratic forms,
Gram volumes, ellipsoids and their support functions.

All geometry lives in explicit chart coordinates; tangent and cotangent
spaces are identified by the chart basis.  Every type here is immutable
after construction and safe to share across workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ContractViolation",
    "QuadForm",
    "Ellipsoid",
    "Frame",
    "gram_volume",
    "support",
    "restrict_form",
    "ellipsoid_of_form",
]

# Relative eigenvalue floor: pullback metrics are PSD in exact arithmetic
# but not in floating point, so slightly negative eigenvalues are clamped.
_PSD_CLAMP_REL = 1e-10
_SYM_RTOL = 1e-12


class ContractViolation(ValueError):
    """A precondition (dimension match, symmetry, PSD-ness) was violated."""


def _check_vector(u, dim: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (dim,):
        raise ContractViolation(f"expected a vector of dimension {dim}, got shape {u.shape}")
    return u


@dataclass(frozen=True)
class QuadForm:
    """A symmetric positive-semidefinite bilinear form, stored densely.

    Construction symmetrizes and clamps round-off-negative eigenvalues to
    zero; genuinely negative spectra are rejected.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ContractViolation(f"quadratic form matrix must be square, got shape {m.shape}")
        scale = np.max(np.abs(m)) or 1.0
        if np.max(np.abs(m - m.T)) > _SYM_RTOL * scale:
            raise ContractViolation("quadratic form matrix is not symmetric")
        m = 0.5 * (m + m.T)
        w, v = np.linalg.eigh(m)
        wmax = max(w[-1], 0.0)
        if w[0] < -_PSD_CLAMP_REL * max(wmax, 1e-300):
            raise ContractViolation(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")
        if w[0] < 0.0:
            w = np.clip(w, 0.0, None)
            m = (v * w) @ v.T
            m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, u, v=None) -> float:
        """Evaluate the bilinear form g(u, v); quadratic g(u, u) if v is None."""
        u = _check_vector(u, self.dim)
        v = u if v is None else _check_vector(v, self.dim)
        return float(u @ self.matrix @ v)

    def eigenvalues(self) -> np.ndarray:
        return np.clip(np.linalg.eigvalsh(self.matrix), 0.0, None)

    def rank(self, rel_tol: float = 1e-12) -> int:
        w = self.eigenvalues()
        if w[-1] <= 0.0:
            return 0
        return int(np.sum(w > rel_tol * w[-1]))

    def sqrt_factor(self) -> np.ndarray:
        """A matrix A with A @ A.T equal to the form's matrix."""
        w, v = np.linalg.eigh(self.matrix)
        return v * np.sqrt(np.clip(w, 0.0, None))

    @staticmethod
    def identity(dim: int) -> "QuadForm":
        return QuadForm(np.eye(dim))

    @staticmethod
    def zero(dim: int) -> "QuadForm":
        return QuadForm(np.zeros((dim, dim)))

    @staticmethod
    def diagonal(entries) -> "QuadForm":
        return QuadForm(np.diag(np.asarray(entries, dtype=float)))


@dataclass(frozen=True)
class Ellipsoid:
    """Centrally symmetric convex body with support function u -> sqrt(u^T Q u).

    Q = 0 gives the point body {0}; rank-deficient Q gives a degenerate
    ellipsoid (segment, flat disk, ...).
    """

    Q: QuadForm

    @property
    def dim(self) -> int:
        return self.Q.dim

    def support(self, u) -> float:
        u = _check_vector(u, self.dim)
        return float(np.sqrt(max(u @ self.Q.matrix @ u, 0.0)))

    @staticmethod
    def unit_ball(dim: int) -> "Ellipsoid":
        return Ellipsoid(QuadForm.identity(dim))


@dataclass(frozen=True)
class Frame:
    """An ordered tuple of k vectors in R^d, representing xi_1 ^ ... ^ xi_k.

    Rank-deficient frames are legal; densities evaluate to 0 on them.
    """

    vectors: np.ndarray  # shape (k, d), one vector per row

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        if v.ndim != 2:
            raise ContractViolation(f"frame vectors must form a 2-d array, got shape {v.shape}")
        if v.shape[0] > v.shape[1]:
            raise ContractViolation(
                f"frame has {v.shape[0]} vectors in dimension {v.shape[1]}; k must not exceed d"
            )
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        """The d x k matrix with the frame vectors as columns."""
        return self.vectors.T

    def rank(self, rel_tol: float = 1e-12) -> int:
        s = np.linalg.svd(self.vectors, compute_uv=False)
        if s.size == 0 or s[0] <= 0.0:
            return 0
        return int(np.sum(s > rel_tol * s[0]))


def gram_volume(g: QuadForm, f: Frame) -> float:
    """The k-dimensional g-volume of the parallelotope spanned by the frame.

    Equals sqrt(det M) with M_ij = g(xi_i, xi_j), i.e. the Euclidean
    k-volume of the image parallelotope in the quotient by Ker g.  Zero
    for g-dependent frames.
    """
    if f.ambient_dim != g.dim:
        raise ContractViolation(f"frame dimension {f.ambient_dim} != form dimension {g.dim}")
    b = f.matrix
    m = b.T @ g.matrix @ b
    det = np.linalg.det(m)
    return float(np.sqrt(max(det, 0.0)))


def support(e: Ellipsoid, u) -> float:
    """Support function of the ellipsoid: sqrt(u^T Q u)."""
    return e.support(u)


def restrict_form(q: QuadForm, f: Frame) -> QuadForm:
    """The form B^T Q B in frame coordinates (B has the frame vectors as columns).

    The ellipsoid of the returned form is the projection of Ellipsoid(Q)
    onto the span of the frame, expressed in coordinates where the frame
    vectors are the standard basis, so the frame parallelotope has volume 1.
    """
    if f.ambient_dim != q.dim:
        raise ContractViolation(f"frame dimension {f.ambient_dim} != form dimension {q.dim}")
    b = f.matrix
    return QuadForm(b.T @ q.matrix @ b)


def ellipsoid_of_form(g: QuadForm) -> Ellipsoid:
    """The body with support function sqrt(g), in chart-identified coordinates."""
    return Ellipsoid(g)
