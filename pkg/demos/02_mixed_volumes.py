"""Mixed volumes of ellipsoids by three independent routes.

1. exact 2D support-function quadrature,
2. the calibrated Gaussian determinant estimator V = c_m E|det(X_1..X_m)|,
3. a brute-force oracle that samples Minkowski-sum volumes on a lambda grid
   and reads the mixed volume off the multilinear polynomial.

The routes share no code path, so their agreement is a strong check.
"""
import math

import numpy as np
from scipy.special import ellipe

from croftonlab import (
    QuadForm,
    ellipsoid_volume,
    mixed_area_2d,
    mixed_volume_gauss,
    mixed_volume_oracle,
)

# V(ellipse(2,1), unit disk): the classical answer is half the perimeter
q_ellipse = QuadForm.diagonal([4.0, 1.0])
q_disk = QuadForm.identity(2)
perimeter = 4.0 * 2.0 * ellipe(1.0 - 0.25)  # complete elliptic integral
print(f"ellipse(2,1) perimeter       : {perimeter:.10f}")
print(f"V(ellipse, disk) = Per/2     : {perimeter / 2:.10f}")
print(f"exact quadrature             : {mixed_area_2d(q_ellipse, q_disk).value:.10f}")

g = mixed_volume_gauss([q_ellipse, q_disk], n_samples=400_000, seed=0)
print(f"gaussian estimator           : {g.value:.6f} +- {g.stderr:.6f}")

o = mixed_volume_oracle([q_ellipse, q_disk], n_membership_samples=40_000, seed=0)
print(f"minkowski-grid oracle        : {o.value:.6f} +- {o.stderr:.6f}")

# degenerate bodies are handled in closed form
a, b = np.array([1.0, 0.0]), np.array([1.0, 2.0])
seg_a, seg_b = QuadForm(np.outer(a, a)), QuadForm(np.outer(b, b))
print(f"\ntwo segments, V = 2 |a x b|  : {mixed_area_2d(seg_a, seg_b).value:.10f}")
print(f"parallel segments            : {mixed_area_2d(seg_a, seg_a).value:.2e}")

# 3D: the diagonal reduces to the volume, V(E, E, E) = vol(E)
rng = np.random.default_rng(1)
m3 = rng.standard_normal((3, 3))
q3 = QuadForm(m3 @ m3.T)
g3 = mixed_volume_gauss([q3, q3, q3], n_samples=400_000, seed=2)
print(f"\n3D diagonal vs volume        : {g3.value:.5f} +- {g3.stderr:.5f} "
      f"(exact {ellipsoid_volume(q3):.5f})")
