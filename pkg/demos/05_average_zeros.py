"""Average zero counts of random function systems (smooth BKK).

A random function from a finite-dimensional space V on a manifold X,
f = <theta(x), u> - c with a random affine functional, has an average
number of zeros given by a Crofton-type density integral of the pullback
metric h = d theta^T d theta.  For trigonometric polynomials on the circle
the answer is the classical 2 pi k; on product domains with separable
spaces the joint count factorizes.
"""
import math

from croftonlab import (
    build_eval_map,
    circle_manifold,
    empirical_zeros,
    fourier_space,
    predict_zeros,
    torus_manifold,
)

x = circle_manifold()
for k in (1, 2, 3):
    em = build_eval_map(fourier_space(k), x)
    pred = predict_zeros([em])
    rep = empirical_zeros([em], n_samples=20_000, seed=k, prediction=pred)
    print(f"fourier({k}) on S^1 : prediction {pred:.10f} (2 pi k = "
          f"{2 * math.pi * k:.10f}), empirical {rep.estimate:.6f} "
          f"+- {rep.stderr:.1e}")

# separable system on the torus: averages multiply
t2 = torus_manifold()
m1 = build_eval_map(fourier_space(1, axis=0, total_axes=2), t2)
m2 = build_eval_map(fourier_space(2, axis=1, total_axes=2), t2)
pred = predict_zeros([m1, m2])
rep = empirical_zeros([m1, m2], n_samples=10_000, seed=9, prediction=pred)
print(f"\ntorus joint system : prediction {pred:.8f} "
      f"(product 8 pi^2 = {8 * math.pi ** 2:.8f})")
print(f"empirical          : {rep.estimate:.4f} +- {rep.stderr:.4f}")
