"""Crofton on the round sphere and on products of spheres.

On S^2 the Crofton data is the family of great circles under the Haar
probability measure; the density is constant, (1/pi) times arc length, so
the expected crossing count of a curve of length L is L / pi.  On
S^2 x S^2 the product of two latitude circles is measured by pairs of
independent great circles, with expected count (1/pi^2) len1 len2.
"""
import math

from croftonlab import (
    estimate_crofton,
    great_circle,
    latitude_circle,
    predict_product,
    product_data,
    product_of_circles_on_spheres,
    sphere_data,
)

# a great circle is crossed exactly twice by almost every other great circle
rep = estimate_crofton(great_circle(), sphere_data(3), n_samples=5_000, seed=0)
print(f"great circle    : {rep.estimate} +- {rep.stderr}  (length/pi = 2)")

# latitude circle at polar angle pi/6: length 2 pi sin(pi/6) = pi, average 1
rep = estimate_crofton(latitude_circle(math.pi / 6), sphere_data(3),
                       n_samples=50_000, seed=1)
print(f"latitude pi/6   : {rep.estimate:.5f} +- {rep.stderr:.5f}  "
      f"(prediction {rep.prediction:.10f})")

# product of two latitude circles on S^2 x S^2
t1, t2 = math.pi / 3, math.pi / 4
m = product_of_circles_on_spheres(t1, t2)
datas = [sphere_data(3), sphere_data(3)]
pred = predict_product(m, datas)
expected = (2 * math.pi * math.sin(t1)) * (2 * math.pi * math.sin(t2)) / math.pi ** 2
print(f"\nS^2 x S^2 prediction : {pred:.10f}  (closed form {expected:.10f})")

rep = estimate_crofton(m, product_data(datas), n_samples=20_000, seed=2,
                       prediction=pred)
print(f"joint estimate       : {rep.estimate:.5f} +- {rep.stderr:.5f}")
print(f"deviation            : "
      f"{abs(rep.estimate - pred) / rep.stderr:.2f} stderr")
