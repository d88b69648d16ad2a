"""Cauchy-Crofton for a circle in the plane.

The classical formula: with the hyperplane (line) measure normalized so
that a unit segment is hit with measure 1, the average number of times a
random line meets a curve, times the mass of the restricted measure,
equals the curve's length.  For the unit circle every line that meets the
enclosing disk crosses the circle exactly twice, so the Monte Carlo
estimate is exact up to round-off -- a good first sanity check.
"""
import math

from croftonlab import circle, estimate_crofton, euclid_data, kappa

print("line measure normalization: kappa_2 =", kappa(2), "(= 2/pi)")

m = circle(1.0)
data = euclid_data(2, big_r=1.0)
print(f"mass of lines meeting the unit disk: {data.mass:.6f} (= pi)")

rep = estimate_crofton(m, data, n_samples=20_000, seed=0)
print(f"estimate   : {rep.estimate:.12f}  +- {rep.stderr:.2e}")
print(f"prediction : {rep.prediction:.12f}  (length 2 pi = {2 * math.pi:.12f})")

# with a larger reference ball some lines miss the circle; the estimate
# acquires genuine sampling noise but stays unbiased
data2 = euclid_data(2, big_r=2.0)
rep2 = estimate_crofton(m, data2, n_samples=100_000, seed=1)
print(f"\nR = 2      : {rep2.estimate:.6f} +- {rep2.stderr:.6f}")
print(f"deviation  : {abs(rep2.estimate - 2 * math.pi) / rep2.stderr:.2f} stderr")
