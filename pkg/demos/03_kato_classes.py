"""Which weights dist(x, boundary)^(-alpha) dx are Kato measures?

The Kato modulus K(r) is the largest Green potential of the measure cut to
a ball of radius r.  For a smooth domain it decays like r^(2 - alpha) while
alpha < 2.  On the L-shape the Green function vanishes more slowly at the
reentrant corner, which moves the threshold.
"""

from sublinear_potential import Shape, build_domain, build_green, dist_alpha_measure
from sublinear_potential.potential import fit_green_beta, kato_moduli, kato_threshold_sweep

h = 1 / 32
d = build_domain(Shape.disk(), h)
G = build_green(d)
alphas = (0.5, 1.0, 1.5, 1.95)
reps = kato_moduli(G, [dist_alpha_measure(d, a) for a in alphas])
print(f"Disk, h = 1/32: fitted slope of K(r) against 2 - alpha")
for a, r in zip(alphas, reps):
    print(f"  alpha {a:4}: slope {r.slope:6.3f}  target {2 - a:5.2f}  monotone {r.monotone()}")
print("At alpha = 1.95 the decay is too slow to separate from zero on this grid.")

print("\nBoundary decay exponent beta of the Green function")
for shape in ("disk", "lshape"):
    dd = build_domain(Shape.parse(shape), h)
    print(f"  {shape:7}: beta = {fit_green_beta(build_green(dd)):.2f}")

print("\nClassification sweep (slope > 0.3 pass, (0, 0.3] borderline, otherwise fail)")
for row in kato_threshold_sweep(["disk", "lshape"], [0.5, 1.5], h):
    print(f"  {row['shape']:7} alpha {row['alpha']}: slope {row['slope']:.3f} -> {row['classification']}")
