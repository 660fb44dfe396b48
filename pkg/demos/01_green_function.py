"""The discrete Green function on a disk.

We build the grid, assemble the Laplacian with each boundary stencil, and
look at what the Green operator does to Lebesgue measure.  The exact answer
is ``(1 - |x|^2) / 4``.
"""

import numpy as np

from sublinear_potential import (
    Shape,
    analytic_disk_kernel,
    build_domain,
    build_green,
    green_invariants,
    green_potential,
    lebesgue,
)

print("Invariants of g on the disk, h = 1/16")
d = build_domain(Shape.disk(), 1 / 16)
G = build_green(d)
for m in green_invariants(G).values():
    print("  ", m)

print("\nCenter value of G[dx] against 1/4")
print(f"{'h':>8} {'symmetric':>12} {'shortley-weller':>16}")
prev = None
for h in (1 / 8, 1 / 16, 1 / 32, 1 / 64):
    d = build_domain(Shape.disk(), h)
    c = d.node_index([0.0, 0.0])
    errs = [abs(green_potential(build_green(d, s), lebesgue(d)).interior[c] - 0.25) for s in ("symmetric", "shortley-weller")]
    ratio = "" if prev is None else f"  ratio {prev / errs[0]:.2f}"
    print(f"{h:8.4f} {errs[0]:12.3e} {errs[1]:16.3e}{ratio}")
    prev = errs[0]
print("The symmetric stencil converges at second order; Shortley-Weller is exact")
print("for this quadratic but gives up the symmetry of g.")

print("\nOne Green row against the continuum kernel, h = 1/32")
d = build_domain(Shape.disk(), 1 / 32)
G = build_green(d)
i = d.nearest_node([0.3, 0.1])
others = np.arange(d.n_interior) != i
row = G.rows([i])[0][others]
exact = analytic_disk_kernel(d.interior[i], d.interior[others])
dist = np.linalg.norm(d.interior[others] - d.interior[i], axis=1)
for lo, hi in ((2 * d.h, 0.1), (0.1, 0.5), (0.5, 2.0)):
    sel = (dist >= lo) & (dist < hi)
    print(f"  |x - y| in [{lo:.3f}, {hi:.3f}): max error {np.abs(row[sel] - exact[sel]).max():.2e}")
