"""Solving u = G[u^q dmu] + G[nu] + H_f by monotone iteration.

The data are manufactured so that ``u* = 1 + (1 - |x|^2) / 4`` on the unit
disk with q = 1/2.  We solve from below and from above, check the result
against a Newton solve with the dense Green matrix, and print the two-sided
pointwise estimates.
"""

import numpy as np

from sublinear_potential import (
    BoundaryData,
    Shape,
    SolverConfig,
    build_domain,
    build_green,
    green_potential,
    measure_from_density,
    newton_oracle,
    picard_solve,
    uniqueness_experiment,
    verify_estimates,
)
from sublinear_potential.solver import apply_T

q = 0.5
print(f"{'h':>8} {'iterations':>10} {'sup error':>11}")
for h in (1 / 16, 1 / 32, 1 / 64):
    d = build_domain(Shape.disk(), h)
    G = build_green(d)
    ue = 1 + (1 - (d.interior**2).sum(1)) / 4
    mu = measure_from_density(d, np.full(d.n_interior, 0.5))
    nu = measure_from_density(d, 1 - 0.5 * np.sqrt(ue))
    f = BoundaryData.constant(d, 1.0)
    rep = picard_solve(G, mu, nu, f, SolverConfig(q, tol=1e-12))
    print(f"{h:8.4f} {rep.iterations:10d} {np.abs(rep.u.interior - ue).max():11.3e}")

print("\nBoth directions and the Newton oracle on the h = 1/16 disk")
d = build_domain(Shape.disk(), 1 / 16)
G = build_green(d)
ue = 1 + (1 - (d.interior**2).sum(1)) / 4
mu = measure_from_density(d, np.full(d.n_interior, 0.5))
nu = measure_from_density(d, 1 - 0.5 * np.sqrt(ue))
f = BoundaryData.constant(d, 1.0)
uq = uniqueness_experiment(G, mu, nu, f, q)
print(f"  below: {uq.below.iterations} iterations, above: {uq.above.iterations} iterations")
print(f"  gap between the limits {uq.gap:.2e}; {uq.minimality}")
u0 = uq.below.c1 * green_potential(G, mu).interior ** (1 / (1 - q))
un = newton_oracle(G, mu, nu, f, q, apply_T(G, mu, nu, f, u0, q))
print(f"  Newton vs Picard {np.abs(un.interior - uq.below.u.interior).max():.2e}")

print("\nTwo-sided estimates with c1 = (1-q)^(1/(1-q)) and the uniform bound c2")
for m in verify_estimates(uq.below, G, mu, nu, f, q).values():
    print("  ", m)
