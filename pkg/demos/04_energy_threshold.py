"""Finite energy of mu_alpha as the grid is refined.

For q = 1/2 and gamma = 3/2 the critical exponent is alpha* = 1.8.  We
track an energy integral J(h) through three refinements: below alpha* it
settles, above it keeps growing by a fixed factor.  Close to alpha* three
levels are not enough: at alpha = 1.5 the ratios are still falling when the
grid runs out, so the label reflects the window rather than the limit.
"""

from sublinear_potential import finite_energy_threshold_sweep

table = finite_energy_threshold_sweep("square", 0.5, 1.5, [1.0, 1.5, 1.9], h0=1 / 32, levels=3)
print(f"alpha* = {table.alpha_star:.3g}, energy exponent p = {table.exponent:.3g}")
print(f"{'alpha':>6} {'J(1/32)':>10} {'J(1/64)':>10} {'J(1/128)':>10}  ratios          result")
for row in table.rows:
    js = " ".join(f"{j:10.4g}" for j in row["J"])
    rs = ", ".join(f"{x:.3f}" for x in row["ratios"])
    print(f"{row['alpha']:6} {js}  {rs:15} {row['classification']} (predicted {row['predicted']})")
