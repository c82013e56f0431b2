"""Self-similar profile at sigma = 1.8, computed two independent ways.

The fractional power series is fast and accurate away from xi = 1; the
Mellin contour integral covers the whole interval. Where both apply they
should agree to many digits. Near xi = 1 the profile approaches its edge
value only like (1 - xi)^0.31, which is why the series needs a fallback.
"""
import numpy as np

from smolkin import lambda_series as ls
from smolkin import mellin as ml

sigma = 1.8
series = ls.build(sigma)
structure = ml.build_structure(sigma, 10)
print(f"series: {series.order} orders, fitted coefficient growth {series.growth_rate:.3f} per order")

xi = np.linspace(0.05, 0.9, 8)
by_series = ls._series_sum(series, xi)
by_contour = np.asarray(ml.g_eval(1.0 - xi, None, structure)) / structure.k_bar
print("\n   xi      series          contour         rel gap")
for x, a, b in zip(xi, by_series, by_contour):
    print(f"  {x:.3f}  {a:.12f}  {b:.12f}  {abs(a / b - 1):.1e}")

edge = ml.lambda_at_one(structure)
print(f"\nedge value Lambda(1) = {edge:.6f}")
for d in (2e-2, 1e-3, 1e-4, 1e-6):
    v = float(ls.eval_lambda(series, 1.0 - d))
    print(f"  Lambda(1 - {d:g}) = {v:.6f}   relative distance to edge {abs(v / edge - 1):.3f}")

grid = np.geomspace(1e-4, 0.999, 6)
vals, from_series = ls.eval_profile(series, grid)
print("\neval_profile picks a route per point:")
for x, v, s in zip(grid, vals, from_series):
    print(f"  xi={x:.4g}  Lambda={v:.6g}  via {'series' if s else 'contour'}")
