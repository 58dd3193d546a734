"""Tabulate X(r, R) for p = exp(-r) - exp(-R) and the zero curve of X for R < 2."""

import numpy as np

from stellarvps import models
from stellarvps.inverse_problem import extendability_verdict

r = np.array([1e-5, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0])
print("r      " + "  ".join(f"{x:8.5g}" for x in r))
for R in (2.0, 3.0):
    X = models.exponential(R).closed["X"]
    print(f"R={R:<4} " + "  ".join(f"{float(X(x)):8.4f}" for x in r[r <= R]))
print(f"limit r->0 at R=2: {models.exponential(2.0).closed['X_limit']:.5f}\n")

rr = np.linspace(0.2, 1.8, 9)
print("zero curve R(r):", "  ".join(f"{a:.2f}->{b:.4f}" for a, b in zip(rr, models.exponential_boundary(rr))))
print()
for R in (1.0, 1.5, 2.0, 3.0):
    rep = extendability_verdict(models.exponential(R).density)
    print(f"R={R}: {rep.verdict} via {rep.evidence}")
