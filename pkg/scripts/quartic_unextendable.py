"""Negative recovered q for the strictly decreasing quartic density on R = 2."""

import numpy as np

from stellarvps import models
from stellarvps.inverse_problem import EnergySlice, J_function, J_integral, extendability_verdict, recover_q_with_error

fx = models.fixture("quartic-5.9")
p = fx.density
es = EnergySlice(p)

val, err = J_integral(p, 0.01, slice_=es)
print(f"int_Phi^R J(r, h) dr at Phi = 0.01: {val:.6f} (error estimate {err:.1e})")
h = float(p.potential(0.01)) - es.E0
q, qerr = recover_q_with_error(p, h, slice_=es)
print(f"q(h) at h = {h:.6f}: {float(q):.6f} +- {float(qerr):.1e}\n")

r1 = np.array([0.1, 0.15, 0.175, 0.2, 0.31])
r2 = np.array([1.3, 1.5, 1.7, 1.9, 2.0])
print("r          " + "  ".join(f"{x:7.3f}" for x in r1))
print("g1 - J     " + "  ".join(f"{v:7.4f}" for v in fx.closed["g1"](r1) - J_function(p, r1, 0.01)))
print("r          " + "  ".join(f"{x:7.3f}" for x in r2))
print("g2 - J     " + "  ".join(f"{v:7.4f}" for v in fx.closed["g2"](r2) - J_function(p, r2, 0.01)))

rep = extendability_verdict(p)
print(f"\nverdict: {rep.verdict} ({rep.evidence}); minimum q {rep.q_min:.5g} at h = {rep.q_min_at:.5g}")
