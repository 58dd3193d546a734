"""Independent reference computations shared by the test modules."""

import math

import numpy as np
from scipy import integrate

PI = math.pi

#: one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def hat_L_quadrature(n, R, k, r):
    """Potential of hat function k at radius r by adaptive quadrature."""
    h = R / n
    nodes = np.linspace(0.0, R, n + 1)

    def hat(s):
        return max(0.0, 1.0 - abs(s - nodes[k]) / h)

    lo, hi = max(nodes[k] - h, 0.0), nodes[k] + h
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=200)

    def part(f, a, b):
        if b <= a:
            return 0.0
        inner = [nodes[k]] if a < nodes[k] < b else None
        return integrate.quad(f, a, b, points=inner, **opts)[0]

    inside = part(lambda s: hat(s) * s * s, lo, min(r, hi))
    outside = part(lambda s: hat(s) * s, max(r, lo), hi)
    if r == 0:
        return 4 * PI * outside
    return 4 * PI * (inside / r + outside)
