"""Print both refinement-ladder tables (quadratic density and sqrt(s) ansatz) for R = 8."""

import argparse
import math

from stellarvps import models
from stellarvps.ans_solver import ladder_table, refinement_ladder


def show(rows):
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(c.rjust(w) for c, w in zip(r, widths)))
    print()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--R", type=float, default=8.0)
    args = ap.parse_args()

    fx = models.fixture("quadratic-5.1", R=args.R)
    reps = refinement_ladder(fx.G0, args.R, args.n, reference=fx.density)
    print(f"p = 1 - (r/R)^2, R = {args.R}")
    show(ladder_table(reps, r_step=args.R / 16, reference=fx.density,
                      E0_exact=8 * math.pi * args.R**2 / 15))
    for rep in reps[1:]:
        k = rep.kantorovich
        print(f"  n={rep.n:4d}  iterations={rep.iterations}  h0(start)={k.h0:.3g}  "
              f"first certified iterate={rep.kantorovich_first_certified}")
    print()

    sq = models.fixture("sqrt-q-5.8", R=args.R)
    reps = refinement_ladder(sq.G0, args.R, args.n)
    print(f"q(s) = c sqrt(s), c = {sq.params['c']:.6g}, R = {args.R}")
    show(ladder_table(reps, r_step=args.R / 16))
    for rep in reps[1:]:
        k = rep.kantorovich
        print(f"  n={rep.n:4d}  iterations={rep.iterations}  h0(start)={k.h0:.3g}  "
              f"first certified iterate={rep.kantorovich_first_certified}")


if __name__ == "__main__":
    main()
