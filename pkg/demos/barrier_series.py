"""The parabolic-barrier survival function and the outbreak constant.

F1(x, q) is the probability that a Brownian motion started at level x
(in the natural scaling) stays above a downward parabola from time q on.
It enters the n^(-1/3) outbreak law through two constants: c_f1lim, the
q -> 0 slope of its meander average, and c_main, the limit of
n^(1/3) * P(major outbreak). Both come from an Airy-function series.

The demo prints the series against a Brownian-path Monte Carlo oracle on
a small grid, then the constants for two degree models.
"""

import sys

import numpy as np

from evosi.degrees import DegreeModel
from evosi.limits import f1_mc_oracle, f1_series, limit_constants


def main():
    reg3 = limit_constants(DegreeModel.regular(3), 1.0)
    print("F1(x, q), 3-regular constants: series vs path simulation")
    print(f"{'x':>4} {'q':>4} {'series':>8} {'paths':>8} {'3 SE':>7}")
    for x, q in ((0.5, 0.1), (1.0, 0.1), (2.0, 0.1), (0.5, 0.5), (1.0, 0.5)):
        rng = np.random.default_rng(20260814)
        oracle = f1_mc_oracle(x, q, reg3, rng, paths=8000)
        series = f1_series(x, q, reg3, tol=1e-4)
        print(f"{x:>4} {q:>4} {series:>8.4f} {oracle.estimate:>8.4f} "
              f"{3 * oracle.std_error:>7.4f}")

    print("\nlimit constants (rho = 1, critical rate):")
    for label, model in (("regular:3", DegreeModel.regular(3)),
                         ("poisson:3", DegreeModel.poisson(3.0))):
        constants = limit_constants(model, 1.0)
        print(f"  {label:10s} delta = {constants.delta:6.3f}  "
              f"c_f1lim = {constants.c_f1lim:.6f}  c_main = {constants.c_main:.6f}")
    print("\nc_main is the constant the scaled outbreak probabilities in")
    print("demos/critical_scaling.py drift toward as n grows.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
