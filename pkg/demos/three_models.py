"""The avoSI / evoSI / AB-avoSI sandwich on one graph family.

evoSI is the evolving-network epidemic itself: susceptible--infected edges
transmit at rate lambda or break at rate rho, the freed endpoint rewiring
to a uniform vertex. avoSI pairs half-edges on the fly and bounds evoSI
from above; AB-avoSI adds a rewiring-index gate that blocks some pairings
and bounds it from below. All three share one critical infection rate.

This demo runs the three dynamics with shared per-trial seeds at the
critical rate and prints final-size summaries plus one-sided rank tests
of the orderings. The true gaps between the bounds are small at this
size, so the rank tests report direction without drama.
"""

import sys

import numpy as np

from evosi.degrees import DegreeModel
from evosi.harness import ExperimentPlan, compare_final_sizes

SEED = 1729
TRIALS = 2000
N = 2000


def main():
    plan = ExperimentPlan(
        model=DegreeModel.regular(3),
        rho=1.0,
        n_grid=(N,),
        trials_per_n=TRIALS,
        master_seed=SEED,
    )
    print(f"regular:3, n={N}, lambda={plan.rate()} (critical), "
          f"{TRIALS} trials per dynamics\n")
    result = compare_final_sizes(plan, progress=True)

    print(f"\n{'dynamics':>9} {'mean size':>10} {'P(size > eps n)':>16} {'median':>7}")
    for name in ("ab", "evosi", "avosi"):
        finals = np.asarray(result.final_sizes[name])
        outbreak = float(np.mean(finals > 0.05 * N))
        print(f"{name:>9} {result.means[name]:>10.2f} {outbreak:>16.4f} "
              f"{int(np.median(finals)):>7}")

    print("\none-sided rank tests (small p favors the stated ordering):")
    print(f"  AB below evoSI:    p = {result.p_ab_below_evo:.3f}")
    print(f"  evoSI below avoSI: p = {result.p_evo_below_avo:.3f}")
    print("\nThe bounds squeeze the epidemic tightly here: the three final-size")
    print("laws differ by fractions of a percent, so at this trial count the")
    print("sample means are dominated by noise rather than the true gaps; the")
    print("ordering becomes visible on small graphs, where the gaps are wide.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
