"""Free-particle transition probability from positive path weights.

With no potential the lattice transition probability should reproduce the
squared modulus of the free propagator, 1/(2 pi T), once the velocity-change
regularization is extrapolated away.  The script evaluates the deterministic
quadrature at several regularization strengths and extrapolates to gamma = 0.
"""

import math

from pathprob.lattice import LatticeConfig
from pathprob.potentials import BandLimitedPotential
from pathprob.quadrature import extrapolate_gamma, transition_probability_quadrature


def main():
    p = BandLimitedPotential.zero()
    target = 1.0 / (2.0 * math.pi)
    gammas = (0.2, 0.1, 0.05)
    print(f"target |free kernel|^2 at T = 1:  {target:.6f}\n")
    for n in (2, 3, 4):
        vals = []
        for g in gammas:
            cfg = LatticeConfig(0.0, 1.0, n, g, 0.0, 0.0)
            est = transition_probability_quadrature(p, cfg, points_per_dim=28)
            vals.append(est.value)
            print(f"n = {n}  gamma = {g:<5}  P = {est.value:.6f}"
                  f"  (dev {100 * (est.value / target - 1):+.2f}%)")
        p0, unc = extrapolate_gamma(gammas, vals)
        print(f"n = {n}  gamma -> 0      P = {p0:.6f} +- {unc:.6f}\n")


if __name__ == "__main__":
    main()
