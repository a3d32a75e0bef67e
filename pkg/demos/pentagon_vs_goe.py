"""The fully connected pentagon against the Wigner surmise.

Ten incommensurate bonds on five vertices of valence four: the spacing CDF
follows the GOE surmise to within about two percent.
"""

import math

import numpy as np

from qgspacing import build_complete, empirical_cdf, find_n_levels, ks_distance, poisson, unfold, wigner_goe

LENGTHS = 0.6 * np.array([math.sqrt(2), math.sqrt(3), math.sqrt(5), math.sqrt(6), math.sqrt(7), math.pi, math.e,
                          math.sqrt(10), math.sqrt(11), math.sqrt(13)])


def main(count=20000):
    g = build_complete(5, LENGTHS)
    s = unfold(find_n_levels(g, count + 1, k_min=1e-6), g)
    emp = empirical_cdf(s)
    goe = wigner_goe()
    print(f"{s.count} spacings; KS to GOE {ks_distance(emp, goe):.4f}, to Poisson {ks_distance(emp, poisson()):.4f}")
    print("\n delta   F - F_GOE")
    for x in np.arange(0.0, 3.01, 0.25):
        print(f"{x:6.2f}   {float(emp.cdf(x) - goe.cdf(x)):+.4f}")


if __name__ == "__main__":
    main()
