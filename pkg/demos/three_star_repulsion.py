"""Level repulsion on the three-bond star.

The spacing density of a star with three incommensurate bonds vanishes linearly
at the origin. This script measures the slope from the spectrum and sets it next
to the closed form ``pi (l1 l2 + l1 l3 + l2 l3)^{3/2} / L^3``.
"""

import math

import numpy as np

from qgspacing import build_star, find_n_levels, histogram, small_slope_fit, star3_slope, unfold

LENGTHS = (math.pi, 3.183459012, 3.1442336073)


def main(count=200000):
    g = build_star(LENGTHS)
    s = unfold(find_n_levels(g, count + 1, k_min=1e-6), g)
    print(f"{s.count} spacings, mean {s.mean:.5f}")

    fit = small_slope_fit(s)
    expected = star3_slope(*LENGTHS)
    print(f"P'(0) fitted  {fit.p_prime_zero:.4f} +- {2 * fit.stderr:.4f}")
    print(f"P'(0) formula {expected:.4f}")
    # equal lengths give the largest slope the formula allows
    print(f"upper bound   {star3_slope(1.0, 1.0, 1.0):.4f}")

    h = histogram(s, 0.05)
    print("\n delta   P(delta)   slope*delta")
    for x, p in zip(np.arange(len(h.densities))[:8] * 0.05, h.densities[:8]):
        print(f"{x:6.2f}   {p:8.4f}   {expected * x:8.4f}")


if __name__ == "__main__":
    main()
