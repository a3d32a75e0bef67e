"""The star with lengths (l1, l2, l1): a bounded spacing law with a kink.

With only two independent lengths the flow lives on a 2-torus, the spacing
density has compact support and an extra contribution switches on at an
interior point. The spectrum, the surface quadrature and the exact law agree.
"""

import math

import numpy as np

from qgspacing import build_star, empirical_cdf, find_n_levels, ks_distance, secular_surface, star2_gap_case, \
    star2_pdf, unfold
from qgspacing.torus import quadrature_spacing_2d

L1, L2 = math.pi, 1.53183459012


def main(count=20000):
    law = star2_pdf(L1, L2)
    print(f"support ends at {law.params['edge']:.4f}, extra sheet from {law.params['onset']:.4f}")

    g = build_star([L1, L2, L1])
    s = unfold(find_n_levels(g, count + 1, k_min=1e-6), g)
    print(f"largest of {s.count} spacings: {s.deltas.max():.4f}")
    print(f"KS spectrum vs law:   {ks_distance(empirical_cdf(s), law):.4f}")

    flow, F = secular_surface(g)
    quad = quadrature_spacing_2d(flow, F, grid_size=1000)
    print(f"KS quadrature vs law: {ks_distance(quad, law):.4f}")

    x = np.linspace(0.0, 1.55, 32)
    print("\n delta   exact    constant-Gamma")
    linear = star2_pdf(L1, L2, gamma="linear")
    for a, p, q in zip(x, law.pdf(x), linear.pdf(x)):
        print(f"{a:6.3f}  {p:7.3f}  {q:7.3f}")

    # a third bond of even multiple length opens a gap at the origin; odd multiples do not
    for p in (1, 2, 3, 4):
        print(f"lengths (sqrt2, sqrt3, {p} sqrt2): smallest spacing {star2_gap_case(math.sqrt(2), math.sqrt(3), p):.4f}")


if __name__ == "__main__":
    main()
