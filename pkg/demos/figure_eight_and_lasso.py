"""Two graphs on two loops or a loop and a tail.

The figure eight has the flat law ``P = 1/2`` on (0, 2) whatever its lengths.
The lasso keeps a finite density at zero spacing equal to ``l2 / (l1 + l2)``.
"""

import math

from qgspacing import build_figure_eight, build_lasso, empirical_cdf, figure_eight_pdf, find_n_levels, \
    ks_distance, lasso_p0, smallest_bin_density, unfold


def main(count=20000):
    for pair in ((math.sqrt(2), math.sqrt(3)), (1.0, (1 + math.sqrt(5)) / 2), (0.3, math.e)):
        g = build_figure_eight(*pair)
        s = unfold(find_n_levels(g, count + 1, k_min=1e-6), g)
        d = ks_distance(empirical_cdf(s), figure_eight_pdf())
        print(f"figure eight {pair[0]:.4f}, {pair[1]:.4f}: KS to flat law {d:.4f}, max spacing {s.deltas.max():.4f}")

    for l1, l2 in ((math.sqrt(2), math.sqrt(3)), (1.0, math.sqrt(5)), (math.sqrt(7), 1.0)):
        g = build_lasso(l1, l2)
        s = unfold(find_n_levels(g, 5 * count + 1, k_min=1e-6), g)
        print(f"lasso {l1:.4f}, {l2:.4f}: P(0) from spectrum {smallest_bin_density(s, 0.05):.4f}, "
              f"predicted {lasso_p0(l1, l2):.4f}")


if __name__ == "__main__":
    main()
