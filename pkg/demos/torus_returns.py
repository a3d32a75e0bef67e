"""Spacings as return times of a straight-line flow on a torus.

Replacing ``k l_i`` by free angles ``x_i`` turns the secular function into a
function on a torus; the levels are the times a line with velocity ``(l_i)``
crosses its zero set. Any starting point gives the same statistics, the sheet
counts add up to twice the total length, and in two dimensions the law can be
integrated over the surface directly.
"""

import math

from qgspacing import build_figure_eight, build_lasso, build_star, empirical_cdf, find_n_levels, ks_distance, \
    sample_returns, secular_surface, unfold, verify_sum_rule
from qgspacing.torus import quadrature_spacing_2d

GRAPHS = {
    "three-bond star": build_star([math.pi, 3.183459012, 3.1442336073]),
    "star (l1, l2, l1)": build_star([math.pi, 1.53183459012, math.pi]),
    "figure eight": build_figure_eight(math.sqrt(2), math.sqrt(3)),
    "lasso": build_lasso(math.sqrt(2), math.sqrt(3)),
}


def main(count=20000):
    for name, g in GRAPHS.items():
        flow, F = secular_surface(g)
        rule = verify_sum_rule(g)
        spectral = empirical_cdf(unfold(find_n_levels(g, count + 1, k_min=1e-6), g))
        # few long trajectories: a short one remembers the gap it started in
        taus = sample_returns(flow, F, seeds=range(2), count=count // 2)
        d = ks_distance(empirical_cdf(flow.density * taus), spectral)
        line = f"{name:18s} sheets {rule.counts}  KS returns/spectrum {d:.4f}"
        if flow.dimension == 2:
            quad = quadrature_spacing_2d(flow, F, grid_size=1000)
            line += f"  quadrature/spectrum {ks_distance(quad, spectral):.4f}"
        print(line)


if __name__ == "__main__":
    main()
