"""Disconnected bonds: superposed progressions and the approach to Poisson.

A set of bonds with Dirichlet ends has the levels ``m pi / l_i``. Their spacing
law is exact, ends in a delta peak at ``L / l_1`` and tends to ``exp(-x)`` as
bonds are added.
"""

import math

from qgspacing import cluster_g0, empirical_cdf, integrable_levels, integrable_pdf, ks_distance, poisson, unfold

EIGHT = (math.sqrt(167), math.sqrt(2), math.sqrt(3), math.sqrt(107), math.sqrt(5), math.sqrt(6), math.sqrt(7),
         math.e)


def family(n):
    out = [math.sqrt(i) for i in range(1, n + 1)]
    for i, v in {1: math.sqrt(167), 4: math.sqrt(107), 8: math.e, 9: math.sqrt(105),
                 16: math.sqrt(119), 25: math.sqrt(134)}.items():
        if i <= n:
            out[i - 1] = v
    return out


def main():
    L = math.fsum(EIGHT)
    law = integrable_pdf(EIGHT)
    s = unfold(integrable_levels(EIGHT, 130000 * math.pi / L), L / math.pi)
    print(f"eight bonds, {s.count} spacings")
    print(f"  KS to exact law {ks_distance(empirical_cdf(s), law):.4f}")
    print(f"  peak at {law.peak[0]:.6f} with mass {law.peak[1]:.4f}; largest spacing {s.deltas.max():.6f}")
    print(f"  P(0) = {float(law.pdf(0.0)):.6f} = g(0) = {cluster_g0(EIGHT):.6f}")

    print("\n bonds   KS to Poisson")
    for n in (2, 3, 8, 30):
        print(f"{n:6d}   {ks_distance(integrable_pdf(family(n)), poisson()):.4f}")


if __name__ == "__main__":
    main()
