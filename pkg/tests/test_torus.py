import math

import numpy as np
import pytest

from qgspacing import (AmbiguousSheetsError, InvalidInputError, LengthBasis, MissingLevelsError, build_from_bonds,
                       empirical_cdf, figure_eight_pdf, find_levels, first_returns, ks_distance, lasso_p0,
                       secular_surface, sheet_counts, star2_pdf, verify_sum_rule)
from qgspacing.torus import ANTI_PERIODIC, PERIODIC, SurfaceFunction, TorusFlow, quadrature_spacing_2d, sheet_count

import support

TWO_PI = 2.0 * math.pi


def proportional(F, closed, n, seed=0):
    x = np.random.default_rng(seed).uniform(0.0, TWO_PI, (500, n))
    a, b = F(x), closed(x)
    use = np.abs(b) > 1e-3
    ratio = a[use] / b[use]
    return np.max(np.abs(ratio - ratio[0])) < 1e-9 * abs(ratio[0])


def test_three_star_surface():
    flow, F = secular_surface(support.graph("star3"))
    c, s = np.cos, np.sin
    closed = lambda x: (c(x[:, 0]) * c(x[:, 1]) * s(x[:, 2]) + c(x[:, 0]) * s(x[:, 1]) * c(x[:, 2])
                        + s(x[:, 0]) * c(x[:, 1]) * c(x[:, 2]))
    assert proportional(F, closed, 3)
    assert F.tags == (ANTI_PERIODIC,) * 3
    assert np.allclose(F.periods, math.pi)
    assert flow.frequencies == support.STAR3
    assert flow.periods == (TWO_PI,) * 3
    assert F.symmetry_residual(flow.periods) < 1e-10


def test_two_length_star_surface():
    flow, F = secular_surface(support.graph("star2"))
    c, s = np.cos, np.sin
    closed = lambda x: c(x[:, 0]) * (2 * s(x[:, 0]) * c(x[:, 1]) + s(x[:, 1]) * c(x[:, 0]))
    assert proportional(F, closed, 2)
    assert F.tags == (PERIODIC, ANTI_PERIODIC)
    assert np.allclose(F.periods, math.pi)
    assert F.symmetry_residual(flow.periods) < 1e-10


def test_figure_eight_surface():
    flow, F = secular_surface(support.graph("figure8"))
    closed = lambda x: (np.cos(x[:, 1]) - 1) * np.sin(x[:, 0]) + (np.cos(x[:, 0]) - 1) * np.sin(x[:, 1])
    assert proportional(F, closed, 2)
    assert F.tags == (PERIODIC, PERIODIC)
    assert np.allclose(F.periods, TWO_PI)


def test_sheets():
    assert verify_sum_rule(support.graph("star3")).counts == (2, 2, 2)
    flow, F = secular_surface(support.graph("star2"))
    assert sheet_counts(flow, F) == (4, 2)
    # the counts do not depend on the probe seed
    assert all(sheet_counts(flow, F, seed=s) == (4, 2) for s in range(1, 4))
    sine = SurfaceFunction(lambda x: np.sin(x[..., 0]), (ANTI_PERIODIC, PERIODIC), (math.pi, TWO_PI))
    plane = TorusFlow((1.0, math.sqrt(2)), (TWO_PI, TWO_PI))
    assert sheet_counts(plane, sine) == (2, 0)
    with pytest.raises(InvalidInputError):
        sheet_count(plane, sine, 0, probes=8)


def test_ambiguous_sheets():
    # 2, 4 or 6 zeros along x1 depending on the third of the x2 range: no majority
    m = lambda x2: 1 + np.floor(3.0 * np.mod(x2, TWO_PI) / TWO_PI)
    F = SurfaceFunction(lambda x: np.sin(m(x[..., 1]) * x[..., 0] + 0.1), (PERIODIC, PERIODIC), (TWO_PI, TWO_PI))
    flow = TorusFlow((1.0, math.sqrt(2)), (TWO_PI, TWO_PI))
    with pytest.raises(AmbiguousSheetsError):
        sheet_count(flow, F, 0, probes=64, seed=3)


def test_single_bond_sum_rule():
    g = build_from_bonds([(0, 1, 1.7)])
    report = verify_sum_rule(g)
    assert report.counts == (2,)
    assert report.residual < 1e-12


def test_sine_returns():
    flow = TorusFlow((1.0,), (TWO_PI,))
    F = SurfaceFunction(lambda x: np.sin(x[..., 0]), (ANTI_PERIODIC,), (math.pi,))
    sample = first_returns(flow, F, np.array([0.3]), 50)
    assert np.allclose(sample.taus, math.pi, atol=1e-10)
    assert sample.times[0] == pytest.approx(math.pi - 0.3)


def test_returns_from_origin_are_the_spectrum():
    g = support.graph("star3")
    flow, F = secular_surface(g)
    sample = first_returns(flow, F, np.zeros(3), 2000)
    levels = find_levels(g, 1e-6, sample.times[-1] + 1e-3).levels
    assert abs(sample.times[0]) < 1e-10
    assert np.allclose(sample.times[1:], levels[: len(sample.times) - 1], atol=1e-10)


def test_return_sample_invariants_and_rate():
    g = support.graph("pentagon")
    flow, F = secular_surface(g)
    sample = first_returns(flow, F, np.random.default_rng(7).uniform(0, TWO_PI, flow.dimension), 10000)
    assert np.all(sample.taus > 0)
    assert math.fsum(sample.taus) == pytest.approx(sample.times[-1] - sample.times[0], rel=1e-12)
    rate = len(sample.taus) / (sample.times[-1] - sample.times[0])
    assert abs(rate - flow.density) / flow.density < 0.005


def test_return_errors():
    flow, F = secular_surface(support.graph("lasso"))
    with pytest.raises(InvalidInputError):
        first_returns(flow, F, np.zeros(2), 0)
    with pytest.raises(InvalidInputError):
        first_returns(flow, F, np.zeros(3), 10)


def test_audit_rejects_wrong_rate():
    # declaring twice the true crossing rate makes the audit fail
    flow = TorusFlow((1.0,), (TWO_PI,), density=2.0 / math.pi)
    F = SurfaceFunction(lambda x: np.sin(x[..., 0]), (ANTI_PERIODIC,), (math.pi,))
    with pytest.raises(MissingLevelsError):
        first_returns(flow, F, np.array([0.3]), 200)


def test_star_returns_match_spectrum():
    flow, F = secular_surface(support.graph("star3"))
    # one long trajectory: near-equal lengths mix slowly, so short trajectories from
    # uniform starts carry the bias of the gap the start falls into
    taus = first_returns(flow, F, np.random.default_rng(0).uniform(0, TWO_PI, 3), 10000).taus
    # a stretch of 1e4 levels alone is off by up to 0.02, so the reference is a long spectrum
    spectral = empirical_cdf(support.spacings("star3", 200000))
    assert ks_distance(empirical_cdf(flow.density * taus), spectral) < 0.02


@pytest.mark.slow
def test_quadrature_laws():
    flow, F = secular_surface(support.graph("figure8"))
    assert ks_distance(quadrature_spacing_2d(flow, F, 2000), figure_eight_pdf()) < 0.02

    l1, l2 = support.STAR2
    flow, F = secular_surface(support.graph("star2"))
    quad = quadrature_spacing_2d(flow, F, 2000)
    law = star2_pdf(l1, l2)
    assert quad.support <= law.params["edge"] + 1e-3
    assert ks_distance(quad, law) < 0.02

    flow, F = secular_surface(support.graph("lasso"))
    quad = quadrature_spacing_2d(flow, F, 2000)
    w = 0.05
    p0 = float(quad.cdf(w)) / w
    assert abs(p0 - lasso_p0(*support.LASSO)) / lasso_p0(*support.LASSO) < 0.10


def test_quadrature_is_two_dimensional():
    flow, F = secular_surface(support.graph("star3"))
    with pytest.raises(InvalidInputError):
        quadrature_spacing_2d(flow, F, 100)


def test_explicit_basis():
    l1, l2 = support.STAR2
    flow, F = secular_surface(support.graph("star2"), LengthBasis([l1, l2], [[1, 0], [0, 1], [1, 0]]))
    assert flow.frequencies == (l1, l2)
