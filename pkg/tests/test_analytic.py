import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from qgspacing import (InvalidInputError, build_star, cluster_g0, empirical_cdf, figure_eight_pdf, find_n_levels,
                       integrable_levels, integrable_pdf, ks_distance, lasso_p0, poisson, star2_gap_case, star2_pdf,
                       star3_slope, unfold, wigner_goe)
from qgspacing.analytic import Star2Geometry, integrable_cdf, poisson_pdf, wigner_goe_pdf

import support


def test_two_bond_law():
    l1, l2 = 2.0, math.sqrt(2)
    L = l1 + l2
    law = integrable_pdf([l2, l1])
    x = np.linspace(0.01, L / l1 - 0.01, 50)
    assert np.allclose(law.pdf(x), 2 * l1 * l2 / L**2, rtol=1e-13)
    assert law.peak == pytest.approx((L / l1, (l1 - l2) / L), rel=1e-13)
    equal = integrable_pdf([1.0, 1.0])
    assert equal.peak is None
    assert np.allclose(equal.pdf([0.1, 1.0, 1.9]), 0.5)


def test_integrable_cdf_limits():
    assert float(integrable_cdf(support.EIGHT_BONDS, 0.0)) == 0.0
    assert float(integrable_cdf(support.EIGHT_BONDS, 1e6)) == 1.0
    law = integrable_pdf(support.EIGHT_BONDS)
    edge, mass = law.peak
    assert float(law.cdf(edge)) - float(law.cdf_left(edge)) == pytest.approx(mass, abs=1e-12)


lengths = st.lists(st.floats(0.1, 10.0), min_size=2, max_size=8)


@settings(max_examples=100, deadline=None)
@given(lengths)
def test_density_at_zero(ls):
    L = math.fsum(ls)
    expected = 1.0 - math.fsum((l / L) ** 2 for l in ls)
    assert abs(float(integrable_pdf(ls).pdf(0.0)) - expected) < 1e-12
    assert abs(cluster_g0(ls) - expected) < 1e-12


def test_cluster_g0():
    assert cluster_g0([1.0, 1.0]) == pytest.approx(0.5)
    assert abs(cluster_g0(support.EIGHT_BONDS) - float(integrable_pdf(support.EIGHT_BONDS).pdf(0.0))) < 1e-12
    assert cluster_g0(np.ones(10000)) == pytest.approx(1.0, abs=1e-3)


def test_integrable_law_matches_generated_spectra():
    rng = np.random.default_rng(11)
    for n in (2, 3, 4, 5, 6):
        ls = rng.uniform(0.5, 3.0, n)
        density = ls.sum() / math.pi
        s = unfold(integrable_levels(ls, 100500 / density), density)
        assert s.count >= 100000
        assert ks_distance(empirical_cdf(s), integrable_pdf(ls)) < 0.02, ls


def test_length_errors():
    with pytest.raises(InvalidInputError):
        integrable_pdf([1.0])
    with pytest.raises(InvalidInputError):
        integrable_pdf([1.0, -2.0])
    with pytest.raises(InvalidInputError):
        star3_slope(1.0, 0.0, 1.0)


def test_references():
    assert poisson_pdf(0.0) == 1.0
    assert wigner_goe_pdf(0.0) == 0.0
    h = 1e-7
    assert wigner_goe_pdf(h) / h == pytest.approx(math.pi / 2, rel=1e-6)
    for law in (poisson(), wigner_goe()):
        assert abs(law.normalization() - 1.0) < 1e-9
        assert abs(law.mean() - 1.0) < 1e-9
    assert integrate.quad(wigner_goe_pdf, 0, np.inf)[0] == pytest.approx(1.0, abs=1e-10)


def test_star3_slope():
    assert star3_slope(1.0, 1.0, 1.0) == pytest.approx(math.pi / 3**1.5)
    assert star3_slope(1.0, 1.0, 1.0) == pytest.approx(0.6046, abs=1e-4)
    l1, l2 = 1.3, 2.1
    assert star3_slope(l1, l2, 1e-12) == pytest.approx(math.pi * (l1 * l2) ** 1.5 / (l1 + l2) ** 3, rel=1e-9)
    rng = np.random.default_rng(0)
    for ls in rng.uniform(0.1, 5.0, (100, 3)):
        assert 0.0 < star3_slope(*ls) <= math.pi / 3**1.5 + 1e-15


def test_star2_parameters():
    l1, l2 = support.STAR2
    law = star2_pdf(l1, l2)
    assert law.params["onset"] == pytest.approx(1.345, abs=5e-4)
    assert law.params["edge"] == pytest.approx(1.522, abs=5e-4)
    assert float(law.pdf(law.params["edge"] + 1e-9)) == 0.0
    geo = Star2Geometry(l1, l2)
    assert 2 * l1 / geo.L**2 * geo.linear_gamma() == pytest.approx(1.107, abs=5e-4)
    # with the constant Gamma the band sits at about 1.9, the height of the peak near the edge
    linear = star2_pdf(l1, l2, gamma="linear")
    x = np.linspace(0.0, law.params["edge"] - 1e-6, 20001)
    assert 1.7 < float(linear.pdf(x).max()) < 2.0
    assert abs(law.normalization() - 1.0) < 1e-6
    with pytest.raises(InvalidInputError):
        star2_pdf(l1, l2, gamma="flat")


def test_star2_direct_part_rate():
    # J is the phase rate l2 + 2 l1 / (1 + 3 cos^2 y)
    geo = Star2Geometry(2.0, 1.0)
    assert geo.J(0.0) == pytest.approx(1.0 + 4.0 / 4.0)
    assert geo.J(math.pi / 2) == pytest.approx(1.0 + 4.0)


@pytest.mark.slow
def test_star2_gap_even_and_odd():
    l1, l2 = math.sqrt(2), math.sqrt(3)
    gap = star2_gap_case(l1, l2, 2)
    assert gap > 0.1
    g = build_star([l1, l2, 2 * l1])
    s = unfold(find_n_levels(g, 10001, k_min=1e-6), g)
    assert s.deltas.min() >= gap - 0.01
    assert star2_gap_case(l1, l2, 3) < 0.01
    with pytest.raises(InvalidInputError):
        star2_gap_case(l1, l2, 1.5)


def test_figure_eight_and_lasso():
    law = figure_eight_pdf()
    assert float(law.cdf(1.0)) == pytest.approx(0.5)
    assert float(law.cdf(2.0)) == 1.0
    assert lasso_p0(1.0, 1.0) == 0.5
    assert lasso_p0(*support.LASSO) == pytest.approx(0.5505, abs=1e-4)


def test_curve_sampling():
    x, p = figure_eight_pdf().curve()
    assert x[0] == 0.0 and x[1] == pytest.approx(0.01)
    assert np.allclose(p[x < 1.99], 0.5)
