"""Closed-form spacing distributions and the Poisson / GOE references.

All densities are in the unfolded variable ``Delta = (L/pi) s`` with unit mean.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import integrate

from . import _roots
from .errors import InvalidInputError, InversionError
from .stats import SpacingDistribution

QUAD_EPSABS = 1e-10


class AnalyticSpacing(SpacingDistribution):
    """A spacing law with a continuous density and an optional delta peak."""

    def __init__(self, name: str, params: dict, pdf: Callable, cdf: Callable, peak=None,
                 support=None, breakpoints=()):
        super().__init__("analytic", pdf=pdf, cdf=cdf, peak=peak, support=support,
                         breakpoints=breakpoints, name=name)
        self.params = dict(params)

    def _pieces(self):
        hi = self.support if self.support is not None else math.inf
        cuts = sorted({0.0, *[b for b in self.breakpoints() if 0.0 < b < hi]})
        return list(zip(cuts, cuts[1:] + [hi]))

    def _integrate(self, f):
        total = 0.0
        for a, b in self._pieces():
            val, _ = integrate.quad(f, a, b, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=400)
            total += val
        return total

    def normalization(self) -> float:
        """``int P dDelta + peak mass`` by adaptive quadrature."""
        mass = self.peak[1] if self.peak else 0.0
        return self._integrate(lambda x: float(self.pdf(x))) + mass

    def mean(self) -> float:
        extra = self.peak[0] * self.peak[1] if self.peak else 0.0
        return self._integrate(lambda x: x * float(self.pdf(x))) + extra

    def curve(self, step: float = 0.01, upper: float | None = None):
        """``(Delta, P(Delta))`` on ``[0, upper]``; ``upper`` defaults to the support or 5."""
        if upper is None:
            upper = self.support if self.support is not None else 5.0
        x = np.arange(0.0, upper + 0.5 * step, step)
        return x, np.asarray(self.pdf(x), dtype=float)


# ------------------------------------------------------------ references

def poisson_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0, np.exp(-np.abs(x)), 0.0)


def wigner_goe_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0, 0.5 * np.pi * x * np.exp(-0.25 * np.pi * x * x), 0.0)


def poisson() -> AnalyticSpacing:
    return AnalyticSpacing("poisson", {}, poisson_pdf,
                           lambda x: np.where(np.asarray(x) > 0, -np.expm1(-np.maximum(x, 0.0)), 0.0))


def wigner_goe() -> AnalyticSpacing:
    return AnalyticSpacing("wigner", {}, wigner_goe_pdf,
                           lambda x: -np.expm1(-0.25 * np.pi * np.maximum(x, 0.0) ** 2))


def figure_eight_pdf() -> AnalyticSpacing:
    """Uniform law on ``(0, 2)``, whatever the two loop lengths."""
    return AnalyticSpacing("figure8", {}, lambda x: np.where((np.asarray(x) >= 0) & (np.asarray(x) < 2), 0.5, 0.0),
                           lambda x: np.clip(np.asarray(x, dtype=float) / 2.0, 0.0, 1.0), support=2.0)


# ------------------------------------------------------------ integrable

def _check_lengths(lengths, minimum=1):
    a = np.asarray(lengths, dtype=float).ravel()
    if a.size < minimum:
        raise InvalidInputError(f"need at least {minimum} lengths")
    if np.any(~np.isfinite(a)) or np.any(a <= 0):
        raise InvalidInputError("lengths must be positive and finite")
    return a


def integrable_pdf(lengths) -> AnalyticSpacing:
    """Spacing law of the superposition of the progressions ``m pi / l_i``.

    With ``a_i = l_i / L`` and ``Q(D) = prod_i (1 - a_i D)`` the continuous part is
    ``Q''(D)`` on ``0 < D < L/l_1`` (``l_1`` the largest length), the CDF there is
    ``1 + Q'(D)`` and the remaining mass ``a_1 prod_{i != 1}(1 - a_i/a_1)`` sits in a
    delta peak at the largest possible spacing ``L/l_1``.
    """
    l = np.sort(_check_lengths(lengths, 2))[::-1]
    L = math.fsum(l)
    a = l / L
    edge = 1.0 / a[0]
    mass = float(a[0] * np.prod(1.0 - a[1:] / a[0]))

    def parts(x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0) & (x < edge)
        xs = np.where(inside, x, 0.0)
        f = 1.0 - np.multiply.outer(xs, a)
        P = np.prod(f, axis=-1)
        u = a / f
        su = u.sum(axis=-1)
        return inside, P, su, (u * u).sum(axis=-1)

    def pdf(x):
        inside, P, su, su2 = parts(x)
        return np.where(inside, P * (su * su - su2), 0.0)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        inside, P, su, _ = parts(x)
        return np.where(x >= edge, 1.0, np.where(inside, 1.0 - P * su, 0.0))

    return AnalyticSpacing("integrable", {"lengths": l.tolist()}, pdf, cdf,
                           peak=(edge, mass) if mass > 0 else None, support=edge)


def integrable_cdf(lengths, x):
    return integrable_pdf(lengths).cdf(x)


def cluster_g0(lengths) -> float:
    """``g(0) = 1 - sum (l_i/L)^2``, the density of the integrable law at the origin."""
    l = _check_lengths(lengths)
    L = math.fsum(l)
    return 1.0 - math.fsum((l / L) ** 2)


def star3_slope(l1: float, l2: float, l3: float) -> float:
    """``P'(0)`` of the three-bond star."""
    _check_lengths([l1, l2, l3], 3)
    return math.pi * (l1 * l2 + l1 * l3 + l2 * l3) ** 1.5 / (l1 + l2 + l3) ** 3


def lasso_p0(l1: float, l2: float) -> float:
    """``P(0)`` of the lasso with tail ``l1`` and loop ``l2``."""
    _check_lengths([l1, l2], 2)
    return l2 / (l1 + l2)


# ------------------------------------------------------------ two-length star

def star2_psi(y):
    """Continuous lift of ``arctan(tan(y) / 2)``; ``psi(y + pi) = psi(y) + pi``."""
    y = np.asarray(y, dtype=float)
    return y - np.arctan(np.sin(2.0 * y) / (3.0 + np.cos(2.0 * y)))


def _solve_increasing(func, lo, hi, tol_rel=1e-15):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return _roots.bisect(func, lo, hi, func(lo), tol_rel)


class Star2Geometry:
    """Return-time geometry of the star with lengths ``(l1, l2, l1)``.

    Coordinates on the pi-torus are ``y = k l1 - pi/2`` and ``z = k l2``. The surface
    splits into the line ``y = 0`` and the curve ``z + psi(y) = pi/2``; along the flow
    the phase ``z + psi(y)`` grows at the rate ``J(y) = l2 + 2 l1 / (1 + 3 cos^2 y)``.
    """

    def __init__(self, l1: float, l2: float):
        _check_lengths([l1, l2], 2)
        self.l1, self.l2 = float(l1), float(l2)
        self.L = 2.0 * self.l1 + self.l2
        l1, l2 = self.l1, self.l2
        # longest return: l2 t + psi(l1 t) = pi
        self.tau_p = float(_solve_increasing(lambda t: l2 * t + star2_psi(l1 * t) - math.pi,
                                             np.array([0.0]), np.array([math.pi / l2]))[0])
        # shortest curve-to-curve return, at the symmetric start a + b = pi
        self.tau_min = float(_solve_increasing(
            lambda t: l2 * t + 2.0 * star2_psi(0.5 * (math.pi + l1 * t)) - 2.0 * math.pi,
            np.array([0.0]), np.array([2.0 * math.pi / l2]))[0])
        self.a_star = math.pi - l1 * self.tau_p

    def J(self, y):
        return self.l2 + 2.0 * self.l1 / (1.0 + 3.0 * np.cos(y) ** 2)

    def to_delta(self, tau):
        return np.asarray(tau) * self.L / math.pi

    def left_start(self, tau, delta=None):
        """Start ``a`` on ``(0, (pi - l1 tau)/2)`` of a curve-to-curve return lasting ``tau``."""
        tau = np.asarray(tau, dtype=float)
        l1, l2 = self.l1, self.l2
        g = lambda a: star2_psi(a + l1 * tau) - star2_psi(a) - (math.pi - l2 * tau)
        lo = np.zeros_like(tau)
        hi = 0.5 * (math.pi - l1 * tau)
        glo, ghi = g(lo), g(hi)
        bad = ~((glo <= 0) & (ghi >= 0))
        if np.any(bad):
            where = np.asarray(delta if delta is not None else self.to_delta(tau))
            raise InversionError(f"return time not bracketed at Delta = {where.ravel()[np.argmax(bad.ravel())]!r}",
                                 float(where.ravel()[np.argmax(bad.ravel())]))
        return _roots.bisect(g, lo, hi, glo, 1e-15)

    def gamma(self, tau, delta=None):
        """``J_a J_b / |J_a - J_b|`` for the curve-to-curve return of duration ``tau``."""
        a = self.left_start(tau, delta)
        Ja, Jb = self.J(a), self.J(a + self.l1 * np.asarray(tau))
        return Ja * Jb / np.abs(Ja - Jb)

    def gamma_mass(self, tau):
        """Measure of curve-to-curve returns shorter than ``tau`` (fraction of all crossings)."""
        a = self.left_start(tau)
        ar = math.pi - a - self.l1 * np.asarray(tau)
        return (self.l2 * (ar - a) + self.l1 * (star2_psi(ar) - star2_psi(a))) / (math.pi * self.L)

    def linear_gamma(self) -> float:
        """Constant ``Gamma`` obtained by treating the curve-to-curve return time as linear in the start."""
        q = self.l2 * math.pi / (2.0 * self.l1)
        return q / (self.tau_p - self.tau_min)


def star2_pdf(l1: float, l2: float, gamma: str = "exact") -> AnalyticSpacing:
    """Spacing law of the star with bond lengths ``(l1, l2, l1)``.

    ``P(D) = (2 l1/L^2) [J(l1 s) + Gamma(s)]`` with ``s = pi D / L`` and support
    ``D < (L/pi) tau_P``; ``Gamma`` vanishes below ``(L/pi) tau_min``. ``gamma="exact"``
    inverts the return time numerically. ``gamma="linear"`` replaces ``Gamma`` by a
    constant from a linearised return time; that curve is not normalised and is
    meant for comparison plots only.
    """
    if gamma not in ("exact", "linear"):
        raise InvalidInputError("gamma must be 'exact' or 'linear'")
    geo = Star2Geometry(l1, l2)
    L = geo.L
    pref = 2.0 * geo.l1 / L ** 2
    d_min, d_max = float(geo.to_delta(geo.tau_min)), float(geo.to_delta(geo.tau_p))
    lin = geo.linear_gamma()

    def pdf(x):
        x = np.asarray(x, dtype=float)
        tau = np.pi * x / L
        out = np.where((x >= 0) & (x < d_max), pref * np.abs(geo.J(geo.l1 * tau)), 0.0)
        band = (x > d_min) & (x < d_max)
        if np.any(band):
            if gamma == "exact":
                out[band] += pref * geo.gamma(tau[band], x[band])
            else:
                out[band] += pref * lin
        return out

    def cdf(x):
        x = np.asarray(x, dtype=float)
        tau = np.clip(np.pi * x / L, 0.0, geo.tau_p)
        direct = 2.0 * geo.l1 / (math.pi * L) * (geo.l2 * tau + star2_psi(geo.l1 * tau))
        out = np.where(x > 0, direct, 0.0)
        band = (x > d_min) & (x < d_max)
        if np.any(band):
            if gamma == "exact":
                out[band] += geo.gamma_mass(tau[band])
            else:
                out[band] += pref * lin * (x[band] - d_min)
        if gamma == "exact":
            out = np.where(x >= d_max, 1.0, out)
        else:
            out = np.where(x >= d_max, out + pref * lin * (d_max - d_min), out)
        return out

    params = {"l1": geo.l1, "l2": geo.l2, "gamma": gamma, "tau_p": geo.tau_p, "tau_min": geo.tau_min,
              "onset": d_min, "edge": d_max}
    return AnalyticSpacing("star2", params, pdf, cdf, support=d_max, breakpoints=(d_min,))


def star2_gap_case(l1: float, l2: float, p: int, grid_size: int = 2000) -> float:
    """Smallest unfolded spacing of the star with lengths ``(l1, l2, p*l1)``.

    The torus is spanned by ``(l1, l2)``. The minimum is taken over the return
    times of the flux-weighted surface quadrature, so it approaches the true
    infimum from above as ``grid_size`` grows. For even ``p`` the two sheets of the
    surface never meet and the result is a strictly positive gap; for odd ``p`` they
    do and the result is close to zero.
    """
    from .graph import LengthBasis, build_star
    from .torus import quadrature_spacing_2d, secular_surface

    if int(p) != p or p < 1:
        raise InvalidInputError(f"p must be a positive integer, got {p!r}")
    _check_lengths([l1, l2], minimum=2)
    p = int(p)
    graph = build_star([l1, l2, p * l1])
    basis = LengthBasis([l1, l2], [[1, 0], [0, 1], [p, 0]])
    flow, surface = secular_surface(graph, basis)
    dist = quadrature_spacing_2d(flow, surface, grid_size)
    return float(np.min(dist.info["taus"]) * dist.info["density"])
