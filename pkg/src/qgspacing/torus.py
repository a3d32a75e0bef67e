"""The secular function on the torus, first returns of the linear flow, and sheet counts.

With ``x_i = k l_i`` for a basis of incommensurate lengths the secular function becomes
a function ``F`` on a torus, and ``k`` becomes the time of the straight-line flow
``x(k) = x0 + k l``. Eigenvalues are the times at which the flow started at the origin
crosses the surface ``F = 0``; spacings are its first-return times.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _roots
from .errors import (AmbiguousSheetsError, ContinuationError, InvalidInputError,
                     MissingLevelsError, SumRuleError)
from .graph import LengthBasis, MetricGraph, total_length, validate
from .secular import PhaseLine, phase_crossings, phase_secular_value
from .stats import SpacingDistribution

PERIODIC = "periodic"
ANTI_PERIODIC = "anti-periodic"
SYMMETRY_ATOL = 1e-10
SUM_RULE_RTOL = 1e-9
SWEEP_OFFSET = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TorusFlow:
    """Straight-line flow with velocity ``frequencies`` on a torus of side ``periods``."""

    frequencies: tuple[float, ...]
    periods: tuple[float, ...]
    density: float | None = None

    def __post_init__(self):
        l = tuple(float(v) for v in self.frequencies)
        P = tuple(float(v) for v in self.periods)
        if len(l) != len(P) or not l:
            raise InvalidInputError("frequencies and periods must have the same nonzero length")
        if any(v <= 0 for v in l + P):
            raise InvalidInputError("frequencies and periods must be positive")
        object.__setattr__(self, "frequencies", l)
        object.__setattr__(self, "periods", P)

    @property
    def dimension(self) -> int:
        return len(self.frequencies)

    def point(self, x0, t):
        """``x0 + t l`` for scalar or array ``t``."""
        return np.asarray(x0, dtype=float) + np.multiply.outer(np.asarray(t, dtype=float), self.frequencies)


@dataclass(frozen=True)
class SurfaceFunction:
    """``F`` on the torus with the smallest period or anti-period of each coordinate."""

    evaluator: Callable
    tags: tuple[str, ...]
    periods: tuple[float, ...]
    audit_floor: float = 2.0
    # set for secular surfaces: trajectories then map to exactly countable phase lines
    graph: MetricGraph | None = None
    coefficients: np.ndarray | None = None

    def phase_line(self, start, frequencies) -> PhaseLine | None:
        if self.graph is None:
            return None
        C = self.coefficients
        return PhaseLine(C @ np.asarray(start, dtype=float), C @ np.asarray(frequencies, dtype=float))

    def __call__(self, x):
        return self.evaluator(np.asarray(x, dtype=float))

    def symmetry_residual(self, full_periods, probes: int = 1000, seed: int = 0) -> float:
        """Largest ``|F(x + P_i e_i) -/+ F(x)|`` over random probes, per the declared tags."""
        rng = np.random.default_rng(seed)
        n = len(self.tags)
        x = rng.uniform(0.0, 1.0, (probes, n)) * np.asarray(full_periods)
        f = self(x)
        worst = 0.0
        for i, (tag, P) in enumerate(zip(self.tags, self.periods)):
            y = x.copy()
            y[:, i] += P
            sign = -1.0 if tag == ANTI_PERIODIC else 1.0
            worst = max(worst, float(np.max(np.abs(self(y) - sign * f))))
        return worst


@dataclass(frozen=True)
class ReturnSample:
    times: np.ndarray
    start: np.ndarray
    audit: float = 0.0

    @property
    def taus(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def crossings(self) -> int:
        return len(self.times)


def _reduced_periods(F, full, probes=64, seed=0):
    """Halve each full period while ``F`` stays periodic; stop at the first anti-period."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, (probes, len(full))) * np.asarray(full)
    f = F(x)
    scale = max(1.0, float(np.max(np.abs(f))))
    tags, periods = [], []
    for i, P in enumerate(full):
        tag = PERIODIC
        while True:
            y = x.copy()
            y[:, i] += P / 2.0
            g = F(y)
            if np.max(np.abs(g - f)) < SYMMETRY_ATOL * scale:
                P /= 2.0
                continue
            if np.max(np.abs(g + f)) < SYMMETRY_ATOL * scale:
                P /= 2.0
                tag = ANTI_PERIODIC
            break
        tags.append(tag)
        periods.append(P)
    return tuple(tags), tuple(periods)


def _periodic_roots(func, t0, period, m, tol):
    """Zeros in ``[t0, t0 + period)`` per row, scanning one extra cell on each side.

    The padding lets a close pair of zeros at either end of the sweep show up as an
    interior dip of ``|F|``.
    """
    t0 = np.asarray(t0, dtype=float)
    cell = period / m
    rows, roots = _roots.row_roots(func, t0 - cell, t0 + period + cell, m + 2, tol)
    keep = (roots >= t0[rows]) & (roots < t0[rows] + period)
    return rows[keep], roots[keep]


def secular_surface(g: MetricGraph, basis: LengthBasis | None = None):
    """Flow and surface of a graph: bond phases are ``theta_b = sum_i c_bi x_i``.

    The flow runs on the torus with periods ``2 pi`` times the common denominator of each
    basis column (``2 pi`` for integer coefficients). The surface records the smaller
    period or anti-period found by probing.
    """
    if basis is None:
        basis = LengthBasis.natural(g)
    validate(g, basis)
    C = basis.coefficient_matrix

    def evaluator(x):
        return phase_secular_value(g, np.asarray(x, dtype=float) @ C.T)

    full = tuple(2.0 * math.pi * d for d in basis.denominators())
    tags, periods = _reduced_periods(evaluator, full)
    flow = TorusFlow(basis.basis_lengths, full, total_length(g) / math.pi)
    return flow, SurfaceFunction(evaluator, tags, periods, audit_floor=1.0 + g.bond_count,
                                 graph=g, coefficients=C)


def _crossing_rate(flow: TorusFlow, F: SurfaceFunction) -> float:
    if flow.density is not None:
        return flow.density
    counts = sheet_counts(flow, F)
    return sum(m * l / P for m, l, P in zip(counts, flow.frequencies, flow.periods))


def first_returns(flow: TorusFlow, F: SurfaceFunction, start, count: int, oversample: int = 8,
                  tol: float = 1e-12) -> ReturnSample:
    """The first ``count`` return times of the trajectory through ``start``.

    Crossing times are taken from ``t = 0`` on. A start point on the surface counts as
    the first crossing. On a secular surface the crossings are reconciled with the
    exact eigenphase count along the trajectory; otherwise their number is audited
    against the crossing rate.
    """
    if count < 1:
        raise InvalidInputError("count must be at least 1")
    start = np.asarray(start, dtype=float)
    if start.shape != (flow.dimension,):
        raise InvalidInputError(f"start point must have {flow.dimension} coordinates")
    rate = _crossing_rate(flow, F)
    line = F.phase_line(start, flow.frequencies)
    step = 1.0 / (rate * oversample)
    if line is not None:
        def crossings(a, b):
            return phase_crossings(F.graph, line, a, b, oversample, tol)
        # open the first interval just before t = 0 so that a start on the surface is kept
        first = -0.5 * step
    else:
        func = lambda t: F(flow.point(start, t))

        def crossings(a, b):
            return _roots.scan_zeros(func, a, b, step, tol)
        first = 0.0
    span = (count + 1 + 2.0 * F.audit_floor + 0.01 * count) / rate
    times = crossings(first, span)
    times = times[times > -1e-9 / rate]
    t0 = span
    while len(times) < count + 1:
        extra = (count + 1 - len(times) + 2.0 * F.audit_floor) / rate
        found = crossings(t0, t0 + extra)
        times = np.concatenate([times, found[found > t0]])
        t0 += extra
    expected = rate * t0
    deviation = len(times) - expected
    if abs(deviation) > max(0.005 * expected, F.audit_floor):
        raise MissingLevelsError(f"{len(times)} crossings where the rate predicts {expected:.1f}",
                                 (0.0, t0), deviation)
    return ReturnSample(times[: count + 1], start, float(deviation))


def sample_returns(flow: TorusFlow, F: SurfaceFunction, seeds, count: int, workers: int = 1,
                   **kwargs) -> np.ndarray:
    """Return times from one random start per seed, concatenated in seed order.

    A uniform start falls preferentially into a long gap, and the returns that follow
    are correlated with it until the flow has mixed. Where the frequencies are nearly
    commensurate that takes many returns, so prefer few long trajectories there.
    """
    def one(seed):
        rng = np.random.default_rng(seed)
        x0 = rng.uniform(0.0, 1.0, flow.dimension) * np.asarray(flow.periods)
        return first_returns(flow, F, x0, count, **kwargs).taus

    seeds = list(seeds)
    if workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, seeds))
    else:
        parts = [one(s) for s in seeds]
    return np.concatenate(parts)


# ------------------------------------------------------------- sheets

def sheet_count(flow: TorusFlow, F: SurfaceFunction, direction: int, probes: int = 64,
                seed: int = 0, samples: int = 512) -> int:
    """Zeros of ``F`` along one full period of ``x_direction``, by majority over random probes.

    Each probe fixes the other coordinates at random and starts the sweep at a random
    offset, so zeros sitting on a grid line are avoided almost surely.
    """
    if probes < 16:
        raise InvalidInputError("need at least 16 probes")
    n = flow.dimension
    if not 0 <= direction < n:
        raise InvalidInputError(f"direction must be in [0, {n})")
    rng = np.random.default_rng(seed)
    base = rng.uniform(0.0, 1.0, (probes, n)) * np.asarray(flow.periods)
    P = flow.periods[direction]
    t0 = base[:, direction]

    def func(t, rows):
        x = base[rows].copy()
        x[..., direction] = t
        return F(x)

    rows, _ = _periodic_roots(func, t0, P, samples, 1e-12)
    counts = np.bincount(rows, minlength=probes)
    tally = Counter(counts.tolist())
    m, hits = tally.most_common(1)[0]
    if hits * 2 <= probes:
        raise AmbiguousSheetsError(f"direction {direction}: probe counts {dict(tally)} have no majority")
    return int(m)


def sheet_counts(flow: TorusFlow, F: SurfaceFunction, **kwargs) -> tuple[int, ...]:
    return tuple(sheet_count(flow, F, i, **kwargs) for i in range(flow.dimension))


@dataclass(frozen=True)
class SumRuleReport:
    counts: tuple[int, ...]
    contributions: tuple[float, ...]
    total: float
    expected: float

    @property
    def residual(self) -> float:
        return abs(self.total - self.expected) / self.expected


def verify_sum_rule(g: MetricGraph, basis: LengthBasis | None = None, **kwargs) -> SumRuleReport:
    """Check ``sum_i m_i l_i (2 pi / P_i) = 2 L``, ``m_i`` the sheets over a full period ``P_i``."""
    flow, F = secular_surface(g, basis)
    counts = sheet_counts(flow, F, **kwargs)
    contrib = tuple(m * l * 2.0 * math.pi / P for m, l, P in zip(counts, flow.frequencies, flow.periods))
    report = SumRuleReport(counts, contrib, math.fsum(contrib), 2.0 * total_length(g))
    if report.residual > SUM_RULE_RTOL:
        raise SumRuleError(f"sheet counts {counts} give {report.total!r}, expected {report.expected!r}")
    return report


# --------------------------------------------------------- 2D quadrature

def _gradient(F, p, h=1e-6):
    e = np.eye(p.shape[-1]) * h
    return np.stack([(F(p + e[i]) - F(p - e[i])) / (2.0 * h) for i in range(p.shape[-1])], axis=-1)


def surface_points_2d(flow: TorusFlow, F: SurfaceFunction, grid_size: int, samples: int = 256):
    """Points of the surface on ``grid_size`` vertical and horizontal lines, with flux weights.

    A point found on a vertical line carries the flux ``|l.grad F| / |grad F|`` per unit
    length times the length element ``h1 |grad F| / |F_2|`` and the partition-of-unity
    factor ``F_2^2 / |grad F|^2`` (horizontal lines symmetrically), so every part of the
    surface is covered once whatever its slope.
    """
    P = np.asarray(flow.periods)
    l = np.asarray(flow.frequencies)
    pts, wts = [], []
    for axis in (0, 1):
        other = 1 - axis
        h = P[axis] / grid_size
        fixed = (np.arange(grid_size) + 0.5) * h

        def func(t, rows):
            x = np.empty(np.shape(t) + (2,))
            x[..., axis] = fixed[rows]
            x[..., other] = t
            return F(x)

        # sweeps start off the origin: coordinate lines such as x_i = 0 may lie on the surface
        t0 = np.full(grid_size, SWEEP_OFFSET * P[other] / samples)
        rows, t = _periodic_roots(func, t0, P[other], samples, 1e-14)
        p = np.empty((len(t), 2))
        p[:, axis] = fixed[rows]
        p[:, other] = t
        grad = _gradient(F, p)
        g2 = np.sum(grad * grad, axis=-1)
        flux = np.abs(grad @ l)
        with np.errstate(invalid="ignore", divide="ignore"):
            w = np.where(g2 > 0, flux * np.abs(grad[:, other]) * h / g2, 0.0)
        pts.append(p)
        wts.append(w)
    return np.concatenate(pts), np.concatenate(wts)


def next_crossing(flow: TorusFlow, F: SurfaceFunction, points, rate: float, oversample: int = 8,
                  max_spacings: float = 100.0, tol: float = 1e-12) -> np.ndarray:
    """Flow time from each surface point to the next crossing."""
    points = np.asarray(points, dtype=float)
    l = np.asarray(flow.frequencies)
    step = 1.0 / (rate * oversample)
    delta = 1e-8 / rate
    # an irrational window length keeps grid points off periodic returns of the start point
    window = (2.0 + SWEEP_OFFSET) / rate
    m = int(math.ceil(window / step))
    step = window / m
    tau = np.full(len(points), np.nan)
    todo = np.arange(len(points))
    t0 = np.full(len(points), delta)
    while todo.size:
        def func(t, rows):
            # dividing by t removes the zero at the start point, so that a pair of
            # crossings right after it is still seen as a dip of |f|
            t = np.asarray(t)
            return F(points[todo[rows]] + t[..., None] * l) / t
        lo = t0[todo]
        # padded by a cell on each side; only zeros inside (lo, lo + window] are taken
        rows, roots = _roots.row_roots(func, lo - step, lo + window + step, m + 2, tol)
        inside = (roots > lo[rows]) & (roots <= lo[rows] + window)
        rows, roots = rows[inside], roots[inside]
        first = np.full(todo.size, np.nan)
        if rows.size:
            uniq, idx = np.unique(rows, return_index=True)
            first[uniq] = roots[idx]
        got = ~np.isnan(first)
        tau[todo[got]] = first[got]
        t0[todo] += window
        todo = todo[~got]
        if todo.size and t0[todo[0]] > max_spacings / rate:
            raise ContinuationError(f"no return within {max_spacings} mean spacings",
                                    tuple(points[todo[0]].tolist()))
    return tau


def quadrature_spacing_2d(flow: TorusFlow, F: SurfaceFunction, grid_size: int = 2000,
                          oversample: int = 8) -> SpacingDistribution:
    """Spacing distribution from the flux-weighted return times over the whole surface (two dimensions).

    The mean density is the total flux divided by the torus area; spacings are return
    times in units of the mean spacing.
    """
    if flow.dimension != 2:
        raise InvalidInputError("the quadrature is implemented for two-dimensional tori only")
    pts, w = surface_points_2d(flow, F, grid_size)
    keep = w > 0
    pts, w = pts[keep], w[keep]
    if not pts.size:
        raise ContinuationError("the surface was not found on any grid line", (math.nan, math.nan))
    area = flow.periods[0] * flow.periods[1]
    density = float(np.sum(w) / area)
    tau = next_crossing(flow, F, pts, density, oversample)
    dist = SpacingDistribution.empirical(density * tau, w, name="quadrature")
    dist.info = dict(density=density, points=len(pts), taus=tau, weights=w)
    return dist
