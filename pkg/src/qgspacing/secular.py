"""Secular equations of Neumann quantum graphs and the spectrum solver.

Two equivalent quantisation conditions are provided:

* ``det[I - S(k)] = 0`` with the ``2B x 2B`` bond scattering matrix ``S = D(k) T``;
* ``det h(k) = 0`` with the ``V x V`` vertex matrix ``h``.

``det h`` has poles wherever ``sin(k l_b) = 0``. The solver works with the
regularised function ``f(k) = det h(k) * prod_b sin(k l_b)``, which is a
trigonometric polynomial. It is evaluated as the determinant of the
``(V+B) x (V+B)`` matching system (bond amplitudes and vertex values) whose Schur
complement is ``h``: ``f = (-1)**B det M``. This never divides by ``sin``, so
levels sitting on a pole of ``h`` are resolved as accurately as any other.

Root scanning alone can miss clusters of three or more levels inside one grid cell.
Every scan is therefore reconciled block by block against an exact level count taken
from the eigenphases of ``S``: they all turn counterclockwise as ``k`` grows and their
unwrapped sum is ``2 L k`` plus a constant, so the number of eigenphases passing
through zero between two wavenumbers follows from the principal phases at the two
ends alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _roots
from .errors import InvalidInputError, MissingLevelsError, UnsupportedVariantError
from .graph import DIRICHLET, MetricGraph, mean_density, total_length

DEFAULT_OVERSAMPLE = 8
DEFAULT_TOL = 1e-12
BLOCK_CELLS = 64
SPLIT = 8
NULL_RTOL = 1e-9
AUDIT_REL = 0.005
SPURIOUS_THRESHOLD = 1e-6


@dataclass(frozen=True)
class BondScattering:
    k: float
    S: np.ndarray
    D: np.ndarray
    T: np.ndarray


@dataclass(frozen=True)
class VertexSecular:
    k: float
    h: np.ndarray
    poles: np.ndarray

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.h)))


@dataclass(frozen=True)
class SecularFunction:
    """Real secular function ``k -> f(k)`` of a graph, vectorised over ``k``."""

    graph: MetricGraph
    variant: str = "regularized-det-h"

    @property
    def spurious_filter(self) -> str:
        if self.variant == "regularized-det-h":
            return f"smallest singular value of I - S(k) below {SPURIOUS_THRESHOLD:g} (relative)"
        return "none"

    def __call__(self, k):
        if self.variant == "regularized-det-h":
            return secular_value(self.graph, k)
        if self.variant == "abs-det-I-minus-S":
            return np.abs(scattering_determinant(self.graph, k))
        raise InvalidInputError(f"unknown secular variant {self.variant!r}")


@dataclass(frozen=True)
class SpectrumSample:
    levels: np.ndarray
    k_range: tuple[float, float]
    settings: dict = field(default_factory=dict)
    audit: float = 0.0
    flagged: tuple[int, ...] = ()

    def __len__(self):
        return len(self.levels)


@dataclass(frozen=True)
class PhaseLine:
    """Bond phases ``theta_b(t) = offset_b + t * rates_b`` with positive rates.

    The spectrum of a graph is the line through the origin with the bond lengths as
    rates; a torus trajectory is a line with an offset.
    """

    offset: np.ndarray
    rates: np.ndarray

    @classmethod
    def of(cls, g: MetricGraph) -> "PhaseLine":
        return cls(np.zeros(g.bond_count), np.asarray(g.lengths, dtype=float))

    @property
    def total_rate(self) -> float:
        return math.fsum(self.rates)

    def theta(self, t):
        return self.offset + np.multiply.outer(np.asarray(t, dtype=float), self.rates)


# ------------------------------------------------------------ directed bonds

def _directed(g: MetricGraph):
    """Start vertex, end vertex, length and reversal index of every directed bond.

    Directed bond ``2b`` runs ``i -> j`` along bond ``b = (i, j)`` and ``2b + 1`` runs back.
    """
    start, end, length = [], [], []
    for b in g.bonds:
        start += [b.i, b.j]
        end += [b.j, b.i]
        length += [b.length, b.length]
    rev = np.arange(2 * g.bond_count) ^ 1
    return np.array(start), np.array(end), np.array(length), rev


def transition_matrix(g: MetricGraph) -> np.ndarray:
    """Vertex transition amplitudes ``T[a, b] = 2/v - delta(a, reverse(b))`` for ``b`` feeding ``a``."""
    start, end, _, rev = _directed(g)
    v = g.valence
    connected = end[None, :] == start[:, None]
    T = np.where(connected, 2.0 / v[start][:, None], 0.0)
    n = len(start)
    T[np.arange(n), rev] -= 1.0
    return T


def bond_scattering(g: MetricGraph, k: float) -> BondScattering:
    if g.boundary == DIRICHLET:
        raise UnsupportedVariantError("Dirichlet graphs decouple into bonds; use integrable_levels")
    _, _, length, _ = _directed(g)
    T = transition_matrix(g)
    D = np.diag(np.exp(1j * k * length))
    return BondScattering(float(k), D @ T, D, T)


def _scattering_stack(g: MetricGraph, k: np.ndarray, line: PhaseLine | None = None) -> np.ndarray:
    T = transition_matrix(g)
    if line is None:
        _, _, length, _ = _directed(g)
        phase = np.exp(1j * np.multiply.outer(k, length))
    else:
        # directed bonds 2b and 2b + 1 both carry the phase of bond b
        phase = np.exp(1j * np.repeat(line.theta(k), 2, axis=-1))
    return phase[..., :, None] * T


def scattering_determinant(g: MetricGraph, k):
    """``det[I - S(k)]`` for scalar or array ``k``."""
    k = np.asarray(k, dtype=float)
    S = _scattering_stack(g, k.ravel())
    n = S.shape[-1]
    return np.linalg.det(np.eye(n) - S).reshape(k.shape)


def smallest_singular_value(g: MetricGraph, k):
    k = np.asarray(k, dtype=float)
    S = _scattering_stack(g, k.ravel())
    n = S.shape[-1]
    sv = np.linalg.svd(np.eye(n) - S, compute_uv=False)
    return sv[..., -1].reshape(k.shape)


# -------------------------------------------------------------- vertex form

def vertex_secular(g: MetricGraph, k: float, window: float | None = None) -> VertexSecular:
    """The vertex matrix ``h(k)`` and the poles of ``h`` within ``window`` of ``k``.

    Loops contribute ``2 tan(k l / 2)`` to the diagonal of their vertex.
    """
    V = g.vertex_count
    h = np.zeros((V, V))
    with np.errstate(divide="ignore", invalid="ignore"):
        for b in g.bonds:
            x = k * b.length
            if b.is_loop:
                h[b.i, b.i] += 2.0 * math.tan(x / 2.0)
            else:
                h[b.i, b.i] -= 1.0 / math.tan(x)
                h[b.j, b.j] -= 1.0 / math.tan(x)
                h[b.i, b.j] += 1.0 / math.sin(x)
                h[b.j, b.i] += 1.0 / math.sin(x)
    if window is None:
        window = 1.0 / mean_density(g)
    poles = []
    for l in set(g.lengths.tolist()):
        m = np.arange(math.ceil((k - window) * l / math.pi), math.floor((k + window) * l / math.pi) + 1)
        poles.extend((m[m > 0] * math.pi / l).tolist())
    return VertexSecular(float(k), h, np.array(sorted(poles)))


def matching_matrix(g: MetricGraph, k) -> np.ndarray:
    """Stack of ``(V+B) x (V+B)`` matching matrices, shape ``k.shape + (V+B, V+B)``.

    Unknowns are the sine amplitudes ``c_b`` of the bonds (columns ``0..B-1``) and the
    vertex values ``phi_i`` (columns ``B..B+V-1``). Rows ``0..B-1`` impose continuity at
    the far end of each bond, rows ``B..`` current conservation at each vertex.
    """
    k = np.asarray(k, dtype=float)
    return phase_matching_matrix(g, np.multiply.outer(k, g.lengths))


def phase_matching_matrix(g: MetricGraph, theta) -> np.ndarray:
    """Matching matrices for arbitrary bond phases ``theta[..., b]`` in place of ``k l_b``."""
    theta = np.asarray(theta, dtype=float)
    B, V = g.bond_count, g.vertex_count
    if theta.shape[-1] != B:
        raise InvalidInputError(f"expected {B} bond phases, got {theta.shape[-1]}")
    M = np.zeros(theta.shape[:-1] + (B + V, B + V))
    c, s = np.cos(theta), np.sin(theta)
    for b, bond in enumerate(g.bonds):
        cb, sb = c[..., b], s[..., b]
        i, j = B + bond.i, B + bond.j
        M[..., b, b] = -sb
        if bond.is_loop:
            M[..., b, i] += 1.0 - cb
            M[..., i, b] += 1.0 - cb
            M[..., i, i] += sb
        else:
            M[..., b, j] += 1.0
            M[..., b, i] -= cb
            M[..., i, b] += 1.0
            M[..., j, b] -= cb
            M[..., j, i] += sb
    return M


def phase_secular_value(g: MetricGraph, theta):
    """The regularised secular function with bond phases ``theta[..., b]``."""
    theta = np.asarray(theta, dtype=float)
    if g.boundary == DIRICHLET:
        return np.prod(np.sin(theta), axis=-1)
    sign = -1.0 if g.bond_count % 2 else 1.0
    return sign * np.linalg.det(phase_matching_matrix(g, theta))


def secular_value(g: MetricGraph, k):
    """Regularised secular function ``det h(k) * prod_b sin(k l_b)``.

    For Dirichlet graphs the bonds decouple and the function is ``prod_b sin(k l_b)``.
    """
    k = np.asarray(k, dtype=float)
    return phase_secular_value(g, np.multiply.outer(k, g.lengths))


# ------------------------------------------------------------------ solvers

def _audit_bound(g: MetricGraph, expected: float, audit_rel: float) -> float:
    # the counting function fluctuates by O(B) levels around the Weyl term
    return max(audit_rel * expected, 1.0 + g.bond_count)


def _worst_subinterval(levels, k_min, k_max, density, pieces=20):
    edges = np.linspace(k_min, k_max, pieces + 1)
    counts = np.histogram(levels, edges)[0]
    dev = counts - density * np.diff(edges)
    w = int(np.argmax(np.abs(dev)))
    return (float(edges[w]), float(edges[w + 1])), float(dev[w])


def eigenphase_sum(g: MetricGraph, k, line: PhaseLine | None = None):
    """Sum of the eigenphases of ``S(k)`` taken in ``[0, 2 pi)``, and the smallest distance of any to zero."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    theta = np.mod(np.angle(np.linalg.eigvals(_scattering_stack(g, k, line))), 2.0 * np.pi)
    return theta.sum(axis=-1), np.min(np.minimum(theta, 2.0 * np.pi - theta), axis=-1)


def level_count(g: MetricGraph, edges, line: PhaseLine | None = None) -> np.ndarray:
    """Exact number of levels (with multiplicity) in each interval ``(edges[i], edges[i+1]]``.

    With a ``line`` the count is of the zeros of the secular function along it.
    """
    edges = np.asarray(edges, dtype=float)
    A, _ = eigenphase_sum(g, edges, line)
    rate = total_length(g) if line is None else line.total_rate
    raw = (2.0 * rate * np.diff(edges) - np.diff(A)) / (2.0 * np.pi)
    return np.rint(raw).astype(np.int64)


def _safe_edges(g, edges, levels, scale, line=None):
    """Move interior block edges to the middle of the gap between found levels, away from any level."""
    edges = np.asarray(edges, dtype=float).copy()
    inner = edges[1:-1]
    i = np.searchsorted(levels, inner)
    ok = (i > 0) & (i < len(levels))
    inner[ok] = 0.5 * (levels[np.maximum(i[ok] - 1, 0)] + levels[np.minimum(i[ok], len(levels) - 1)])
    edges[1:-1] = inner
    edges = np.unique(edges)
    for _ in range(8):
        _, gap = eigenphase_sum(g, edges, line)
        close = gap < 1e-8
        close[[0, -1]] = False
        if not np.any(close):
            break
        edges[close] += 1e-3 * scale
    return edges


def _touch_points(func, a, b, step, fscale):
    """Grid minima of ``|f|`` that reach zero without a sign change (even multiplicity)."""
    t = np.linspace(a, b, max(16, int(math.ceil((b - a) / step)) + 1))
    f = np.abs(func(t))
    j = np.flatnonzero((f[1:-1] <= f[:-2]) & (f[1:-1] <= f[2:])) + 1
    if j.size == 0:
        return np.empty(0)
    x, fx = _roots.golden_min(lambda u: np.abs(func(u)), t[j - 1], t[j + 1], n_iter=100)
    return x[fx < NULL_RTOL * fscale]


def _line_matrix(g, k, line):
    if line is None:
        return matching_matrix(g, k)
    return phase_matching_matrix(g, line.theta(k))


def multiplicity(g: MetricGraph, k, line: PhaseLine | None = None) -> np.ndarray:
    """Dimension of the eigenspace at each ``k``: the nullity of the matching matrix."""
    sv = np.linalg.svd(_line_matrix(g, np.atleast_1d(k), line), compute_uv=False)
    # the entries of M are O(1); M can vanish altogether at a highly degenerate level
    return np.maximum(1, np.count_nonzero(sv < NULL_RTOL * np.maximum(1.0, sv[..., :1]), axis=-1))


def _refine(g, func, a, b, need, tol, fscale, depth=1, line=None):
    """Levels in ``(a, b]`` given their exact number: scan, and split into counted pieces on failure."""
    step = (b - a) / BLOCK_CELLS
    # one padding cell on each side so that levels next to an edge still sit inside the grid
    roots = _roots.scan_zeros(func, a - step, b + step, step, tol)
    roots = roots[(roots > a) & (roots <= b)]
    if len(roots) == need:
        return roots, depth
    touch = _touch_points(func, a - step, b + step, step, fscale)
    touch = touch[(touch > a) & (touch <= b)]
    if touch.size and roots.size:
        touch = touch[np.min(np.abs(touch[:, None] - roots[None, :]), axis=1) > 1e-9 * max(1.0, b)]
    cand = np.sort(np.concatenate([roots, touch]))
    if cand.size:
        # a root of odd multiplicity > 1 is bisected only to about tol**(1/m); the smallest
        # singular value of the matching matrix vanishes linearly there and pins it down
        sig = lambda k: np.linalg.svd(_line_matrix(g, k, line), compute_uv=False)[..., -1]
        cand, _ = _roots.golden_min(sig, np.maximum(cand - step, a), np.minimum(cand + step, b), n_iter=100)
        cand = np.unique(cand)
        cand = cand[np.append(True, np.diff(cand) > 1e-9 * max(1.0, b))]
        mult = multiplicity(g, cand, line)
        if mult.sum() == need:
            return np.repeat(cand, mult), depth
    if b - a < 1e-10 * max(1.0, b):
        if cand.size == 0:
            raise MissingLevelsError(f"no level located in ({a!r}, {b!r}], the eigenphase count is {need}",
                                     (float(a), float(b)), float(-need))
        # levels closer than the resolution are reported as one multiple level
        return np.full(need, cand.mean()), depth
    edges = _safe_edges(g, np.linspace(a, b, SPLIT + 1), roots, step, line)
    counts = level_count(g, edges, line)
    parts, deepest = [], depth
    for lo, hi, n in zip(edges[:-1], edges[1:], counts):
        mine = roots[(roots > lo) & (roots <= hi)]
        if len(mine) != n:
            mine, d = _refine(g, func, lo, hi, int(n), tol, fscale, depth + 1, line)
            deepest = max(deepest, d)
        parts.append(mine)
    return np.concatenate(parts), deepest


def _reconcile(g, func, levels, k_min, k_max, step, tol, line=None):
    """Replace the levels of every block whose count disagrees with the eigenphase count."""
    nominal = np.append(np.arange(k_min, k_max, BLOCK_CELLS * step), k_max)
    edges = _safe_edges(g, nominal, levels, step, line)
    counts = level_count(g, edges, line)
    found = np.histogram(levels, edges)[0]
    bad = np.flatnonzero(found != counts)
    if bad.size == 0:
        return levels, 0, 0
    keep = np.ones(len(levels), dtype=bool)
    extra, deepest = [], 0
    for b in bad:
        lo, hi = edges[b], edges[b + 1]
        keep &= ~((levels > lo) & (levels <= hi))
        fscale = float(np.max(np.abs(func(np.linspace(lo, hi, BLOCK_CELLS + 1)))))
        roots, d = _refine(g, func, lo, hi, int(counts[b]), tol, fscale, line=line)
        extra.append(roots)
        deepest = max(deepest, d)
    return np.sort(np.concatenate([levels[keep]] + extra)), int(bad.size), deepest


def find_levels(g: MetricGraph, k_min: float, k_max: float, oversample: int = DEFAULT_OVERSAMPLE,
                tol: float = DEFAULT_TOL, audit_rel: float = AUDIT_REL, workers: int = 1,
                chunk_points: int = 16384) -> SpectrumSample:
    """All eigen-wavenumbers in ``(k_min, k_max]``, repeated according to multiplicity.

    The secular function is sampled with ``oversample`` points per mean spacing and sign
    changes are bisected to ``tol * max(1, k)``. Blocks of the range whose root count
    differs from the exact eigenphase count are rescanned on finer grids. The final
    number of levels is audited against the Weyl law.
    """
    if g.boundary == DIRICHLET:
        return integrable_levels(g.lengths, k_max, k_min=k_min)
    if not (k_min > 0 and k_max > k_min):
        raise InvalidInputError("need 0 < k_min < k_max (k = 0 is excluded)")
    if oversample < 4:
        raise InvalidInputError("oversample must be at least 4")
    density = mean_density(g)
    expected = density * (k_max - k_min)
    func = SecularFunction(g)
    step = 1.0 / (density * oversample)
    levels = _roots.scan_zeros(func, k_min, k_max, step, tol, chunk_points, workers)
    levels = levels[levels > k_min]
    levels, refined, depth = _reconcile(g, func, levels, k_min, k_max, step, tol)

    deviation = len(levels) - expected
    if abs(deviation) > _audit_bound(g, expected, audit_rel):
        where, local = _worst_subinterval(levels, k_min, k_max, density)
        raise MissingLevelsError(
            f"found {len(levels)} levels, Weyl law expects {expected:.1f}; "
            f"worst subinterval {where} deviates by {local:+.1f}", where, deviation)

    sigma = smallest_singular_value(g, levels) if len(levels) else np.empty(0)
    scale = 1.0 + levels * float(np.max(g.lengths))
    keep = sigma <= SPURIOUS_THRESHOLD * scale
    levels = levels[keep]
    with np.errstate(divide="ignore"):
        on_pole = np.min(np.abs(np.sin(np.multiply.outer(levels, g.lengths))), axis=-1) < 1e-8
    settings = dict(method="scan-bisect", oversample=oversample, tol=tol, refined_blocks=refined,
                    refine_depth=depth, rejected=int(np.count_nonzero(~keep)))
    return SpectrumSample(levels, (float(k_min), float(k_max)), settings,
                          float(len(levels) - expected), tuple(np.flatnonzero(on_pole).tolist()))


def phase_crossings(g: MetricGraph, line: PhaseLine, t_min: float, t_max: float,
                    oversample: int = DEFAULT_OVERSAMPLE, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Zeros in ``(t_min, t_max]`` of the secular function along the phase line, with multiplicity.

    Scanned like ``find_levels`` and reconciled block by block against the exact
    eigenphase count, which holds for any line with positive rates.
    """
    if g.boundary == DIRICHLET:
        raise UnsupportedVariantError("Dirichlet graphs decouple into bonds; use integrable_levels")
    if np.any(np.asarray(line.rates) <= 0):
        raise InvalidInputError("phase rates must be positive")
    func = lambda t: phase_secular_value(g, line.theta(t))
    step = math.pi / (line.total_rate * oversample)
    roots = _roots.scan_zeros(func, t_min, t_max, step, tol)
    roots = roots[roots > t_min]
    roots, _, _ = _reconcile(g, func, roots, t_min, t_max, step, tol, line)
    return roots


def find_n_levels(g: MetricGraph, count: int, k_min: float = 0.1, **kwargs) -> SpectrumSample:
    """The first ``count`` levels above ``k_min``."""
    density = mean_density(g)
    span = (count + 2.0 * (1 + g.bond_count) + 0.01 * count) / density
    sample = find_levels(g, k_min, k_min + span, **kwargs)
    if len(sample) < count:
        raise MissingLevelsError(f"only {len(sample)} of {count} levels found")
    levels = sample.levels[:count]
    k_max = float(levels[-1])
    flagged = tuple(i for i in sample.flagged if i < count)
    return SpectrumSample(levels, (sample.k_range[0], k_max), sample.settings,
                          float(count - density * (k_max - k_min)), flagged)


def integrable_levels(lengths, k_max: float, k_min: float = 0.0) -> SpectrumSample:
    """Union of the progressions ``m*pi/l_b`` (``m >= 1``) in ``(k_min, k_max]``.

    Exactly coinciding values are kept as separate (degenerate) entries.
    """
    lengths = np.asarray(lengths, dtype=float)
    if lengths.size == 0 or np.any(lengths <= 0):
        raise InvalidInputError("lengths must be positive")
    parts = []
    for l in lengths:
        m = np.arange(max(1, math.floor(k_min * l / math.pi)), math.floor(k_max * l / math.pi) + 2)
        k = m * math.pi / l
        parts.append(k[(k > k_min) & (k <= k_max)])
    levels = np.sort(np.concatenate(parts), kind="stable")
    expected = lengths.sum() / math.pi * (k_max - k_min)
    degenerate = tuple(np.flatnonzero(np.diff(levels) == 0).tolist())
    return SpectrumSample(levels, (float(k_min), float(k_max)), dict(method="integrable"),
                          float(len(levels) - expected), degenerate)


def scattering_levels(g: MetricGraph, k_min: float, k_max: float, oversample: int = 128,
                      threshold: float = 1e-6) -> np.ndarray:
    """Levels located as dips of the smallest singular value of ``I - S(k)``.

    Independent of the vertex formulation; used to cross-check ``find_levels``.
    """
    density = mean_density(g)
    step = 1.0 / (density * oversample)
    n = int(math.ceil((k_max - k_min) / step))
    k = k_min + np.arange(n + 1) * (k_max - k_min) / n
    sig = smallest_singular_value(g, k)
    j = np.flatnonzero((sig[1:-1] < sig[:-2]) & (sig[1:-1] <= sig[2:])) + 1
    x, val = _roots.golden_min(lambda t: smallest_singular_value(g, t), k[j - 1], k[j + 1], n_iter=90)
    return np.sort(x[val < threshold * (1.0 + x * float(np.max(g.lengths)))])
