"""Metric graphs, length bases and the constructors used throughout the package.

A graph is a set of ``V`` vertices joined by ``B`` bonds of positive length.
Loops (``i == j``) are allowed and count twice towards the valence of their
vertex, so that the number of directed bonds is always ``2B``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .errors import BasisMismatchError, InvalidInputError

NEUMANN = "neumann"
DIRICHLET = "dirichlet"
BOUNDARIES = (NEUMANN, DIRICHLET)

BASIS_RTOL = 1e-12
DEFAULT_RELATION_BOUND = 50


@dataclass(frozen=True)
class Bond:
    i: int
    j: int
    length: float

    @property
    def is_loop(self) -> bool:
        return self.i == self.j


def _check_lengths(lengths: Iterable[float]) -> tuple[float, ...]:
    out = tuple(float(x) for x in lengths)
    for x in out:
        if not math.isfinite(x) or x <= 0:
            raise InvalidInputError(f"bond lengths must be positive and finite, got {x!r}")
    return out


@dataclass(frozen=True)
class MetricGraph:
    vertex_count: int
    bonds: tuple[Bond, ...]
    boundary: str = NEUMANN
    name: str = "graph"

    def __post_init__(self):
        if self.vertex_count < 1:
            raise InvalidInputError("a graph needs at least one vertex")
        if not self.bonds:
            raise InvalidInputError("a graph needs at least one bond")
        if self.boundary not in BOUNDARIES:
            raise InvalidInputError(f"unknown boundary {self.boundary!r}; expected one of {BOUNDARIES}")
        bonds = tuple(b if isinstance(b, Bond) else Bond(int(b[0]), int(b[1]), float(b[2]))
                      for b in self.bonds)
        object.__setattr__(self, "bonds", bonds)
        _check_lengths(b.length for b in bonds)
        for b in bonds:
            if not (0 <= b.i < self.vertex_count and 0 <= b.j < self.vertex_count):
                raise InvalidInputError(f"bond {b} references a vertex outside 0..{self.vertex_count - 1}")
        if self.boundary == NEUMANN and np.any(self.valence == 0):
            isolated = np.flatnonzero(self.valence == 0).tolist()
            raise InvalidInputError(f"isolated vertices {isolated} are not allowed under Neumann conditions")

    @property
    def bond_count(self) -> int:
        return len(self.bonds)

    @property
    def directed_bond_count(self) -> int:
        return 2 * len(self.bonds)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([b.length for b in self.bonds])

    @cached_property
    def connectivity(self) -> np.ndarray:
        """Symmetric matrix of bond multiplicities between distinct vertices (loops on the diagonal)."""
        C = np.zeros((self.vertex_count, self.vertex_count), dtype=int)
        for b in self.bonds:
            C[b.i, b.j] += 1
            if not b.is_loop:
                C[b.j, b.i] += 1
        return C

    @cached_property
    def valence(self) -> np.ndarray:
        v = np.zeros(self.vertex_count, dtype=int)
        for b in self.bonds:
            v[b.i] += 1
            v[b.j] += 1
        return v

    @property
    def betti_number(self) -> int:
        """Number of independent cycles, assuming the graph is connected."""
        return self.bond_count - self.vertex_count + 1

    @cached_property
    def commensurate_relations(self) -> tuple[tuple[int, int, Fraction], ...]:
        """Pairs of bonds whose length ratio is a fraction with small numerator and denominator."""
        return tuple((a, b, r) for a, b, r in pairwise_relations(self.lengths))

    @property
    def commensurate(self) -> bool:
        return bool(self.commensurate_relations)


def total_length(g: MetricGraph) -> float:
    return math.fsum(b.length for b in g.bonds)


def mean_density(g: MetricGraph) -> float:
    """Mean number of eigen-wavenumbers per unit ``k``."""
    return total_length(g) / math.pi


# ---------------------------------------------------------------- builders

def build_star(lengths: Sequence[float], boundary: str = NEUMANN) -> MetricGraph:
    """Star graph: vertex 0 is the centre, bond ``b`` ends on the outer vertex ``b + 1``."""
    lengths = _check_lengths(lengths)
    if not lengths:
        raise InvalidInputError("a star needs at least one bond")
    bonds = tuple(Bond(0, b + 1, l) for b, l in enumerate(lengths))
    return MetricGraph(len(lengths) + 1, bonds, boundary, name=f"star{len(lengths)}")


def build_complete(V: int, lengths: Sequence[float], boundary: str = NEUMANN) -> MetricGraph:
    """Fully connected graph; bonds are assigned to vertex pairs in lexicographic order."""
    lengths = _check_lengths(lengths)
    pairs = list(itertools.combinations(range(V), 2))
    if V < 2 or len(lengths) != len(pairs):
        raise InvalidInputError(f"complete graph on {V} vertices needs {len(pairs)} lengths, got {len(lengths)}")
    bonds = tuple(Bond(i, j, l) for (i, j), l in zip(pairs, lengths))
    return MetricGraph(V, bonds, boundary, name=f"complete{V}")


def build_figure_eight(l1: float, l2: float) -> MetricGraph:
    l1, l2 = _check_lengths((l1, l2))
    return MetricGraph(1, (Bond(0, 0, l1), Bond(0, 0, l2)), NEUMANN, name="figure_eight")


def build_lasso(l1: float, l2: float) -> MetricGraph:
    """Bond of length ``l1`` from vertex 0 to vertex 1, plus a loop of length ``l2`` on vertex 1."""
    l1, l2 = _check_lengths((l1, l2))
    return MetricGraph(2, (Bond(0, 1, l1), Bond(1, 1, l2)), NEUMANN, name="lasso")


def build_from_bonds(bonds: Sequence[tuple[int, int, float]], boundary: str = NEUMANN,
                     vertex_count: int | None = None) -> MetricGraph:
    bonds = tuple(Bond(int(i), int(j), float(l)) for i, j, l in bonds)
    if not bonds:
        raise InvalidInputError("empty bond list")
    if vertex_count is None:
        vertex_count = 1 + max(max(b.i, b.j) for b in bonds)
    return MetricGraph(vertex_count, bonds, boundary, name="custom")


# ----------------------------------------------------------- length bases

@dataclass(frozen=True)
class LengthBasis:
    """Declared incommensurate lengths plus the rational coordinates of every bond length."""

    basis_lengths: tuple[float, ...]
    coefficients: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        basis = _check_lengths(self.basis_lengths)
        coeffs = tuple(tuple(Fraction(c) for c in row) for row in self.coefficients)
        for row in coeffs:
            if len(row) != len(basis):
                raise InvalidInputError(f"coefficient row {row} does not match basis size {len(basis)}")
        object.__setattr__(self, "basis_lengths", basis)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def dimension(self) -> int:
        return len(self.basis_lengths)

    @property
    def coefficient_matrix(self) -> np.ndarray:
        """Float ``(B, n)`` matrix of coefficients."""
        return np.array([[float(c) for c in row] for row in self.coefficients]).reshape(-1, self.dimension)

    def reconstruct(self) -> np.ndarray:
        return self.coefficient_matrix @ np.asarray(self.basis_lengths)

    def denominators(self) -> list[int]:
        """Least common denominator of each basis column."""
        out = []
        for col in range(self.dimension):
            den = 1
            for row in self.coefficients:
                den = math.lcm(den, row[col].denominator)
            out.append(den)
        return out

    @classmethod
    def natural(cls, g: MetricGraph) -> "LengthBasis":
        """One basis element per distinct bond length (exact float equality)."""
        distinct: list[float] = []
        for b in g.bonds:
            if b.length not in distinct:
                distinct.append(b.length)
        rows = tuple(tuple(Fraction(int(b.length == d)) for d in distinct) for b in g.bonds)
        return cls(tuple(distinct), rows)

    @classmethod
    def fit(cls, basis_lengths: Sequence[float], bond_lengths: Sequence[float],
            max_denominator: int = DEFAULT_RELATION_BOUND) -> "LengthBasis":
        """Express each bond length as a rational multiple of a single basis length.

        Bonds that are combinations of several basis lengths need explicit coefficients.
        """
        basis = _check_lengths(basis_lengths)
        rows = []
        for l in _check_lengths(bond_lengths):
            for col, e in enumerate(basis):
                r = Fraction(l / e).limit_denominator(max_denominator)
                if r > 0 and abs(float(r) * e - l) <= BASIS_RTOL * l:
                    rows.append(tuple(r if c == col else Fraction(0) for c in range(len(basis))))
                    break
            else:
                raise BasisMismatchError(f"bond length {l!r} is not a small rational multiple of any basis length")
        return cls(basis, tuple(rows))


def pairwise_relations(values: Sequence[float], bound: int = DEFAULT_RELATION_BOUND,
                       rtol: float = 1e-10):
    """Yield ``(a, b, p/q)`` with ``values[a]/values[b] == p/q`` for ``p, q <= bound``."""
    values = list(values)
    for a, b in itertools.combinations(range(len(values)), 2):
        r = Fraction(values[a] / values[b]).limit_denominator(bound)
        if r.numerator <= bound and r.numerator > 0 and \
                abs(float(r) * values[b] - values[a]) <= rtol * max(values[a], values[b]):
            yield a, b, r


def meaningful_bound(n: int, bound: int = DEFAULT_RELATION_BOUND, rtol: float = 1e-10,
                     chance: float = 1e-3) -> int:
    """Largest coefficient bound for which a chance relation among ``n`` generic numbers is unlikely.

    With ``(2N+1)**n`` candidate vectors and a tolerance ``rtol``, spurious hits become
    certain once the lattice is large enough; the bound is capped accordingly.
    """
    cap = int(((chance / rtol) ** (1.0 / n) - 1) // 2)
    return max(1, min(bound, cap))


def integer_relation(values: Sequence[float], bound: int = DEFAULT_RELATION_BOUND,
                     rtol: float = 1e-10) -> tuple[int, ...] | None:
    """Integer vector ``m`` with ``|m_i| <= bound`` and ``sum m_i x_i ~ 0``, or ``None``.

    Uses PSLQ; a relation is accepted only if it really holds to ``rtol``.
    """
    values = [float(v) for v in values]
    if len(values) < 2:
        return None
    scale = max(abs(v) for v in values)
    with mpmath.workdps(30):
        rel = mpmath.pslq([mpmath.mpf(v) / scale for v in values], tol=mpmath.mpf(rtol),
                          maxcoeff=bound, maxsteps=10_000)
    if rel is None or max(abs(m) for m in rel) > bound:
        return None
    resid = abs(math.fsum(m * v for m, v in zip(rel, values)))
    if resid > rtol * scale * max(abs(m) for m in rel):
        return None
    return tuple(int(m) for m in rel)


@dataclass(frozen=True)
class ValidationReport:
    dimension: int
    residuals: np.ndarray
    pairwise: tuple
    relation: tuple[int, ...] | None
    relation_bound: int

    @property
    def incommensurate(self) -> bool:
        return not self.pairwise and self.relation is None


def validate(g: MetricGraph, basis: LengthBasis, bound: int = DEFAULT_RELATION_BOUND) -> ValidationReport:
    """Check that ``basis`` reproduces the bond lengths and look for hidden rational relations."""
    if len(basis.coefficients) != g.bond_count:
        raise BasisMismatchError(f"basis has {len(basis.coefficients)} coefficient rows for {g.bond_count} bonds")
    if basis.dimension > g.bond_count:
        raise BasisMismatchError("basis dimension exceeds the number of bonds")
    lengths = g.lengths
    resid = np.abs(basis.reconstruct() - lengths) / lengths
    if np.any(resid > BASIS_RTOL):
        worst = int(np.argmax(resid))
        raise BasisMismatchError(f"bond {worst} reconstructed with relative residual {resid[worst]:.3g}")
    pairs = tuple(pairwise_relations(basis.basis_lengths, bound))
    n = basis.dimension
    eff = meaningful_bound(n, bound) if n > 1 else 0
    rel = integer_relation(basis.basis_lengths, eff) if n > 1 else None
    return ValidationReport(n, resid, pairs, rel, eff)
