"""Run configuration, CSV output and the on-disk spectrum cache.

A run is described by one TOML file::

    version = 1
    seeds = [0, 1]

    [graph]
    kind = "star"                      # star | complete | figure_eight | lasso | bonds | integrable
    lengths = ["pi", "3.183459012", 3.1442336073]

    [solver]
    levels = 5000                      # or k_max = ...
    oversample = 8

Lengths may be numbers or strings. Strings are parsed exactly as decimals or as
arithmetic over ``pi``, ``e`` and ``sqrt``.
"""

from __future__ import annotations

import ast
import hashlib
import json
import logging
import math
import operator
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ConfigError, QGraphError
from .graph import (BOUNDARIES, NEUMANN, LengthBasis, MetricGraph, build_complete, build_figure_eight,
                    build_from_bonds, build_lasso, build_star)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

CONFIG_VERSION = 1
GRAPH_KINDS = ("star", "complete", "figure_eight", "lasso", "bonds", "integrable")
REFERENCES = ("poisson", "wigner", "integrable", "star2", "figure8")
CACHE_FORMAT = 1

_BINARY = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {"pi": math.pi, "e": math.e}
_FUNCS = {"sqrt": math.sqrt}


def parse_length(value, where: str) -> float:
    """A positive finite number from a TOML number or a length expression."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        out = _evaluate(value, where)
    else:
        raise ConfigError(f"{where}: expected a number or an expression, got {type(value).__name__}")
    if not math.isfinite(out) or out <= 0:
        raise ConfigError(f"{where}: lengths must be positive and finite, got {out!r}")
    return out


def _evaluate(text: str, where: str) -> float:
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"{where}: cannot parse {text!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _BINARY:
            return _BINARY[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS \
                and len(node.args) == 1 and not node.keywords:
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ConfigError(f"{where}: {ast.unparse(node)!r} is not allowed in a length expression")

    try:
        return float(ev(tree))
    except (ArithmeticError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {text!r} does not evaluate to a number ({exc})") from exc


def _lengths(block: dict, key: str, where: str) -> tuple[float, ...]:
    raw = block.get(key)
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{where}.{key}: expected a non-empty list of lengths")
    return tuple(parse_length(v, f"{where}.{key}[{i}]") for i, v in enumerate(raw))


def _number(block: dict, key: str, where: str, default=None, kind=float, positive=True):
    if key not in block:
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {value!r}")
    if kind is int and value != int(value):
        raise ConfigError(f"{where}.{key}: expected an integer, got {value!r}")
    value = kind(value)
    if positive and not value > 0:
        raise ConfigError(f"{where}.{key}: must be positive, got {value!r}")
    return value


def _table(doc: dict, key: str) -> dict:
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"{key}: expected a table")
    return value


@dataclass(frozen=True)
class RunConfig:
    graph: MetricGraph | None
    lengths: tuple[float, ...]
    graph_block: dict
    basis: LengthBasis | None = None
    k_min: float = 1e-6
    k_max: float | None = None
    levels: int | None = None
    oversample: int = 8
    tol: float = 1e-12
    workers: int = 1
    bin_width: float = 0.05
    fit_window: float = 0.1
    references: tuple[str, ...] = ("poisson", "wigner")
    returns_count: int = 1000
    grid_size: int = 2000
    analytic: dict = field(default_factory=dict)
    out_dir: Path = Path("out")
    seeds: tuple[int, ...] = (0,)
    source: str = ""

    @property
    def integrable(self) -> bool:
        return self.graph is None

    def spectrum_key(self) -> str:
        """Hash of everything that determines the spectrum."""
        basis = None if self.basis is None else [list(map(repr, self.basis.basis_lengths)),
                                                 [[str(c) for c in row] for row in self.basis.coefficients]]
        payload = dict(format=CACHE_FORMAT, graph=self.graph_block, lengths=[repr(x) for x in self.lengths],
                       basis=basis, k_min=repr(self.k_min), k_max=repr(self.k_max), levels=self.levels,
                       oversample=self.oversample, tol=repr(self.tol))
        text = json.dumps(payload, sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()[:24]


def _build_graph(block: dict) -> tuple[MetricGraph | None, tuple[float, ...]]:
    kind = block.get("kind")
    if kind not in GRAPH_KINDS:
        raise ConfigError(f"graph.kind: expected one of {', '.join(GRAPH_KINDS)}, got {kind!r}")
    boundary = block.get("boundary", NEUMANN)
    if boundary not in BOUNDARIES:
        raise ConfigError(f"graph.boundary: expected one of {', '.join(BOUNDARIES)}, got {boundary!r}")
    try:
        if kind == "bonds":
            raw = block.get("bonds")
            if not isinstance(raw, list) or not raw:
                raise ConfigError("graph.bonds: expected a list of [i, j, length] triples")
            bonds = []
            for n, item in enumerate(raw):
                if not (isinstance(item, list) and len(item) == 3 and all(isinstance(v, int) for v in item[:2])):
                    raise ConfigError(f"graph.bonds[{n}]: expected [i, j, length] with integer vertices")
                bonds.append((item[0], item[1], parse_length(item[2], f"graph.bonds[{n}][2]")))
            g = build_from_bonds(bonds, boundary)
            return g, g.lengths
        lengths = _lengths(block, "lengths", "graph")
        if kind == "integrable":
            return None, lengths
        if kind == "star":
            return build_star(lengths, boundary), lengths
        if kind == "complete":
            V = _number(block, "vertices", "graph", kind=int)
            if V is None:
                raise ConfigError("graph.vertices: required for a complete graph")
            return build_complete(V, lengths, boundary), lengths
        if len(lengths) != 2:
            raise ConfigError(f"graph.lengths: a {kind} takes two lengths, got {len(lengths)}")
        g = build_figure_eight(*lengths) if kind == "figure_eight" else build_lasso(*lengths)
        return g, lengths
    except ConfigError:
        raise
    except QGraphError as exc:
        raise ConfigError(f"graph: {exc}") from exc


def _build_basis(block: dict, graph: MetricGraph | None) -> LengthBasis | None:
    if not block:
        return None
    if graph is None:
        raise ConfigError("basis: not used with an integrable spectrum")
    lengths = _lengths(block, "lengths", "basis")
    coeffs = block.get("coefficients")
    if coeffs is None:
        try:
            return LengthBasis.fit(lengths, graph.lengths)
        except QGraphError as exc:
            raise ConfigError(f"basis: {exc}") from exc
    if not isinstance(coeffs, list) or len(coeffs) != graph.bond_count:
        raise ConfigError(f"basis.coefficients: expected one row per bond ({graph.bond_count})")
    rows = []
    for n, row in enumerate(coeffs):
        if not isinstance(row, list) or len(row) != len(lengths):
            raise ConfigError(f"basis.coefficients[{n}]: expected {len(lengths)} entries")
        try:
            rows.append(tuple(Fraction(str(c)) for c in row))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"basis.coefficients[{n}]: {exc}") from exc
    basis = LengthBasis(lengths, tuple(rows))
    if np.max(np.abs(basis.reconstruct() - np.asarray(graph.lengths)) / np.asarray(graph.lengths)) > 1e-12:
        raise ConfigError("basis: the coefficients do not reproduce the bond lengths")
    return basis


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse and validate a TOML run description."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    version = doc.get("version")
    if version != CONFIG_VERSION:
        raise ConfigError(f"{source}: version: expected {CONFIG_VERSION}, got {version!r}")
    graph_block = _table(doc, "graph")
    if not graph_block:
        raise ConfigError(f"{source}: missing [graph] table")
    graph, lengths = _build_graph(graph_block)
    basis = _build_basis(_table(doc, "basis"), graph)

    solver = _table(doc, "solver")
    k_min = _number(solver, "k_min", "solver", 1e-6)
    k_max = _number(solver, "k_max", "solver")
    levels = _number(solver, "levels", "solver", kind=int)
    if k_max is None and levels is None:
        raise ConfigError(f"{source}: solver: give k_max or levels")
    if k_max is not None and not k_max > k_min:
        raise ConfigError(f"{source}: solver.k_max must exceed solver.k_min")
    stats = _table(doc, "stats")
    compare = _table(doc, "compare")
    refs = compare.get("references", ["poisson", "wigner"])
    if not isinstance(refs, list) or any(r not in REFERENCES for r in refs):
        raise ConfigError(f"compare.references: expected a list drawn from {', '.join(REFERENCES)}")
    returns = _table(doc, "returns")
    output = _table(doc, "output")
    seeds = doc.get("seeds", [0])
    if not isinstance(seeds, list) or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
        raise ConfigError("seeds: expected a list of integers")
    return RunConfig(
        graph=graph, lengths=lengths, graph_block=graph_block, basis=basis,
        k_min=k_min, k_max=k_max, levels=levels,
        oversample=_number(solver, "oversample", "solver", 8, int),
        tol=_number(solver, "tol", "solver", 1e-12),
        workers=_number(solver, "workers", "solver", 1, int),
        bin_width=_number(stats, "bin_width", "stats", 0.05),
        fit_window=_number(stats, "fit_window", "stats", 0.1),
        references=tuple(refs),
        returns_count=_number(returns, "count", "returns", 1000, int),
        grid_size=_number(returns, "grid_size", "returns", 2000, int),
        analytic=_table(doc, "analytic"),
        out_dir=Path(output.get("directory", "out")),
        seeds=tuple(seeds),
        source=source,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, str(path))


# ------------------------------------------------------------------ CSV

def format_number(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def csv_text(header, columns, trailer=()) -> str:
    """Comma-separated text with a header row, 17 significant digits and LF endings."""
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(format_number(v) for v in row))
    lines.extend(trailer)
    return "\n".join(lines) + "\n"


def write_csv(path, header, columns, trailer=()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text(header, columns, trailer))
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and float data of a file written by ``write_csv`` (``#`` lines are skipped)."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(header))
    return header, data


def write_json(path, record: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(record, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")
    return path


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, (tuple, np.ndarray)):
        return list(x)
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


# ---------------------------------------------------------------- cache

def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class SpectrumCache:
    """Spectra stored as ``<key>.csv`` next to a ``<key>.csv.sha256`` checksum."""

    def __init__(self, directory):
        self.directory = Path(directory)

    def path(self, key: str) -> Path:
        return self.directory / f"{key}.csv"

    def load(self, key: str) -> np.ndarray | None:
        path = self.path(key)
        sidecar = path.with_suffix(".csv.sha256")
        if not path.exists() or not sidecar.exists():
            return None
        data = path.read_bytes()
        if sidecar.read_text(encoding="utf-8").strip() != _digest(data):
            log.warning("cached spectrum %s fails its checksum; recomputing", path.name)
            return None
        try:
            header, table = read_csv(path)
        except (ValueError, IndexError):
            log.warning("cached spectrum %s is unreadable; recomputing", path.name)
            return None
        if header != ["index", "k"]:
            return None
        return table[:, 1].copy()

    def store(self, key: str, levels) -> Path:
        levels = np.asarray(levels, dtype=float)
        path = write_csv(self.path(key), ["index", "k"], [np.arange(1, len(levels) + 1), levels])
        path.with_suffix(".csv.sha256").write_text(_digest(path.read_bytes()) + "\n", encoding="utf-8")
        return path
