"""Command line entry point: ``qgspacing COMMAND --config run.toml``.

Commands write CSV files and a ``<command>.json`` summary to the output directory.
Exit status is 0 on success, 2 for configuration errors and 3 for numerical or
audit failures.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytic, io, secular, stats, torus
from .errors import BasisMismatchError, ConfigError, InvalidInputError, QGraphError, UnsupportedVariantError
from .graph import total_length

log = logging.getLogger("qgspacing")

COMMANDS = ("spectrum", "spacings", "compare", "sheets", "analytic", "returns")
CURVE_STEP = 0.01


@dataclass
class ResultBundle:
    command: str
    files: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    summary_path: Path | None = None

    @property
    def spectrum_csv(self):
        return self.files.get("spectrum")

    @property
    def spacing_csv(self):
        return self.files.get("spacings")


class Runner:
    """Runs commands for one configuration, sharing the computed spectrum between them."""

    def __init__(self, config: io.RunConfig, out_dir=None, seeds=None, cache_dir=None, use_cache=True):
        self.config = config
        self.out = Path(out_dir) if out_dir is not None else config.out_dir
        self.seeds = tuple(seeds) if seeds else config.seeds
        if use_cache:
            self.cache = io.SpectrumCache(cache_dir if cache_dir is not None else self.out / "cache")
        else:
            self.cache = None
        self._levels = None
        self._spectrum_info = None

    # ----------------------------------------------------------- helpers
    @property
    def density(self) -> float:
        return math.fsum(self.config.lengths) / math.pi if self.config.integrable \
            else total_length(self.config.graph) / math.pi

    def _compute(self):
        cfg = self.config
        if cfg.integrable:
            k_max = cfg.k_max
            if k_max is None:
                k_max = cfg.k_min + (cfg.levels + 2 * len(cfg.lengths) + 2) / self.density
            sample = secular.integrable_levels(cfg.lengths, k_max, cfg.k_min)
            levels = sample.levels[: cfg.levels] if cfg.levels else sample.levels
            return levels, sample.settings
        kwargs = dict(oversample=cfg.oversample, tol=cfg.tol, workers=cfg.workers)
        if cfg.k_max is not None:
            sample = secular.find_levels(cfg.graph, cfg.k_min, cfg.k_max, **kwargs)
        else:
            sample = secular.find_n_levels(cfg.graph, cfg.levels, k_min=cfg.k_min, **kwargs)
        return sample.levels, sample.settings

    def levels(self) -> np.ndarray:
        if self._levels is not None:
            return self._levels
        key = self.config.spectrum_key()
        cached = self.cache.load(key) if self.cache else None
        if cached is not None:
            log.info("spectrum %s read from cache", key)
            self._levels, self._spectrum_info = cached, dict(cache="hit", key=key)
            return cached
        log.info("computing spectrum %s", key)
        levels, settings = self._compute()
        if self.cache:
            self.cache.store(key, levels)
        self._levels = levels
        self._spectrum_info = dict(settings, cache="miss" if self.cache else "off", key=key)
        return levels

    def series(self) -> stats.SpacingSeries:
        return stats.unfold(self.levels(), self.density)

    def surface(self):
        if self.config.integrable:
            raise ConfigError("graph.kind = 'integrable' has no secular surface; use a graph")
        return torus.secular_surface(self.config.graph, self.config.basis)

    def reference(self, name: str) -> analytic.AnalyticSpacing:
        cfg = self.config
        if name == "poisson":
            return analytic.poisson()
        if name == "wigner":
            return analytic.wigner_goe()
        if name == "figure8":
            return analytic.figure_eight_pdf()
        if name == "integrable":
            return analytic.integrable_pdf(cfg.lengths)
        if name == "star2":
            l = cfg.lengths
            if cfg.graph_block.get("kind") != "star" or len(l) != 3 or l[0] != l[2]:
                raise ConfigError("compare.references: star2 needs a star with lengths [l1, l2, l1]")
            return analytic.star2_pdf(l[0], l[1])
        raise ConfigError(f"unknown reference {name!r}")

    def _finish(self, bundle: ResultBundle) -> ResultBundle:
        bundle.files = {k: str(v) for k, v in bundle.files.items()}
        bundle.summary_path = io.write_json(self.out / f"{bundle.command}.json",
                                            dict(command=bundle.command, files=bundle.files, **bundle.summary))
        return bundle

    # ---------------------------------------------------------- commands
    def spectrum(self) -> ResultBundle:
        levels = self.levels()
        path = io.write_csv(self.out / "spectrum.csv", ["index", "k"], [np.arange(1, len(levels) + 1), levels])
        k_lo = self.config.k_min
        k_hi = float(levels[-1]) if self.config.k_max is None else self.config.k_max
        summary = dict(level_count=int(len(levels)), k_range=[k_lo, k_hi], density_exact=self.density,
                       density_empirical=len(levels) / (k_hi - k_lo),
                       weyl_deviation=len(levels) - self.density * (k_hi - k_lo),
                       solver={k: v for k, v in self._spectrum_info.items()})
        return self._finish(ResultBundle("spectrum", dict(spectrum=path), summary))

    def spacings(self) -> ResultBundle:
        cfg = self.config
        s = self.series()
        d = s.deltas
        files = dict(spacings=io.write_csv(self.out / "spacings.csv", ["index", "delta"],
                                           [np.arange(1, len(d) + 1), d]))
        hist = stats.histogram(s, cfg.bin_width)
        centres = np.arange(len(hist.densities)) * cfg.bin_width
        files["histogram"] = io.write_csv(self.out / "histogram.csv", ["delta", "density"],
                                          [centres, hist.densities])
        srt = np.sort(d)
        files["cdf"] = io.write_csv(self.out / "cdf.csv", ["delta", "cdf"],
                                    [srt, np.arange(1, len(srt) + 1) / len(srt)])
        summary = dict(spacing_count=s.count, mean=s.mean, mean_tolerance=s.mean_tolerance,
                       min=float(srt[0]), max=float(srt[-1]), tiny_spacings=len(s.flagged),
                       p0_smallest_bin=stats.smallest_bin_density(s, cfg.bin_width))
        if s.count >= stats.MIN_FIT_SPACINGS:
            fit = stats.small_slope_fit(s, cfg.fit_window)
            summary["slope_fit"] = dict(slope=fit.slope, stderr=fit.stderr, p_prime_zero=fit.p_prime_zero,
                                        nonlinear=fit.nonlinear, n_used=fit.n_used)
        return self._finish(ResultBundle("spacings", files, summary))

    def compare(self) -> ResultBundle:
        s = self.series()
        emp = stats.empirical_cdf(s)
        grid = np.arange(0.0, float(np.max(s.deltas)) + CURVE_STEP, CURVE_STEP)
        files, ks = {}, {}
        for name in self.config.references:
            ref = self.reference(name)
            ks[name] = stats.ks_distance(emp, ref)
            files[name] = io.write_csv(self.out / f"compare_{name}.csv", ["delta", "dF"],
                                       [grid, emp.cdf(grid) - ref.cdf(grid)])
        summary = dict(spacing_count=s.count, ks=ks)
        return self._finish(ResultBundle("compare", files, summary))

    def sheets(self) -> ResultBundle:
        flow, F = self.surface()
        report = torus.verify_sum_rule(self.config.graph, self.config.basis)
        summary = dict(tags=list(F.tags), periods=list(F.periods), flow_periods=list(flow.periods),
                       frequencies=list(flow.frequencies), counts=list(report.counts),
                       contributions=list(report.contributions), total=report.total,
                       expected=report.expected, residual=report.residual)
        return self._finish(ResultBundle("sheets", {}, summary))

    def analytic(self) -> ResultBundle:
        block = dict(self.config.analytic)
        model = block.pop("model", None)
        if model is None:
            raise ConfigError("analytic.model: required for the analytic command")
        step = float(block.pop("step", CURVE_STEP))
        upper = block.pop("max", None)
        if model == "integrable" and "lengths" in block:
            lengths = [io.parse_length(v, f"analytic.lengths[{i}]") for i, v in enumerate(block.pop("lengths"))]
            dist = analytic.integrable_pdf(lengths)
        elif model == "star2" and {"l1", "l2"} <= set(block):
            l1 = io.parse_length(block.pop("l1"), "analytic.l1")
            l2 = io.parse_length(block.pop("l2"), "analytic.l2")
            dist = analytic.star2_pdf(l1, l2, block.pop("gamma", "exact"))
        elif model in io.REFERENCES:
            dist = self.reference(model)
        else:
            raise ConfigError(f"analytic.model: expected one of {', '.join(io.REFERENCES)}, got {model!r}")
        x, p = dist.curve(step, None if upper is None else float(upper))
        trailer = [] if dist.peak is None else [f"# peak,{io.format_number(dist.peak[0])},"
                                               f"{io.format_number(dist.peak[1])}"]
        files = dict(density=io.write_csv(self.out / f"analytic_{model}.csv", ["delta", "density"], [x, p], trailer),
                     cdf=io.write_csv(self.out / f"analytic_{model}_cdf.csv", ["delta", "cdf"], [x, dist.cdf(x)]))
        summary = dict(model=model, params={k: v for k, v in getattr(dist, "params", {}).items()},
                       peak=None if dist.peak is None else list(dist.peak),
                       normalization=dist.normalization(), mean=dist.mean())
        return self._finish(ResultBundle("analytic", files, summary))

    def returns(self) -> ResultBundle:
        cfg = self.config
        flow, F = self.surface()
        taus = torus.sample_returns(flow, F, self.seeds, cfg.returns_count, workers=cfg.workers)
        rate = flow.density
        deltas = rate * taus
        files = dict(returns=io.write_csv(self.out / "returns.csv", ["index", "delta"],
                                          [np.arange(1, len(deltas) + 1), deltas]))
        traj = stats.SpacingDistribution.empirical(deltas)
        spectrum = stats.empirical_cdf(self.series())
        n_eff = min(len(deltas), len(self.series()))
        summary = dict(seeds=list(self.seeds), return_count=int(len(deltas)), mean=float(np.mean(deltas)),
                       ks_spectrum=stats.ks_distance(traj, spectrum), ks_tolerance=3.0 / math.sqrt(n_eff))
        if flow.dimension == 2:
            quad = torus.quadrature_spacing_2d(flow, F, cfg.grid_size, cfg.oversample)
            files["quadrature"] = io.write_csv(self.out / "quadrature.csv", ["delta", "weight"],
                                               [quad.sample, quad.weights])
            summary.update(quadrature_points=quad.info["points"],
                           ks_quadrature_spectrum=stats.ks_distance(quad, spectrum),
                           ks_quadrature_returns=stats.ks_distance(quad, traj))
        return self._finish(ResultBundle("returns", files, summary))


def run(command: str, config: io.RunConfig, **kwargs) -> ResultBundle:
    """Run one command; keyword arguments are passed to ``Runner``."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    return getattr(Runner(config, **kwargs), command)()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgspacing", description="Spectra and level spacings of quantum graphs.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, type=Path, help="TOML run description")
    parser.add_argument("--out", type=Path, help="output directory (default: output.directory or ./out)")
    parser.add_argument("--seed", type=int, action="append", dest="seeds",
                        help="trajectory seed; repeat for several (overrides the config seeds)")
    parser.add_argument("--cache", type=Path, help="spectrum cache directory (default: OUT/cache)")
    parser.add_argument("--no-cache", action="store_true", help="neither read nor write the cache")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = io.load_config(args.config)
        bundle = run(args.command, config, out_dir=args.out, seeds=args.seeds,
                     cache_dir=args.cache, use_cache=not args.no_cache)
    except (ConfigError, InvalidInputError, BasisMismatchError, UnsupportedVariantError) as exc:
        print(f"qgspacing {args.command}: configuration error: {exc}", file=sys.stderr)
        return 2
    except QGraphError as exc:
        print(f"qgspacing {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    print(bundle.summary_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
