"""Spectra, level spacings and torus sections of quantum graphs."""

from .analytic import (AnalyticSpacing, cluster_g0, figure_eight_pdf, integrable_cdf, integrable_pdf, lasso_p0,
                       poisson, star2_gap_case, star2_pdf, star3_slope, wigner_goe)
from .errors import (AmbiguousSheetsError, BasisMismatchError, ConfigError, ContinuationError,
                     InsufficientDataError, InvalidInputError, InversionError, MissingLevelsError,
                     NumericalError, QGraphError, SumRuleError, UnsupportedVariantError)
from .graph import (LengthBasis, MetricGraph, build_complete, build_figure_eight, build_from_bonds, build_lasso,
                    build_star, mean_density, total_length, validate)
from .secular import find_levels, find_n_levels, integrable_levels, level_count, secular_value
from .stats import (SpacingDistribution, SpacingSeries, empirical_cdf, histogram, ks_distance,
                    small_slope_fit, smallest_bin_density, unfold)
from .torus import (first_returns, quadrature_spacing_2d, sample_returns, secular_surface, sheet_counts,
                    verify_sum_rule)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousSheetsError", "AnalyticSpacing", "BasisMismatchError", "ConfigError", "ContinuationError",
    "InsufficientDataError", "InvalidInputError", "InversionError", "LengthBasis", "MetricGraph",
    "MissingLevelsError", "NumericalError", "QGraphError", "SpacingDistribution", "SpacingSeries",
    "SumRuleError", "UnsupportedVariantError", "build_complete", "build_figure_eight", "build_from_bonds",
    "build_lasso", "build_star", "cluster_g0", "empirical_cdf", "figure_eight_pdf", "find_levels",
    "find_n_levels", "first_returns", "histogram", "integrable_cdf", "integrable_levels", "integrable_pdf",
    "ks_distance", "lasso_p0", "level_count", "mean_density", "poisson", "quadrature_spacing_2d",
    "sample_returns", "secular_surface", "secular_value", "sheet_counts", "small_slope_fit",
    "smallest_bin_density", "star2_gap_case", "star2_pdf", "star3_slope", "total_length", "unfold",
    "validate", "verify_sum_rule", "wigner_goe",
]
