"""Length sets and cached spectra shared by the test modules."""

import functools
import math

import numpy as np

from qgspacing import build_complete, build_figure_eight, build_lasso, build_star, find_n_levels, unfold

STAR3 = (math.pi, 3.183459012, 3.1442336073)
STAR2 = (math.pi, 1.53183459012)
PENTAGON = tuple(0.6 * np.array([math.sqrt(2), math.sqrt(3), math.sqrt(5), math.sqrt(6), math.sqrt(7),
                                 math.pi, math.e, math.sqrt(10), math.sqrt(11), math.sqrt(13)]))
EIGHT_BONDS = (math.sqrt(167), math.sqrt(2), math.sqrt(3), math.sqrt(107), math.sqrt(5), math.sqrt(6),
               math.sqrt(7), math.e)
FIGURE_EIGHT_PAIRS = ((math.sqrt(2), math.sqrt(3)), (1.0, (1.0 + math.sqrt(5.0)) / 2.0))
LASSO = (math.sqrt(2), math.sqrt(3))


def family_lengths(n):
    """``sqrt(i)`` for ``i = 1..n``, with a few entries replaced by less regular values."""
    out = [math.sqrt(i) for i in range(1, n + 1)]
    for i, v in {1: math.sqrt(167), 4: math.sqrt(107), 8: math.e, 9: math.sqrt(105),
                 16: math.sqrt(119), 25: math.sqrt(134)}.items():
        if i <= n:
            out[i - 1] = v
    return tuple(out)


GRAPHS = {
    "star3": lambda: build_star(STAR3),
    "star2": lambda: build_star([STAR2[0], STAR2[1], STAR2[0]]),
    "figure8": lambda: build_figure_eight(*FIGURE_EIGHT_PAIRS[0]),
    "figure8b": lambda: build_figure_eight(*FIGURE_EIGHT_PAIRS[1]),
    "lasso": lambda: build_lasso(*LASSO),
    "pentagon": lambda: build_complete(5, PENTAGON),
}


@functools.lru_cache(maxsize=None)
def graph(name):
    return GRAPHS[name]()


@functools.lru_cache(maxsize=None)
def spectrum(name, count):
    return find_n_levels(graph(name), count, k_min=1e-6)


def spacings(name, count):
    """Unfolded spacings of the first ``count + 1`` levels."""
    return unfold(spectrum(name, count + 1), graph(name))
