"""Vectorised scan-and-bisect root finding for oscillatory real functions.

The scan grid is anchored at ``t0`` (``t_j = t0 + j*step``) so that splitting the
range into chunks, serially or on worker threads, yields bit-identical roots.
Pairs of roots that fall inside one grid cell leave no sign change; they are
recovered from local minima of ``|f|`` that do not change sign on the grid.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def bisect(func, a, b, fa, tol_rel=1e-12):
    """Refine sign-change brackets ``[a, b]`` (``fa = func(a)``) until ``b - a <= tol_rel*max(1, |t|)``."""
    a = np.array(a, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    if a.size == 0:
        return a
    sa = np.sign(fa)
    tol = tol_rel * np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    width = float(np.max(b - a))
    n_iter = max(1, int(math.ceil(math.log2(width / float(np.min(tol))))) + 1)
    for _ in range(n_iter):
        m = 0.5 * (a + b)
        sm = np.sign(func(m))
        left = sm == sa
        a = np.where(left, m, a)
        b = np.where(left, b, m)
        hit = sm == 0
        if np.any(hit):
            a = np.where(hit, m, a)
            b = np.where(hit, m, b)
    return 0.5 * (a + b)


def golden_min(func, a, b, n_iter=80):
    """Vectorised golden-section minimisation of ``func`` on each interval ``[a, b]``."""
    a = np.array(a, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(n_iter):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - INV_PHI * (b - a)
        new_d = a + INV_PHI * (b - a)
        # one of the two interior points is reused
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        fresh = np.where(left, new_c, new_d)
        f_fresh = func(fresh)
        fc_next = np.where(left, f_fresh, fd)
        fd_next = np.where(left, fc, f_fresh)
        c, d, fc, fd = c_next, d_next, fc_next, fd_next
    x = 0.5 * (a + b)
    return x, func(x)


def _chunk_roots(func, t0, step, j0, j1, j_last, tol_rel):
    """Roots owned by grid cells ``j0 <= j < j1``."""
    lo = max(j0 - 1, 0)
    hi = min(j1 + 1, j_last)
    idx = np.arange(lo, hi + 1)
    t = t0 + idx * step
    f = func(t)
    off = j0 - lo
    n_own = j1 - j0

    own = slice(off, off + n_own)
    f_own, f_next = f[own], f[off + 1: off + 1 + n_own]
    t_own = t[own]

    exact = t_own[f_own == 0.0]
    cross = np.flatnonzero(f_own * f_next < 0)
    roots = [exact, bisect(func, t_own[cross], t_own[cross] + step, f_own[cross], tol_rel)]

    # same-sign local minima of |f|: candidate pairs of roots inside one cell
    jj = np.arange(off, off + n_own)
    ok = (jj >= 1) & (jj + 1 < len(f))
    jj = jj[ok]
    if jj.size:
        fm, f0, fp = f[jj - 1], f[jj], f[jj + 1]
        s = np.sign(f0)
        dip = (s != 0) & (np.sign(fm) == s) & (np.sign(fp) == s) & \
              (s * f0 < s * fm) & (s * f0 <= s * fp)
        jj, s = jj[dip], s[dip]
        if jj.size:
            a, b = t[jj - 1], t[jj + 1]
            xm, fmin = golden_min(lambda x: s * func(x), a, b)
            two = fmin < 0
            if np.any(two):
                a2, b2, x2, s2 = a[two], b[two], xm[two], s[two]
                roots.append(bisect(func, a2, x2, s2, tol_rel))
                roots.append(bisect(func, x2, b2, -s2, tol_rel))
    return np.concatenate(roots)


def scan_zeros(func, t0, t1, step, tol_rel=1e-12, chunk_points=16384, workers=1):
    """All zeros of the vectorised ``func`` in ``[t0, t1]`` found on a grid of spacing ``step``."""
    if not t1 > t0:
        raise ValueError("empty scan range")
    j_last = int(math.ceil((t1 - t0) / step))
    step = (t1 - t0) / j_last
    starts = list(range(0, j_last, chunk_points))
    tasks = [(j0, min(j0 + chunk_points, j_last)) for j0 in starts]
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda jr: _chunk_roots(func, t0, step, jr[0], jr[1], j_last, tol_rel), tasks))
    else:
        parts = [_chunk_roots(func, t0, step, j0, j1, j_last, tol_rel) for j0, j1 in tasks]
    roots = np.sort(np.concatenate(parts)) if parts else np.empty(0)
    return roots[(roots >= t0) & (roots <= t1)]


def row_roots(func, t0, t1, m, tol_rel=1e-12):
    """Zeros of many functions at once.

    ``func(t, rows)`` evaluates function ``rows[...]`` at ``t[...]`` (same shapes). Row
    ``r`` is scanned on ``m`` equal cells of ``[t0[r], t1[r]]``. Returns flat arrays
    ``(rows, roots)`` sorted by row, then root.
    """
    t0 = np.asarray(t0, dtype=float)
    t1 = np.asarray(t1, dtype=float)
    n = t0.size
    rows = np.arange(n)
    t = t0[:, None] + (t1 - t0)[:, None] * (np.arange(m + 1) / m)
    R = np.broadcast_to(rows[:, None], t.shape)
    f = func(t, R)

    out_r, out_t = [], []
    r, j = np.nonzero(f[:, :-1] == 0.0)
    out_r.append(r)
    out_t.append(t[r, j])
    r, j = np.nonzero(f[:, :-1] * f[:, 1:] < 0)
    if r.size:
        out_r.append(r)
        out_t.append(bisect(lambda x: func(x, r), t[r, j], t[r, j + 1], f[r, j], tol_rel))

    fm, f0, fp = f[:, :-2], f[:, 1:-1], f[:, 2:]
    s = np.sign(f0)
    dip = (s != 0) & (np.sign(fm) == s) & (np.sign(fp) == s) & (s * f0 < s * fm) & (s * f0 <= s * fp)
    r, j = np.nonzero(dip)
    if r.size:
        j = j + 1
        sr = s[r, j - 1]
        a, b = t[r, j - 1], t[r, j + 1]
        xm, fmin = golden_min(lambda x: sr * func(x, r), a, b)
        two = fmin < 0
        if np.any(two):
            rr, a2, b2, x2, s2 = r[two], a[two], b[two], xm[two], sr[two]
            out_r += [rr, rr]
            out_t += [bisect(lambda x: func(x, rr), a2, x2, s2, tol_rel),
                      bisect(lambda x: func(x, rr), x2, b2, -s2, tol_rel)]
    rr = np.concatenate(out_r)
    tt = np.concatenate(out_t)
    order = np.lexsort((tt, rr))
    return rr[order], tt[order]
