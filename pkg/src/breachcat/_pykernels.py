"""NumPy fallbacks for the compiled kernels.

Same arithmetic as ``_ckernels``, vectorized instead of looped. Results agree
with the compiled versions to floating-point rounding (the summation orders
differ, so bit-identity is only guaranteed within one backend).
"""

import numpy as np

_PAIR_CHUNK = 16384


def compound_totals(counts, unif, alpha, u, m):
    counts = np.asarray(counts, dtype=np.int64)
    unif = np.asarray(unif, dtype=np.float64)
    if counts.size == 0:
        return np.zeros(0)
    k = 1.0 if not np.isfinite(m) else 1.0 - (u / m) ** alpha
    x = u * np.exp(np.log1p(-k * unif) * (-1.0 / alpha))
    offsets = np.zeros(counts.size, dtype=np.int64)
    np.cumsum(counts[:-1], out=offsets[1:])
    padded = np.append(x, 0.0)
    totals = np.add.reduceat(padded, offsets)
    totals[counts == 0] = 0.0  # reduceat yields x[offset] for empty segments
    return totals


def pinball_best(t, z, tau):
    t = np.asarray(t, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    n = t.size
    ii, jj = np.triu_indices(n, k=1)
    dt = t[ii] - t[jj]
    keep = dt != 0.0
    slopes = (z[ii[keep]] - z[jj[keep]]) / dt[keep]
    intercepts = z[ii[keep]] - slopes * t[ii[keep]]
    slopes = np.concatenate([slopes, np.zeros(n)])
    intercepts = np.concatenate([intercepts, z])

    best = (np.inf, np.inf, np.inf, 0.0)  # loss, |b|, a, b
    for lo in range(0, slopes.size, _PAIR_CHUNK):
        a_c = intercepts[lo:lo + _PAIR_CHUNK]
        b_c = slopes[lo:lo + _PAIR_CHUNK]
        r = z[None, :] - a_c[:, None] - b_c[:, None] * t[None, :]
        loss = np.where(r >= 0.0, tau * r, (tau - 1.0) * r).sum(axis=1)
        k = np.lexsort((a_c, np.abs(b_c), loss))[0]
        cand = (loss[k], abs(b_c[k]), a_c[k], b_c[k])
        if cand[:3] < best[:3]:
            best = cand
    return best[2], best[3], best[0]
