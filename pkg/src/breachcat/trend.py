"""Log-linear quantile regression of severity on time.

The fit is exact: with one covariate the pinball-loss minimizer passes
through two data points (or is horizontal through one), so enumerating all
candidate lines and keeping the best is both the solver and its own
optimality certificate. Inference is a pairs bootstrap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from breachcat import kernels


@dataclass(frozen=True)
class QuantFit:
    tau: float
    a: float            # intercept, log-ids
    b: float            # slope, log-ids per year
    p_slope: Optional[float]
    n: int
    loss: float

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must be in (0, 1)")
        if self.p_slope is not None and not 0.0 <= self.p_slope <= 1.0:
            raise ValueError("p_slope must be in [0, 1]")

    def to_dict(self) -> dict:
        return {"tau": self.tau, "intercept": self.a, "slope": self.b,
                "p_slope": self.p_slope, "n": self.n, "pinball_loss": self.loss}


def pinball_loss(a: float, b: float, t: np.ndarray, z: np.ndarray, tau: float) -> float:
    r = z - a - b * t
    return float(np.where(r >= 0, tau * r, (tau - 1.0) * r).sum())


def _prepare(points: Sequence[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    t = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.any(y <= 0):
        raise ValueError("all ids must be positive (regression is on log ids)")
    if np.all(t == t[0]):
        raise ValueError("degenerate time covariate: all abscissae equal")
    return t, np.log(y)


def quantile_fit(points: Sequence[tuple[float, float]], tau: float) -> QuantFit:
    """Exact tau-quantile line for (t years, ids) points.

    Ties in loss break toward smaller |slope|, then smaller intercept.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    if len(points) < 10:
        raise ValueError("need at least 10 points")
    t, z = _prepare(points)
    a, b, loss = kernels.pinball_best(t, z, tau)
    return QuantFit(tau, float(a), float(b), None, t.size, float(loss))


def slope_pvalue(points: Sequence[tuple[float, float]], tau: float,
                 B: int = 500, seed: int = 0, threads: int = 1) -> float:
    """Pairs-bootstrap p-value for slope = 0.

    Null-centered percentile p: the fraction of replicates whose slope
    deviates from the replicate mean by at least |b_hat|, with the usual
    (count+1)/(B+1) correction. Replicate seeds derive from (seed, index),
    so results are identical for any thread count.
    """
    if B < 500:
        raise ValueError("need at least 500 bootstrap replicates")
    if len(points) < 10:
        raise ValueError("need at least 10 points")
    t, z = _prepare(points)
    n = t.size
    b_hat = kernels.pinball_best(t, z, tau)[1]

    def one(rep: int) -> float:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(rep,)))
        idx = rng.integers(0, n, size=n)
        ts, zs = t[idx], z[idx]
        if np.all(ts == ts[0]):
            return 0.0  # degenerate resample carries no slope information
        return kernels.pinball_best(ts, zs, tau)[1]

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            slopes = np.fromiter(pool.map(one, range(B)), dtype=float, count=B)
    else:
        slopes = np.fromiter((one(r) for r in range(B)), dtype=float, count=B)

    centered = np.abs(slopes - slopes.mean())
    count = int((centered >= abs(b_hat)).sum())
    return (count + 1) / (B + 1)
