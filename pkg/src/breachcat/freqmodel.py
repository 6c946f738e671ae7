"""Trending count models for binned event frequencies.

Negative-binomial (NB2) regression of half-year counts on time, with either
an exponential mean exp(b0 + b1*t) (log link) or a linear mean b0 + b1*t.
Variance is mu + mu^2/theta, so theta -> inf recovers the Poisson, which is
the null of the over-dispersion test.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize, special, stats

from breachcat import NumericalError
from breachcat.events import BinnedCounts

THETA_MAX = 1e8  # effectively Poisson
THETA_MIN = 1e-4


class MeanFamily(str, enum.Enum):
    EXP = "ExpMean"
    LIN = "LinMean"


@dataclass(frozen=True)
class FreqFit:
    mean_family: MeanFamily
    beta0: float
    beta1: float
    theta: float
    se: dict[str, float]
    cov: np.ndarray             # 2x2, beta only
    logL: float
    n_bins: int
    deviance: float
    t_mid: np.ndarray           # fitted time grid, needed for refit bootstraps
    counts: np.ndarray

    def mean_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.mean_family is MeanFamily.EXP:
            return np.exp(self.beta0 + self.beta1 * t)
        return self.beta0 + self.beta1 * t

    def to_dict(self) -> dict:
        return {"mean_family": self.mean_family.value, "beta0": self.beta0,
                "beta1": self.beta1, "theta": self.theta, "se": dict(self.se),
                "cov": self.cov.tolist(), "logL": self.logL,
                "deviance": self.deviance, "n_bins": self.n_bins,
                "t_mid": self.t_mid.tolist()}


def nb_logL(y: np.ndarray, mu: np.ndarray, theta: float) -> float:
    if np.any(mu <= 0) or theta <= 0:
        return -math.inf
    return float(np.sum(special.gammaln(y + theta) - special.gammaln(theta)
                        - special.gammaln(y + 1) + theta * math.log(theta)
                        + y * np.log(mu) - (y + theta) * np.log(theta + mu)))


def poisson_logL(y: np.ndarray, mu: np.ndarray) -> float:
    if np.any(mu <= 0):
        return -math.inf
    return float(np.sum(y * np.log(mu) - mu - special.gammaln(y + 1)))


def _poisson_irls(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Log-link Poisson fit; also the beta start for the NB iteration."""
    X = np.column_stack([np.ones_like(t), t])
    beta = np.array([math.log(max(y.mean(), 0.1)), 0.0])
    for _ in range(100):
        mu = np.exp(X @ beta)
        W = mu
        z = X @ beta + (y - mu) / mu
        beta_new = np.linalg.solve(X.T @ (W[:, None] * X), X.T @ (W * z))
        if np.max(np.abs(beta_new - beta)) < 1e-12:
            beta = beta_new
            break
        beta = beta_new
    return beta


def _nb_beta_step(t, y, beta, theta, iters=50):
    X = np.column_stack([np.ones_like(t), t])
    for _ in range(iters):
        mu = np.exp(X @ beta)
        W = mu * theta / (theta + mu)
        s = (y - mu) * theta / (theta + mu)
        try:
            delta = np.linalg.solve(X.T @ (W[:, None] * X), X.T @ s)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular weight matrix in NB IRLS") from exc
        beta = beta + delta
        if np.max(np.abs(delta)) < 1e-12:
            break
    return beta


def _nb_theta_step(y, mu, theta):
    """Newton on log(theta) for the profile score; capped at the Poisson end."""
    lt = math.log(min(max(theta, THETA_MIN), THETA_MAX))
    for _ in range(100):
        th = math.exp(lt)
        g = float(np.sum(special.digamma(y + th) - special.digamma(th)
                         + math.log(th) + 1.0 - np.log(th + mu)
                         - (y + th) / (th + mu)))
        dg = float(np.sum(special.polygamma(1, y + th) - special.polygamma(1, th)
                          + 1.0 / th - 1.0 / (th + mu) - (mu - y) / (th + mu) ** 2))
        step = g / (dg * th)  # d/dlog(theta) = theta * d/dtheta
        if not math.isfinite(step):
            break
        lt_new = lt - step
        lt_new = min(max(lt_new, math.log(THETA_MIN)), math.log(THETA_MAX))
        if abs(lt_new - lt) < 1e-12:
            lt = lt_new
            break
        lt = lt_new
    return math.exp(lt)


def _numeric_hessian(fun, theta_hat: np.ndarray) -> np.ndarray:
    p = theta_hat.size
    h = 1e-5 * np.maximum(np.abs(theta_hat), 1e-3)
    H = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            pp = theta_hat.copy(); pp[i] += h[i]; pp[j] += h[j]
            pm = theta_hat.copy(); pm[i] += h[i]; pm[j] -= h[j]
            mp = theta_hat.copy(); mp[i] -= h[i]; mp[j] += h[j]
            mm = theta_hat.copy(); mm[i] -= h[i]; mm[j] -= h[j]
            H[i, j] = (fun(pp) - fun(pm) - fun(mp) + fun(mm)) / (4 * h[i] * h[j])
    return H


def _fit_errors(t, y, beta0, beta1, theta, mean_fn):
    def ll(p):
        mu = mean_fn(p[0], p[1], t)
        if np.any(mu <= 0):
            return -math.inf
        return nb_logL(y, mu, p[2])

    H = _numeric_hessian(ll, np.array([beta0, beta1, theta]))
    try:
        cov = np.linalg.inv(-H)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular observed information in NB fit") from exc
    diag = np.diag(cov).copy()
    if np.any(diag < 0):
        # theta at the Poisson boundary has no curvature; report inf there
        diag[diag < 0] = np.inf
    se = {"beta0": math.sqrt(diag[0]), "beta1": math.sqrt(diag[1]),
          "theta": math.sqrt(diag[2])}
    return se, cov[:2, :2]


def nb_deviance(y: np.ndarray, mu: np.ndarray, theta: float) -> float:
    """Sum of squared NB deviance residuals."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(y > 0, y * np.log(y / mu), 0.0)
    return float(2.0 * np.sum(term - (y + theta) * np.log((y + theta) / (mu + theta))))


def _select_bins(counts: BinnedCounts, include_partial: bool):
    t = np.asarray(counts.t_mid, dtype=float)
    y = np.asarray(counts.counts, dtype=float)
    if counts.partial_last and not include_partial:
        t, y = t[:-1], y[:-1]
    return t, y


def fit_nb(counts: BinnedCounts, mean_family: MeanFamily = MeanFamily.EXP,
           include_partial: bool = False) -> FreqFit:
    """Joint (beta0, beta1, theta) MLE.

    Log link: alternate IRLS beta-steps with Newton theta-steps on the
    profile score. Linear mean: direct Nelder-Mead with a vanishing
    log-barrier keeping mu positive over the fitted range. The partial final
    bin is excluded unless requested.
    """
    t, y = _select_bins(counts, include_partial)
    return fit_nb_arrays(t, y, mean_family)


def fit_nb_arrays(t: np.ndarray, y: np.ndarray,
                  mean_family: MeanFamily = MeanFamily.EXP) -> FreqFit:
    """fit_nb on bare (time, count) arrays; used directly by refit bootstraps."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 4:
        raise ValueError("need at least 4 bins")
    if np.all(y == 0):
        raise ValueError("all-zero counts")

    if mean_family is MeanFamily.EXP:
        beta = _poisson_irls(t, y)
        theta = 10.0
        last = -math.inf
        for _ in range(200):
            beta = _nb_beta_step(t, y, beta, theta)
            mu = np.exp(beta[0] + beta[1] * t)
            theta = _nb_theta_step(y, mu, theta)
            cur = nb_logL(y, mu, theta)
            if not math.isfinite(cur):
                raise NumericalError("NB likelihood diverged",
                                     last_iterate={"beta": beta.tolist(), "theta": theta})
            if abs(cur - last) < 1e-10 * max(1.0, abs(cur)):
                break
            last = cur
        else:
            raise NumericalError("NB alternating fit did not converge",
                                 last_iterate={"beta": beta.tolist(), "theta": theta})
        beta0, beta1 = float(beta[0]), float(beta[1])
        mean_fn = lambda b0, b1, tt: np.exp(b0 + b1 * tt)
    else:
        ols = np.polyfit(t, y, 1)
        start = np.array([ols[1], ols[0], math.log(10.0)])

        def objective(p):
            mu = p[0] + p[1] * t
            if np.any(mu <= 0):
                return math.inf
            return -nb_logL(y, mu, math.exp(p[2])) - 1e-8 * np.sum(np.log(mu))

        best = None
        for scale in (1.0, 0.9, 1.1):
            res = optimize.minimize(objective, x0=start * scale, method="Nelder-Mead",
                                    options={"xatol": 1e-10, "fatol": 1e-12,
                                             "maxiter": 5000})
            if best is None or res.fun < best.fun:
                best = res
        if not math.isfinite(best.fun):
            raise NumericalError("linear-mean NB fit failed",
                                 last_iterate={"params": best.x.tolist()})
        beta0, beta1 = float(best.x[0]), float(best.x[1])
        theta = float(np.clip(math.exp(best.x[2]), THETA_MIN, THETA_MAX))
        mean_fn = lambda b0, b1, tt: b0 + b1 * tt

    mu = mean_fn(beta0, beta1, t)
    logL = nb_logL(y, mu, theta)
    se, cov = _fit_errors(t, y, beta0, beta1, theta, mean_fn)
    return FreqFit(mean_family, beta0, beta1, theta, se, cov, logL,
                   n_bins=t.size, deviance=nb_deviance(y, mu, theta),
                   t_mid=t.copy(), counts=y.copy())


def fit_poisson(counts: BinnedCounts, mean_family: MeanFamily = MeanFamily.EXP,
                include_partial: bool = False) -> tuple[np.ndarray, float]:
    """Poisson fit of the same mean family; returns (beta, logL)."""
    t, y = _select_bins(counts, include_partial)
    if mean_family is MeanFamily.EXP:
        beta = _poisson_irls(t, y)
        mu = np.exp(beta[0] + beta[1] * t)
        return beta, poisson_logL(y, mu)

    ols = np.polyfit(t, y, 1)

    def objective(p):
        mu = p[0] + p[1] * t
        if np.any(mu <= 0):
            return math.inf
        return -poisson_logL(y, mu)

    res = optimize.minimize(objective, x0=[ols[1], ols[0]], method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 5000})
    return res.x, -float(res.fun)


def overdispersion_test(fit: FreqFit, counts: BinnedCounts,
                        include_partial: bool = False) -> dict:
    """LR test of NB against the Poisson null for the same mean family.

    theta = inf sits on the boundary, so the mixture null 0.5*chi2_0 +
    0.5*chi2_1 is the calibrated reference; the raw chi2_1 p-value is also
    reported since either convention can appear in published tables.
    """
    _, logL_pois = fit_poisson(counts, fit.mean_family, include_partial)
    statistic = max(0.0, 2.0 * (fit.logL - logL_pois))
    p_raw = float(stats.chi2.sf(statistic, 1))
    p_mix = 1.0 if statistic == 0.0 else 0.5 * p_raw
    return {"theta": fit.theta, "statistic": statistic,
            "p_value": p_mix, "p_value_raw_chi2_1": p_raw}


def deviance_gof(fit: FreqFit, counts: BinnedCounts,
                 include_partial: bool = False) -> tuple[float, int, float]:
    """Chi-square test on the residual deviance; df = n_bins - 3."""
    t, y = _select_bins(counts, include_partial)
    mu = fit.mean_at(t)
    dev = nb_deviance(y, mu, fit.theta)
    df = t.size - 3
    return dev, df, float(stats.chi2.sf(dev, df))


def growth_z_test(fit_a: FreqFit, fit_b: FreqFit) -> tuple[float, float]:
    """One-sided Z test that fit_a's growth rate exceeds fit_b's."""
    if fit_a.mean_family is not MeanFamily.EXP or fit_b.mean_family is not MeanFamily.EXP:
        raise ValueError("growth comparison requires exponential-mean fits")
    var = fit_a.se["beta1"] ** 2 + fit_b.se["beta1"] ** 2
    if var <= 0 or not math.isfinite(var):
        raise ValueError("zero or invalid combined standard error")
    z = (fit_a.beta1 - fit_b.beta1) / math.sqrt(var)
    return z, float(stats.norm.sf(z))


def nb_quantile(q: float, mu: float, theta: float) -> int:
    """Smallest k with NB CDF(k) >= q, by direct pmf summation."""
    if mu <= 0:
        raise ValueError("mean must be positive")
    p = mu / (mu + theta)
    log_pmf0 = theta * math.log1p(-p) if theta < THETA_MAX else -mu
    pmf = math.exp(log_pmf0)
    cdf = pmf
    k = 0
    kmax = int(mu + 20.0 * math.sqrt(mu + mu * mu / theta) + 200)
    while cdf < q and k < kmax:
        pmf *= (k + theta) / (k + 1.0) * p
        cdf += pmf
        k += 1
    if cdf < q:  # fell short, so the summation lost mass; defer to scipy
        return int(stats.nbinom.ppf(q, theta, 1.0 - p))
    return k


def nb_quartiles(fit: FreqFit, t: float) -> tuple[int, int, int]:
    mu = float(fit.mean_at(t))
    if mu <= 0:
        raise ValueError("mean must be positive at t")
    return tuple(nb_quantile(q, mu, fit.theta) for q in (0.25, 0.5, 0.75))


def predict_mean(fit: FreqFit, t: float) -> float:
    """Expected count per half-year bin at model time t."""
    mu = float(fit.mean_at(t))
    if fit.mean_family is MeanFamily.LIN and mu <= 0:
        raise ValueError(f"linear mean is non-positive at t={t}")
    return mu
