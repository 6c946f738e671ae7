"""Heavy-tailed severity models for breach sizes.

Three families: Pareto above a threshold u, Pareto additionally truncated
above at m, and the lognormal whose log is a lower-truncated normal. The
Pareto MLE is closed form; the truncated Pareto uses a bracketed Newton
iteration on log(alpha) (the profile is strictly concave, see
``_trunc_pareto_score``); the truncated lognormal uses Nelder-Mead from
moment-matched starts.
"""

from __future__ import annotations

import datetime as dt
import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize, stats

from breachcat import NumericalError


class Family(str, enum.Enum):
    PARETO = "Pareto"
    TRUNC_PARETO = "TruncPareto"
    TRUNC_LOGNORMAL = "TruncLognormal"


@dataclass(frozen=True)
class TailModel:
    family: Family
    u: float
    m: Optional[float] = None          # TruncPareto only
    alpha: Optional[float] = None      # Pareto families
    mu: Optional[float] = None         # lognormal family, log scale
    sigma2: Optional[float] = None

    def __post_init__(self):
        if self.u <= 0:
            raise ValueError("u must be positive")
        if self.family is Family.TRUNC_PARETO:
            if self.m is None or self.m <= self.u:
                raise ValueError("m must exceed u")
        if self.family in (Family.PARETO, Family.TRUNC_PARETO):
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("alpha must be positive")
        if self.family is Family.TRUNC_LOGNORMAL:
            if self.sigma2 is None or self.sigma2 <= 0:
                raise ValueError("sigma2 must be positive")
            if self.mu is None:
                raise ValueError("mu required")

    def params(self) -> dict[str, float]:
        if self.family is Family.TRUNC_LOGNORMAL:
            return {"mu": self.mu, "sigma2": self.sigma2}
        return {"alpha": self.alpha}


@dataclass(frozen=True)
class TailFit:
    model: TailModel
    se: dict[str, float]
    logL: float
    n: int
    window_end: Optional[dt.date] = None

    def __post_init__(self):
        if not math.isfinite(self.logL):
            raise ValueError("logL must be finite")
        if any(v < 0 for v in self.se.values()):
            raise ValueError("standard errors must be >= 0")
        if self.n < 2:
            raise ValueError("need at least 2 observations")

    def to_dict(self) -> dict:
        d = {"family": self.model.family.value, "u": self.model.u,
             "params": self.model.params(), "se": dict(self.se),
             "logL": self.logL, "n": self.n}
        if self.model.m is not None:
            d["m"] = self.model.m
        if self.window_end is not None:
            d["window_end"] = self.window_end.isoformat()
        return d


def _check_sample(xs: np.ndarray, u: float, m: float = math.inf) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if np.any(xs < u):
        raise ValueError("all observations must be >= u")
    if np.any(xs > m):
        raise ValueError("observations above the truncation point m")
    return xs


def pareto_logL(alpha: float, xs: np.ndarray, u: float) -> float:
    n = xs.size
    return n * math.log(alpha) + n * alpha * math.log(u) - (alpha + 1.0) * np.log(xs).sum()


def fit_pareto(xs: Sequence[float], u: float) -> TailFit:
    """Closed-form Pareto MLE: alpha = n / sum(log(x/u)), se = alpha/sqrt(n)."""
    xs = _check_sample(np.asarray(xs, dtype=float), u)
    n = xs.size
    if n < 2:
        raise ValueError("need at least 2 observations")
    s = float(np.log(xs / u).sum())
    if s <= 0.0:
        raise NumericalError("degenerate sample: all observations equal u")
    alpha = n / s
    model = TailModel(Family.PARETO, u=u, alpha=alpha)
    return TailFit(model, se={"alpha": alpha / math.sqrt(n)},
                   logL=pareto_logL(alpha, xs, u), n=n)


def trunc_pareto_logL(alpha: float, xs: np.ndarray, u: float, m: float) -> float:
    n = xs.size
    t = alpha * math.log(m / u)
    # log(1 - (u/m)**alpha) = log(-expm1(-t)), stable at both ends
    log_norm = math.log(-math.expm1(-t))
    return (n * math.log(alpha) + n * alpha * math.log(u)
            - (alpha + 1.0) * np.log(xs).sum() - n * log_norm)


def _trunc_pareto_score(alpha: float, sbar: float, c: float) -> tuple[float, float]:
    """Per-observation score and its derivative in alpha.

    score(alpha) = 1/alpha - sbar - c/(e^(alpha c) - 1) with c = log(m/u) and
    sbar the mean of log(x/u). The derivative is strictly negative for all
    alpha > 0 (z/(2 sinh(z/2)) < 1), so the log-likelihood is strictly
    concave and the Newton iteration below is safe once bracketed.
    """
    t = alpha * c
    em1 = math.expm1(t)
    score = 1.0 / alpha - sbar - c / em1
    dscore = -1.0 / alpha**2 + c * c * (em1 + 1.0) / (em1 * em1)
    return score, dscore


def fit_truncated_pareto(xs: Sequence[float], u: float, m: float,
                         max_iter: int = 100, tol: float = 1e-12) -> TailFit:
    """Upper-truncated Pareto MLE via safeguarded Newton on log(alpha)."""
    if m <= u:
        raise ValueError("m must exceed u")
    xs = _check_sample(np.asarray(xs, dtype=float), u, m)
    n = xs.size
    if n < 2:
        raise ValueError("need at least 2 observations")
    sbar = float(np.log(xs / u).mean())
    if sbar <= 0.0:
        raise NumericalError("degenerate sample: all observations equal u")
    c = math.log(m / u)
    if sbar >= c / 2.0:
        # score stays negative as alpha -> 0: no interior maximum
        raise NumericalError("sample geometric mean at or above sqrt(u*m); "
                             "truncated-Pareto MLE does not exist for alpha > 0")

    lo, hi = 1e-12, 1.0 / sbar  # the untruncated MLE bounds the root from above
    alpha = hi
    converged = False
    for _ in range(max_iter):
        score, dscore = _trunc_pareto_score(alpha, sbar, c)
        if abs(score) < tol:
            converged = True
            break
        if score > 0.0:
            lo = alpha
        else:
            hi = alpha
        # Newton step on log(alpha); bisect when it leaves the bracket
        step = score / (dscore * alpha)
        new = alpha * math.exp(-step)
        if not (lo < new < hi) or not math.isfinite(new):
            new = math.sqrt(lo * hi)
        if abs(math.log(new / alpha)) < 1e-15:
            alpha = new
            converged = True
            break
        alpha = new
    if not converged:
        score, _ = _trunc_pareto_score(alpha, sbar, c)
        if abs(score) > 1e-8:
            raise NumericalError("truncated-Pareto Newton did not converge",
                                 last_iterate={"alpha": alpha})

    _, dscore = _trunc_pareto_score(alpha, sbar, c)
    info = -n * dscore  # observed information, positive by concavity
    model = TailModel(Family.TRUNC_PARETO, u=u, m=m, alpha=alpha)
    return TailFit(model, se={"alpha": 1.0 / math.sqrt(info)},
                   logL=trunc_pareto_logL(alpha, xs, u, m), n=n)


def trunc_lognormal_logL(mu: float, sigma2: float, xs: np.ndarray, u: float) -> float:
    if sigma2 <= 0:
        return -math.inf
    sigma = math.sqrt(sigma2)
    logx = np.log(xs)
    z = (logx - mu) / sigma
    zu = (math.log(u) - mu) / sigma
    return float((-0.5 * z**2 - 0.5 * math.log(2 * math.pi) - math.log(sigma)
                  - logx).sum() - xs.size * stats.norm.logsf(zu))


def _profile_sigma(zu: np.ndarray, w1: float, w2: float, n: int) -> np.ndarray:
    """Maximizing sigma at fixed truncation depth zu = (log u - mu)/sigma.

    With w = log(x) - log(u), the score in sigma gives the positive root of
    n*sigma^2 - zu*W1*sigma - W2 = 0.
    """
    return (zu * w1 + np.sqrt((zu * w1) ** 2 + 4.0 * n * w2)) / (2.0 * n)


def fit_truncated_lognormal(xs: Sequence[float], u: float) -> TailFit:
    """Lower-truncated lognormal MLE.

    The likelihood has a long (mu, sigma2) ridge when u sits deep in the
    lower tail, and a Nelder-Mead start from the untruncated moment
    estimates stalls on it. Since sigma maximizes in closed form at fixed
    truncation depth, the profile is scanned on a dense 1-D grid first and
    Nelder-Mead only polishes (with one perturbation restart).
    """
    xs = _check_sample(np.asarray(xs, dtype=float), u)
    n = xs.size
    if n < 3:
        raise ValueError("need at least 3 observations")
    logx = np.log(xs)
    if logx.var() <= 0.0:
        raise NumericalError("degenerate sample: all observations equal")
    w = logx - math.log(u)
    w1, w2 = float(w.sum()), float((w * w).sum())

    def negll(p):
        mu, logsigma = p
        return -trunc_lognormal_logL(mu, math.exp(2.0 * logsigma), xs, u)

    zu_grid = np.linspace(-60.0, 60.0, 4801)
    sig = _profile_sigma(zu_grid, w1, w2, n)
    prof = (-w2 / (2.0 * sig**2) - zu_grid * w1 / sig - n * zu_grid**2 / 2.0
            - n * np.log(sig) - n * stats.norm.logsf(zu_grid))
    k = int(np.argmax(prof))
    zu0 = float(zu_grid[k])
    sigma0 = float(sig[k])
    mu0 = math.log(u) - zu0 * sigma0

    best = optimize.minimize(negll, x0=[mu0, math.log(sigma0)], method="Nelder-Mead",
                             options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
    # one perturbation restart; catches premature simplex collapse
    res = optimize.minimize(negll, x0=best.x * 1.0001 + 1e-6, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
    if res.fun < best.fun:
        best = res
    if not math.isfinite(best.fun):
        raise NumericalError("truncated-lognormal likelihood is flat or invalid",
                             last_iterate={"mu": best.x[0]})

    mu_hat = float(best.x[0])
    s2_hat = float(math.exp(2.0 * best.x[1]))
    logL = -float(best.fun)
    se = _lognormal_se(mu_hat, s2_hat, xs, u)
    model = TailModel(Family.TRUNC_LOGNORMAL, u=u, mu=mu_hat, sigma2=s2_hat)
    return TailFit(model, se=se, logL=logL, n=n)


def _lognormal_se(mu: float, s2: float, xs: np.ndarray, u: float) -> dict[str, float]:
    """Observed-information SEs in (mu, sigma2) coordinates by central
    finite differences with relative step 1e-5."""
    theta = np.array([mu, s2])
    h = 1e-5 * np.maximum(np.abs(theta), 1e-3)

    def ll(p):
        return trunc_lognormal_logL(p[0], p[1], xs, u)

    hess = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            pp = theta.copy(); pp[i] += h[i]; pp[j] += h[j]
            pm = theta.copy(); pm[i] += h[i]; pm[j] -= h[j]
            mp = theta.copy(); mp[i] -= h[i]; mp[j] += h[j]
            mm = theta.copy(); mm[i] -= h[i]; mm[j] -= h[j]
            hess[i, j] = (ll(pp) - ll(pm) - ll(mp) + ll(mm)) / (4.0 * h[i] * h[j])
    try:
        cov = np.linalg.inv(-hess)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular observed information for lognormal fit") from exc
    if np.any(np.diag(cov) < 0):
        raise NumericalError("observed information not positive definite")
    return {"mu": float(math.sqrt(cov[0, 0])), "sigma2": float(math.sqrt(cov[1, 1]))}


def lr_test(fit_null: TailFit, fit_alt: TailFit, df: int) -> tuple[float, float]:
    """Chi-square likelihood-ratio test of nested fits on the same sample."""
    if fit_null.n != fit_alt.n:
        raise ValueError("fits are on samples of different size")
    if fit_alt.logL < fit_null.logL - 1e-6:
        raise ValueError("alternative fit has lower likelihood than the null; "
                         "models are not nested or a fit failed")
    statistic = max(0.0, 2.0 * (fit_alt.logL - fit_null.logL))
    return statistic, float(stats.chi2.sf(statistic, df))


def rolling_alpha(dated_sizes: Sequence[tuple[dt.date, float]], u: float,
                  window: int) -> list[tuple[dt.date, float, float]]:
    """Pareto tail exponent on a moving window of consecutive events.

    Input must be date-sorted and pre-filtered to sizes >= u; windows advance
    one event at a time and each fit is stamped with its last event date.
    """
    if window < 10:
        raise ValueError("window must be >= 10")
    dates = [d for d, _ in dated_sizes]
    if any(b < a for a, b in zip(dates, dates[1:])):
        raise ValueError("events must be date-sorted")
    sizes = np.array([x for _, x in dated_sizes], dtype=float)
    if np.any(sizes < u):
        raise ValueError("all sizes must be >= u")
    n = sizes.size
    if n < window:
        warnings.warn(f"only {n} events for window {window}; no output")
        return []
    logs = np.log(sizes / u)
    csum = np.concatenate([[0.0], np.cumsum(logs)])
    out = []
    for end in range(window, n + 1):
        s = csum[end] - csum[end - window]
        alpha = window / s
        out.append((dates[end - 1], float(alpha), float(alpha / math.sqrt(window))))
    return out


def survival_export(xs: Sequence[float], u: float) -> list[tuple[float, float]]:
    """Empirical CCDF points (x, fraction of sample >= x) at unique sizes."""
    xs = np.sort(_check_sample(np.asarray(xs, dtype=float), u))
    n = xs.size
    values, first_idx = np.unique(xs, return_index=True)
    return [(float(v), float((n - i) / n)) for v, i in zip(values, first_idx)]


def trunc_pareto_quantile(v, alpha: float, u: float, m: float = math.inf):
    """Inverse CDF x = u * (1 - v*(1-(u/m)^alpha))^(-1/alpha); v in [0, 1]."""
    k = 1.0 if not math.isfinite(m) else 1.0 - (u / m) ** alpha
    return u * np.exp(np.log1p(-k * np.asarray(v, dtype=float)) * (-1.0 / alpha))


def trunc_pareto_cdf(x, alpha: float, u: float, m: float) -> np.ndarray:
    """T(x) = (F(x) - F(u)) / (F(m) - F(u)) for the Pareto F; T(u)=0, T(m)=1."""
    x = np.asarray(x, dtype=float)
    k = 1.0 - (u / m) ** alpha
    out = (1.0 - (x / u) ** (-alpha)) / k
    return np.clip(out, 0.0, 1.0)


def severity_from_uniform(model: TailModel, v: np.ndarray) -> np.ndarray:
    """Inverse-CDF transform of uniforms to severities for any family."""
    if model.family is Family.PARETO:
        return trunc_pareto_quantile(v, model.alpha, model.u)
    if model.family is Family.TRUNC_PARETO:
        return trunc_pareto_quantile(v, model.alpha, model.u, model.m)
    sigma = math.sqrt(model.sigma2)
    zu = (math.log(model.u) - model.mu) / sigma
    tail = stats.norm.sf(zu)
    return np.exp(model.mu + sigma * stats.norm.isf(tail * (1.0 - np.asarray(v))))


def draw_severity(model: TailModel, n: int, rng: np.random.Generator) -> np.ndarray:
    return severity_from_uniform(model, rng.random(n))


def refit(model: TailModel, xs: np.ndarray) -> TailFit:
    """Fit xs with the same family and thresholds as ``model``."""
    if model.family is Family.PARETO:
        return fit_pareto(xs, model.u)
    if model.family is Family.TRUNC_PARETO:
        return fit_truncated_pareto(xs, model.u, model.m)
    return fit_truncated_lognormal(xs, model.u)


def sample_severity(model: TailModel, n: int, seed) -> np.ndarray:
    """n i.i.d. inverse-CDF draws; identical sequences for identical seeds."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return draw_severity(model, n, np.random.default_rng(seed))
