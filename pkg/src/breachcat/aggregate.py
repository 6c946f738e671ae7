"""Compound frequency x severity forecast of total ids breached.

An outer loop propagates model and parameter uncertainty: each replicate
picks a frequency model by weight, redraws its parameters by parametric
bootstrap (simulate counts over the historical bins, refit), redraws the
severity exponent the same way, then runs an inner compound simulation.
Per-replicate seeds derive from (seed, counter), so results are independent
of thread count and execution order.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from breachcat import NumericalError, kernels
from breachcat.events import EventRecord
from breachcat.freqmodel import FreqFit, MeanFamily, fit_nb_arrays, predict_mean
from breachcat.tailfit import Family, TailModel, draw_severity, refit

STAT_NAMES = ("mean", "sd", "q50", "q90", "q95", "q99")
INNER_QUANTILES = (0.5, 0.9, 0.95, 0.99)
OUTER_QUARTILES = (0.25, 0.5, 0.75)
BILLION = 1e9


@dataclass(frozen=True)
class PointSeverity:
    """Degenerate severity: every event breaches exactly ``value`` ids."""
    value: float


@dataclass(frozen=True)
class TabulatedSeverity:
    """Finite-support severity, for enumeration oracles."""
    values: tuple[float, ...]
    probs: tuple[float, ...]


@dataclass(frozen=True)
class FixedCount:
    """Degenerate count model: exactly ``n`` events per horizon."""
    n: int


@dataclass(frozen=True)
class TabulatedCount:
    """Finite-support count model, for enumeration oracles."""
    values: tuple[int, ...]
    probs: tuple[float, ...]


SeverityModel = Union[TailModel, PointSeverity, TabulatedSeverity]
CountModel = Union[FreqFit, FixedCount, TabulatedCount]


@dataclass(frozen=True)
class ForecastConfig:
    horizon: tuple[float, float]            # model-years, half-open
    severity: SeverityModel
    freq_models: tuple[tuple[CountModel, float], ...]
    n_inner: int = 100_000
    n_outer: int = 1_000
    seed: int = 0
    n_severity: int = 0                     # bootstrap sample size for severity refits
    bootstrap: bool = True

    def __post_init__(self):
        if self.horizon[0] >= self.horizon[1]:
            raise ValueError("empty horizon")
        if self.n_inner < 1_000:
            raise ValueError("n_inner must be >= 1000")
        if self.n_outer < 100:
            raise ValueError("n_outer must be >= 100")
        w = [w for _, w in self.freq_models]
        if not w or any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative and sum to 1")
        if self.bootstrap and isinstance(self.severity, TailModel) and self.n_severity < 2:
            raise ValueError("n_severity must be >= 2 to bootstrap a severity tail")


@dataclass(frozen=True)
class AggregateSummary:
    """Per uncertainty-quartile row: inner-simulation summary stats, in
    billions of ids."""
    rows: dict[float, dict[str, float]]

    def __post_init__(self):
        for q, row in self.rows.items():
            qs = [row["q50"], row["q90"], row["q95"], row["q99"]]
            if any(b < a - 1e-12 for a, b in zip(qs, qs[1:])):
                raise ValueError(f"quantiles not nondecreasing in row {q}")
            if row["q50"] > row["mean"] + row["sd"] + 1e-12:
                raise ValueError(f"median above mean+sd in row {q}; "
                                 "summaries are inconsistent")

    def row(self, q: float = 0.5) -> dict[str, float]:
        return self.rows[q]

    def to_dict(self) -> dict:
        return {"unit": "billions_of_ids",
                "rows": {str(q): dict(row) for q, row in self.rows.items()}}


def horizon_bin_mids(horizon: tuple[float, float]) -> np.ndarray:
    """Midpoints of the half-year bins covering the horizon."""
    t1, t2 = horizon
    start = math.floor(t1 / 0.5) * 0.5
    mids = np.arange(start + 0.25, t2, 0.5)
    if mids.size == 0:
        raise ValueError("horizon does not cover any half-year bin")
    return mids


def trunc_pareto_mean(alpha: float, u: float, m: float) -> float:
    """Closed-form mean of the upper-truncated Pareto on [u, m]."""
    if not (0 < u < m):
        raise ValueError("need 0 < u < m")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    c = 1.0 / (1.0 - (u / m) ** alpha)
    if abs(alpha - 1.0) < 1e-12:
        return c * u * math.log(m / u)
    return c * alpha / (1.0 - alpha) * u**alpha * (m ** (1.0 - alpha) - u ** (1.0 - alpha))


def severity_mean(model: SeverityModel) -> float:
    if isinstance(model, PointSeverity):
        return model.value
    if isinstance(model, TabulatedSeverity):
        return float(np.dot(model.values, model.probs))
    if model.family is Family.TRUNC_PARETO:
        return trunc_pareto_mean(model.alpha, model.u, model.m)
    if model.family is Family.PARETO:
        if model.alpha <= 1.0:
            return math.inf
        return model.alpha * model.u / (model.alpha - 1.0)
    s = math.sqrt(model.sigma2)
    zu = (math.log(model.u) - model.mu) / s
    from scipy import stats
    return math.exp(model.mu + model.sigma2 / 2.0) * stats.norm.sf(zu - s) / stats.norm.sf(zu)


def _tabulated_draw(values, probs, v: np.ndarray) -> np.ndarray:
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    return np.asarray(values)[np.searchsorted(cum, v, side="left")]


def _segment_sums(counts: np.ndarray, x: np.ndarray) -> np.ndarray:
    offsets = np.zeros(counts.size, dtype=np.int64)
    np.cumsum(counts[:-1], out=offsets[1:])
    padded = np.append(x, 0.0)
    sums = np.add.reduceat(padded, offsets)
    sums[counts == 0] = 0.0
    return sums


def _bootstrap_freq(model: CountModel, rng: np.random.Generator) -> CountModel:
    if not isinstance(model, FreqFit):
        return model  # degenerate/tabulated counts carry no parameter uncertainty
    mu = model.mean_at(model.t_mid)
    y_star = rng.negative_binomial(model.theta, model.theta / (model.theta + mu))
    return fit_nb_arrays(model.t_mid, y_star, model.mean_family)


def _bootstrap_severity(model: SeverityModel, n: int,
                        rng: np.random.Generator) -> SeverityModel:
    if not isinstance(model, TailModel):
        return model
    xs = draw_severity(model, n, rng)
    return refit(model, xs).model


def _horizon_mu(model: CountModel, mids: np.ndarray) -> float:
    total = sum(predict_mean(model, float(t)) for t in mids)
    if total <= 0:
        raise NumericalError("non-positive horizon mean")
    return total


def _draw_counts(model: CountModel, mu: Optional[float], n_inner: int,
                 rng: np.random.Generator) -> np.ndarray:
    if isinstance(model, FixedCount):
        return np.full(n_inner, model.n, dtype=np.int64)
    if isinstance(model, TabulatedCount):
        return _tabulated_draw(model.values, model.probs,
                               rng.random(n_inner)).astype(np.int64)
    theta = model.theta
    return rng.negative_binomial(theta, theta / (theta + mu), size=n_inner).astype(np.int64)


def _draw_totals(severity: SeverityModel, counts: np.ndarray,
                 rng: np.random.Generator) -> np.ndarray:
    if isinstance(severity, PointSeverity):
        return counts.astype(float) * severity.value
    total_events = int(counts.sum())
    v = rng.random(total_events)
    if isinstance(severity, TabulatedSeverity):
        draws = _tabulated_draw(severity.values, severity.probs, v).astype(float)
        return _segment_sums(counts, draws)
    if severity.family in (Family.PARETO, Family.TRUNC_PARETO):
        m = severity.m if severity.family is Family.TRUNC_PARETO else math.inf
        return kernels.compound_totals(counts, v, severity.alpha, severity.u, m)
    from breachcat.tailfit import severity_from_uniform
    return _segment_sums(counts, severity_from_uniform(severity, v))


def _replicate(cfg: ForecastConfig, mids: np.ndarray, attempt: int):
    rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed,
                                                       spawn_key=(attempt,)))
    weights = np.array([w for _, w in cfg.freq_models])
    pick = int(np.searchsorted(np.cumsum(weights), rng.random(), side="right"))
    pick = min(pick, len(cfg.freq_models) - 1)
    freq = cfg.freq_models[pick][0]

    if cfg.bootstrap:
        freq = _bootstrap_freq(freq, rng)
        severity = _bootstrap_severity(cfg.severity, cfg.n_severity, rng)
    else:
        severity = cfg.severity

    mu = _horizon_mu(freq, mids) if isinstance(freq, FreqFit) else None
    counts = _draw_counts(freq, mu, cfg.n_inner, rng)
    totals = _draw_totals(severity, counts, rng)
    stats_row = np.empty(6)
    stats_row[0] = totals.mean()
    stats_row[1] = totals.std(ddof=1)
    stats_row[2:] = np.quantile(totals, INNER_QUANTILES)
    return stats_row, pick


def simulate_aggregate(cfg: ForecastConfig, threads: int = 1
                       ) -> tuple[AggregateSummary, dict]:
    """Run the two-level simulation; see the module docstring.

    Returns the quartile summary (billions of ids) plus the raw per-replicate
    inner summaries (raw ids) for diagnostics.
    """
    if isinstance(cfg.severity, TailModel) and cfg.severity.family is not Family.TRUNC_PARETO:
        warnings.warn("severity family without an upper truncation: aggregate "
                      "totals may have infinite mean")
    mids = horizon_bin_mids(cfg.horizon)

    stats_arr = np.full((cfg.n_outer, 6), np.nan)
    picks = np.full(cfg.n_outer, -1, dtype=int)

    def run(slot_attempts):
        def task(sa):
            slot, attempt = sa
            try:
                return slot, _replicate(cfg, mids, attempt)
            except (NumericalError, ValueError, np.linalg.LinAlgError):
                return slot, None
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(task, slot_attempts))
        else:
            results = [task(sa) for sa in slot_attempts]
        failed = []
        for slot, res in results:
            if res is None:
                failed.append(slot)
            else:
                stats_arr[slot] = res[0]
                picks[slot] = res[1]
        return sorted(failed)

    failed = run([(slot, slot) for slot in range(cfg.n_outer)])
    n_failures = len(failed)
    next_attempt = cfg.n_outer
    while failed:
        if n_failures > 0.1 * cfg.n_outer:
            raise NumericalError(f"{n_failures} bootstrap replicates failed "
                                 f"(more than 10% of {cfg.n_outer})")
        batch = [(slot, next_attempt + i) for i, slot in enumerate(failed)]
        next_attempt += len(failed)
        failed = run(batch)
        n_failures += len(failed)

    rows = {}
    for qi, q in enumerate(OUTER_QUARTILES):
        vals = np.quantile(stats_arr, q, axis=0) / BILLION
        rows[q] = dict(zip(STAT_NAMES, map(float, vals)))
    summary = AggregateSummary(rows)
    raw = {"stats": stats_arr, "stat_names": STAT_NAMES, "model_index": picks,
           "n_failures": n_failures}
    return summary, raw


def forecast_table(cfg_now: ForecastConfig, cfg_past: ForecastConfig,
                   threads: int = 1, notes: Sequence[str] = ()) -> dict:
    """Two aggregate summaries plus elementwise now/past ratios."""
    now, _ = simulate_aggregate(cfg_now, threads)
    past, _ = simulate_aggregate(cfg_past, threads)
    ratios = {q: {k: (now.rows[q][k] / past.rows[q][k] if past.rows[q][k] else math.inf)
                  for k in STAT_NAMES}
              for q in OUTER_QUARTILES}
    return {"now": now, "past": past, "ratios": ratios, "notes": list(notes)}


def realized_check(events: Sequence[EventRecord], period, u: int,
                   type_filter=None, delay_dist=None, observed_at=None) -> dict:
    """Realized total ids over a period, with a delay-adjusted projection.

    The completeness factor scales the expected eventual event count; the
    naive total projection applies the same factor and is flagged as such,
    since missing events are drawn from a heavy tail.
    """
    t1, t2 = period
    kept = [e for e in events
            if e.ids >= u and t1 <= e.event_date < t2
            and (type_filter is None or e.breach_type in type_filter)]
    out = {"period": (t1.isoformat(), t2.isoformat()),
           "realized_total_ids": int(sum(e.ids for e in kept)),
           "realized_count": len(kept)}
    if delay_dist is not None and observed_at is not None:
        from breachcat.delay import completeness_factor
        comp = completeness_factor(delay_dist, period, observed_at)
        out["completeness"] = comp
        out["projected_count"] = out["realized_count"] * comp["factor"]
        out["projected_total_ids_naive"] = out["realized_total_ids"] * comp["factor"]
        out["projection_note"] = ("total projection scales the realized sum by the "
                                  "count completeness factor; undiscovered events are "
                                  "heavy-tailed, so the eventual total is more uncertain")
    return out
