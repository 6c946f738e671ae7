"""Event-to-curation reporting delay and completeness correction.

Recent periods undercount events until delays elapse; the empirical delay
distribution turns an observed count into an expected eventual count. The
distribution is treated as stationary when applied to other periods, with a
staleness warning when its source window is more than three years older
than the queried period.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from breachcat import SchemaError
from breachcat.events import RowWarning, quantile_type1

STALE_AFTER_YEARS = 3


@dataclass(frozen=True)
class DelayRecord:
    event_date: dt.date
    submit_date: dt.date
    ids: Optional[int] = None  # present only when the source CSV carries sizes

    def __post_init__(self):
        if self.submit_date < self.event_date:
            raise ValueError("submission precedes event")

    @property
    def delay_days(self) -> int:
        return (self.submit_date - self.event_date).days


@dataclass(frozen=True)
class DelayDistribution:
    delays: np.ndarray                      # day counts, sorted
    source_window: tuple[dt.date, dt.date]  # submit-date range of the sample

    def __post_init__(self):
        if len(self.delays) == 0:
            raise ValueError("empty delay sample")
        if np.any(np.asarray(self.delays) < 0):
            raise ValueError("negative delays")

    @classmethod
    def from_records(cls, records: Sequence[DelayRecord]) -> "DelayDistribution":
        delays = np.sort(np.array([r.delay_days for r in records], dtype=np.int64))
        window = (min(r.submit_date for r in records),
                  max(r.submit_date for r in records))
        return cls(delays, window)

    def cdf(self, age_days) -> np.ndarray:
        """Empirical P(delay <= age)."""
        return np.searchsorted(self.delays, np.asarray(age_days), side="right") / len(self.delays)


def parse_delays(source) -> tuple[list[DelayRecord], list[RowWarning]]:
    """Read `event_date,submit_date[,ids]` CSV; negative delays are warned away."""
    reader = csv.DictReader(source)
    if reader.fieldnames is None:
        raise SchemaError("no header row")
    for col in ("event_date", "submit_date"):
        if col not in reader.fieldnames:
            raise SchemaError(f"missing mandatory column: {col}")
    have_ids = "ids" in reader.fieldnames
    records: list[DelayRecord] = []
    warnings: list[RowWarning] = []
    for rownum, row in enumerate(reader, start=2):
        try:
            event = dt.date.fromisoformat(row["event_date"].strip())
            submit = dt.date.fromisoformat(row["submit_date"].strip())
        except (ValueError, AttributeError):
            warnings.append(RowWarning(rownum, "unparseable date"))
            continue
        if submit < event:
            warnings.append(RowWarning(rownum, "negative delay rejected"))
            continue
        ids = None
        if have_ids and (row.get("ids") or "").strip():
            try:
                ids = int(row["ids"])
            except ValueError:
                warnings.append(RowWarning(rownum, "unparseable ids"))
                continue
        records.append(DelayRecord(event, submit, ids))
    return records, warnings


def load_delays(path) -> tuple[list[DelayRecord], list[RowWarning]]:
    with open(path, newline="") as fh:
        return parse_delays(fh)


def delay_quantiles(d: DelayDistribution, probs: Sequence[float]) -> dict:
    """Inverted-CDF quantiles (in days) plus the arithmetic mean."""
    if any(not 0.0 < p < 1.0 for p in probs):
        raise ValueError("quantile levels must be in (0, 1)")
    return {"quantiles": {p: quantile_type1(d.delays, p) for p in probs},
            "mean": float(np.mean(d.delays)), "n": int(len(d.delays))}


def completeness_factor(d: DelayDistribution, period: tuple[dt.date, dt.date],
                        observed_at: dt.date) -> dict:
    """Expected eventual/observed count ratio for events in [t1, t2).

    Event times are uniform over the period's days; for each day the chance
    the event has already surfaced is the empirical CDF at its age. The
    factor is 1/mean of those probabilities, always >= 1.
    """
    t1, t2 = period
    if t1 >= t2:
        raise ValueError("empty period")
    if observed_at < t2:
        raise ValueError("observed_at must not precede the period end")
    days = np.arange((t2 - t1).days)
    ages = (observed_at - t1).days - days
    p_bar = float(np.mean(d.cdf(ages)))
    if p_bar <= 0.0:
        raise ValueError("no probability mass at these ages; factor undefined")
    notes = []
    if (t1 - d.source_window[1]).days > STALE_AFTER_YEARS * 365.25:
        notes.append(f"delay distribution is stale: source window ends "
                     f"{d.source_window[1].isoformat()}, more than "
                     f"{STALE_AFTER_YEARS} years before the queried period")
    return {"period": (t1.isoformat(), t2.isoformat()),
            "observed_at": observed_at.isoformat(),
            "factor": 1.0 / p_bar, "p_bar": p_bar,
            "n_delays": int(len(d.delays)), "notes": notes}


def size_delay_slope(records: Sequence[tuple[float, float]]) -> dict:
    """OLS of log(delay) on log(ids) with a two-sided slope t-test.

    Zero-delay (and zero-size) records are excluded; the exclusion count is
    reported.
    """
    kept = [(s, d) for s, d in records if s > 0 and d > 0]
    excluded = len(records) - len(kept)
    if len(kept) < 3:
        raise ValueError("need at least 3 records with positive size and delay")
    x = np.log([s for s, _ in kept])
    y = np.log([d for _, d in kept])
    res = stats.linregress(x, y)
    return {"slope": float(res.slope), "se": float(res.stderr),
            "p_value": float(res.pvalue), "intercept": float(res.intercept),
            "n": len(kept), "excluded_zero": excluded}


def submission_intensity(records: Sequence[DelayRecord], bandwidth_days: float = 14.0
                         ) -> list[tuple[dt.date, float]]:
    """Gaussian kernel density of submission activity on a daily grid.

    The grid spans the submissions plus four bandwidths each side, so the
    density integrates to 1 (within discretization error).
    """
    if bandwidth_days <= 0:
        raise ValueError("bandwidth must be positive")
    subs = np.array([(r.submit_date - dt.date(1970, 1, 1)).days for r in records],
                    dtype=float)
    pad = int(math.ceil(4 * bandwidth_days))
    grid = np.arange(subs.min() - pad, subs.max() + pad + 1)
    z = (grid[:, None] - subs[None, :]) / bandwidth_days
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (len(subs) * bandwidth_days * math.sqrt(2 * math.pi))
    base = dt.date(1970, 1, 1)
    return [(base + dt.timedelta(days=int(g)), float(v)) for g, v in zip(grid, dens)]
