"""Breach event records: parsing, filtering, binning, descriptive tables."""

from __future__ import annotations

import csv
import datetime as dt
import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from breachcat import SchemaError, timescale

MIN_DATE = dt.date(1990, 1, 1)

CSV_COLUMNS = ["event_date", "org_sector", "breach_type", "ids", "state", "org_name"]
MANDATORY_COLUMNS = ["event_date", "org_sector", "breach_type", "ids"]


class Sector(str, enum.Enum):
    BUSINESS = "business"
    FINANCIAL = "financial"
    WEB = "web"
    MEDICAL = "medical"
    EDUCATIONAL = "educational"
    GOVERNMENT = "government"
    OTHER = "other"


class BreachType(str, enum.Enum):
    HACK = "HACK"
    DISC = "DISC"
    INSD = "INSD"
    HW = "HW"
    NA = "NA"


@dataclass(frozen=True, slots=True)
class EventRecord:
    event_date: dt.date
    org_sector: Sector
    breach_type: BreachType
    ids: int
    state: Optional[str] = None
    org_name: Optional[str] = None

    def __post_init__(self):
        if self.ids < 0:
            raise ValueError("ids must be >= 0")
        if not (MIN_DATE <= self.event_date <= dt.date.today()):
            raise ValueError(f"event_date {self.event_date} outside accepted range")

    @property
    def size_known(self) -> bool:
        """False for ids == 0 records, which only ever count events."""
        return self.ids > 0


class RowWarning(NamedTuple):
    row: int
    reason: str


@dataclass(frozen=True)
class EventFilter:
    """Inclusive severity threshold plus type/sector/date restrictions.

    ``ids >= min_ids`` is the "in excess of" convention used everywhere:
    thresholds are inclusive. ``date_range`` is a half-open [start, end)
    interval; None means unbounded.
    """

    min_ids: int = 1
    types: Optional[frozenset[BreachType]] = None
    sectors: Optional[frozenset[Sector]] = None
    date_range: Optional[tuple[dt.date, dt.date]] = None

    def __post_init__(self):
        if self.min_ids < 1:
            raise ValueError("min_ids must be >= 1")
        if self.date_range is not None and self.date_range[0] >= self.date_range[1]:
            raise ValueError("date_range start must precede end")

    def matches(self, e: EventRecord) -> bool:
        if e.ids < self.min_ids:
            return False
        if self.types is not None and e.breach_type not in self.types:
            return False
        if self.sectors is not None and e.org_sector not in self.sectors:
            return False
        if self.date_range is not None:
            start, end = self.date_range
            if not (start <= e.event_date < end):
                return False
        return True


@dataclass
class BinnedCounts:
    """Event counts on calendar half-year bins (Jan 1 / Jul 1 boundaries)."""

    bin_edges: list[dt.date]
    counts: np.ndarray
    t_mid: np.ndarray
    partial_last: bool = False

    def __post_init__(self):
        if len(self.counts) != len(self.bin_edges) - 1:
            raise ValueError("counts length must equal number of bins")
        if any(b <= a for a, b in zip(self.bin_edges, self.bin_edges[1:])):
            raise ValueError("bin edges must be strictly increasing")
        if np.any(np.diff(self.t_mid) <= 0):
            raise ValueError("t_mid must be strictly increasing")


def _parse_ids(raw: str) -> int:
    cleaned = raw.strip().replace(",", "").replace("'", "").replace("_", "")
    if not cleaned:
        raise ValueError("empty")
    try:
        return int(cleaned)
    except ValueError:
        val = float(cleaned)  # accept 5.7e7-style inputs
        if not val.is_integer():
            raise ValueError("non-integer")
        return int(val)


def parse_events(source: Iterable[str], schema: Optional[dict[str, str]] = None
                 ) -> tuple[list[EventRecord], list[RowWarning]]:
    """Read events from a CSV character stream.

    ``schema`` maps canonical field names to column headers (defaults to the
    canonical headers themselves). Malformed rows produce warnings, never
    silent drops; unknown sector/type values map to OTHER/NA so unattributed
    events stay countable.
    """
    schema = dict(schema or {})
    colmap = {name: schema.get(name, name) for name in CSV_COLUMNS}
    reader = csv.DictReader(source)
    if reader.fieldnames is None:
        raise SchemaError("no header row")
    missing = [colmap[c] for c in MANDATORY_COLUMNS if colmap[c] not in reader.fieldnames]
    if missing:
        raise SchemaError(f"missing mandatory column(s): {', '.join(missing)}")
    have_state = colmap["state"] in reader.fieldnames
    have_org = colmap["org_name"] in reader.fieldnames

    sectors = {s.value: s for s in Sector}
    types = {t.value: t for t in BreachType}
    records: list[EventRecord] = []
    warnings: list[RowWarning] = []
    for rownum, row in enumerate(reader, start=2):  # row 1 is the header
        try:
            event_date = dt.date.fromisoformat(row[colmap["event_date"]].strip())
        except (ValueError, AttributeError):
            warnings.append(RowWarning(rownum, "unparseable event_date"))
            continue
        if not (MIN_DATE <= event_date <= dt.date.today()):
            warnings.append(RowWarning(rownum, "event_date outside accepted range"))
            continue
        try:
            ids = _parse_ids(row[colmap["ids"]] or "")
        except (ValueError, TypeError):
            warnings.append(RowWarning(rownum, "unparseable ids"))
            continue
        if ids < 0:
            warnings.append(RowWarning(rownum, "negative ids"))
            continue

        raw_sector = (row[colmap["org_sector"]] or "").strip().lower()
        sector = sectors.get(raw_sector)
        if sector is None:
            warnings.append(RowWarning(rownum, f"unknown org_sector {raw_sector!r} mapped to other"))
            sector = Sector.OTHER
        raw_type = (row[colmap["breach_type"]] or "").strip().upper()
        btype = types.get(raw_type)
        if btype is None:
            warnings.append(RowWarning(rownum, f"unknown breach_type {raw_type!r} mapped to NA"))
            btype = BreachType.NA

        state = (row.get(colmap["state"]) or "").strip().upper() if have_state else ""
        org = (row.get(colmap["org_name"]) or "").strip() if have_org else ""
        records.append(EventRecord(event_date, sector, btype, ids,
                                   state or None, org or None))
    return records, warnings


def load_events(path) -> tuple[list[EventRecord], list[RowWarning]]:
    with open(path, newline="") as fh:
        return parse_events(fh)


def filter_events(events: Sequence[EventRecord], f: EventFilter) -> list[EventRecord]:
    return [e for e in events if f.matches(e)]


def bin_counts(events: Sequence[EventRecord], f: EventFilter) -> BinnedCounts:
    """Half-year counts of the filtered events over f.date_range."""
    if f.date_range is None:
        raise ValueError("bin_counts requires a filter with a date_range")
    kept = filter_events(events, f)
    edges = timescale.half_year_edges(*f.date_range)
    partial = edges[-1] != timescale.half_year_start(edges[-1])
    counts = np.zeros(len(edges) - 1, dtype=np.int64)
    for e in kept:
        if e.event_date < edges[0]:
            continue
        # locate the containing bin; linear scan is fine at ~26 bins
        for i in range(len(edges) - 1):
            if edges[i] <= e.event_date < edges[i + 1]:
                counts[i] += 1
                break
    t_edges = [timescale.years_since_epoch(d) for d in edges]
    t_mid = np.array([(a + b) / 2.0 for a, b in zip(t_edges, t_edges[1:])])
    return BinnedCounts(edges, counts, t_mid, partial_last=partial)


def quantile_type1(values: Sequence[float], p: float) -> float:
    """Inverted-CDF (type 1) empirical quantile: x_(ceil(n*p)) for p in (0, 1]."""
    if not 0.0 < p <= 1.0:
        raise ValueError("quantile level must be in (0, 1]")
    xs = np.sort(np.asarray(values))
    if xs.size == 0:
        raise ValueError("empty sample")
    k = max(1, math.ceil(xs.size * p))
    return float(xs[k - 1])


def sector_quantiles(events: Sequence[EventRecord], u: int, probs: Sequence[float],
                     span_years: Optional[float] = None) -> dict:
    """Severity quantiles and annualized frequency per sector, at ids >= u.

    ``span_years`` defaults to the half-year-aligned span of the event dates.
    Sectors with zero qualifying events are omitted, with a note.
    """
    if u < 1:
        raise ValueError("u must be >= 1")
    kept = [e for e in events if e.ids >= u]
    if span_years is None:
        if not kept:
            raise ValueError("no qualifying events and no explicit span_years")
        lo = timescale.half_year_start(min(e.event_date for e in kept))
        hi = timescale.next_half_year(max(e.event_date for e in kept))
        span_years = timescale.years_since_epoch(hi) - timescale.years_since_epoch(lo)
    rows: dict[str, dict] = {}
    notes: list[str] = []
    for sector in Sector:
        sizes = [e.ids for e in kept if e.org_sector is sector]
        if not sizes:
            notes.append(f"sector {sector.value}: no events at or above threshold, row omitted")
            continue
        rows[sector.value] = {
            "n": len(sizes),
            "annual_freq": len(sizes) / span_years,
            "quantiles": {p: quantile_type1(sizes, p) for p in probs},
        }
    return {"rows": rows, "notes": notes, "span_years": span_years,
            "quantile_convention": "inverted_cdf_type1"}


def totals_by_sector_type(events: Sequence[EventRecord]) -> dict:
    """Summed ids per (sector, breach type) cell, with margins.

    OTHER / NA hold unattributed events, so margins are plain sums over the
    full cross.
    """
    cells = {s.value: {t.value: 0 for t in BreachType} for s in Sector}
    for e in events:
        cells[e.org_sector.value][e.breach_type.value] += e.ids
    row_margins = {s: sum(row.values()) for s, row in cells.items()}
    col_margins = {t.value: sum(cells[s.value][t.value] for s in Sector) for t in BreachType}
    return {
        "cells": cells,
        "row_margins": row_margins,
        "col_margins": col_margins,
        "grand_total": sum(row_margins.values()),
        "unattributed": {"sector": row_margins[Sector.OTHER.value],
                         "type": col_margins[BreachType.NA.value]},
    }


def histogram_export(events: Sequence[EventRecord], u_max: float, bins: int
                     ) -> tuple[list[tuple[float, float, int]], int]:
    """Equal-width histogram of ids on [min ids, u_max] plus an overflow bucket."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    sizes = np.array([e.ids for e in events if e.size_known], dtype=float)
    if sizes.size == 0:
        return [], 0
    lo = sizes.min()
    if u_max <= lo:
        raise ValueError("u_max must exceed the smallest event size")
    edges = np.linspace(lo, u_max, bins + 1)
    counts, _ = np.histogram(sizes[sizes <= u_max], bins=edges)
    overflow = int((sizes > u_max).sum())
    out = [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bins)]
    return out, overflow


def chronology_export(events: Sequence[EventRecord], f: EventFilter
                      ) -> list[tuple[dt.date, int, str]]:
    """Date-sorted (event_date, ids, breach_type) triples for scatter plots."""
    kept = filter_events(events, f)
    kept.sort(key=lambda e: (e.event_date, e.ids))
    return [(e.event_date, e.ids, e.breach_type.value) for e in kept]
