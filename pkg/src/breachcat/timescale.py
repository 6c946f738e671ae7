"""Calendar time convention shared by every module.

Model time is measured in years since 2005-01-01, with each calendar
half-year (Jan 1 / Jul 1 boundaries) counting as exactly 0.5 and dates
interpolated linearly by day within their half-year. Under this convention
half-year bin midpoints fall on 0.25, 0.75, ... exactly, and 2017-10-01
maps to 12.75.
"""

from __future__ import annotations

import datetime as dt

EPOCH = dt.date(2005, 1, 1)


def half_year_start(d: dt.date) -> dt.date:
    return dt.date(d.year, 1 if d.month <= 6 else 7, 1)


def next_half_year(d: dt.date) -> dt.date:
    """First half-year boundary strictly after ``d``'s containing half-year."""
    if d.month <= 6:
        return dt.date(d.year, 7, 1)
    return dt.date(d.year + 1, 1, 1)


def years_since_epoch(d: dt.date) -> float:
    start = half_year_start(d)
    end = next_half_year(d)
    index = 2 * (d.year - EPOCH.year) + (0 if d.month <= 6 else 1)
    frac = (d - start).days / (end - start).days
    return 0.5 * (index + frac)


def half_year_edges(start: dt.date, end: dt.date) -> list[dt.date]:
    """Half-year boundaries covering [start, end): floor(start), ..., end.

    The final edge is ``end`` itself when it is not a boundary, which marks
    a partial last bin.
    """
    if start >= end:
        raise ValueError("empty date range")
    edges = [half_year_start(start)]
    while edges[-1] < end:
        nxt = next_half_year(edges[-1])
        edges.append(min(nxt, end))
    return edges
