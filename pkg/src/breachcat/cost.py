"""Damage-to-cost mapping and population-level annual cost extrapolation.

Each cost model is a separate regime heuristic: flat per-id pricing for
moderate breaches, sublinear power laws calibrated at an anchor point, a
flat large-breach rate, and a per-id band for extreme breaches. Models are
never auto-switched by size; out-of-regime use only warns.
"""

from __future__ import annotations

import datetime as dt
import enum
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from breachcat.events import EventRecord


class CostKind(str, enum.Enum):
    FLAT_MODERATE = "FlatModerate"
    POWER_JACOBS = "PowerJacobs"
    POWER_ROMANOSKY = "PowerRomanosky"
    FLAT_LARGE = "FlatLarge"
    FLAT_EXTREME_BAND = "FlatExtremeBand"


MODERATE_REGIME_MAX = 100_000  # ids; flat moderate pricing is meant below this


@dataclass(frozen=True)
class CostModel:
    kind: CostKind
    unit_cost: Optional[float] = None               # $/id, flat kinds
    exponent: Optional[float] = None                # power kinds
    anchor: Optional[tuple[float, float]] = None    # (size, cost), power kinds
    band: Optional[tuple[float, float]] = None      # ($low, $high)/id, band kind

    def __post_init__(self):
        if self.kind in (CostKind.FLAT_MODERATE, CostKind.FLAT_LARGE):
            if self.unit_cost is None or self.unit_cost <= 0:
                raise ValueError("flat models need a positive unit_cost")
        elif self.kind in (CostKind.POWER_JACOBS, CostKind.POWER_ROMANOSKY):
            if self.exponent is None or not 0.0 < self.exponent <= 1.0:
                raise ValueError("power exponent must be in (0, 1]")
            if self.anchor is None or self.anchor[0] <= 0 or self.anchor[1] <= 0:
                raise ValueError("power models need a positive (size, cost) anchor")
        else:
            if self.band is None or not 0 < self.band[0] <= self.band[1]:
                raise ValueError("band must satisfy 0 < low <= high")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "unit_cost": self.unit_cost,
                "exponent": self.exponent, "anchor": self.anchor, "band": self.band}


def flat_moderate(unit_cost: float = 148.0) -> CostModel:
    """Survey-average per-id cost; meant for breaches up to 1e5 ids."""
    return CostModel(CostKind.FLAT_MODERATE, unit_cost=unit_cost)


def power_jacobs(exponent: float = 0.76,
                 anchor: tuple[float, float] = (1e4, 148.0 * 1e4)) -> CostModel:
    """Sublinear moderate-breach cost; anchored to agree with the flat
    $148/id model at 1e4 ids."""
    return CostModel(CostKind.POWER_JACOBS, exponent=exponent, anchor=anchor)


def power_romanosky(exponent: float = 0.3,
                    anchor: tuple[float, float] = (5e6, 5e6)) -> CostModel:
    """Sublinear large-breach cost; anchored at the reported mean size and
    mean cost of the underlying claims sample (5M ids, $5M)."""
    return CostModel(CostKind.POWER_ROMANOSKY, exponent=exponent, anchor=anchor)


def flat_large(unit_cost: float = 5.0) -> CostModel:
    return CostModel(CostKind.FLAT_LARGE, unit_cost=unit_cost)


def flat_extreme_band(band: tuple[float, float] = (1.0, 5.0)) -> CostModel:
    return CostModel(CostKind.FLAT_EXTREME_BAND, band=band)


def event_cost(size: float, model: CostModel) -> Union[float, tuple[float, float]]:
    """Dollar cost of one breach of ``size`` ids (an interval for band models)."""
    if size < 1:
        raise ValueError("size must be >= 1")
    if model.kind is CostKind.FLAT_MODERATE:
        if size > MODERATE_REGIME_MAX:
            warnings.warn(f"flat moderate cost applied beyond its regime "
                          f"(size {size:g} > {MODERATE_REGIME_MAX})")
        return size * model.unit_cost
    if model.kind is CostKind.FLAT_LARGE:
        return size * model.unit_cost
    if model.kind is CostKind.FLAT_EXTREME_BAND:
        return size * model.band[0], size * model.band[1]
    a_size, a_cost = model.anchor
    return a_cost * (size / a_size) ** model.exponent


def annual_cost_extrapolation(breach_prob: float, n_firms: float,
                              mean_size: float, unit_cost: float) -> dict:
    """Population-level $/yr: breach_prob x n_firms x mean_size x unit_cost."""
    if not 0.0 < breach_prob <= 1.0:
        raise ValueError("breach_prob must be in (0, 1]")
    if min(n_firms, mean_size, unit_cost) <= 0:
        raise ValueError("all inputs must be positive")
    total = breach_prob * n_firms * mean_size * unit_cost
    return {"annual_cost": total,
            "inputs": {"breach_prob": breach_prob, "n_firms": n_firms,
                       "mean_size": mean_size, "unit_cost": unit_cost}}


def historical_large_cost(events: Sequence[EventRecord], u: int, unit_cost: float,
                          as_of: Optional[dt.date] = None) -> dict:
    """Per-id cost applied to all historical events with ids >= u.

    Reports the full-history total plus the trailing-5-year share and its
    annualized figure (window ending at ``as_of``, default the newest event).
    """
    if u < 1:
        raise ValueError("u must be >= 1")
    kept = [e for e in events if e.ids >= u]
    if not kept:
        return {"total_cost": 0.0, "recent_share": 0.0, "annualized_recent": 0.0,
                "n_events": 0}
    if as_of is None:
        as_of = max(e.event_date for e in kept)
    cutoff = as_of.replace(year=as_of.year - 5)
    total_ids = sum(e.ids for e in kept)
    recent_ids = sum(e.ids for e in kept if e.event_date > cutoff)
    total = unit_cost * total_ids
    recent = unit_cost * recent_ids
    return {"total_cost": total, "recent_share": recent / total if total else 0.0,
            "annualized_recent": recent / 5.0, "n_events": len(kept),
            "window": (cutoff.isoformat(), as_of.isoformat())}
