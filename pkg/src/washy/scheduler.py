"""Ranking of candidate laundry windows against a production forecast.

Candidate windows start on an epoch-anchored minute grid and are scored by
the integral of interpolated production over the window. Because the power
curve is piecewise-linear, the trapezoid rule over the curve's breakpoints is
exact, not an approximation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from enum import Enum

from .errors import EmptyForecastError, NoWindowError, ValidationError
from .forecast import ForecastSeries, power_at
from .timeutil import HORIZON, ceil_to_step, hours_between

# Quality thresholds relative to the best window of the same query.
GOOD_RATIO = 0.85
AVERAGE_RATIO = 0.70

# Absolute watt-hour tolerance for tie detection when sorting windows.
ENERGY_EPS_WH = 1e-6

DEFAULT_STEP_MINUTES = 15
MAX_DURATION_MINUTES = 72 * 60


class SlotQuality(str, Enum):
    GOOD = "Good"
    AVERAGE = "Average"
    BAD = "Bad"


@dataclass(frozen=True)
class LaundryRequest:
    """A cycle to place: electrical draw in watts and duration in minutes."""

    power_w: float
    duration_minutes: float

    def __post_init__(self):
        if self.power_w <= 0:
            raise ValidationError("cycle power must be > 0 W")
        if self.duration_minutes <= 0:
            raise ValidationError("cycle duration must be > 0 minutes")
        if self.duration_minutes > MAX_DURATION_MINUTES:
            raise ValidationError("cycle duration cannot exceed 72 hours")


@dataclass(frozen=True)
class TimeWindow:
    start: datetime
    duration_minutes: float
    production_wh: float
    quality: SlotQuality | None = None
    exceeds_required: bool = False

    @property
    def end(self) -> datetime:
        return self.start + timedelta(minutes=self.duration_minutes)


@dataclass(frozen=True)
class RankedWindows:
    """Windows sorted by production descending; ties broken by earlier start."""

    windows: tuple[TimeWindow, ...]

    @property
    def best(self) -> TimeWindow:
        return self.windows[0]

    def __len__(self) -> int:
        return len(self.windows)


def required_energy(req: LaundryRequest) -> float:
    """Energy the cycle draws, in watt-hours."""
    return req.power_w * req.duration_minutes / 60.0


def window_energy(series: ForecastSeries, start: datetime, duration_minutes: float) -> float:
    """Integrated production over ``[start, start + duration]`` in watt-hours.

    Exact trapezoidal integral of the piecewise-linear power curve; segments
    outside forecast coverage contribute zero.
    """
    if duration_minutes <= 0:
        raise ValidationError("window duration must be > 0 minutes")
    if series.is_empty():
        return 0.0
    end = start + timedelta(minutes=duration_minutes)
    lo = max(start, series.start)
    hi = min(end, series.end)
    if lo >= hi:
        return 0.0

    # Integration knots: clipped window ends plus every sample strictly inside.
    knots = [lo]
    knots.extend(ts for ts, _ in series.samples if lo < ts < hi)
    knots.append(hi)

    total = 0.0
    prev_t = knots[0]
    prev_p = power_at(series, prev_t)
    for t in knots[1:]:
        p = power_at(series, t)
        total += (prev_p + p) / 2.0 * hours_between(prev_t, t)
        prev_t, prev_p = t, p
    return total


def enumerate_windows(
    series: ForecastSeries,
    req: LaundryRequest,
    now: datetime,
    step_minutes: int = DEFAULT_STEP_MINUTES,
) -> RankedWindows:
    """Score every grid-aligned window of the requested duration.

    Candidate starts begin at ``now`` rounded up to the next ``step_minutes``
    boundary and advance one step at a time while the whole window still fits
    inside the forecast horizon.
    """
    if step_minutes <= 0:
        raise ValidationError("step must be > 0 minutes")
    if series.is_empty():
        raise EmptyForecastError("cannot enumerate windows on an empty forecast")

    horizon_end = min(series.end, now + HORIZON)
    duration = timedelta(minutes=req.duration_minutes)
    start = ceil_to_step(now, step_minutes)
    step = timedelta(minutes=step_minutes)

    windows: list[TimeWindow] = []
    while start + duration <= horizon_end:
        windows.append(
            TimeWindow(
                start=start,
                duration_minutes=req.duration_minutes,
                production_wh=window_energy(series, start, req.duration_minutes),
            )
        )
        start += step
    if not windows:
        raise NoWindowError(
            f"no {req.duration_minutes:g}-minute window fits before the forecast horizon"
        )
    return RankedWindows(windows=tuple(_rank(windows)))


def _rank(windows: list[TimeWindow]) -> list[TimeWindow]:
    # Quantize to the energy epsilon so float noise cannot flip a tie-break.
    def key(w: TimeWindow):
        return (-round(w.production_wh / ENERGY_EPS_WH), w.start)

    return sorted(windows, key=key)


def classify(ranked: RankedWindows, required_wh: float) -> RankedWindows:
    """Label each window relative to the best one of this query.

    Good at ratio >= 0.85, Average in [0.70, 0.85), Bad below. When the best
    window produces nothing (night-only forecast) every window is Bad and no
    division happens. ``exceeds_required`` compares production against the
    cycle's energy need and is independent of the label.
    """
    if not ranked.windows:
        raise ValidationError("cannot classify an empty ranking")
    best = ranked.best.production_wh
    labelled = []
    for w in ranked.windows:
        if best <= 0.0:
            quality, exceeds = SlotQuality.BAD, False
        else:
            ratio = w.production_wh / best
            if ratio >= GOOD_RATIO:
                quality = SlotQuality.GOOD
            elif ratio >= AVERAGE_RATIO:
                quality = SlotQuality.AVERAGE
            else:
                quality = SlotQuality.BAD
            exceeds = w.production_wh >= required_wh
        labelled.append(replace(w, quality=quality, exceeds_required=exceeds))
    return RankedWindows(windows=tuple(labelled))


def ranked_windows(
    series: ForecastSeries,
    req: LaundryRequest,
    now: datetime,
    step_minutes: int = DEFAULT_STEP_MINUTES,
) -> RankedWindows:
    """Enumerate and classify in one call."""
    return classify(enumerate_windows(series, req, now, step_minutes), required_energy(req))


def quality_of_slot(
    series: ForecastSeries,
    req: LaundryRequest,
    now: datetime,
    slot_start: datetime,
    step_minutes: int = DEFAULT_STEP_MINUTES,
) -> SlotQuality:
    """Label an arbitrary slot against the current best window.

    Used when booking: the requested start need not sit on the enumeration
    grid, so its production is integrated directly and compared against the
    best grid window.
    """
    ranked = enumerate_windows(series, req, now, step_minutes)
    best = ranked.best.production_wh
    if best <= 0.0:
        return SlotQuality.BAD
    ratio = window_energy(series, slot_start, req.duration_minutes) / best
    if ratio >= GOOD_RATIO:
        return SlotQuality.GOOD
    if ratio >= AVERAGE_RATIO:
        return SlotQuality.AVERAGE
    return SlotQuality.BAD


def best_solar_time(series: ForecastSeries, now: datetime) -> tuple[datetime, float]:
    """Instant of maximal interpolated power within the remaining horizon.

    The power curve is piecewise-linear, so the maximum sits either at a
    sample point or at the clipped range ends. Ties go to the earliest
    instant.
    """
    if series.is_empty():
        raise EmptyForecastError("cannot find peak of an empty forecast")
    horizon_end = min(series.end, now + HORIZON)
    lo = max(now, series.start)
    if lo > horizon_end:
        return now, 0.0

    candidates = [lo]
    candidates.extend(ts for ts, _ in series.samples if lo < ts < horizon_end)
    if horizon_end > lo:
        candidates.append(horizon_end)

    best_t, best_p = candidates[0], power_at(series, candidates[0])
    for t in candidates[1:]:
        p = power_at(series, t)
        if p > best_p:
            best_t, best_p = t, p
    return best_t, best_p
