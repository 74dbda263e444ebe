"""Smart-meter demand panels: ingestion, cleaning, windowing, synthesis.

Readings arrive as (timestamp, household, kWh) triples, hourly or
half-hourly; half-hour energies are summed into their hour.  Missing
values are imputed from the same hour of the same weekday in a
neighboring week.  A synthetic population generator stands in for the
restricted source datasets: base load plus daily and weekly cycles, a
linear trend, and GARCH(1,1) noise, clipped at zero.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "DataError",
    "MeterReading",
    "Panel",
    "SyntheticPopulationConfig",
    "WindowPlan",
    "aggregate",
    "impute_missing",
    "ingest",
    "make_windows",
    "read_meter_csv",
    "synthesize_population",
    "write_panel_csv",
]

HOURS_PER_WEEK = 168


class DataError(ValueError):
    """Malformed readings, panels or window requests."""


@dataclass(frozen=True)
class MeterReading:
    timestamp: np.datetime64
    household_id: str
    demand: float | None

    def __post_init__(self):
        if self.demand is not None:
            if not math.isfinite(self.demand):
                raise DataError(f"non-finite demand for {self.household_id}")
            if self.demand < 0:
                raise DataError(
                    f"negative demand {self.demand} for {self.household_id} "
                    f"at {self.timestamp}"
                )


@dataclass(frozen=True)
class Panel:
    """Hourly demand matrix; NaN marks missing values before imputation."""

    timestamps: np.ndarray
    household_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        t, n = self.values.shape
        if self.timestamps.shape[0] != t:
            raise DataError("timestamps and values disagree on T")
        if len(self.household_ids) != n:
            raise DataError("household_ids and values disagree on N")
        if len(set(self.household_ids)) != n:
            raise DataError("household_ids contains duplicates")
        if t > 1:
            deltas = np.diff(self.timestamps)
            if not np.all(deltas == np.timedelta64(1, "h")):
                raise DataError("timestamps must be gap-free hourly")
        with np.errstate(invalid="ignore"):
            if np.any(self.values < 0):
                raise DataError("demand values must be non-negative")

    @property
    def n_hours(self) -> int:
        return self.values.shape[0]

    @property
    def n_households(self) -> int:
        return self.values.shape[1]

    def missing_fraction(self) -> float:
        return float(np.isnan(self.values).mean())

    def is_complete(self) -> bool:
        return not np.isnan(self.values).any()

    def column(self, household_id: str) -> np.ndarray:
        return self.values[:, self.household_ids.index(household_id)]

    def slice_hours(self, start: int, stop: int) -> "Panel":
        return Panel(self.timestamps[start:stop], self.household_ids,
                     self.values[start:stop])


def _hour_floor(ts: np.datetime64) -> np.datetime64:
    return ts.astype("datetime64[h]")


def ingest(readings: Iterable[MeterReading], resolution: str = "hourly") -> Panel:
    """Grid-align a reading stream into an hourly panel.

    Half-hourly energies are summed pairwise into their hour; an hour with
    either half-hour slot absent stays missing.  Duplicate slots and
    per-household timestamp disorder are rejected outright.
    """
    if resolution not in ("hourly", "half_hourly"):
        raise DataError(f"unknown resolution {resolution!r}")
    step = np.timedelta64(60 if resolution == "hourly" else 30, "m")
    slots: dict[str, dict[np.datetime64, float | None]] = {}
    last_seen: dict[str, np.datetime64] = {}
    count = 0
    for reading in readings:
        count += 1
        ts = np.datetime64(reading.timestamp, "m")
        offset = (ts - _hour_floor(ts)) // np.timedelta64(1, "m")
        if resolution == "hourly" and offset != 0:
            raise DataError(f"timestamp {ts} is not on an hour boundary")
        if resolution == "half_hourly" and offset not in (0, 30):
            raise DataError(f"timestamp {ts} is not on a half-hour boundary")
        hid = reading.household_id
        prev = last_seen.get(hid)
        if prev is not None and ts <= prev:
            raise DataError(
                f"non-monotone timestamps for household {hid}: {ts} after {prev}"
            )
        last_seen[hid] = ts
        per = slots.setdefault(hid, {})
        if ts in per:
            raise DataError(
                f"duplicate reading for household {hid} at {ts}: "
                f"values {per[ts]!r} and {reading.demand!r}"
            )
        per[ts] = reading.demand
    if count == 0:
        raise DataError("no readings supplied")

    households = sorted(slots)
    t_min = min(min(per) for per in slots.values())
    t_max = max(max(per) for per in slots.values())
    start = _hour_floor(t_min)
    end = _hour_floor(t_max)
    n_hours = int((end - start) / np.timedelta64(1, "h")) + 1
    timestamps = start + np.arange(n_hours) * np.timedelta64(1, "h")

    values = np.full((n_hours, len(households)), np.nan)
    per_hour = int(np.timedelta64(1, "h") / step)
    for j, hid in enumerate(households):
        per = slots[hid]
        for hour_idx in range(n_hours):
            hour_ts = np.datetime64(timestamps[hour_idx], "m")
            total = 0.0
            ok = True
            for k in range(per_hour):
                v = per.get(hour_ts + k * step, None)
                if v is None:
                    ok = False
                    break
                total += v
            if ok:
                values[hour_idx, j] = total
    return Panel(timestamps, tuple(households), values)


def impute_missing(panel: Panel) -> Panel:
    """Fill gaps from the same hour of the same weekday, one week back.

    When prior weeks are missing too, the walk continues further back,
    then forward; a household with no observed value at all is an error.
    """
    values = panel.values.copy()
    t_total = values.shape[0]
    missing_rows, missing_cols = np.nonzero(np.isnan(values))
    all_missing = np.isnan(panel.values).all(axis=0)
    if np.any(all_missing):
        bad = [panel.household_ids[j] for j in np.nonzero(all_missing)[0]]
        raise DataError(f"households with no observed values: {', '.join(bad)}")
    for t, j in zip(missing_rows, missing_cols):
        filled = False
        back = t - HOURS_PER_WEEK
        while back >= 0:
            if not np.isnan(panel.values[back, j]):
                values[t, j] = panel.values[back, j]
                filled = True
                break
            back -= HOURS_PER_WEEK
        if not filled:
            fwd = t + HOURS_PER_WEEK
            while fwd < t_total:
                if not np.isnan(panel.values[fwd, j]):
                    values[t, j] = panel.values[fwd, j]
                    filled = True
                    break
                fwd += HOURS_PER_WEEK
        if not filled:
            # no same-slot observation in any week; take the household median
            col = panel.values[:, j]
            values[t, j] = float(np.nanmedian(col))
    return Panel(panel.timestamps, panel.household_ids, values)


@dataclass(frozen=True)
class WindowPlan:
    """Rolling-origin evaluation windows [train_start, train_end, test_end)."""

    train_length: int
    horizon: int
    stride: int
    windows: tuple[tuple[int, int, int], ...]

    @property
    def n_windows(self) -> int:
        return len(self.windows)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def make_windows(
    panel: Panel | int,
    train_length: int = 2016,
    horizon: int = 72,
    stride: int = 97,
) -> WindowPlan:
    """Maximal list of windows advancing by a prime stride."""
    t_total = panel if isinstance(panel, int) else panel.n_hours
    if not _is_prime(stride):
        raise DataError(f"stride must be prime, got {stride}")
    if train_length < 1 or horizon < 1:
        raise DataError("train_length and horizon must be positive")
    needed = train_length + horizon
    if t_total < needed:
        raise DataError(
            f"panel has {t_total} hours; needs at least {needed} "
            f"(train {train_length} + horizon {horizon})"
        )
    starts = range(0, t_total - needed + 1, stride)
    windows = tuple(
        (s, s + train_length, s + train_length + horizon) for s in starts
    )
    return WindowPlan(train_length, horizon, stride, windows)


def aggregate(panel: Panel, selection, mode: str = "sum") -> np.ndarray:
    """Weighted column combination of the panel, per timestep."""
    weights = getattr(selection, "weights", selection)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (panel.n_households,):
        raise DataError(
            f"selection length {weights.shape} does not match N={panel.n_households}"
        )
    if np.any(weights < 0):
        raise DataError("selection weights must be non-negative")
    total = weights.sum()
    if total <= 0:
        raise DataError("selection has no positive weight")
    if mode not in ("sum", "average"):
        raise DataError(f"unknown aggregation mode {mode!r}")
    out = panel.values @ weights
    if mode == "average":
        out = out / total
    return out


_RANGE_FIELDS = (
    "base_load",
    "daily_amplitude",
    "weekly_amplitude",
    "trend_slope",
    "noise_scale",
    "garch_persistence",
    "garch_shock_share",
    "seasonal_drift",
    "missing_rate",
)


@dataclass(frozen=True)
class SyntheticPopulationConfig:
    """Per-household parameter ranges for the synthetic panel generator.

    Every range is (low, high); each household draws its own parameters
    from an independent stream keyed by (seed, household index).  Trend
    slope and seasonal drift are per 1000 hours; noise_scale is the
    stationary standard deviation of the GARCH(1,1) noise.
    """

    n_households: int = 200
    n_hours: int = 4368
    seed: int = 42
    base_load: tuple[float, float] = (0.2, 1.5)
    daily_amplitude: tuple[float, float] = (0.05, 0.6)
    weekly_amplitude: tuple[float, float] = (0.02, 0.3)
    trend_slope: tuple[float, float] = (-0.05, 0.08)
    noise_scale: tuple[float, float] = (0.03, 0.45)
    garch_persistence: tuple[float, float] = (0.65, 0.95)
    garch_shock_share: tuple[float, float] = (0.05, 0.3)
    seasonal_drift: tuple[float, float] = (0.0, 1.0)
    missing_rate: tuple[float, float] = (0.0, 0.07)
    start: str = "2012-01-02T00"

    def __post_init__(self):
        if self.n_households < 1 or self.n_hours < 1:
            raise DataError("population must have at least one household and hour")
        for name in _RANGE_FIELDS:
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise DataError(f"{name} range ({lo}, {hi}) is not a valid interval")
        for name in ("missing_rate",):
            lo, hi = getattr(self, name)
            if lo < 0 or hi > 1:
                raise DataError(f"{name} must lie within [0, 1]")
        lo, hi = self.garch_persistence
        if lo < 0 or hi >= 1:
            raise DataError("garch_persistence must lie within [0, 1)")
        lo, hi = self.garch_shock_share
        if lo < 0 or hi > 1:
            raise DataError("garch_shock_share must lie within [0, 1]")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "SyntheticPopulationConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise DataError(f"unknown synthetic config fields: {sorted(unknown)}")
        kwargs = {}
        for key, value in raw.items():
            kwargs[key] = tuple(value) if isinstance(value, list) else value
        return cls(**kwargs)


def synthesize_population(config: SyntheticPopulationConfig) -> Panel:
    """Deterministic synthetic panel; see SyntheticPopulationConfig."""
    t_total = config.n_hours
    n = config.n_households
    tt = np.arange(t_total, dtype=np.float64)

    params = np.empty((n, len(_RANGE_FIELDS)))
    phases = np.empty((n, 2))
    etas = np.empty((t_total, n))
    miss_u = np.empty((t_total, n))
    for i in range(n):
        rng = np.random.default_rng((config.seed, i))
        for k, name in enumerate(_RANGE_FIELDS):
            lo, hi = getattr(config, name)
            params[i, k] = rng.uniform(lo, hi)
        phases[i] = rng.uniform(0.0, 2.0 * np.pi, size=2)
        etas[:, i] = rng.standard_normal(t_total)
        miss_u[:, i] = rng.random(t_total)

    (base, amp24, amp168, slope, noise_scale, persistence, shock_share,
     drift, missing_rate) = params.T

    phase24 = phases[:, 0][None, :] + drift[None, :] * tt[:, None] / 1000.0
    daily = amp24[None, :] * np.sin(2.0 * np.pi * tt[:, None] / 24.0 + phase24)
    weekly = amp168[None, :] * np.sin(
        2.0 * np.pi * tt[:, None] / 168.0 + phases[:, 1][None, :]
    )
    trend = slope[None, :] * tt[:, None] / 1000.0

    # GARCH(1,1) noise, vectorized across households
    gamma1 = persistence * shock_share
    phi1 = persistence - gamma1
    phi0 = noise_scale**2 * (1.0 - persistence)
    var0 = noise_scale**2
    sig2 = var0.copy()
    eps_prev2 = var0.copy()
    noise = np.empty((t_total, n))
    for t in range(t_total):
        sig2 = phi0 + phi1 * sig2 + gamma1 * eps_prev2
        eps = np.sqrt(sig2) * etas[t]
        noise[t] = eps
        eps_prev2 = eps * eps

    values = np.clip(base[None, :] + daily + weekly + trend + noise, 0.0, None)
    values[miss_u < missing_rate[None, :]] = np.nan

    start = np.datetime64(config.start, "h")
    timestamps = start + np.arange(t_total) * np.timedelta64(1, "h")
    ids = tuple(f"H{i:04d}" for i in range(n))
    return Panel(timestamps, ids, values)


def read_meter_csv(path) -> Iterator[MeterReading]:
    """Stream readings from `timestamp,household_id,kwh` CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["timestamp", "household_id", "kwh"]:
            raise DataError(f"unexpected CSV header: {header}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{line_no}: expected 3 fields, got {len(row)}")
            ts_raw, hid, val_raw = row
            ts = np.datetime64(ts_raw.strip().rstrip("Z"), "m")
            demand = None if val_raw.strip() == "" else float(val_raw)
            yield MeterReading(ts, hid.strip(), demand)


def write_panel_csv(panel: Panel, path) -> None:
    """Write a panel in the ingestion schema; missing values as empty fields."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "household_id", "kwh"])
        stamps = [f"{np.datetime64(ts, 's')}Z" for ts in panel.timestamps]
        for t in range(panel.n_hours):
            row_ts = stamps[t]
            for j, hid in enumerate(panel.household_ids):
                v = panel.values[t, j]
                writer.writerow([row_ts, hid, "" if np.isnan(v) else f"{v:.6f}"])
