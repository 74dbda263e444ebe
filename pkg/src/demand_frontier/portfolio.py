"""Genetic-algorithm selection of household portfolios.

Per partition of the expected-demand range, a GA searches household
inclusion vectors minimizing one of three objectives: validation CRPS of
the aggregate forecast (fv), relative standard deviation of the
aggregate's decomposition remainder (sr), or the weighted per-household
dispersion of seasonal-plus-trend and remainder components (ss).  The
partition constraint enters the fitness as a penalty; returned portfolios
are always feasible or the run errors out.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from demand_frontier import decompose, score
from demand_frontier.backtest import EvaluationReport, PipelineConfig, evaluate_windows, forecast_window
from demand_frontier.data import Panel, WindowPlan, aggregate
from demand_frontier.forecast import ModelSelector

__all__ = [
    "FrontierPoint",
    "Frontier",
    "FrontierConfig",
    "FvConfig",
    "GaConfig",
    "GaError",
    "GaResult",
    "Partition",
    "SelectionVector",
    "SsConfig",
    "build_frontier",
    "ga_optimize",
    "ga_optimize_relaxed",
    "household_point_forecasts",
    "objective_fv",
    "objective_sr",
    "objective_ss",
    "partition_demand_range",
    "sample_random_selection",
    "ss_component_dispersion",
    "tune_ss_weight",
]

logger = logging.getLogger(__name__)


class GaError(RuntimeError):
    """The GA could not produce a feasible portfolio."""


@dataclass(frozen=True)
class SelectionVector:
    """Household inclusion weights; binary or relaxed to [0, 1]."""

    weights: np.ndarray
    mode: str = "binary"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        if self.mode not in ("binary", "relaxed"):
            raise ValueError(f"unknown selection mode {self.mode!r}")
        if w.ndim != 1 or w.shape[0] < 1:
            raise ValueError("weights must be a non-empty vector")
        if self.mode == "binary":
            if not np.all((w == 0.0) | (w == 1.0)):
                raise ValueError("binary selection weights must be 0 or 1")
        else:
            if np.any(w < 0.0) or np.any(w > 1.0):
                raise ValueError("relaxed selection weights must lie in [0, 1]")
        if not np.any(w > 0.0):
            raise ValueError("selection must include at least one household")

    @property
    def n_selected(self) -> int:
        return int(np.count_nonzero(self.weights))

    def bitmap(self) -> str:
        return "".join("1" if w > 0 else "0" for w in self.weights)

    def selected_indices(self) -> np.ndarray:
        return np.nonzero(self.weights)[0]


@dataclass(frozen=True)
class Partition:
    """One band of target aggregated demand at a given lead time."""

    index: int
    lead_time: int
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(
                f"partition {self.index}: lower {self.lower} must be < upper {self.upper}"
            )

    def contains(self, demand: float) -> bool:
        return self.lower < demand < self.upper

    def violation(self, demand: float) -> float:
        return max(0.0, self.lower - demand, demand - self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def partition_demand_range(
    panel: Panel | None,
    n_partitions: int,
    lead_time: int,
    point_forecasts: np.ndarray,
    upper: float | None = None,
) -> list[Partition]:
    """Equal-width bands of [0, total expected demand] at one lead time."""
    if n_partitions < 1:
        raise ValueError("need at least one partition")
    yhat = np.asarray(point_forecasts, dtype=np.float64)
    total = float(yhat.sum()) if upper is None else float(upper)
    if not total > 0:
        raise ValueError(f"total expected demand must be positive, got {total}")
    edges = np.linspace(0.0, total, n_partitions + 1)
    return [
        Partition(k, lead_time, float(edges[k]), float(edges[k + 1]))
        for k in range(n_partitions)
    ]


@dataclass(frozen=True)
class PointForecastConfig:
    train_length: int = 2016
    n_paths: int = 256
    periods: tuple[int, ...] = (24, 168)
    max_p: int = 2
    max_q: int = 2
    gof_bins: int = 20
    threshold: float = 0.05
    seed: int = 0


def household_point_forecasts(
    panel: Panel,
    lead_time: int,
    config: PointForecastConfig = PointForecastConfig(),
    diagnostics: list | None = None,
) -> np.ndarray:
    """Expected demand per household at one lead time."""
    table = household_point_forecast_table(panel, (lead_time,), config, diagnostics)
    return table[lead_time]


def household_point_forecast_table(
    panel: Panel,
    lead_times: Sequence[int],
    config: PointForecastConfig = PointForecastConfig(),
    diagnostics: list | None = None,
) -> dict[int, np.ndarray]:
    """Expected demand per household at each lead time, fit once per household.

    A household whose decomposition or remainder model fails falls back to
    the seasonal-naive value one week before the target hour.
    """
    leads = sorted(set(int(h) for h in lead_times))
    if not leads:
        raise ValueError("lead_times must be non-empty")
    max_h = max(leads)
    t_total = panel.n_hours
    if t_total < 2 * 168:
        raise ValueError("each household needs at least two weeks of history")
    train_len = min(config.train_length, t_total)
    start = t_total - train_len

    out = {h: np.empty(panel.n_households) for h in leads}
    selector = ModelSelector(config.threshold, config.gof_bins, config.max_p, config.max_q)
    pipe = PipelineConfig(
        lead_times=tuple(leads),
        selector=selector,
        n_paths=config.n_paths,
        periods=config.periods,
    )
    for j in range(panel.n_households):
        series = panel.values[start:, j]
        try:
            fcs = forecast_window(series, pipe, seed=(config.seed, 101, j))
            for h in leads:
                out[h][j] = fcs[h].mean()
        except Exception as exc:
            # seasonal-naive fallback: same hour one week before the target
            for h in leads:
                out[h][j] = series[train_len - 168 + ((h - 1) % 168) + 1 - 1]
            msg = f"household {panel.household_ids[j]}: fallback to seasonal-naive ({exc})"
            if diagnostics is not None:
                diagnostics.append(msg)
            logger.debug(msg)
    return out


# ---------------------------------------------------------------------------
# objectives


def objective_sr(
    panel: Panel,
    selection,
    periods: tuple[int, ...] = (24, 168),
    denominator: str = "aggregate_mean",
) -> float:
    """Relative standard deviation of the aggregate's remainder.

    The remainder is centered by construction, so its own mean is a
    degenerate scale; the default divides by the mean aggregated demand.
    The literal remainder-mean form stays available behind the flag.
    """
    weights = getattr(selection, "weights", selection)
    agg = aggregate(panel, weights, mode="sum")
    decomp = decompose.multi_stl(agg, periods)
    spread = float(decomp.remainder.std(ddof=1))
    if denominator == "aggregate_mean":
        denom = float(agg.mean())
    elif denominator == "remainder_mean":
        denom = float(decomp.remainder.mean())
    else:
        raise ValueError(f"unknown denominator {denominator!r}")
    if abs(denom) < 1e-12:
        raise ValueError("RSD denominator is (numerically) zero")
    return spread / denom


def ss_component_dispersion(
    panel: Panel,
    periods: tuple[int, ...] = (24, 168),
) -> tuple[np.ndarray, np.ndarray]:
    """Per-household RSD of seasonal-plus-trend and of remainder.

    These do not depend on the selection, so the SS objective precomputes
    them once per panel and scores candidates in O(N).
    """
    n = panel.n_households
    rsd_st = np.empty(n)
    rsd_r = np.empty(n)
    for j in range(n):
        series = panel.values[:, j]
        mean = float(series.mean())
        if abs(mean) < 1e-12:
            raise ValueError(
                f"household {panel.household_ids[j]} has zero mean demand"
            )
        decomp = decompose.multi_stl(series, periods)
        rsd_st[j] = float((decomp.seasonal + decomp.trend).std(ddof=1)) / mean
        rsd_r[j] = float(decomp.remainder.std(ddof=1)) / mean
    return rsd_st, rsd_r


def objective_ss(
    panel: Panel,
    selection,
    ss_weight: float,
    lead_time: int | None = None,
    exponent_mode: bool = False,
    precomputed: tuple[np.ndarray, np.ndarray] | None = None,
    periods: tuple[int, ...] = (24, 168),
) -> float:
    """Weighted mean dispersion of the selected households' components.

    ss_weight r balances seasonal-plus-trend dispersion against remainder
    dispersion.  With exponent_mode the weight is read as r**lead_time
    rather than a per-lead value.
    """
    if not 0.0 <= ss_weight <= 1.0:
        raise ValueError(f"ss weight must lie in [0, 1], got {ss_weight}")
    weights = np.asarray(getattr(selection, "weights", selection), dtype=np.float64)
    if not np.any(weights > 0):
        raise ValueError("selection must include at least one household")
    if precomputed is None:
        precomputed = ss_component_dispersion(panel, periods)
    rsd_st, rsd_r = precomputed
    r_eff = ss_weight ** lead_time if (exponent_mode and lead_time) else ss_weight
    wsum = weights.sum()
    mean_st = float(weights @ rsd_st) / wsum
    mean_r = float(weights @ rsd_r) / wsum
    return r_eff * mean_st + (1.0 - r_eff) * mean_r


@dataclass(frozen=True)
class FvConfig:
    validation_fraction: float = 0.25
    n_origins: int = 1
    origin_stride: int = 293
    train_cap: int = 2016
    n_paths: int = 512
    periods: tuple[int, ...] = (24, 168)
    max_p: int = 2
    max_q: int = 2
    gof_bins: int = 20
    threshold: float = 0.05
    seed: int = 0


def objective_fv(
    panel: Panel,
    selection,
    split: int,
    lead_time: int,
    config: FvConfig = FvConfig(),
    forecaster: Callable | None = None,
) -> float:
    """Mean validation CRPS of the aggregate's density forecast.

    The in-sample span is split at ``split``; forecasts originate there
    (and at later origins when configured), each fit on the trailing
    training span, scored at the requested lead time.  Returns +inf when
    forecasting fails so the GA discards the candidate.
    """
    weights = getattr(selection, "weights", selection)
    series = aggregate(panel, weights, mode="sum")
    t_total = series.shape[0]
    if not 0 < split < t_total:
        raise ValueError(f"split {split} outside series of length {t_total}")
    selector = ModelSelector(config.threshold, config.gof_bins, config.max_p, config.max_q)
    pipe = PipelineConfig(
        lead_times=(lead_time,),
        selector=selector,
        n_paths=config.n_paths,
        periods=config.periods,
        forecaster=forecaster,
    )
    origins = [
        split + i * config.origin_stride
        for i in range(config.n_origins)
        if split + i * config.origin_stride + lead_time <= t_total
    ]
    if not origins:
        raise ValueError("no validation origin fits inside the in-sample span")
    scores = []
    for o_idx, origin in enumerate(origins):
        train = series[max(0, origin - config.train_cap) : origin]
        try:
            fcs = forecast_window(train, pipe, seed=(config.seed, 7, o_idx))
        except Exception as exc:
            logger.debug("fv objective window failed: %s", exc)
            return math.inf
        obs = series[origin + lead_time - 1]
        scores.append(score.crps_ensemble(fcs[lead_time].samples, obs))
    return float(np.mean(scores))


# ---------------------------------------------------------------------------
# genetic algorithm


@dataclass(frozen=True)
class GaConfig:
    population: int = 50
    max_generations: int = 100
    stall_generations: int = 10
    crossover_prob: float = 0.9
    mutation_prob: float | None = None  # default 1/N
    penalty: float | None = None  # default 10 x objective scale
    tournament_size: int = 3
    elites: int = 1
    cardinality_cap: int = 100
    relaxed_mutation_scale: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError("crossover_prob must lie in [0, 1]")
        if self.mutation_prob is not None and not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError("mutation_prob must lie in [0, 1]")
        if self.max_generations < 1 or self.stall_generations < 1:
            raise ValueError("generation limits must be >= 1")


@dataclass
class GaResult:
    selection: SelectionVector
    objective: float
    expected_demand: float
    fitness_history: list[float]
    n_evaluations: int
    generations: int


def _cardinality(weights: np.ndarray) -> int:
    return int(np.count_nonzero(weights > 0.0))


class _ConstraintSet:
    """Partition bounds (possibly several lead times) plus a size cap."""

    def __init__(self, partitions: Sequence[Partition],
                 point_forecasts: Sequence[np.ndarray], cap: int):
        if len(partitions) != len(point_forecasts):
            raise ValueError("partitions and point forecasts must pair up")
        if not partitions:
            raise ValueError("need at least one partition constraint")
        self.partitions = list(partitions)
        self.yhat = [np.asarray(f, dtype=np.float64) for f in point_forecasts]
        self.cap = cap

    @property
    def n(self) -> int:
        return self.yhat[0].shape[0]

    def demand(self, weights: np.ndarray) -> float:
        return float(self.yhat[0] @ weights)

    def violation(self, weights: np.ndarray) -> float:
        v = 0.0
        for part, yh in zip(self.partitions, self.yhat):
            v += part.violation(float(yh @ weights)) / part.width
        over = _cardinality(weights) - self.cap
        if over > 0:
            v += over / max(self.cap, 1)
        return v

    def feasible(self, weights: np.ndarray) -> bool:
        if _cardinality(weights) > self.cap:
            return False
        return all(
            part.contains(float(yh @ weights))
            for part, yh in zip(self.partitions, self.yhat)
        )

    def inclusion_probability(self) -> float:
        mid = self.partitions[0].midpoint
        total = float(self.yhat[0].sum())
        p = mid / max(total, 1e-12)
        cap_frac = self.cap / self.n
        return float(np.clip(min(p, cap_frac), 1.0 / self.n, 0.95))


def _ga_run(
    objective: Callable[[np.ndarray], float],
    constraints: _ConstraintSet,
    config: GaConfig,
    mode: str,
    warm_start: Sequence[np.ndarray] | None = None,
) -> GaResult:
    n = constraints.n
    rng = np.random.default_rng(config.seed)
    p_mut = config.mutation_prob if config.mutation_prob is not None else 1.0 / n
    p_incl = constraints.inclusion_probability()

    def new_individual() -> np.ndarray:
        mask = rng.random(n) < p_incl
        if mode == "binary":
            genes = mask.astype(np.float64)
        else:
            genes = np.where(mask, rng.random(n), 0.0)
        if not np.any(genes > 0):
            genes[rng.integers(0, n)] = 1.0
        return genes

    population = []
    if warm_start is not None:
        for w in warm_start:
            w = np.asarray(w, dtype=np.float64).copy()
            population.append(w)
    while len(population) < config.population:
        population.append(new_individual())
    population = population[: config.population]

    cache: dict[bytes, float] = {}
    n_evaluations = 0

    def evaluate(genes: np.ndarray) -> float:
        nonlocal n_evaluations
        key = genes.tobytes()
        if key not in cache:
            n_evaluations += 1
            try:
                cache[key] = float(objective(genes))
            except Exception as exc:
                logger.debug("objective failed, discarding candidate: %s", exc)
                cache[key] = math.inf
        return cache[key]

    objs = np.array([evaluate(g) for g in population])
    finite = objs[np.isfinite(objs)]
    scale = float(np.median(np.abs(finite))) if finite.size else 1.0
    penalty = config.penalty if config.penalty is not None else 10.0 * max(scale, 1e-9)

    def fitness(genes: np.ndarray, obj: float) -> float:
        v = constraints.violation(genes)
        base = obj if np.isfinite(obj) else 10.0 * penalty + 100.0 * scale
        return base + penalty * v

    fits = np.array([fitness(g, o) for g, o in zip(population, objs)])

    best_feasible: tuple[float, np.ndarray] | None = None

    def note_feasible(genes: np.ndarray, obj: float):
        nonlocal best_feasible
        if not np.isfinite(obj):
            return
        if constraints.feasible(genes):
            if best_feasible is None or obj < best_feasible[0]:
                best_feasible = (obj, genes.copy())

    for g, o in zip(population, objs):
        note_feasible(g, o)

    def tournament() -> np.ndarray:
        idx = rng.integers(0, config.population, size=config.tournament_size)
        return population[idx[np.argmin(fits[idx])]]

    history = [float(fits.min())]
    stall = 0
    generations = 0
    for gen in range(1, config.max_generations + 1):
        generations = gen
        order = np.argsort(fits, kind="stable")
        new_pop = [population[i].copy() for i in order[: config.elites]]
        while len(new_pop) < config.population:
            parent_a = tournament()
            parent_b = tournament()
            if rng.random() < config.crossover_prob:
                if mode == "binary":
                    mask = rng.random(n) < 0.5
                    child = np.where(mask, parent_a, parent_b)
                else:
                    u = rng.random(n)
                    child = u * parent_a + (1.0 - u) * parent_b
            else:
                child = parent_a.copy()
            mut = rng.random(n) < p_mut
            if mode == "binary":
                child = np.where(mut, 1.0 - child, child)
            else:
                child = child + np.where(mut, rng.normal(0.0, config.relaxed_mutation_scale, n), 0.0)
                child = np.clip(child, 0.0, 1.0)
                child[child < 1e-3] = 0.0
            if not np.any(child > 0):
                child[rng.integers(0, n)] = 1.0
            new_pop.append(child)
        population = new_pop
        objs = np.array([evaluate(g) for g in population])
        fits = np.array([fitness(g, o) for g, o in zip(population, objs)])
        for g, o in zip(population, objs):
            note_feasible(g, o)
        best = float(fits.min())
        history.append(best)
        if best < history[-2] - 1e-15:
            stall = 0
        else:
            stall += 1
        if stall >= config.stall_generations:
            break

    if best_feasible is None:
        order = np.argsort(fits, kind="stable")
        genes = population[order[0]]
        raise GaError(
            "no feasible portfolio found: best candidate has expected demand "
            f"{constraints.demand(genes):.3f} outside "
            f"({constraints.partitions[0].lower:.3f}, {constraints.partitions[0].upper:.3f}) "
            f"or cardinality {_cardinality(genes)} > cap {constraints.cap} "
            f"(violation {constraints.violation(genes):.4f})"
        )

    obj, genes = best_feasible
    selection = SelectionVector(genes, mode)
    return GaResult(
        selection=selection,
        objective=obj,
        expected_demand=constraints.demand(genes),
        fitness_history=history,
        n_evaluations=n_evaluations,
        generations=generations,
    )


def ga_optimize(
    objective: Callable[[np.ndarray], float],
    partition: Partition | Sequence[Partition],
    point_forecasts,
    config: GaConfig,
) -> GaResult:
    """Binary-chromosome GA under partition and cardinality constraints.

    ``partition``/``point_forecasts`` may be parallel sequences when one
    selection must satisfy the band at several lead times at once.
    """
    partitions, forecasts = _normalize_constraints(partition, point_forecasts)
    constraints = _ConstraintSet(partitions, forecasts, config.cardinality_cap)
    return _ga_run(objective, constraints, config, "binary")


def ga_optimize_relaxed(
    objective: Callable[[np.ndarray], float],
    partition: Partition | Sequence[Partition],
    point_forecasts,
    config: GaConfig,
    warm_start: Sequence[np.ndarray] | None = None,
) -> GaResult:
    """Relaxed-gene GA; blend crossover, Gaussian mutation, genes in [0, 1]."""
    partitions, forecasts = _normalize_constraints(partition, point_forecasts)
    constraints = _ConstraintSet(partitions, forecasts, config.cardinality_cap)
    return _ga_run(objective, constraints, config, "relaxed", warm_start=warm_start)


def _normalize_constraints(partition, point_forecasts):
    if isinstance(partition, Partition):
        return [partition], [np.asarray(point_forecasts, dtype=np.float64)]
    partitions = list(partition)
    forecasts = [np.asarray(f, dtype=np.float64) for f in point_forecasts]
    return partitions, forecasts


def sample_random_selection(
    partition: Partition | Sequence[Partition],
    point_forecasts,
    cap: int,
    rng: np.random.Generator,
    max_tries: int = 10000,
) -> SelectionVector:
    """Rejection-sample a feasible binary selection."""
    partitions, forecasts = _normalize_constraints(partition, point_forecasts)
    constraints = _ConstraintSet(partitions, forecasts, cap)
    n = constraints.n
    p_incl = constraints.inclusion_probability()
    for _ in range(max_tries):
        genes = (rng.random(n) < p_incl).astype(np.float64)
        if not np.any(genes > 0):
            continue
        if constraints.feasible(genes):
            return SelectionVector(genes, "binary")
    raise GaError(
        f"could not sample a feasible random portfolio in {max_tries} tries "
        f"for partition {partitions[0].index}"
    )


# ---------------------------------------------------------------------------
# SS weight tuning


@dataclass(frozen=True)
class SsConfig:
    weights: Mapping[int, float]
    grid: tuple[float, ...] = (0.0, 0.2, 0.5, 0.8, 1.0)
    exponent_mode: bool = False

    def weight_for(self, lead_time: int) -> float:
        try:
            return float(self.weights[lead_time])
        except KeyError:
            raise KeyError(f"no ss weight for lead time {lead_time}")


def tune_ss_weight(
    panel: Panel,
    lead_times: Sequence[int],
    grid: Sequence[float] = (0.0, 0.2, 0.5, 0.8, 1.0),
    partition: Partition | None = None,
    point_forecasts: np.ndarray | None = None,
    ga_config: GaConfig = GaConfig(population=30, max_generations=40),
    pipeline: PipelineConfig | None = None,
    split: int | None = None,
    seed: int = 0,
) -> SsConfig:
    """Pick the SS weight per lead time by validation CRPS.

    For each grid value, the SS-driven GA selects a portfolio inside the
    reference partition; the portfolio's aggregate is then forecast at the
    requested lead times from the split point and scored.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("ss weight grid is empty")
    leads = sorted(set(int(h) for h in lead_times))
    t_total = panel.n_hours
    if split is None:
        split = int(t_total * 0.75)
    if pipeline is None:
        pipeline = PipelineConfig(lead_times=tuple(leads))
    if point_forecasts is None:
        naive = panel.values[split - 168 : split].mean(axis=0)
        point_forecasts = naive
    if partition is None:
        total = float(np.asarray(point_forecasts).sum())
        partition = Partition(0, leads[0], 0.2 * total, 0.5 * total)

    dispersion = ss_component_dispersion(panel.slice_hours(0, split), pipeline.periods)
    crps_by_r: dict[float, dict[int, float]] = {}
    for r_idx, r in enumerate(grid):
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"ss weight {r} outside [0, 1]")
        result = _ga_run(
            lambda w, _r=r: objective_ss(panel, w, _r, precomputed=dispersion),
            _ConstraintSet([partition], [np.asarray(point_forecasts, float)],
                           ga_config.cardinality_cap),
            replace(ga_config, seed=int(np.random.SeedSequence((seed, 31, r_idx)).generate_state(1)[0])),
            "binary",
        )
        series = aggregate(panel, result.selection.weights, mode="sum")
        train = series[max(0, split - 2016) : split]
        fcs = forecast_window(train, pipeline, seed=(seed, 37, r_idx))
        crps_by_r[r] = {
            h: score.crps_ensemble(fcs[h].samples, series[split + h - 1])
            for h in leads
            if split + h <= t_total
        }
    weights = {}
    for h in leads:
        best_r, best_val = None, math.inf
        for r in grid:
            val = crps_by_r[r].get(h, math.inf)
            if val < best_val:
                best_r, best_val = r, val
        if best_r is None:
            raise GaError(f"ss weight tuning failed for lead {h}")
        weights[h] = best_r
    return SsConfig(weights=weights, grid=tuple(grid))


# ---------------------------------------------------------------------------
# frontier


@dataclass(frozen=True)
class FrontierPoint:
    approach: str
    lead_time: int
    partition_index: int
    expected_demand: float
    crps: float
    mae: float
    selection: SelectionVector

    def __post_init__(self):
        if self.crps < 0 or self.mae < 0:
            raise ValueError("scores must be non-negative")


@dataclass
class Frontier:
    points: list[FrontierPoint] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    def mean_crps(self, approach: str, lead_time: int | None = None) -> float:
        vals = [
            p.crps
            for p in self.points
            if p.approach == approach
            and (lead_time is None or p.lead_time == lead_time)
        ]
        if not vals:
            raise KeyError(f"no frontier points for {approach!r}")
        return float(np.mean(vals))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["approach", "lead_time_h", "partition_k", "expected_demand_kw",
             "crps_kw", "mae_kw", "selection_bitmap"]
        )
        key = lambda p: (p.approach, p.lead_time, p.partition_index, p.expected_demand)
        for p in sorted(self.points, key=key):
            writer.writerow(
                [p.approach, p.lead_time, p.partition_index,
                 f"{p.expected_demand:.9f}", f"{p.crps:.9f}", f"{p.mae:.9f}",
                 p.selection.bitmap()]
            )
        return buf.getvalue()

    def to_json(self) -> str:
        key = lambda p: (p.approach, p.lead_time, p.partition_index, p.expected_demand)
        payload = {
            "points": [
                {
                    "approach": p.approach,
                    "lead_time_h": p.lead_time,
                    "partition_k": p.partition_index,
                    "expected_demand_kw": p.expected_demand,
                    "crps_kw": p.crps,
                    "mae_kw": p.mae,
                    "selection": (
                        [int(i) for i in p.selection.selected_indices()]
                        if p.selection.mode == "binary"
                        else {
                            str(int(i)): float(p.selection.weights[i])
                            for i in p.selection.selected_indices()
                        }
                    ),
                    "mode": p.selection.mode,
                }
                for p in sorted(self.points, key=key)
            ],
            "failures": list(self.failures),
        }
        return json.dumps(payload, indent=2, sort_keys=True)


@dataclass(frozen=True)
class FrontierConfig:
    lead_times: tuple[int, ...] = (4, 12, 24)
    n_partitions: int = 10
    approaches: tuple[str, ...] = ("random", "fv", "sr", "ss")
    in_sample_hours: int = 2520
    train_length: int = 2016
    horizon: int = 72
    stride: int = 97
    periods: tuple[int, ...] = (24, 168)
    thresholds: Mapping[int, float] | float = 0.05
    ss: SsConfig | None = None
    ga: GaConfig = GaConfig()
    fv: FvConfig = FvConfig()
    point_forecast: PointForecastConfig = PointForecastConfig()
    n_paths: int = 1000
    max_p: int = 3
    max_q: int = 3
    gof_bins: int = 20
    n_random: int = 100
    max_eval_windows: int | None = None
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        unknown = set(self.approaches) - {"random", "fv", "sr", "ss"}
        if unknown:
            raise ValueError(f"unknown approaches: {sorted(unknown)}")
        if max(self.lead_times) > self.horizon:
            raise ValueError("lead times must not exceed the horizon")


def _cell_seed(seed: int, *labels) -> int:
    import zlib

    key = ":".join(str(x) for x in labels)
    return int(
        np.random.SeedSequence([seed, zlib.crc32(key.encode())]).generate_state(1)[0]
    )


def _out_of_sample_plan(config: FrontierConfig, t_total: int) -> WindowPlan:
    first = config.in_sample_hours - config.train_length
    if first < 0:
        raise ValueError("in_sample_hours is shorter than the training length")
    last = t_total - config.train_length - config.horizon
    if last < first:
        raise ValueError(
            "no out-of-sample window fits: panel has "
            f"{t_total} hours, in-sample {config.in_sample_hours}"
        )
    starts = range(first, last + 1, config.stride)
    windows = tuple(
        (s, s + config.train_length, s + config.train_length + config.horizon)
        for s in starts
    )
    if config.max_eval_windows is not None:
        windows = windows[: config.max_eval_windows]
    return WindowPlan(config.train_length, config.horizon, config.stride, windows)


def build_frontier(
    panel: Panel,
    n_partitions: int | None = None,
    approaches: Sequence[str] | None = None,
    lead_times: Sequence[int] | None = None,
    config: FrontierConfig = FrontierConfig(),
) -> Frontier:
    """Optimize portfolios per (approach, lead time, partition) and score
    them on the out-of-sample windows, alongside random baselines."""
    if n_partitions is not None:
        config = replace(config, n_partitions=n_partitions)
    if approaches is not None:
        config = replace(config, approaches=tuple(approaches))
    if lead_times is not None:
        config = replace(config, lead_times=tuple(sorted(set(lead_times))))
    leads = list(config.lead_times)
    t_total = panel.n_hours
    if config.in_sample_hours >= t_total:
        raise ValueError("panel has no out-of-sample span")

    in_panel = panel.slice_hours(0, config.in_sample_hours)
    frontier = Frontier()

    pf_diag: list[str] = []
    pf_config = replace(config.point_forecast, seed=config.seed)
    yhat = household_point_forecast_table(in_panel, leads, pf_config, pf_diag)
    frontier.failures.extend(pf_diag)
    partitions = {
        h: partition_demand_range(in_panel, config.n_partitions, h, yhat[h])
        for h in leads
    }

    ss_config = config.ss or SsConfig(weights={h: 0.5 for h in leads})
    dispersion = None
    if "ss" in config.approaches:
        dispersion = ss_component_dispersion(in_panel, config.periods)

    # (approach, lead, k) -> SelectionVector; selections shared across leads
    # carry the same object so evaluation happens once
    chosen: dict[tuple[str, int, int], SelectionVector] = {}

    for k in range(config.n_partitions):
        parts_all = [partitions[h][k] for h in leads]
        yh_all = [yhat[h] for h in leads]
        if "sr" in config.approaches:
            try:
                result = _ga_run(
                    lambda w: objective_sr(in_panel, w, config.periods),
                    _ConstraintSet(parts_all, yh_all, config.ga.cardinality_cap),
                    replace(config.ga, seed=_cell_seed(config.seed, "sr", k)),
                    "binary",
                )
                for h in leads:
                    chosen[("sr", h, k)] = result.selection
            except (GaError, ValueError) as exc:
                frontier.failures.append(f"sr partition {k}: {exc}")
        if "ss" in config.approaches:
            by_r: dict[float, SelectionVector] = {}
            for h in leads:
                r = ss_config.weight_for(h) if ss_config.weights else 0.5
                try:
                    if r not in by_r:
                        result = _ga_run(
                            lambda w, _r=r: objective_ss(
                                in_panel, w, _r,
                                exponent_mode=ss_config.exponent_mode,
                                lead_time=h,
                                precomputed=dispersion, periods=config.periods,
                            ),
                            _ConstraintSet(parts_all, yh_all, config.ga.cardinality_cap),
                            replace(config.ga, seed=_cell_seed(config.seed, "ss", k, r)),
                            "binary",
                        )
                        by_r[r] = result.selection
                    chosen[("ss", h, k)] = by_r[r]
                except (GaError, ValueError) as exc:
                    frontier.failures.append(f"ss partition {k} lead {h}: {exc}")
        if "fv" in config.approaches:
            split = int(config.in_sample_hours * (1.0 - config.fv.validation_fraction))
            fv_cfg = replace(config.fv, seed=config.seed)
            for h in leads:
                try:
                    result = _ga_run(
                        lambda w, _h=h: objective_fv(in_panel, w, split, _h, fv_cfg),
                        _ConstraintSet([partitions[_h][k] for _h in [h]], [yhat[h]],
                                       config.ga.cardinality_cap),
                        replace(config.ga, seed=_cell_seed(config.seed, "fv", h, k)),
                        "binary",
                    )
                    chosen[("fv", h, k)] = result.selection
                except (GaError, ValueError) as exc:
                    frontier.failures.append(f"fv partition {k} lead {h}: {exc}")
        if "random" in config.approaches:
            rng = np.random.default_rng(_cell_seed(config.seed, "random", k))
            for draw in range(config.n_random):
                try:
                    sel = sample_random_selection(
                        parts_all, yh_all, config.ga.cardinality_cap, rng
                    )
                except GaError as exc:
                    frontier.failures.append(f"random partition {k} draw {draw}: {exc}")
                    continue
                for h in leads:
                    chosen[(f"random#{draw}", h, k)] = sel

    # evaluate each distinct selection once over all its lead times
    plan = _out_of_sample_plan(config, t_total)
    selector = ModelSelector(config.thresholds, config.gof_bins, config.max_p, config.max_q)
    by_selection: dict[bytes, dict] = {}
    for (approach, h, k), sel in chosen.items():
        entry = by_selection.setdefault(
            sel.weights.tobytes(),
            {"selection": sel, "cells": []},
        )
        entry["cells"].append((approach, h, k))

    for key in sorted(by_selection, key=lambda b: by_selection[b]["cells"][0]):
        entry = by_selection[key]
        sel = entry["selection"]
        cells = entry["cells"]
        cell_leads = tuple(sorted({h for (_, h, _) in cells}))
        pipe = PipelineConfig(
            lead_times=cell_leads,
            selector=selector,
            n_paths=config.n_paths,
            periods=config.periods,
            seed=_cell_seed(config.seed, "eval", cells[0][0], cells[0][2]),
        )
        series = aggregate(panel, sel.weights, mode="sum")
        report = evaluate_windows(series, plan, pipe)
        if report.n_failures:
            frontier.failures.extend(
                f"{cells[0][0]} k={cells[0][2]}: {msg}" for msg in report.failures
            )
        for approach, h, k in cells:
            base = approach.split("#")[0]
            try:
                cell = next(c for c in report.cells if c.lead_time == h)
            except StopIteration:
                frontier.failures.append(
                    f"{approach} lead {h} partition {k}: all windows failed"
                )
                continue
            frontier.points.append(
                FrontierPoint(
                    approach=base,
                    lead_time=h,
                    partition_index=k,
                    expected_demand=float(yhat[h] @ sel.weights),
                    crps=cell.crps,
                    mae=cell.mae,
                    selection=sel,
                )
            )
    return frontier
