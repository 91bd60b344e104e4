import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from core.exceptions import SolverConfigError, UnknownSolverError
from core.utils import Instance, empty_schedule, pinwheel_setting
from folding.utils import (
    FILTER_LIMITS,
    GROUP_SIZES,
    RELAXED_FILTER_LIMITS,
    FoldTrace,
    Partition,
    fold_by_partition,
    group_value,
    identity_trace,
    lift_schedule,
    partition_filter,
)
from solver.utils import OutcomeStatus, SolveOutcome, SolverConfig, solve

logger = logging.getLogger(__name__)

DEFAULT_DENSITY_CAP = 0.95
DEFAULT_MAX_PARTITIONS = 4096


@dataclass(frozen=True)
class ScoredPartition:
    partition: Partition
    folded: Instance
    trace: FoldTrace
    score: float
    density: float


@dataclass(frozen=True)
class FastSolverConfig:
    time_limit_ms: int = 60_000
    per_attempt_ms: int = 10_000
    max_partitions: int = DEFAULT_MAX_PARTITIONS
    density_cap: float = DEFAULT_DENSITY_CAP
    workers: int = 1
    # forces the candidate list (used to reduce fast_solve to the baseline)
    partitions: Optional[tuple] = None

    def __post_init__(self):
        if self.time_limit_ms is None or self.time_limit_ms <= 0:
            raise SolverConfigError(f"time limit must be positive, got {self.time_limit_ms!r}")
        if self.per_attempt_ms is None or self.per_attempt_ms <= 0:
            raise SolverConfigError(f"per-attempt budget must be positive, got {self.per_attempt_ms!r}")

    @classmethod
    def from_settings(cls, **overrides) -> "FastSolverConfig":
        options = {
            "time_limit_ms": pinwheel_setting("SOLVE_TIMEOUT_MS", 60_000),
            "per_attempt_ms": pinwheel_setting("PER_ATTEMPT_MS", 10_000),
            "max_partitions": pinwheel_setting("MAX_PARTITIONS", DEFAULT_MAX_PARTITIONS),
            "density_cap": pinwheel_setting("DENSITY_CAP", DEFAULT_DENSITY_CAP),
        }
        options.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**options)


def _relaxed() -> bool:
    return bool(pinwheel_setting("RELAX_PARTITION_FILTER", False))


def enumerate_partitions(instance: Instance, cap: Optional[int] = None, relaxed: Optional[bool] = None) -> list:
    """
    Recursively build partitions whose groups all pass the filter, smallest index first.
    The empty partition comes first. Equal values are interchangeable, so a value class is
    consumed in index order and a skipped value is never grouped later.
    """
    if not instance.is_integral:
        raise SolverConfigError(f"partitions are enumerated for integer instances only, got {instance}")
    cap = cap or pinwheel_setting("MAX_PARTITIONS", DEFAULT_MAX_PARTITIONS)
    relaxed = _relaxed() if relaxed is None else relaxed
    limits = RELAXED_FILTER_LIMITS if relaxed else FILTER_LIMITS
    values = instance.values
    n = len(values)
    found = []

    def canonical(members: Sequence[int], used: set) -> bool:
        for j in members:
            for earlier in range(j - 1, -1, -1):
                if values[earlier] != values[j]:
                    break
                if earlier not in used and earlier not in members:
                    return False
        return True

    def extend(i: int, used: frozenset, skipped: frozenset, groups: tuple):
        if len(found) >= cap:
            return
        while i < n and i in used:
            i += 1
        if i == n:
            found.append(Partition(groups))
            return
        extend(i + 1, used, skipped | {values[i]}, groups)
        if values[i] in skipped:
            return
        for size in GROUP_SIZES:
            if size == 5:
                ceiling = 5 * math.floor(values[i] / 5) + limits[5]
            else:
                ceiling = values[i] + limits[size]
            pool = [j for j in range(i + 1, n)
                    if j not in used and values[j] <= ceiling and values[j] not in skipped]
            for rest in combinations(pool, size - 1):
                group = (i,) + rest
                if (not canonical(rest, used) or not partition_filter(values, group, relaxed=relaxed)
                        or group_value(values, group) < 1):
                    continue
                extend(i + 1, used | set(group), skipped, groups + (group,))
                if len(found) >= cap:
                    return

    extend(0, frozenset(), frozenset(), ())
    return found


def score_partition(instance: Instance, partition: Partition, density_cap: float = DEFAULT_DENSITY_CAP,
                    relaxed: Optional[bool] = None) -> Optional[ScoredPartition]:
    """Score sqrt(product) / (cap - density)^2 of the folded list; None at or above the cap."""
    folded, trace = fold_by_partition(instance, partition, relaxed=relaxed)
    exact = folded.density()
    if exact >= Fraction(density_cap).limit_denominator(10 ** 6):
        return None
    ceilings = np.array([math.ceil(v) for v in folded], dtype=float)
    # product of ceilings, taken in log space to stay finite for long lists
    root_product = float(np.exp(0.5 * np.log(ceilings).sum())) if ceilings.size else 1.0
    dens = float(exact)
    score = root_product / (density_cap - dens) ** 2
    return ScoredPartition(partition, folded, trace, score, dens)


def rank_partitions(instance: Instance, partitions: Sequence[Partition], density_cap: float = DEFAULT_DENSITY_CAP) -> list:
    """Scored partitions in ascending score order (ties by partition text), one per folded list."""
    scored = []
    seen = set()
    for partition in partitions:
        entry = score_partition(instance, partition, density_cap)
        if entry is None or entry.folded in seen:
            continue
        seen.add(entry.folded)
        scored.append(entry)
    scored.sort(key=lambda s: (s.score, s.partition.text()))
    return scored


def _attempt(folded: Instance, budget_ms: int) -> SolveOutcome:
    return solve(folded, SolverConfig(time_limit_ms=budget_ms, complete=True))


def _candidates(instance: Instance, config: FastSolverConfig) -> list:
    partitions = config.partitions
    if partitions is None:
        partitions = enumerate_partitions(instance, cap=config.max_partitions)
    ranked = rank_partitions(instance, partitions, config.density_cap)
    attempts = [(entry.partition, entry.folded, entry.trace) for entry in ranked]
    if not any(not entry.partition.groups for entry in ranked):
        # the baseline is always tried, even above the density cap
        attempts.append((Partition(), instance, identity_trace(instance)))
    return attempts


def fast_solve(instance: Instance, config: Optional[FastSolverConfig] = None) -> SolveOutcome:
    """
    Try folded instances in score order with the foresight solver and lift the first schedule.
    Heuristic: never reports Unschedulable; giving up is reported as Timeout.
    """
    config = config or FastSolverConfig.from_settings()
    if not instance.is_integral:
        raise SolverConfigError(f"fast_solve expects an integer instance, got {instance}")
    if not len(instance):
        return SolveOutcome(OutcomeStatus.SCHEDULABLE, empty_schedule())

    started = time.monotonic()
    deadline = started + config.time_limit_ms / 1000.0
    attempts = _candidates(instance, config)
    logger.debug("fast_solve %s: %d candidate partitions", instance, len(attempts))

    batch_size = max(1, config.workers)
    pool = ProcessPoolExecutor(max_workers=batch_size) if batch_size > 1 else None
    try:
        for offset in range(0, len(attempts), batch_size):
            remaining_ms = (deadline - time.monotonic()) * 1000.0
            if remaining_ms <= 0:
                break
            budget = max(1, int(min(config.per_attempt_ms, remaining_ms)))
            batch = attempts[offset:offset + batch_size]
            if pool is None:
                outcomes = [_attempt(folded, budget) for _, folded, _ in batch]
            else:
                outcomes = list(pool.map(_attempt, [folded for _, folded, _ in batch], [budget] * len(batch)))
            for (partition, folded, trace), outcome in zip(batch, outcomes):
                if not outcome.is_schedulable:
                    continue
                lifted = lift_schedule(outcome.schedule, trace, instance)
                elapsed = (time.monotonic() - started) * 1000.0
                logger.info("fast_solve %s solved via %s -> %s in %.1f ms", instance, partition, folded, elapsed)
                return SolveOutcome(OutcomeStatus.SCHEDULABLE, lifted, elapsed, outcome.nodes)
    finally:
        if pool is not None:
            pool.shutdown()

    elapsed = (time.monotonic() - started) * 1000.0
    logger.info("fast_solve %s gave up after %.1f ms", instance, elapsed)
    return SolveOutcome.timeout(elapsed)


# -------------------------------
# Solvers by name
# -------------------------------
SOLVER_NAMES = ("foresight", "fast")


def run_solver(name: str, instance: Instance, time_limit_ms: Optional[int] = None, complete: bool = True,
               per_attempt_ms: Optional[int] = None, max_partitions: Optional[int] = None,
               workers: Optional[int] = None) -> SolveOutcome:
    """Dispatch to the foresight baseline or fast_solve; unknown names raise UnknownSolverError."""
    if name == "foresight":
        return solve(instance, SolverConfig.from_settings(time_limit_ms=time_limit_ms, complete=complete))
    if name == "fast":
        config = FastSolverConfig.from_settings(
            time_limit_ms=time_limit_ms,
            per_attempt_ms=per_attempt_ms,
            max_partitions=max_partitions,
            workers=workers,
        )
        return fast_solve(instance, config)
    raise UnknownSolverError(f"unknown solver '{name}'; expected one of {', '.join(SOLVER_NAMES)}")
