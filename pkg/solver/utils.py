import logging
import math
import time
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence, Union

from core.exceptions import ContractViolation, SolverConfigError
from core.utils import (
    Instance,
    Period,
    Schedule,
    empty_schedule,
    pinwheel_setting,
    verify_schedule,
)

logger = logging.getLogger(__name__)

DEFAULT_MEMO_CAP = 2 ** 26

# per-job kinds driving the fractional constraint
INTEGER = 0
HALF = 2
THIRD_LOW = 31   # p/3 with p = 1 (mod 3)
THIRD_HIGH = 32  # p/3 with p = 2 (mod 3)

# flag bits kept in the low bits of a packed job state
LAST_AT_CEIL = 1
SECOND_AT_CEIL = 2


class OutcomeStatus(str, Enum):
    SCHEDULABLE = "schedulable"
    UNSCHEDULABLE = "unschedulable"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class SolveOutcome:
    status: OutcomeStatus
    schedule: Optional[Schedule] = None
    elapsed_ms: float = 0.0
    nodes: int = 0

    @property
    def is_schedulable(self) -> bool:
        return self.status == OutcomeStatus.SCHEDULABLE

    @classmethod
    def timeout(cls, elapsed_ms: float, nodes: int = 0) -> "SolveOutcome":
        return cls(OutcomeStatus.TIMEOUT, None, elapsed_ms, nodes)


@dataclass(frozen=True)
class SolverConfig:
    time_limit_ms: int = 60_000
    # keep memoized failed states; exhausting the graph is a proof either way
    complete: bool = True
    memo_cap: int = DEFAULT_MEMO_CAP

    def __post_init__(self):
        if self.time_limit_ms is None or self.time_limit_ms <= 0:
            raise SolverConfigError(f"time limit must be positive, got {self.time_limit_ms!r}")

    @classmethod
    def from_settings(cls, **overrides) -> "SolverConfig":
        options = {
            "time_limit_ms": pinwheel_setting("SOLVE_TIMEOUT_MS", 60_000),
            "memo_cap": pinwheel_setting("MEMO_CAP", DEFAULT_MEMO_CAP),
        }
        options.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**options)


@dataclass(frozen=True)
class JobState:
    """Days elapsed since the job's last occurrence (minus one) and its ceiling-gap flags."""
    elapsed: int = 0
    flags: tuple = ()


@dataclass(frozen=True)
class SearchState:
    per_job: tuple

    @property
    def key(self) -> tuple:
        return tuple((job.elapsed, job.flags) for job in self.per_job)


# -------------------------------
# Fractional constraint checker
# -------------------------------
def _job_kind(value: Fraction) -> int:
    if value.denominator == 1:
        return INTEGER
    if value.denominator == 2:
        return HALF
    if value.denominator == 3:
        return THIRD_LOW if value.numerator % 3 == 1 else THIRD_HIGH
    raise SolverConfigError(f"period {value} has unsupported denominator {value.denominator}")


def _ceiling_forbidden(kind: int, flags: int) -> bool:
    """Would a gap equal to ceil(j) right now violate the constraint?"""
    if kind == HALF:
        return bool(flags & LAST_AT_CEIL)
    if kind == THIRD_LOW:
        return bool(flags & (LAST_AT_CEIL | SECOND_AT_CEIL))
    if kind == THIRD_HIGH:
        return flags & (LAST_AT_CEIL | SECOND_AT_CEIL) == (LAST_AT_CEIL | SECOND_AT_CEIL)
    return False


def check_fractional(period: Union[Period, Fraction], history: Union[Sequence[int], JobState], next_time: Optional[int] = None) -> bool:
    """
    Incremental constraint for a period with denominator 2 or 3; True when scheduling passes.

    `history` is either the job's occurrence times (with `next_time` the candidate time) or a
    JobState (with `next_time` the candidate gap, default elapsed + 1).
    """
    value = Fraction(period.value if isinstance(period, Period) else period)
    if value.denominator == 1:
        raise SolverConfigError(f"check_fractional needs a non-integer period, got {value}")
    kind = _job_kind(value)
    ceiling = math.ceil(value)

    if isinstance(history, JobState):
        gap = history.elapsed + 1 if next_time is None else next_time
        flags = 0
        for bit, flag in zip((LAST_AT_CEIL, SECOND_AT_CEIL), history.flags):
            if flag:
                flags |= bit
        return not (gap == ceiling and _ceiling_forbidden(kind, flags))

    history = list(history)
    if not history:
        return True
    gap = next_time - history[-1]
    last = history[-1] - history[-2] if len(history) >= 2 else None
    second = history[-2] - history[-3] if len(history) >= 3 else None
    if kind == HALF:
        return not (last == ceiling and gap == ceiling)
    if len(history) < 2:
        return True
    if kind == THIRD_LOW:
        return not (gap == ceiling and (last == ceiling or second == ceiling))
    return not (len(history) > 2 and gap == ceiling and last == ceiling and second == ceiling)


# -------------------------------
# Foresight search
# -------------------------------
class ForesightSearch:
    """
    Depth-first search over packed job states (elapsed << 2 | flags).

    Every day one job is scheduled: a job whose slack is zero must go now; otherwise jobs are
    tried most urgent first. A successor is pruned when some horizon k holds more forced
    occurrences than days. Revisiting a state on the current path closes a cycle.
    """

    def __init__(self, instance: Instance, config: SolverConfig):
        self.instance = instance
        self.config = config
        self.values = [Fraction(v) for v in instance]
        self.kinds = [_job_kind(v) for v in self.values]
        self.ceilings = [math.ceil(v) for v in self.values]
        self.order_keys = [(v, i) for i, v in enumerate(self.values)]
        self.nodes = 0

    def _limit(self, job: int, packed: int) -> int:
        ceiling = self.ceilings[job]
        if _ceiling_forbidden(self.kinds[job], packed & 3):
            return ceiling - 1
        return ceiling

    def _slacks(self, state: tuple) -> Optional[list]:
        slacks = []
        for job, packed in enumerate(state):
            slack = self._limit(job, packed) - ((packed >> 2) + 1)
            if slack < 0:
                return None
            slacks.append(slack)
        return slacks

    def _overloaded(self, slacks: list) -> bool:
        for k in sorted(set(s + 1 for s in slacks)):
            demand = 0
            for job, slack in enumerate(slacks):
                if slack < k:
                    demand += 1 + (k - 1 - slack) // self.ceilings[job]
            if demand > k:
                return True
        return False

    def _advance(self, state: tuple, chosen: int) -> tuple:
        nxt = []
        for job, packed in enumerate(state):
            elapsed = packed >> 2
            if job == chosen:
                flags = 0
                if self.kinds[job] != INTEGER:
                    if elapsed + 1 == self.ceilings[job]:
                        flags |= LAST_AT_CEIL
                    if self.kinds[job] in (THIRD_LOW, THIRD_HIGH) and packed & LAST_AT_CEIL:
                        flags |= SECOND_AT_CEIL
                nxt.append(flags)
            else:
                nxt.append(((elapsed + 1) << 2) | (packed & 3))
        return tuple(nxt)

    def successors(self, state: tuple) -> list:
        slacks = self._slacks(state)
        if slacks is None:
            return []
        urgent = [job for job, slack in enumerate(slacks) if slack == 0]
        if len(urgent) > 1:
            return []
        jobs = urgent or sorted(range(len(state)), key=lambda j: (slacks[j], self.order_keys[j]))
        result = []
        for job in jobs:
            nxt = self._advance(state, job)
            nxt_slacks = self._slacks(nxt)
            if nxt_slacks is None or self._overloaded(nxt_slacks):
                continue
            result.append((job, nxt))
        return result

    def run(self) -> SolveOutcome:
        started = time.monotonic()
        deadline = started + self.config.time_limit_ms / 1000.0
        memo_cap = self.config.memo_cap
        failed = set()

        start = tuple(0 for _ in self.values)
        path_index = {start: 0}
        path = [start]
        choices = []
        stack = [iter(self.successors(start))]

        while stack:
            self.nodes += 1
            if self.nodes % 256 == 0 and time.monotonic() > deadline:
                return SolveOutcome.timeout(_ms_since(started), self.nodes)
            step = next(stack[-1], None)
            if step is None:
                state = path.pop()
                del path_index[state]
                stack.pop()
                if choices:
                    choices.pop()
                if self.config.complete:
                    if len(failed) >= memo_cap:
                        # eviction may cause re-exploration, never wrong answers
                        failed.clear()
                    failed.add(state)
                continue
            job, nxt = step
            if nxt in path_index:
                cycle = tuple(j + 1 for j in choices[path_index[nxt]:] + [job])
                return SolveOutcome(OutcomeStatus.SCHEDULABLE, Schedule(cycle), _ms_since(started), self.nodes)
            if nxt in failed:
                continue
            path_index[nxt] = len(path)
            path.append(nxt)
            choices.append(job)
            stack.append(iter(self.successors(nxt)))

        return SolveOutcome(OutcomeStatus.UNSCHEDULABLE, None, _ms_since(started), self.nodes)


def _ms_since(started: float) -> float:
    return (time.monotonic() - started) * 1000.0


def solve(instance: Instance, config: Optional[SolverConfig] = None) -> SolveOutcome:
    """Complete foresight search; Schedulable outcomes carry a verified schedule."""
    config = config or SolverConfig.from_settings()
    if not len(instance):
        return SolveOutcome(OutcomeStatus.SCHEDULABLE, empty_schedule())

    search = ForesightSearch(instance, config)
    outcome = search.run()
    if outcome.is_schedulable:
        violation = verify_schedule(instance, outcome.schedule)
        if violation is not None:
            logger.error("foresight search produced an invalid cycle for %s: %s", instance, violation)
            raise ContractViolation(f"solver returned an invalid schedule for {instance}: {violation}")
        outcome = SolveOutcome(outcome.status, Schedule(outcome.schedule.cycle, verified=True),
                               outcome.elapsed_ms, outcome.nodes)
    logger.debug("foresight %s -> %s in %.1f ms (%d nodes)", instance, outcome.status.value,
                 outcome.elapsed_ms, outcome.nodes)
    return outcome


# -------------------------------
# Oracles and fixtures
# -------------------------------
def brute_force_schedulable(instance: Instance) -> bool:
    """
    Exhaustive oracle for small integer instances: build the whole state graph (idle days
    included) and repeatedly drop states without a surviving successor. A schedule exists
    iff some state survives, i.e. the graph holds a cycle.
    """
    if not instance.is_integral:
        raise SolverConfigError("the brute-force oracle handles integer instances only")
    periods = list(instance)
    if not periods:
        return True
    alive = set(product(*(range(p) for p in periods)))

    def moves(state):
        for choice in range(-1, len(periods)):
            nxt = tuple(0 if j == choice else e + 1 for j, e in enumerate(state))
            if all(e <= p - 1 for e, p in zip(nxt, periods)):
                yield nxt

    changed = True
    while changed:
        changed = False
        for state in list(alive):
            if not any(nxt in alive for nxt in moves(state)):
                alive.discard(state)
                changed = True
    return bool(alive)


def unschedulable_family(m: int, x: int) -> Instance:
    """(m, m+1 repeated m-1 times, x): unschedulable for every m and x."""
    return Instance.of([m] + [m + 1] * (m - 1) + [x])
