import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

from .exceptions import FoldError, InstanceParseError, InvalidPeriodError, MalformedScheduleError

logger = logging.getLogger(__name__)

# token used for a day on which no job is performed
IDLE = 0

ALLOWED_DENOMINATORS = (1, 2, 3)

Number = Union[int, Fraction]


def pinwheel_setting(key: str, default=None):
    """
    Read one entry of the PINWHEEL settings dict.
    Falls back to `default` when Django settings are not configured (plain library use).
    """
    try:
        options = getattr(settings, "PINWHEEL", {})
    except ImproperlyConfigured:
        options = {}
    return options.get(key, default)


def canonical_value(value) -> Number:
    """Exact numeric value: int when integral, Fraction otherwise."""
    if isinstance(value, bool):
        raise InvalidPeriodError(f"not a period: {value!r}")
    try:
        frac = Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise InvalidPeriodError(f"not a period: {value!r}") from e
    if frac.denominator == 1:
        return frac.numerator
    return frac


def format_value(value: Number) -> str:
    frac = Fraction(value)
    if frac.denominator == 1:
        return str(frac.numerator)
    return f"{frac.numerator}/{frac.denominator}"


# -------------------------------
# Domain types
# -------------------------------
@dataclass(frozen=True, order=True)
class Period:
    """A job period p/q with q in {1, 2, 3}, kept in lowest terms."""
    value: Fraction

    def __post_init__(self):
        value = Fraction(self.value)
        if value < 1:
            raise InvalidPeriodError(f"period must be at least 1, got {format_value(value)}")
        if value.denominator not in ALLOWED_DENOMINATORS:
            raise InvalidPeriodError(
                f"period {format_value(value)} has denominator {value.denominator}; only 1, 2, 3 are supported"
            )
        object.__setattr__(self, "value", value)

    @classmethod
    def of(cls, numerator: int, denominator: int = 1) -> "Period":
        if denominator <= 0:
            raise InvalidPeriodError("denominator must be positive")
        return cls(Fraction(numerator, denominator))

    @property
    def numerator(self) -> int:
        return self.value.numerator

    @property
    def denominator(self) -> int:
        return self.value.denominator

    @property
    def is_integer(self) -> bool:
        return self.value.denominator == 1

    @property
    def ceil(self) -> int:
        return math.ceil(self.value)

    def __str__(self):
        return format_value(self.value)


@dataclass(frozen=True, order=True)
class Instance:
    """
    A pinwheel instance: a multiset of periods in ascending canonical order.
    Integral periods are stored as int, fractional ones as Fraction.
    """
    values: tuple = ()

    @classmethod
    def of(cls, values: Iterable, strict: bool = True) -> "Instance":
        """
        Build a canonical instance. With strict=False any rational period >= 1 is accepted;
        fold uses this because repeated halving can leave denominators beyond 3.
        """
        canon = []
        for v in values:
            value = canonical_value(v)
            if strict:
                Period(Fraction(value))
            elif value < 1:
                raise InvalidPeriodError(f"period must be at least 1, got {format_value(value)}")
            canon.append(value)
        return cls(tuple(sorted(canon)))

    @classmethod
    def parse(cls, text: str) -> "Instance":
        text = (text or "").strip()
        if not text:
            return cls()
        try:
            return cls.of(token.strip() for token in text.split(","))
        except InvalidPeriodError as e:
            raise InstanceParseError(f"cannot parse instance '{text}': {e}") from e

    def text(self) -> str:
        return ",".join(format_value(v) for v in self.values)

    def __str__(self):
        return f"[{self.text()}]"

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, index):
        return self.values[index]

    @property
    def periods(self) -> tuple:
        return tuple(Period(Fraction(v)) for v in self.values)

    @property
    def is_integral(self) -> bool:
        return all(isinstance(v, int) for v in self.values)

    def density(self) -> Fraction:
        return density(self)


@dataclass(frozen=True)
class Schedule:
    """A cyclic schedule; tokens are 1-based job indices or IDLE."""
    cycle: tuple
    verified: bool = False

    @property
    def length(self) -> int:
        return len(self.cycle)

    @classmethod
    def parse(cls, text: str) -> "Schedule":
        try:
            cycle = tuple(int(token.strip()) for token in text.strip().split(","))
        except ValueError as e:
            raise MalformedScheduleError(f"cannot parse schedule '{text}'") from e
        return cls(cycle)

    def text(self) -> str:
        return ",".join(str(token) for token in self.cycle)

    def occurrences(self, job: int) -> list:
        return [day for day, token in enumerate(self.cycle) if token == job]


@dataclass(frozen=True)
class Violation:
    """Job `job` has only `found` < `required` occurrences in the cyclic window [start, start+length)."""
    job: int
    start: int
    length: int
    required: int
    found: int

    def __str__(self):
        return (f"job {self.job}: window of length {self.length} starting at {self.start} "
                f"has {self.found} < {self.required} occurrences")


@dataclass(frozen=True)
class DominationWitness:
    """Pairs (target position, cover position) with cover element <= target element."""
    assignment: tuple

    def cover_to_target(self) -> dict:
        return {cover: target for target, cover in self.assignment}


def empty_schedule() -> Schedule:
    return Schedule((IDLE,), verified=True)


# -------------------------------
# Densities
# -------------------------------
def density(instance: Instance) -> Fraction:
    return sum((1 / Fraction(v) for v in instance), Fraction(0))


def check_theta(theta: int) -> int:
    if not isinstance(theta, int) or theta < 2 or theta % 2:
        raise FoldError(f"fold parameter must be an even integer >= 2, got {theta!r}")
    return theta


def dprime(instance: Instance, theta: int) -> Fraction:
    """Modified density: elements at least theta/2 are charged 1/(a+1)."""
    check_theta(theta)
    if not instance.is_integral:
        raise InvalidPeriodError(f"D' is defined on integer instances only, got {instance}")
    half = theta // 2
    total = Fraction(0)
    for a in instance:
        total += Fraction(1, a) if a < half else Fraction(1, a + 1)
    return total


def lcm_of_periods(instance: Instance) -> int:
    return math.lcm(*(math.ceil(v) for v in instance)) if len(instance) else 1


# -------------------------------
# Domination
# -------------------------------
def covers(cover: Sequence, target: Sequence) -> bool:
    """Sorted-list greedy test: the |target| smallest cover elements are pairwise <= target."""
    if len(cover) < len(target):
        return False
    return all(c <= t for c, t in zip(cover, target))


def dominates(cover: Instance, target: Instance) -> Optional[DominationWitness]:
    """
    Witness that schedulability of `cover` implies schedulability of `target`, or None.
    Extra cover elements are allowed (dropping jobs keeps a schedule valid).
    """
    if not covers(cover.values, target.values):
        return None
    return DominationWitness(tuple((i, i) for i in range(len(target))))


def transfer_schedule(schedule: Schedule, witness: DominationWitness) -> Schedule:
    """Re-label a schedule of the cover instance into one for the dominated target."""
    mapping = witness.cover_to_target()
    cycle = tuple(
        mapping[token - 1] + 1 if token != IDLE and (token - 1) in mapping else IDLE
        for token in schedule.cycle
    )
    return Schedule(cycle)


# -------------------------------
# Verification
# -------------------------------
def _check_tokens(instance: Instance, schedule: Schedule):
    if not schedule.cycle:
        raise MalformedScheduleError("schedule cycle is empty")
    n = len(instance)
    for token in schedule.cycle:
        if not isinstance(token, int) or token < 0 or token > n:
            raise MalformedScheduleError(f"job index {token!r} out of range for {n} jobs")


def verify_schedule(instance: Instance, schedule: Schedule) -> Optional[Violation]:
    """
    Check the cyclic schedule against every job. Returns None when the schedule is valid.

    A window strictly between two occurrences spanning m gaps of total G has length G-1
    and m-1 occurrences; it is violated iff G-1 >= m*r. Windows up to the cycle length are
    covered by m <= k, and the per-cycle count k >= ceil(L/r) extends validity to all lengths.
    """
    _check_tokens(instance, schedule)
    length = len(schedule.cycle)
    positions = [[] for _ in range(len(instance))]
    for day, token in enumerate(schedule.cycle):
        if token != IDLE:
            positions[token - 1].append(day)

    for job, value in enumerate(instance, start=1):
        r = Fraction(value)
        occ = positions[job - 1]
        k = len(occ)
        if k:
            gaps = [(occ[(i + 1) % k] - occ[i]) % length or length for i in range(k)]
            prefix = [0]
            for g in gaps + gaps:
                prefix.append(prefix[-1] + g)
            # integer periods: gap bound alone is equivalent
            max_span = 1 if r.denominator == 1 else k
            for m in range(1, max_span + 1):
                bound = m * r
                for t in range(k):
                    span = prefix[t + m] - prefix[t]
                    if span - 1 >= bound:
                        return Violation(
                            job=job,
                            start=(occ[t] + 1) % length,
                            length=span - 1,
                            required=math.floor((span - 1) / r),
                            found=m - 1,
                        )
        required = math.ceil(length / r)
        if k < required:
            return Violation(job=job, start=0, length=length, required=required, found=k)
    return None


def mark_verified(instance: Instance, schedule: Schedule) -> Schedule:
    """Return a verified copy of `schedule`; raises MalformedScheduleError on a violation."""
    violation = verify_schedule(instance, schedule)
    if violation is not None:
        raise MalformedScheduleError(f"schedule does not serve {instance}: {violation}")
    return Schedule(schedule.cycle, verified=True)


def gap_check(instance: Instance, schedule: Schedule) -> bool:
    """Independent checker for integer instances: every cyclic gap of job i is at most a_i."""
    _check_tokens(instance, schedule)
    length = len(schedule.cycle)
    for job, a in enumerate(instance, start=1):
        occ = schedule.occurrences(job)
        if not occ:
            return False
        for i, day in enumerate(occ):
            nxt = occ[(i + 1) % len(occ)]
            gap = (nxt - day) % length or length
            if gap > a:
                return False
    return True
