import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import chain
from typing import Iterable, Optional, Sequence

from core.exceptions import FoldError, LiftError, PartitionError
from core.utils import (
    IDLE,
    Instance,
    Schedule,
    canonical_value,
    check_theta,
    covers,
    dprime,
    format_value,
    pinwheel_setting,
    verify_schedule,
)

logger = logging.getLogger(__name__)

MIN_THETA = 12
GROUP_SIZES = (2, 3, 5)

# Algorithm constants of the partition filter, and the relaxed variant that admits
# the worked (24, 25, 27) triple.
FILTER_LIMITS = {2: 2, 3: 2, 5: 3}
RELAXED_FILTER_LIMITS = {2: 2, 3: 4, 5: 3}

LEAF = "leaf"
GROUP = "group"
RELAX = "relax"


# -------------------------------
# Trace records (audit log of a fold)
# -------------------------------
@dataclass(frozen=True)
class PairFold:
    removed: object
    halved: object

    def replay(self, bag: Counter):
        _take(bag, self.removed)
        _take(bag, self.halved)
        bag[canonical_value(Fraction(self.halved) / 2)] += 1

    def line(self) -> str:
        return f"pair:{format_value(self.removed)},{format_value(self.halved)}->{format_value(Fraction(self.halved) / 2)}"


@dataclass(frozen=True)
class ThetaReplace:
    removed: object
    theta: int

    def replay(self, bag: Counter):
        _take(bag, self.removed)
        bag[self.theta] += 1

    def line(self) -> str:
        return f"theta-replace:{format_value(self.removed)}->{self.theta}"


@dataclass(frozen=True)
class PartitionFold:
    group: tuple
    members: tuple
    value: object
    index: int

    def replay(self, bag: Counter):
        for member in self.members:
            _take(bag, member)
        bag[self.value] += 1

    def line(self) -> str:
        return f"group:{','.join(str(i) for i in self.group)}->{self.index}"


@dataclass(frozen=True)
class Integerize:
    value: object
    result: int

    def replay(self, bag: Counter):
        _take(bag, self.value)
        bag[self.result] += 1

    def line(self) -> str:
        return f"ffold:{format_value(self.value)}->{self.result}"


def _take(bag: Counter, value):
    if bag[value] <= 0:
        raise FoldError(f"trace replay removes {format_value(value)} which is not present")
    bag[value] -= 1


# -------------------------------
# Lifting tree
# -------------------------------
@dataclass(frozen=True, eq=False)
class LiftNode:
    """
    One job of a folded instance. A leaf is an original job; a group serves its children
    round-robin in ascending order; a relax node serves its single child by identity
    (a smaller period also serves a larger one).
    """
    kind: str
    value: object
    position: Optional[int] = None
    children: tuple = ()

    def leaves(self) -> list:
        if self.kind == LEAF:
            return [self.position]
        return list(chain.from_iterable(child.leaves() for child in self.children))


def _leaf(position: int, value) -> LiftNode:
    return LiftNode(LEAF, value, position=position)


def _group(children: Sequence[LiftNode], value) -> LiftNode:
    return LiftNode(GROUP, canonical_value(value), children=tuple(children))


def _relax(child: LiftNode, value) -> LiftNode:
    return LiftNode(RELAX, canonical_value(value), children=(child,))


@dataclass(frozen=True)
class FoldTrace:
    """How the jobs of a folded instance map back onto the jobs of `original`."""
    original: Instance
    nodes: tuple
    steps: tuple = field(default_factory=tuple)

    def to_lines(self) -> list:
        return [step.line() for step in self.steps]

    def replay(self) -> Instance:
        bag = Counter(self.original.values)
        for step in self.steps:
            step.replay(bag)
        return Instance.of(bag.elements(), strict=False)

    def folded(self) -> Instance:
        return Instance(tuple(node.value for node in self.nodes))

    def terminal_positions(self) -> list:
        return sorted(chain.from_iterable(node.leaves() for node in self.nodes))


def identity_trace(instance: Instance) -> FoldTrace:
    return FoldTrace(instance, tuple(_leaf(i, v) for i, v in enumerate(instance)))


def _finish(original: Instance, nodes: list, steps: list) -> tuple:
    nodes.sort(key=lambda node: node.value)
    folded = Instance(tuple(node.value for node in nodes))
    return folded, FoldTrace(original, tuple(nodes), tuple(steps))


def _check_fold_input(instance: Instance, theta: int):
    check_theta(theta)
    if not len(instance):
        raise FoldError("cannot fold an empty instance")


# -------------------------------
# fold / ffold
# -------------------------------
def fold(instance: Instance, theta: int) -> tuple:
    """
    Merge the largest periods until every element is at most theta.
    Returns (folded instance, trace); the folded instance may hold halves.
    """
    _check_fold_input(instance, theta)
    nodes = [_leaf(i, v) for i, v in enumerate(instance)]
    steps = []
    while True:
        nodes.sort(key=lambda node: node.value)
        if nodes[-1].value <= theta:
            break
        a = nodes.pop()
        if nodes and nodes[-1].value > theta:
            b = nodes.pop()
            nodes.append(_group((b, a), Fraction(b.value) / 2))
            steps.append(PairFold(a.value, b.value))
        else:
            nodes.append(_relax(a, theta))
            steps.append(ThetaReplace(a.value, theta))
    return _finish(instance, nodes, steps)


def ffold_with_trace(instance: Instance, theta: int) -> tuple:
    """fold, then replace every non-integral or theta-valued element a by ceil(a) - 1."""
    _, trace = fold(instance, theta)
    nodes = list(trace.nodes)
    steps = list(trace.steps)
    for i, node in enumerate(nodes):
        value = node.value
        if not isinstance(value, int) or value == theta:
            result = math.ceil(value) - 1
            nodes[i] = _relax(node, result)
            steps.append(Integerize(value, result))
    return _finish(instance, nodes, steps)


def ffold(instance: Instance, theta: int) -> Instance:
    return ffold_with_trace(instance, theta)[0]


def ffold_monotonicity_failures(pairs: Iterable[tuple], theta: int) -> list:
    """
    Pairs (cover, target) of equal length with cover dominating target whose ffold images
    lose that domination. Pair folding can shorten one side only, so failures do occur;
    each one is logged.
    """
    failures = []
    for cover, target in pairs:
        if len(cover) != len(target) or not covers(cover.values, target.values):
            continue
        folded_cover, folded_target = ffold(cover, theta), ffold(target, theta)
        if not covers(folded_cover.values, folded_target.values):
            logger.warning("ffold_%d breaks domination: %s over %s folds to %s over %s",
                           theta, cover, target, folded_cover, folded_target)
            failures.append((cover, target))
    return failures


# -------------------------------
# Partitions
# -------------------------------
@dataclass(frozen=True)
class Partition:
    groups: tuple = ()

    @classmethod
    def of(cls, groups: Iterable[Iterable[int]]) -> "Partition":
        return cls(tuple(tuple(group) for group in groups))

    def text(self) -> str:
        return "[" + ",".join("[" + ",".join(str(i) for i in group) + "]" for group in self.groups) + "]"

    def __str__(self):
        return self.text()


def partition_filter(values: Sequence, group: Sequence[int], relaxed: bool = False) -> bool:
    """Accept a partition group only when folding it does not raise density by much."""
    limits = RELAXED_FILTER_LIMITS if relaxed else FILTER_LIMITS
    size = len(group)
    if size == 2:
        return values[group[1]] - values[group[0]] <= limits[2]
    if size == 3:
        low = values[group[0]]
        return (values[group[1]] - low) + (values[group[2]] - low) <= limits[3]
    if size == 5:
        base = 5 * math.floor(values[group[0]] / 5)
        return sum(values[i] - base for i in group) <= limits[5]
    return False


def validate_partition(instance: Instance, partition: Partition, relaxed: bool = False):
    seen = set()
    for group in partition.groups:
        if len(group) not in GROUP_SIZES:
            raise PartitionError(f"group {list(group)} has unsupported size {len(group)}")
        if list(group) != sorted(set(group)):
            raise PartitionError(f"group {list(group)} must be strictly ascending")
        if group[0] < 0 or group[-1] >= len(instance):
            raise PartitionError(f"group {list(group)} is out of range for {len(instance)} jobs")
        if seen.intersection(group):
            raise PartitionError(f"group {list(group)} overlaps an earlier group")
        seen.update(group)
        if not partition_filter(instance.values, group, relaxed=relaxed):
            raise PartitionError(f"group {list(group)} fails the partition filter")
        if group_value(instance.values, group) < 1:
            raise PartitionError(f"group {list(group)} would fold to a period below 1")


def group_value(values: Sequence, group: Sequence[int]):
    smallest = values[group[0]]
    if len(group) == 5:
        return math.floor(smallest / 5)
    return canonical_value(Fraction(smallest) / len(group))


def fold_by_partition(instance: Instance, partition: Partition, relaxed: Optional[bool] = None) -> tuple:
    """Replace each partition group by a single job; returns (folded instance, trace)."""
    if relaxed is None:
        relaxed = bool(pinwheel_setting("RELAX_PARTITION_FILTER", False))
    validate_partition(instance, partition, relaxed=relaxed)
    grouped = set(chain.from_iterable(partition.groups))
    nodes = [_leaf(i, v) for i, v in enumerate(instance) if i not in grouped]
    for group in partition.groups:
        members = [_leaf(i, instance[i]) for i in group]
        nodes.append(_group(members, group_value(instance.values, group)))
    folded, trace = _finish(instance, nodes, [])
    steps = []
    for index, node in enumerate(trace.nodes):
        if node.kind == GROUP:
            group = tuple(child.position for child in node.children)
            steps.append(PartitionFold(group, tuple(instance[i] for i in group), node.value, index))
    return folded, FoldTrace(instance, trace.nodes, tuple(steps))


# -------------------------------
# Unfold
# -------------------------------
def unfold_member(member: Instance, theta: int, bound, minimum: int) -> list:
    """
    Preimages of one ffold_theta image, living at fold parameter theta + 2.

    Elements other than theta/2 and theta-1 carry over. Each theta/2 either stays or expands
    to the pair (theta+1, theta+1); one theta-1 may become an odd theta+1; theta-1 elements
    become theta only as far as needed to meet the D' bound (more changes are dominated).
    """
    check_theta(theta)
    top, half = theta - 1, theta // 2
    for value in member:
        if not isinstance(value, int) or not minimum <= value <= top:
            raise FoldError(f"{member} has element {format_value(value)} outside [{minimum}, {top}]")
    limit = Fraction(bound) + Fraction(1, theta + 2)
    counts = Counter(member.values)
    n_half, n_top = counts[half], counts[top]
    rest = [v for v in member if v not in (half, top)]

    outputs = []
    for expanded in range(n_half + 1):
        for odd in ((0, 1) if n_top else (0,)):
            for raised in range(n_top - odd + 1):
                values = (rest + [half] * (n_half - expanded) + [theta + 1] * (2 * expanded + odd)
                          + [top] * (n_top - odd - raised) + [theta] * raised)
                candidate = Instance.of(values)
                if dprime(candidate, theta + 2) <= limit:
                    outputs.append(candidate)
                    break

    kept = []
    for candidate in sorted(set(outputs)):
        if any(other != candidate and covers(other.values, candidate.values) for other in outputs):
            continue
        if ffold(candidate, theta) != member:
            raise FoldError(f"unfold produced {candidate} whose ffold is not {member}")
        kept.append(candidate)
    return kept


def _unfold_member_args(args):
    return unfold_member(*args)


def unfold(members: Iterable[Instance], theta: int, bound, minimum: int, workers: Optional[int] = None) -> list:
    """Union of unfold_member over a set, merged deterministically (sort, then dedup)."""
    members = sorted(set(members))
    if workers is None:
        workers = int(pinwheel_setting("THREADS", 1) or 1)
    jobs = [(member, theta, bound, minimum) for member in members]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_unfold_member_args, jobs, chunksize=64))
    else:
        parts = [_unfold_member_args(job) for job in jobs]
    merged = sorted(set(chain.from_iterable(parts)))
    logger.debug("unfold theta=%d: %d members -> %d preimages", theta, len(members), len(merged))
    return merged


# -------------------------------
# Lifting
# -------------------------------
def lift_schedule(folded: Schedule, trace: FoldTrace, original: Optional[Instance] = None) -> Schedule:
    """
    Turn a schedule of the folded instance into one for the original instance.
    Group jobs hand their occurrences round-robin to their children; the cycle is repeated
    first whenever a group's occurrence count is not a multiple of its size.
    """
    original = trace.original if original is None else original
    nodes = trace.nodes
    tokens = []
    for token in folded.cycle:
        if token == IDLE:
            tokens.append(None)
        elif 1 <= token <= len(nodes):
            tokens.append(nodes[token - 1])
        else:
            raise LiftError(f"folded schedule references job {token}, trace has {len(nodes)} jobs")

    while True:
        tokens = [_unwrap(node) for node in tokens]
        counts = {}
        for node in tokens:
            if node is not None and node.kind == GROUP:
                counts[id(node)] = (node, counts.get(id(node), (node, 0))[1] + 1)
        if not counts:
            break
        repeat = 1
        for node, count in counts.values():
            size = len(node.children)
            repeat = math.lcm(repeat, size // math.gcd(count, size))
        tokens = tokens * repeat
        served = Counter()
        expanded = []
        for node in tokens:
            if node is not None and node.kind == GROUP:
                expanded.append(node.children[served[id(node)] % len(node.children)])
                served[id(node)] += 1
            else:
                expanded.append(node)
        tokens = expanded

    lifted = Schedule(tuple(IDLE if node is None else node.position + 1 for node in tokens))
    violation = verify_schedule(original, lifted)
    if violation is not None:
        logger.error("lifted schedule fails for %s: %s (steps: %s)", original, violation, trace.to_lines())
        raise LiftError(f"lifted schedule does not serve {original}: {violation}")
    return Schedule(lifted.cycle, verified=True)


def _unwrap(node: Optional[LiftNode]) -> Optional[LiftNode]:
    while node is not None and node.kind == RELAX:
        node = node.children[0]
    return node
