import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from core.exceptions import GeneratorConfigError, UnknownSolverError
from core.utils import Instance
from fastsolver.utils import SOLVER_NAMES, run_solver

logger = logging.getLogger(__name__)

DENSITY_LOW = Fraction(89, 100)
DENSITY_HIGH = Fraction(91, 100)
MAX_DRAWS = 10_000_000

CSV_COLUMNS = ["instance", "solver", "outcome", "elapsed_ms", "seed", "max_param"]


# -------------------------------
# Seeded generator
# -------------------------------
class XorShift64Star:
    """
    xorshift64* (shifts 12, 25, 27; multiplier 0x2545F4914F6CDD1D), 64-bit state.
    Seed 0 is replaced by a fixed non-zero constant. Seed 1 yields 0x47E4CE4B896CDD1D first.
    """
    MASK = (1 << 64) - 1
    MULTIPLIER = 0x2545F4914F6CDD1D
    ZERO_SEED = 0x9E3779B97F4A7C15

    def __init__(self, seed: int):
        self.state = (seed & self.MASK) or self.ZERO_SEED

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & self.MASK
        x ^= x >> 27
        self.state = x
        return (x * self.MULTIPLIER) & self.MASK

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection, so no value is favoured."""
        if n <= 0:
            raise GeneratorConfigError(f"range size must be positive, got {n}")
        limit = ((self.MASK + 1) // n) * n
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def randint(self, low: int, high: int) -> int:
        return low + self.below(high - low + 1)


@dataclass(frozen=True)
class GenConfig:
    mode: str
    seed: int
    count: int
    max_param: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("density", "scaling"):
            raise GeneratorConfigError(f"unknown generator mode '{self.mode}'")
        if self.count < 1:
            raise GeneratorConfigError(f"count must be at least 1, got {self.count}")
        if self.mode == "scaling" and (self.max_param is None or self.max_param < 6):
            raise GeneratorConfigError(f"scaling mode needs max_param >= 6, got {self.max_param}")


def _sample(rng: XorShift64Star, sizes: tuple, values: tuple, count: int) -> list:
    """Rejection sampling: draw a size, then values, and keep lists with density in [0.89, 0.91]."""
    found = []
    draws = 0
    while len(found) < count:
        draws += 1
        if draws > MAX_DRAWS:
            raise GeneratorConfigError(f"no accepted instance after {MAX_DRAWS} draws for sizes {sizes}, values {values}")
        n = rng.randint(*sizes)
        periods = [rng.randint(*values) for _ in range(n)]
        dens = sum((Fraction(1, v) for v in periods), Fraction(0))
        if DENSITY_LOW <= dens <= DENSITY_HIGH:
            found.append(Instance.of(periods))
    logger.debug("sampled %d instances in %d draws", count, draws)
    return found


def gen_density(seed: int, count: int) -> list:
    GenConfig("density", seed, count)
    return _sample(XorShift64Star(seed), (10, 15), (1, 25), count)


def gen_scaling(max_param: int, seed: int, count: int) -> list:
    GenConfig("scaling", seed, count, max_param)
    return _sample(XorShift64Star(seed), (max_param // 3, 2 * max_param // 3), (max_param // 2, max_param), count)


def generate(config: GenConfig) -> list:
    if config.mode == "density":
        return gen_density(config.seed, config.count)
    return gen_scaling(config.max_param, config.seed, config.count)


# -------------------------------
# Benchmark records
# -------------------------------
@dataclass(frozen=True)
class BenchRecord:
    instance: str
    solver: str
    outcome: str
    elapsed_ms: float
    seed: Optional[int] = None
    max_param: Optional[int] = None

    @property
    def solved(self) -> bool:
        return self.outcome == "schedulable"

    def row(self) -> dict:
        row = asdict(self)
        row["elapsed_ms"] = repr(float(self.elapsed_ms))
        row["seed"] = "" if self.seed is None else str(self.seed)
        row["max_param"] = "" if self.max_param is None else str(self.max_param)
        return row

    @classmethod
    def from_row(cls, row: dict) -> "BenchRecord":
        return cls(
            instance=row["instance"],
            solver=row["solver"],
            outcome=row["outcome"],
            elapsed_ms=float(row["elapsed_ms"]),
            seed=int(row["seed"]) if row.get("seed") else None,
            max_param=int(row["max_param"]) if row.get("max_param") else None,
        )


def write_records(path, records: Iterable[BenchRecord]):
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for record in records:
            writer.writerow(record.row())


def read_records(path) -> list:
    with open(path, newline="") as handle:
        return [BenchRecord.from_row(row) for row in csv.DictReader(handle)]


def read_instance_file(path) -> list:
    return [Instance.parse(line) for line in Path(path).read_text().splitlines() if line.strip()]


def write_instance_file(path, instances: Iterable[Instance]):
    lines = [instance.text() for instance in instances]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def _run_one(instance: Instance, solver: str, time_limit_ms: int) -> tuple:
    # solver invocation only; parsing and verification stay outside the timed region
    started = time.monotonic()
    outcome = run_solver(solver, instance, time_limit_ms=time_limit_ms)
    return outcome.status.value, (time.monotonic() - started) * 1000.0


def bench_run(instances: Sequence[Instance], solvers: Sequence[str], time_limit_ms: int,
              seed: Optional[int] = None, max_param: Optional[int] = None, workers: int = 1) -> list:
    """Run every (instance, solver) pair under the time limit; one record per pair, in input order."""
    if not solvers:
        raise UnknownSolverError("at least one solver is required")
    for name in solvers:
        if name not in SOLVER_NAMES:
            raise UnknownSolverError(f"unknown solver '{name}'; expected one of {', '.join(SOLVER_NAMES)}")

    pairs = [(instance, name) for instance in instances for name in solvers]
    if workers > 1 and len(pairs) > 1:
        # timings are approximate when workers share the machine
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, [p[0] for p in pairs], [p[1] for p in pairs],
                                    [time_limit_ms] * len(pairs)))
    else:
        results = [_run_one(instance, name, time_limit_ms) for instance, name in pairs]

    records = []
    for (instance, name), (outcome, elapsed) in zip(pairs, results):
        record = BenchRecord(instance.text(), name, outcome, elapsed, seed, max_param)
        logger.info("bench %s %s: %s in %.1f ms", name, instance, outcome, elapsed)
        records.append(record)
    return records


# -------------------------------
# Summaries
# -------------------------------
@dataclass
class SolverSummary:
    solver: str
    runs: int = 0
    solved: int = 0
    mean_ms: float = 0.0
    median_ms: float = 0.0
    solved_times: list = field(default_factory=list)

    def time_to_k(self, k: int) -> Optional[float]:
        """Wall time of the k-th fastest solve, or None when fewer than k were solved."""
        if k < 1 or k > len(self.solved_times):
            return None
        return self.solved_times[k - 1]


def summarize(records: Iterable[BenchRecord], max_param: Optional[int] = None) -> dict:
    """
    Per-solver statistics, keyed by solver name.
    - mean/median over every run (timeouts count with their elapsed time)
    - solved_times ascending, for time-to-k-solves
    """
    by_solver = {}
    for record in records:
        if max_param is not None and record.max_param != max_param:
            continue
        by_solver.setdefault(record.solver, []).append(record)

    summaries = {}
    for solver, rows in by_solver.items():
        elapsed = np.array([r.elapsed_ms for r in rows], dtype=float)
        summaries[solver] = SolverSummary(
            solver=solver,
            runs=len(rows),
            solved=sum(1 for r in rows if r.solved),
            mean_ms=float(np.mean(elapsed)),
            median_ms=float(np.median(elapsed)),
            solved_times=sorted(r.elapsed_ms for r in rows if r.solved),
        )
    return summaries


def time_to_k(records: Iterable[BenchRecord], solver: str, k: int, max_param: Optional[int] = None) -> Optional[float]:
    summary = summarize(records, max_param).get(solver)
    return None if summary is None else summary.time_to_k(k)


def speedup(records: Sequence[BenchRecord], baseline: str = "foresight", contender: str = "fast",
            statistic: str = "median") -> Optional[float]:
    """Ratio baseline / contender of the chosen statistic (mean or median); None when undefined."""
    if statistic not in ("mean", "median"):
        raise ValueError(f"statistic must be mean or median, got {statistic!r}")
    summaries = summarize(records)
    if baseline not in summaries or contender not in summaries:
        return None
    attr = f"{statistic}_ms"
    numerator = getattr(summaries[baseline], attr)
    denominator = getattr(summaries[contender], attr)
    if denominator <= 0:
        return None
    return numerator / denominator
