import hashlib
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from core.exceptions import (
    ContractViolation,
    InstanceParseError,
    InvalidPeriodError,
    MalformedScheduleError,
    PinwheelError,
    ProofParamsError,
    StageMissingError,
)
from core.utils import (
    Instance,
    Schedule,
    check_theta,
    covers,
    dominates,
    format_value,
    pinwheel_setting,
    transfer_schedule,
    verify_schedule,
)
from fastsolver.utils import FastSolverConfig, fast_solve
from folding.utils import ffold, ffold_with_trace, lift_schedule, unfold

logger = logging.getLogger(__name__)

LISTS_FILE = "lists.csv"
REMOVED_FILE = "removed.csv"
SCHEDULES_FILE = "schedules.csv"
MANIFEST_FILE = "manifest"
STAGE_FILES = (LISTS_FILE, REMOVED_FILE, SCHEDULES_FILE)


@dataclass(frozen=True)
class ProofParams:
    m: int
    d: Fraction
    theta_min: int = 12
    theta_max: int = 30
    budget_ms: int = 10_000

    def __post_init__(self):
        object.__setattr__(self, "d", Fraction(self.d))
        if not isinstance(self.m, int) or self.m < 2:
            raise ProofParamsError(f"minimum period must be an integer >= 2, got {self.m!r}")
        if not 0 <= self.d < 1:
            raise ProofParamsError(f"density bound must lie in [0, 1), got {format_value(self.d)}")
        for theta in (self.theta_min, self.theta_max):
            if not isinstance(theta, int) or theta < 2 or theta % 2:
                raise ProofParamsError(f"fold parameters must be even integers, got {theta!r}")
        if self.theta_min > self.theta_max:
            raise ProofParamsError(f"theta_min {self.theta_min} exceeds theta_max {self.theta_max}")
        if self.m >= self.theta_min:
            raise ProofParamsError(f"minimum period {self.m} must be below theta_min {self.theta_min}")
        if self.budget_ms <= 0:
            raise ProofParamsError(f"classification budget must be positive, got {self.budget_ms!r}")

    @property
    def thetas(self) -> range:
        return range(self.theta_min, self.theta_max + 1, 2)


@dataclass
class ProofStage:
    """
    One fold parameter of the proof chain.
    - candidates: every instance this stage had to account for
    - L: schedulable instances with their verified schedules
    - R: deferred instances, handed to the next stage through unfold
    """
    theta: int
    candidates: tuple = ()
    L: dict = field(default_factory=dict)
    R: tuple = ()
    seconds: float = 0.0

    def lines(self) -> dict:
        lists = _join(member.text() for member in sorted(self.L))
        removed = _join(member.text() for member in self.R)
        schedules = _join(f"{member.text()}|{self.L[member].text()}" for member in sorted(self.L))
        return {LISTS_FILE: lists, REMOVED_FILE: removed, SCHEDULES_FILE: schedules}

    @property
    def digest(self) -> str:
        sha = hashlib.sha256()
        for name, text in self.lines().items():
            sha.update(name.encode())
            sha.update(text.encode())
        return sha.hexdigest()

    @property
    def members(self) -> list:
        return sorted(set(self.L) | set(self.R))


@dataclass(frozen=True)
class Rejection:
    """One failed certification check, machine readable."""
    property: str
    theta: Optional[int] = None
    instance: str = ""
    detail: str = ""

    def __str__(self):
        where = f" at theta={self.theta}" if self.theta is not None else ""
        what = f" [{self.instance}]" if self.instance else ""
        return f"{self.property}{where}{what}: {self.detail}"


@dataclass
class CertificationResult:
    rejections: list = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return not self.rejections

    def reject(self, prop: str, theta: Optional[int] = None, instance: str = "", detail: str = ""):
        rejection = Rejection(prop, theta, instance, detail)
        logger.warning("certification rejected: %s", rejection)
        self.rejections.append(rejection)

    def reasons(self) -> list:
        return [str(r) for r in self.rejections]


def _join(lines: Iterable[str]) -> str:
    text = "\n".join(lines)
    return text + "\n" if text else ""


# -------------------------------
# Base enumeration
# -------------------------------
def _weights(theta: int, m: int) -> dict:
    half = theta // 2
    return {a: (Fraction(1, a) if a < half else Fraction(1, a + 1)) for a in range(m, theta)}


def enumerate_base(theta: int, m: int, d, exact: bool = False) -> list:
    """
    Integer multisets over [m, theta-1] with D'_theta <= d + 1/theta, ascending.

    By default only saturated ones are returned: those with no room for another (theta-1).
    A non-saturated instance padded with (theta-1) elements becomes saturated, and the padded
    instance covers it, so saturated candidates account for every qualifying instance.
    exact=True returns every non-empty qualifying multiset instead.
    """
    check_theta(theta)
    if m >= theta:
        raise ProofParamsError(f"minimum period {m} must be below theta {theta}")
    if m < 1:
        raise ProofParamsError(f"minimum period must be positive, got {m}")
    weights = _weights(theta, m)
    bound = Fraction(d) + Fraction(1, theta)
    # scale everything to integers so the recursion never touches Fractions
    scale = math.lcm(bound.denominator, *(w.denominator for w in weights.values()))
    scaled = {a: int(w * scale) for a, w in weights.items()}
    budget = int(bound * scale)
    top = scaled[theta - 1]
    values = sorted(weights)

    found = []
    chosen = []

    def walk(start: int, remaining: int):
        if remaining < top:
            found.append(Instance(tuple(chosen)))
            return
        if exact and chosen:
            found.append(Instance(tuple(chosen)))
        for index in range(start, len(values)):
            a = values[index]
            if scaled[a] <= remaining:
                chosen.append(a)
                walk(index, remaining - scaled[a])
                chosen.pop()

    walk(0, budget)
    found = sorted(set(found))
    logger.info("enumerate_base theta=%d m=%d d=%s exact=%s: %d candidates",
                theta, m, format_value(Fraction(d)), exact, len(found))
    return found


# -------------------------------
# Classification and stages
# -------------------------------
def _classify_one(candidate: Instance, config: FastSolverConfig) -> Optional[Schedule]:
    outcome = fast_solve(candidate, config)
    if outcome.is_schedulable and verify_schedule(candidate, outcome.schedule) is None:
        return outcome.schedule
    return None


def classify(candidates: Sequence[Instance], config: Optional[FastSolverConfig] = None,
             workers: Optional[int] = None, solver: Optional[Callable] = None) -> tuple:
    """
    Split candidates into (L, R): L maps schedulable instances to verified schedules,
    R holds the rest in ascending order. `solver` replaces fast_solve when given.
    """
    candidates = sorted(set(candidates))
    config = config or FastSolverConfig.from_settings()
    if workers is None:
        workers = int(pinwheel_setting("THREADS", 1) or 1)

    if solver is not None:
        schedules = []
        for candidate in candidates:
            outcome = solver(candidate)
            ok = outcome.is_schedulable and verify_schedule(candidate, outcome.schedule) is None
            schedules.append(outcome.schedule if ok else None)
    elif workers > 1 and len(candidates) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            schedules = list(pool.map(_classify_one, candidates, [config] * len(candidates), chunksize=16))
    else:
        schedules = [_classify_one(candidate, config) for candidate in candidates]

    L = {}
    R = []
    for candidate, schedule in zip(candidates, schedules):
        if schedule is None:
            R.append(candidate)
        else:
            L[candidate] = Schedule(schedule.cycle, verified=True)
    return L, tuple(R)


def _stage_config(params: ProofParams) -> FastSolverConfig:
    return FastSolverConfig.from_settings(
        time_limit_ms=params.budget_ms,
        per_attempt_ms=min(params.budget_ms, pinwheel_setting("PER_ATTEMPT_MS", 10_000)),
    )


def build_stage(theta: int, candidates: Sequence[Instance], params: ProofParams,
                solver: Optional[Callable] = None) -> ProofStage:
    started = time.monotonic()
    candidates = tuple(sorted(set(candidates)))
    L, R = classify(candidates, _stage_config(params), solver=solver)
    stage = ProofStage(theta, candidates, L, R, time.monotonic() - started)
    logger.info("stage theta=%d: %d candidates, %d schedulable, %d deferred (%.1f s)",
                theta, len(candidates), len(L), len(R), stage.seconds)
    return stage


def base_stage(params: ProofParams, exact: bool = False, solver: Optional[Callable] = None) -> ProofStage:
    candidates = enumerate_base(params.theta_min, params.m, params.d, exact=exact)
    return build_stage(params.theta_min, candidates, params, solver)


def advance_stage(prev: ProofStage, params: ProofParams, solver: Optional[Callable] = None) -> ProofStage:
    theta = prev.theta + 2
    if theta > params.theta_max:
        raise ProofParamsError(f"stage {theta} is beyond theta_max {params.theta_max}")
    candidates = unfold(prev.R, prev.theta, params.d, params.m)
    return build_stage(theta, candidates, params, solver)


def prove(params: ProofParams, out_dir=None, exact: bool = False, solver: Optional[Callable] = None) -> list:
    """Run the whole chain theta_min..theta_max; writes stage files and manifest when out_dir is set."""
    started = time.monotonic()
    stages = [base_stage(params, exact=exact, solver=solver)]
    while stages[-1].theta < params.theta_max:
        stages.append(advance_stage(stages[-1], params, solver))
    if out_dir is not None:
        write_proof(out_dir, params, stages)
    logger.info("prove m=%d d=%s theta=%d..%d finished in %.1f s; final deferred set has %d instances",
                params.m, format_value(params.d), params.theta_min, params.theta_max,
                time.monotonic() - started, len(stages[-1].R))
    return stages


# -------------------------------
# Artifact files
# -------------------------------
def stage_dir(root, theta: int) -> Path:
    return Path(root) / f"theta_{theta}"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_proof(out_dir, params: ProofParams, stages: Sequence[ProofStage]) -> Path:
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    stats = []
    for stage in stages:
        directory = stage_dir(root, stage.theta)
        directory.mkdir(parents=True, exist_ok=True)
        size = 0
        for name, text in stage.lines().items():
            (directory / name).write_text(text)
            size += len(text.encode())
        stats += [
            f"stage.{stage.theta}.candidates={len(stage.candidates)}",
            f"stage.{stage.theta}.L={len(stage.L)}",
            f"stage.{stage.theta}.R={len(stage.R)}",
            f"stage.{stage.theta}.seconds={stage.seconds:.3f}",
            f"stage.{stage.theta}.bytes={size}",
        ]
    header = [
        f"m={params.m}",
        f"d={params.d.numerator}/{params.d.denominator}",
        f"theta_min={params.theta_min}",
        f"theta_max={params.theta_max}",
    ]
    (root / MANIFEST_FILE).write_text(_join(header + stats))
    seal(root)
    return root


def seal(proof_dir) -> dict:
    """Recompute the digest entries of the manifest from the stage files on disk."""
    root = Path(proof_dir)
    manifest = read_manifest(root)
    kept = [f"{key}={value}" for key, value in manifest.items() if not key.startswith("digest.")]
    digests = {}
    for directory in sorted(root.glob("theta_*")):
        for name in STAGE_FILES:
            path = directory / name
            if path.exists():
                digests[f"{directory.name}/{name}"] = _sha256(path)
    lines = kept + [f"digest.{rel}={value}" for rel, value in digests.items()]
    (root / MANIFEST_FILE).write_text(_join(lines))
    return digests


def read_manifest(proof_dir) -> dict:
    path = Path(proof_dir) / MANIFEST_FILE
    if not path.exists():
        raise StageMissingError(f"no manifest in {proof_dir}")
    entries = {}
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise MalformedScheduleError(f"bad manifest line '{line}'")
        entries[key.strip()] = value.strip()
    return entries


def params_from_manifest(manifest: dict, budget_ms: int = 10_000) -> ProofParams:
    try:
        return ProofParams(
            m=int(manifest["m"]),
            d=Fraction(manifest["d"]),
            theta_min=int(manifest["theta_min"]),
            theta_max=int(manifest["theta_max"]),
            budget_ms=budget_ms,
        )
    except (KeyError, ValueError) as e:
        raise ProofParamsError(f"manifest does not describe proof parameters: {e}") from e


def read_instances(path) -> list:
    text = Path(path).read_text()
    return [Instance.parse(line) for line in text.splitlines() if line.strip()]


def write_instances(path, instances: Iterable[Instance]):
    Path(path).write_text(_join(member.text() for member in instances))


def _read_schedules(path: Path) -> dict:
    schedules = {}
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        instance_text, sep, cycle_text = line.partition("|")
        if not sep:
            raise MalformedScheduleError(f"schedule line without '|': '{line}'")
        schedules[Instance.parse(instance_text)] = Schedule.parse(cycle_text)
    return schedules


def load_stages(proof_dir) -> tuple:
    """(params, {theta: ProofStage}) read back from a proof directory."""
    manifest = read_manifest(proof_dir)
    params = params_from_manifest(manifest)
    stages = {}
    for theta in params.thetas:
        directory = stage_dir(proof_dir, theta)
        if not directory.is_dir():
            raise StageMissingError(f"stage directory {directory} is missing")
        schedules = _read_schedules(directory / SCHEDULES_FILE)
        removed = tuple(read_instances(directory / REMOVED_FILE))
        L = {member: schedules.get(member) for member in read_instances(directory / LISTS_FILE)}
        stages[theta] = ProofStage(theta, tuple(sorted(set(L) | set(removed))), L, removed)
    return params, stages


# -------------------------------
# Using a proof
# -------------------------------
def _stage_thetas(stages: dict, params: Optional[ProofParams]) -> range:
    if params is not None:
        return params.thetas
    if not stages:
        raise StageMissingError("no stages supplied")
    return range(min(stages), max(stages) + 1, 2)


def locate(instance: Instance, stages: dict, params: Optional[ProofParams] = None) -> Optional[tuple]:
    """(theta, L member, witness) for the first theta where an L member covers ffold(A, theta)."""
    if not instance.is_integral:
        raise InvalidPeriodError(f"the theta generator takes integer instances, got {instance}")
    for theta in _stage_thetas(stages, params):
        stage = stages.get(theta)
        if stage is None:
            raise StageMissingError(f"stage theta={theta} is missing")
        folded = ffold(instance, theta)
        if folded in stage.L:
            return theta, folded, dominates(folded, folded)
        for member in sorted(stage.L):
            witness = dominates(member, folded)
            if witness is not None:
                return theta, member, witness
    return None


def theta_generator(instance: Instance, stages: dict, params: Optional[ProofParams] = None) -> Optional[int]:
    found = locate(instance, stages, params)
    return None if found is None else found[0]


def schedule_via_proof(instance: Instance, stages: dict, params: Optional[ProofParams] = None) -> Schedule:
    """Schedule A from the stored L schedule: transfer through domination, then lift through ffold."""
    found = locate(instance, stages, params)
    if found is None:
        raise ContractViolation(f"no stage covers {instance}; is it within the proven density bound?")
    theta, member, witness = found
    stored = stages[theta].L.get(member)
    if stored is None:
        raise StageMissingError(f"stage theta={theta} lists {member} without a schedule")
    folded, trace = ffold_with_trace(instance, theta)
    transferred = transfer_schedule(stored, witness)
    schedule = lift_schedule(transferred, trace, instance)
    logger.info("scheduled %s via theta=%d member %s (cycle length %d)", instance, theta, member, schedule.length)
    return schedule


# -------------------------------
# Certification
# -------------------------------
def _covered(candidate: Instance, members: set, ordered: list) -> bool:
    if candidate in members:
        return True
    return any(covers(member.values, candidate.values) for member in ordered)


def _check_file_format(result: CertificationResult, theta: int, name: str, instances: list, params: ProofParams) -> list:
    """Record format rejections; return the members that are usable downstream."""
    usable = []
    for member in instances:
        if not member.is_integral:
            result.reject("format", theta, member.text(), f"{name}: fractional element")
        elif any(not params.m <= v <= theta - 1 for v in member):
            result.reject("format", theta, member.text(), f"{name}: element outside [{params.m}, {theta - 1}]")
        else:
            usable.append(member)
    if instances != sorted(set(instances)):
        result.reject("format", theta, "", f"{name} is not strictly ascending")
    return usable


def _load_stage_files(result: CertificationResult, root: Path, theta: int, params: ProofParams):
    directory = stage_dir(root, theta)
    try:
        lists = read_instances(directory / LISTS_FILE)
        removed = read_instances(directory / REMOVED_FILE)
        schedules = _read_schedules(directory / SCHEDULES_FILE)
    except FileNotFoundError as e:
        result.reject("files", theta, "", f"missing stage file: {e.filename}")
        return None
    except (InstanceParseError, MalformedScheduleError) as e:
        result.reject("format", theta, "", str(e))
        return None
    _check_file_format(result, theta, LISTS_FILE, lists, params)
    usable = _check_file_format(result, theta, REMOVED_FILE, removed, params)
    for member in set(lists) & set(removed):
        result.reject("format", theta, member.text(), "listed as both schedulable and deferred")
    return lists, removed, usable, schedules


def _check_schedules(result: CertificationResult, theta: int, lists: list, schedules: dict):
    for member in lists:
        schedule = schedules.get(member)
        if schedule is None:
            result.reject("property3", theta, member.text(), "no stored schedule")
            continue
        try:
            violation = verify_schedule(member, schedule)
        except MalformedScheduleError as e:
            violation = e
        if violation is not None:
            result.reject("property3", theta, member.text(), f"schedule {schedule.text()} fails: {violation}")
    for member in set(schedules) - set(lists):
        result.reject("format", theta, member.text(), "schedule for an instance not in lists.csv")


def _check_digests(result: CertificationResult, root: Path, manifest: dict, params: ProofParams):
    for theta in params.thetas:
        for name in STAGE_FILES:
            rel = f"theta_{theta}/{name}"
            expected = manifest.get(f"digest.{rel}")
            path = root / rel
            if expected is None:
                result.reject("digest", theta, "", f"manifest has no digest for {rel}")
            elif path.exists() and _sha256(path) != expected:
                result.reject("digest", theta, "", f"{rel} does not match its manifest digest")


def _unfold_or_reject(result: CertificationResult, members: list, theta: int, params: ProofParams) -> list:
    if not members:
        return []
    try:
        return unfold(members, theta - 2, params.d, params.m)
    except PinwheelError as e:
        result.reject("property2", theta, "", f"cannot unfold theta_{theta - 2} members: {e}")
        return []


def certify(proof_dir, params: Optional[ProofParams] = None) -> CertificationResult:
    """
    Re-check a proof directory without solving anything:
    - digests and file formats
    - property1: base candidates covered at theta_min
    - property2: unfoldings of the previous deferred set covered at every later stage
    - property3: every stored schedule verifies
    - property4: nothing deferred at theta_max
    """
    started = time.monotonic()
    root = Path(proof_dir)
    result = CertificationResult()
    try:
        manifest = read_manifest(root)
        stored = params_from_manifest(manifest)
    except PinwheelError as e:
        result.reject("files", None, "", str(e))
        return result
    if params is not None and (params.m, params.d, params.theta_min, params.theta_max) != (
            stored.m, stored.d, stored.theta_min, stored.theta_max):
        result.reject("manifest", None, "", "manifest parameters differ from the requested ones")
    params = stored

    _check_digests(result, root, manifest, params)

    deferred, orphans = None, []
    for theta in params.thetas:
        loaded = _load_stage_files(result, root, theta, params)
        if loaded is None:
            return result
        lists, removed, usable, schedules = loaded
        _check_schedules(result, theta, lists, schedules)

        members = set(lists) | set(removed)
        ordered = sorted(members)
        if deferred is None:
            prop = "property1"
            candidates = enumerate_base(theta, params.m, params.d)
            untraced = []
        else:
            prop = "property2"
            candidates = _unfold_or_reject(result, deferred, theta, params)
            known = set(candidates)
            # preimages of candidates the previous stage neither scheduled nor deferred
            untraced = [c for c in _unfold_or_reject(result, orphans, theta, params) if c not in known]
            for candidate in untraced:
                result.reject(prop, theta, candidate.text(),
                              f"preimage of an instance missing from theta_{theta - 2}/{REMOVED_FILE}")
        uncovered = [c for c in candidates if not _covered(c, members, ordered)]
        for candidate in uncovered:
            result.reject(prop, theta, candidate.text(), "candidate is not covered by lists.csv or removed.csv")
        # uncovered candidates still have to be accounted for downstream
        deferred = usable
        orphans = sorted(set(uncovered) | {c for c in untraced if not _covered(c, members, ordered)})

    leftover = sorted(set(deferred or ()) | set(orphans))
    if leftover:
        result.reject("property4", params.theta_max, leftover[0].text(),
                      f"{len(leftover)} instances still deferred at theta_max")

    logger.info("certify %s: %s in %.1f s (%d rejections)", root,
                "accepted" if result.accepted else "rejected", time.monotonic() - started, len(result.rejections))
    return result
