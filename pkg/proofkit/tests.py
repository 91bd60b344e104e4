import shutil
import tempfile
import unittest
from fractions import Fraction
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from core.exceptions import ContractViolation, InvalidPeriodError, ProofParamsError, StageMissingError
from core.utils import Instance, Schedule, covers, density, pinwheel_setting, verify_schedule
from fastsolver.utils import FastSolverConfig
from folding.utils import unfold
from proofkit.utils import (
    LISTS_FILE,
    REMOVED_FILE,
    SCHEDULES_FILE,
    ProofParams,
    ProofStage,
    advance_stage,
    build_stage,
    certify,
    classify,
    enumerate_base,
    load_stages,
    locate,
    prove,
    read_instances,
    schedule_via_proof,
    seal,
    stage_dir,
    theta_generator,
    write_instances,
    write_proof,
)
from solver.utils import SolveOutcome, SolverConfig, solve

SLOW = bool(pinwheel_setting("RUN_SLOW_TESTS", False))
PARAMS = ProofParams(m=4, d=Fraction(1, 2), theta_min=12, theta_max=14, budget_ms=5_000)


def foresight(candidate):
    return solve(candidate, SolverConfig(time_limit_ms=5_000))


def minimal_candidate(candidates):
    """A candidate no other candidate covers."""
    for candidate in candidates:
        if not any(other != candidate and covers(other.values, candidate.values) for other in candidates):
            return candidate
    raise AssertionError("covering has no minimal element")


def break_one_schedule(proof: Path, theta: int):
    """Swap two entries of a stored cycle so it stops verifying; returns the affected instance."""
    path = stage_dir(proof, theta) / SCHEDULES_FILE
    lines = path.read_text().splitlines()
    for number, line in enumerate(lines):
        instance_text, _, cycle_text = line.partition("|")
        instance, cycle = Instance.parse(instance_text), list(Schedule.parse(cycle_text).cycle)
        for i in range(len(cycle)):
            for j in range(i + 1, len(cycle)):
                if cycle[i] == cycle[j]:
                    continue
                swapped = cycle[:]
                swapped[i], swapped[j] = swapped[j], swapped[i]
                schedule = Schedule(tuple(swapped))
                if verify_schedule(instance, schedule) is not None:
                    lines[number] = f"{instance.text()}|{schedule.text()}"
                    path.write_text("\n".join(lines) + "\n")
                    seal(proof)
                    return instance
    return None


def triples(result):
    return [(r.property, r.theta, r.instance) for r in result.rejections]


class ProofParamsTests(SimpleTestCase):
    def test_validation(self):
        for kwargs in ({"m": 1, "d": Fraction(1, 2)}, {"m": 4, "d": 1}, {"m": 4, "d": Fraction(1, 2), "theta_min": 13},
                       {"m": 4, "d": Fraction(1, 2), "theta_min": 16, "theta_max": 14},
                       {"m": 12, "d": Fraction(1, 2)}, {"m": 4, "d": Fraction(1, 2), "budget_ms": 0}):
            with self.subTest(kwargs=kwargs), self.assertRaises(ProofParamsError):
                ProofParams(**kwargs)

    def test_thetas(self):
        self.assertEqual(list(PARAMS.thetas), [12, 14])
        self.assertEqual(len(ProofParams(m=4, d=Fraction(84, 100)).thetas), 10)


class EnumerateBaseTests(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(enumerate_base(12, 11, Fraction(84, 100)), [Instance.of([11] * 11)])
        self.assertEqual(enumerate_base(12, 11, Fraction(0)), [Instance.of([11])])

    def test_bad_minimum(self):
        with self.assertRaises(ProofParamsError):
            enumerate_base(12, 12, Fraction(1, 2))

    def test_saturated_candidates_cover_every_instance(self):
        d = Fraction(1, 2)
        exact = enumerate_base(12, 6, d, exact=True)
        saturated = enumerate_base(12, 6, d)
        self.assertTrue(set(saturated) <= set(exact))
        self.assertEqual(exact, sorted(set(exact)))
        for instance in exact:
            self.assertTrue(any(covers(s.values, instance.values) for s in saturated), str(instance))


class ClassifyTests(SimpleTestCase):
    def test_with_injected_solver(self):
        L, R = classify([Instance.of([2, 3, 6]), Instance.of([4, 4, 4, 4])], solver=foresight)
        self.assertEqual(list(L), [Instance.of([4, 4, 4, 4])])
        self.assertTrue(L[Instance.of([4, 4, 4, 4])].verified)
        self.assertEqual(R, (Instance.of([2, 3, 6]),))

    def test_with_fast_solver(self):
        config = FastSolverConfig(time_limit_ms=1_000, per_attempt_ms=500)
        L, R = classify([Instance.of([4, 4, 4, 4]), Instance.of([2, 3, 6])], config, workers=1)
        self.assertIn(Instance.of([4, 4, 4, 4]), L)
        self.assertEqual(R, (Instance.of([2, 3, 6]),))

    def test_empty_advance(self):
        stage = advance_stage(ProofStage(12), PARAMS, solver=foresight)
        self.assertEqual((stage.theta, stage.candidates, stage.L, stage.R), (14, (), {}, ()))

    def test_advance_beyond_theta_max(self):
        with self.assertRaises(ProofParamsError):
            advance_stage(ProofStage(14), PARAMS, solver=foresight)


class ProofArtifactTests(SimpleTestCase):
    """A proof built with the fast solver, and one whose base stage defers a single candidate."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.root = Path(tempfile.mkdtemp(prefix="pinwheel-proof-"))
        cls.clean_dir = cls.root / "clean"
        cls.clean_stages = prove(PARAMS, out_dir=cls.clean_dir)

        base = enumerate_base(PARAMS.theta_min, PARAMS.m, PARAMS.d)
        cls.deferred = minimal_candidate(base)

        def defer_one(candidate):
            if candidate == cls.deferred:
                return SolveOutcome.timeout(0.0)
            return foresight(candidate)

        stage12 = build_stage(12, base, PARAMS, solver=defer_one)
        stage14 = advance_stage(stage12, PARAMS, solver=foresight)
        cls.deferred_stages = [stage12, stage14]
        cls.deferred_dir = write_proof(cls.root / "deferred", PARAMS, cls.deferred_stages)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.root, ignore_errors=True)
        super().tearDownClass()

    def copy_of(self, source: Path) -> Path:
        target = Path(tempfile.mkdtemp(dir=self.root)) / "proof"
        shutil.copytree(source, target)
        return target

    def test_clean_proof_is_accepted(self):
        self.assertEqual([stage.theta for stage in self.clean_stages], [12, 14])
        self.assertFalse(self.clean_stages[-1].R)
        result = certify(self.clean_dir)
        self.assertTrue(result.accepted, result.reasons())
        self.assertTrue(certify(self.clean_dir, PARAMS).accepted)

    def test_parameter_mismatch(self):
        other = ProofParams(m=5, d=Fraction(1, 2), theta_min=12, theta_max=14)
        result = certify(self.clean_dir, other)
        self.assertEqual([r.property for r in result.rejections], ["manifest"])

    def test_deferred_proof_is_accepted(self):
        stage12, stage14 = self.deferred_stages
        self.assertEqual(stage12.R, (self.deferred,))
        self.assertEqual(list(stage14.candidates), unfold([self.deferred], 12, PARAMS.d, PARAMS.m))
        self.assertFalse(stage14.R)
        result = certify(self.deferred_dir)
        self.assertTrue(result.accepted, result.reasons())

    def test_deleted_deferred_instance_is_rejected(self):
        proof = self.copy_of(self.deferred_dir)
        removed = stage_dir(proof, 12) / REMOVED_FILE
        write_instances(removed, [r for r in read_instances(removed) if r != self.deferred])
        seal(proof)
        result = certify(proof)
        self.assertFalse(result.accepted)
        downstream = [("property2", 14, c.text()) for c in unfold([self.deferred], 12, PARAMS.d, PARAMS.m)]
        self.assertEqual(triples(result), [("property1", 12, self.deferred.text())] + downstream)

    def test_unusable_deferred_members_are_rejected(self):
        self.assertFalse(self.clean_stages[0].R)
        for text in ("3,3", "17/2,9"):
            with self.subTest(member=text):
                proof = self.copy_of(self.clean_dir)
                (stage_dir(proof, 12) / REMOVED_FILE).write_text(text + "\n")
                seal(proof)
                result = certify(proof)
                self.assertEqual(triples(result), [("format", 12, text)])

    def test_edit_without_reseal_breaks_digest(self):
        proof = self.copy_of(self.deferred_dir)
        removed = stage_dir(proof, 12) / REMOVED_FILE
        removed.write_text("")
        result = certify(proof)
        self.assertIn("digest", [r.property for r in result.rejections])

    def test_swapped_schedule_is_rejected(self):
        proof = self.copy_of(self.clean_dir)
        instance = break_one_schedule(proof, 12)
        self.assertIsNotNone(instance, "no schedule could be broken by a swap")
        self.assertIn(("property3", 12, instance.text()), triples(certify(proof)))

    def test_missing_manifest(self):
        proof = self.copy_of(self.clean_dir)
        (proof / "manifest").unlink()
        result = certify(proof)
        self.assertEqual([r.property for r in result.rejections], ["files"])

    def test_missing_stage_file(self):
        proof = self.copy_of(self.clean_dir)
        (stage_dir(proof, 14) / LISTS_FILE).unlink()
        seal(proof)
        self.assertIn("files", [r.property for r in certify(proof).rejections])

    def test_schedules_through_the_proof(self):
        params, stages = load_stages(self.clean_dir)
        self.assertEqual(params.thetas, PARAMS.thetas)
        for values in ([4, 8, 16], [5, 5, 30, 40], [6, 7, 13, 13], [9, 9, 9, 9], [4, 6, 50, 50, 50, 50]):
            instance = Instance.of(values)
            self.assertLessEqual(density(instance), PARAMS.d)
            theta = theta_generator(instance, stages, params)
            self.assertIn(theta, (12, 14), str(instance))
            schedule = schedule_via_proof(instance, stages, params)
            self.assertIsNone(verify_schedule(instance, schedule))

    def test_dense_instance_is_not_covered(self):
        params, stages = load_stages(self.clean_dir)
        instance = Instance.of([2, 3, 7])
        self.assertIsNone(theta_generator(instance, stages, params))
        with self.assertRaises(ContractViolation):
            schedule_via_proof(instance, stages, params)
        with self.assertRaises(InvalidPeriodError):
            locate(Instance.of([Fraction(5, 2), 4]), stages, params)

    def test_missing_stage(self):
        params, stages = load_stages(self.clean_dir)
        with self.assertRaises(StageMissingError):
            locate(Instance.of([2, 3, 7]), {12: stages[12]}, params)
        proof = self.copy_of(self.clean_dir)
        shutil.rmtree(stage_dir(proof, 14))
        with self.assertRaises(StageMissingError):
            load_stages(proof)

    def test_certify_command(self):
        out = StringIO()
        call_command("certify", dir=str(self.clean_dir), stdout=out)
        self.assertIn("accept", out.getvalue())
        proof = self.copy_of(self.clean_dir)
        (stage_dir(proof, 12) / REMOVED_FILE).write_text("3,3\n")
        out = StringIO()
        with self.assertRaises(CommandError):
            call_command("certify", dir=str(proof), stdout=out)
        self.assertIn("digest", out.getvalue())
        self.assertIn("format\t12\t3,3", out.getvalue())

    def test_theta_gen_command(self):
        out = StringIO()
        call_command("theta_gen", "4,8,16", dir=str(self.clean_dir), stdout=out)
        self.assertIn(out.getvalue().strip(), ("12", "14"))
        with self.assertRaises(CommandError):
            call_command("theta_gen", "2,3,7", dir=str(self.clean_dir), stdout=StringIO())


class ProofCommandTests(SimpleTestCase):
    def test_enumerate_command(self):
        out = StringIO()
        call_command("enumerate", theta=12, m=11, bound="84/100", stdout=out)
        self.assertEqual(out.getvalue().split(), [",".join(["11"] * 11)])
        with self.assertRaises(CommandError):
            call_command("enumerate", theta=13, m=4, bound="1/2", stdout=StringIO())

    def test_unfold_command(self):
        with tempfile.TemporaryDirectory() as tmp:
            source, target = Path(tmp) / "removed.csv", Path(tmp) / "candidates.csv"
            write_instances(source, [Instance.of([4, 5, 6])])
            call_command("unfold", theta=12, bound="3/4", m=4, source=str(source), out=str(target), stdout=StringIO())
            self.assertEqual(read_instances(target), unfold([Instance.of([4, 5, 6])], 12, Fraction(3, 4), 4))

    def test_prove_command(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = StringIO()
            call_command("prove", out=tmp, m=8, bound="1/2", theta_min=12, theta_max=12, budget_ms=5_000, stdout=out)
            self.assertIn("theta=12", out.getvalue())
            self.assertTrue(certify(tmp).accepted)
        with self.assertRaises(CommandError):
            call_command("prove", out="unused", m=20, bound="1/2", stdout=StringIO())


@unittest.skipUnless(SLOW, "set PINWHEEL_RUN_SLOW_TESTS=1")
class LargeProofTests(SimpleTestCase):
    """Bound 3/4 over theta 12..16: deferrals at theta 12 resolved by theta 16."""

    PARAMS = ProofParams(m=4, d=Fraction(3, 4), theta_min=12, theta_max=16, budget_ms=10_000)

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.root = Path(tempfile.mkdtemp(prefix="pinwheel-proof-"))
        cls.proof_dir = cls.root / "three_quarters"
        cls.stages = prove(cls.PARAMS, out_dir=cls.proof_dir)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.root, ignore_errors=True)
        super().tearDownClass()

    def copy_of(self) -> Path:
        target = Path(tempfile.mkdtemp(dir=self.root)) / "proof"
        shutil.copytree(self.proof_dir, target)
        return target

    def test_three_quarters(self):
        self.assertEqual([stage.theta for stage in self.stages], [12, 14, 16])
        self.assertTrue(self.stages[0].R)
        self.assertFalse(self.stages[-1].R)
        result = certify(self.proof_dir)
        self.assertTrue(result.accepted, result.reasons())

    def test_swapped_schedule_is_rejected(self):
        proof = self.copy_of()
        instance = break_one_schedule(proof, 12)
        self.assertIsNotNone(instance)
        self.assertIn(("property3", 12, instance.text()), triples(certify(proof)))

    def test_deleted_deferred_instance_is_rejected(self):
        params, deferred = self.PARAMS, list(self.stages[0].R)
        picked = None
        for member in deferred:
            rest = [r for r in deferred if r != member]
            if any(covers(other.values, member.values) for other in rest + list(self.stages[0].L)):
                continue
            lost = set(unfold([member], 12, params.d, params.m)) - set(unfold(rest, 12, params.d, params.m))
            if lost:
                picked = member, rest, lost
                break
        self.assertIsNotNone(picked, "every deferred instance shares its preimages with another")
        member, rest, lost = picked
        proof = self.copy_of()
        write_instances(stage_dir(proof, 12) / REMOVED_FILE, rest)
        seal(proof)
        result = certify(proof)
        self.assertFalse(result.accepted)
        for candidate in lost:
            self.assertIn(("property2", 14, candidate.text()), triples(result))

    def test_full_chain(self):
        params = ProofParams(m=4, d=Fraction(84, 100), theta_min=12, theta_max=30, budget_ms=10_000)
        with tempfile.TemporaryDirectory() as tmp:
            stages = prove(params, out_dir=tmp)
            self.assertFalse(stages[-1].R)
            self.assertTrue(certify(tmp).accepted)
