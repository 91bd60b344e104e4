import random
import unittest
from fractions import Fraction

from django.test import SimpleTestCase
from hypothesis import given, settings as hsettings, strategies as st

from core.exceptions import FoldError, LiftError, PartitionError
from core.utils import (
    IDLE,
    Instance,
    Schedule,
    covers,
    density,
    dprime,
    mark_verified,
    pinwheel_setting,
    verify_schedule,
)
from fastsolver.utils import enumerate_partitions
from folding.utils import (
    Partition,
    ffold,
    ffold_monotonicity_failures,
    ffold_with_trace,
    fold,
    fold_by_partition,
    identity_trace,
    lift_schedule,
    partition_filter,
    unfold,
    unfold_member,
)
from proofkit.utils import enumerate_base
from solver.utils import SolverConfig, solve

SLOW = bool(pinwheel_setting("RUN_SLOW_TESTS", False))

R16_MEMBER = Instance.of([5, 7, 8, 8, 11, 15, 15, 15, 15])
UNFOLDED_1 = Instance.of([5, 7, 11, 15, 15, 15, 16, 17, 17, 17, 17])
UNFOLDED_2 = Instance.of([5, 7, 11, 15, 15, 15, 17, 17, 17, 17, 17])
SEVENTEEN = Instance.of([14, 14, 14, 14, 15, 18, 18, 19, 20, 22, 22, 23, 23, 23, 24, 25, 27])
SEVENTEEN_PARTITION = Partition.of([[0, 1], [2, 3], [5, 6], [9, 10], [14, 15, 16]])
SEVENTEEN_FOLDED = Instance.of([7, 7, 8, 9, 11, 15, 19, 20, 23, 23, 23])


class FoldTests(SimpleTestCase):
    def test_fold_pairs_then_stops(self):
        folded, trace = fold(UNFOLDED_1, 16)
        self.assertEqual(folded, Instance.of([5, 7, Fraction(17, 2), Fraction(17, 2), 11, 15, 15, 15, 16]))
        self.assertEqual(trace.to_lines(), ["pair:17,17->17/2", "pair:17,17->17/2"])

    def test_fold_odd_element_is_theta_replaced(self):
        folded, trace = fold(UNFOLDED_2, 16)
        self.assertEqual(folded, Instance.of([5, 7, Fraction(17, 2), Fraction(17, 2), 11, 15, 15, 15, 16]))
        self.assertIn("theta-replace:17->16", trace.to_lines())

    def test_fold_is_identity_below_theta(self):
        instance = Instance.of([4, 5, 6])
        folded, trace = fold(instance, 12)
        self.assertEqual(folded, instance)
        self.assertEqual(trace.steps, ())

    def test_fold_errors(self):
        with self.assertRaises(FoldError):
            fold(Instance(), 12)
        with self.assertRaises(FoldError):
            fold(Instance.of([4]), 13)

    def test_ffold_examples(self):
        self.assertEqual(ffold(UNFOLDED_1, 16), R16_MEMBER)
        self.assertEqual(ffold(UNFOLDED_2, 16), R16_MEMBER)
        self.assertEqual(ffold(Instance.of([4, 5, 6]), 12), Instance.of([4, 5, 6]))
        self.assertEqual(ffold(Instance.of([5, 6, 7, 30]), 12), Instance.of([5, 6, 7, 11]))

    def test_fold_facts_on_random_corpus(self):
        rng = random.Random(7)
        trials = int(pinwheel_setting("PROPERTY_TRIALS", 10_000))
        for _ in range(trials):
            instance = Instance.of(rng.randint(1, 80) for _ in range(rng.randint(1, 10)))
            theta = rng.choice(range(12, 31, 2))
            folded, trace = fold(instance, theta)
            self.assertLessEqual(max(folded), theta)
            self.assertLessEqual(density(folded), density(instance) + Fraction(1, theta))
            self.assertEqual(trace.replay(), folded)
            self.assertEqual(trace.terminal_positions(), list(range(len(instance))))
            integral = ffold(instance, theta)
            self.assertTrue(integral.is_integral)
            self.assertLessEqual(max(integral), theta - 1)
            self.assertLessEqual(dprime(integral, theta), density(folded))

    def test_ffold_trace_replays(self):
        folded, trace = ffold_with_trace(UNFOLDED_2, 16)
        self.assertEqual(trace.replay(), folded)
        self.assertIn("ffold:17/2->8", trace.to_lines())
        self.assertIn("ffold:16->15", trace.to_lines())

    def test_pair_folding_can_break_domination(self):
        cover, target = Instance.of([12, 13]), Instance.of([13, 13])
        self.assertEqual(ffold(cover, 12), Instance.of([11, 11]))
        self.assertEqual(ffold(target, 12), Instance.of([6]))
        self.assertEqual(ffold_monotonicity_failures([(cover, target)], 12), [(cover, target)])

    @hsettings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(min_value=4, max_value=11), min_size=1, max_size=8))
    def test_monotone_when_nothing_folds(self, values):
        target = Instance.of(values)
        cover = Instance.of(max(4, v - 1) for v in target)
        self.assertEqual(ffold_monotonicity_failures([(cover, target)], 12), [])


class PartitionTests(SimpleTestCase):
    def test_filter(self):
        self.assertTrue(partition_filter(SEVENTEEN.values, (0, 1)))
        self.assertFalse(partition_filter(SEVENTEEN.values, (14, 15, 16)))
        self.assertTrue(partition_filter(SEVENTEEN.values, (14, 15, 16), relaxed=True))
        self.assertFalse(partition_filter(SEVENTEEN.values, (0, 1, 2, 3)))
        self.assertTrue(partition_filter((25, 25, 25, 25, 25), (0, 1, 2, 3, 4)))

    def test_worked_partition_needs_relaxed_filter(self):
        with self.assertRaises(PartitionError):
            fold_by_partition(SEVENTEEN, SEVENTEEN_PARTITION, relaxed=False)
        folded, trace = fold_by_partition(SEVENTEEN, SEVENTEEN_PARTITION, relaxed=True)
        self.assertEqual(folded, SEVENTEEN_FOLDED)
        self.assertEqual(trace.replay(), folded)

    def test_small_partitions(self):
        folded, trace = fold_by_partition(Instance.of([15, 15]), Partition.of([[0, 1]]))
        self.assertEqual(folded, Instance.of([Fraction(15, 2)]))
        self.assertEqual(trace.to_lines(), ["group:0,1->0"])
        folded, _ = fold_by_partition(Instance.of([25] * 5), Partition.of([[0, 1, 2, 3, 4]]))
        self.assertEqual(folded, Instance.of([5]))

    def test_invalid_partitions(self):
        instance = Instance.of([4, 5, 6, 7])
        for groups in ([[0, 1, 2, 3]], [[1, 0]], [[0, 1], [1, 2]], [[0, 9]], [[0, 3]]):
            with self.subTest(groups=groups), self.assertRaises(PartitionError):
                fold_by_partition(instance, Partition.of(groups), relaxed=False)
        with self.assertRaises(PartitionError):
            fold_by_partition(Instance.of([1, 2]), Partition.of([[0, 1]]))


class UnfoldTests(SimpleTestCase):
    def test_worked_unfoldings_are_covered(self):
        outputs = unfold([R16_MEMBER], 16, Fraction(84, 100), 4)
        self.assertIn(UNFOLDED_1, outputs)
        for expected in (UNFOLDED_1, UNFOLDED_2):
            self.assertTrue(any(covers(u.values, expected.values) for u in outputs))

    def test_half_expands_to_pair(self):
        outputs = unfold([Instance.of([4, 5, 6])], 12, Fraction(3, 4), 4)
        self.assertIn(Instance.of([4, 5, 6]), outputs)
        self.assertIn(Instance.of([4, 5, 13, 13]), outputs)

    def test_empty_set(self):
        self.assertEqual(unfold([], 12, Fraction(3, 4), 4), [])

    def test_member_out_of_range(self):
        with self.assertRaises(FoldError):
            unfold([Instance.of([3, 5])], 12, Fraction(3, 4), 4)
        with self.assertRaises(FoldError):
            unfold([Instance.of([5, 12])], 12, Fraction(3, 4), 4)

    def test_outputs_are_sound(self):
        bound = Fraction(3, 4)
        members = enumerate_base(12, 6, Fraction(1, 2))
        outputs = unfold(members, 12, bound, 6)
        self.assertEqual(outputs, sorted(set(outputs)))
        member_set = set(members)
        for candidate in outputs:
            self.assertIn(ffold(candidate, 12), member_set)
            self.assertLessEqual(dprime(candidate, 14), bound + Fraction(1, 14))
            self.assertTrue(all(6 <= v <= 13 for v in candidate))

    def _check_completeness(self, m):
        bound = Fraction(3, 4)
        cache = {}
        for instance in enumerate_base(14, m, bound, exact=True):
            image = ffold(instance, 12)
            if image not in cache:
                cache[image] = unfold_member(image, 12, bound, m)
            self.assertTrue(
                any(covers(u.values, instance.values) for u in cache[image]),
                f"{instance} (ffold {image}) is not covered by {cache[image]}",
            )

    def test_completeness_against_brute_force(self):
        self._check_completeness(m=6)

    @unittest.skipUnless(SLOW, "set PINWHEEL_RUN_SLOW_TESTS=1")
    def test_completeness_against_brute_force_full(self):
        self._check_completeness(m=4)


class LiftTests(SimpleTestCase):
    def test_identity_trace(self):
        instance = Instance.of([2, 4, 4])
        schedule = mark_verified(instance, Schedule((1, 2, 1, 3)))
        lifted = lift_schedule(schedule, identity_trace(instance), instance)
        self.assertEqual(lifted.cycle, schedule.cycle)
        self.assertTrue(lifted.verified)

    def test_pair_lift(self):
        original = Instance.of([15, 15])
        folded, trace = fold_by_partition(original, Partition.of([[0, 1]]))
        cycle = tuple(1 if day in (0, 7) else IDLE for day in range(15))
        self.assertIsNone(verify_schedule(folded, Schedule(cycle)))
        lifted = lift_schedule(Schedule(cycle), trace, original)
        self.assertIsNone(verify_schedule(original, lifted))
        self.assertEqual(sorted(lifted.occurrences(1) + lifted.occurrences(2)), [0, 7])

    def test_bad_schedule_is_an_internal_error(self):
        original = Instance.of([15, 15])
        _, trace = fold_by_partition(original, Partition.of([[0, 1]]))
        with self.assertRaises(LiftError):
            lift_schedule(Schedule((1,) + (IDLE,) * 19), trace, original)

    def _random_sparse(self, rng):
        while True:
            instance = Instance.of(rng.randint(2, 24) for _ in range(rng.randint(1, 7)))
            if density(instance) <= Fraction(7, 10):
                return instance

    def test_random_pipelines_lift(self):
        rng = random.Random(11)
        lifted = attempts = 0
        while lifted < 1000 and attempts < 4000:
            attempts += 1
            instance = self._random_sparse(rng)
            kind = attempts % 3
            if kind == 0:
                folded, trace = ffold_with_trace(instance, 12)
            elif kind == 1:
                folded, trace = fold(instance, 12)
            else:
                partition = rng.choice(enumerate_partitions(instance, cap=64, relaxed=False))
                folded, trace = fold_by_partition(instance, partition, relaxed=False)
            outcome = solve(folded, SolverConfig(time_limit_ms=2000))
            if not outcome.is_schedulable:
                continue
            schedule = lift_schedule(outcome.schedule, trace, instance)
            self.assertIsNone(verify_schedule(instance, schedule))
            lifted += 1
        self.assertEqual(lifted, 1000)

    @unittest.skipUnless(SLOW, "set PINWHEEL_RUN_SLOW_TESTS=1")
    def test_worked_example_lifts(self):
        folded, trace = fold_by_partition(SEVENTEEN, SEVENTEEN_PARTITION, relaxed=True)
        outcome = solve(folded, SolverConfig(time_limit_ms=3_600_000))
        self.assertTrue(outcome.is_schedulable)
        lifted = lift_schedule(outcome.schedule, trace, SEVENTEEN)
        self.assertIsNone(verify_schedule(SEVENTEEN, lifted))
