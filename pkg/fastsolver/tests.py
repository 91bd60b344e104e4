import random
from fractions import Fraction
from itertools import combinations_with_replacement

from django.test import SimpleTestCase
from hypothesis import given, settings as hsettings, strategies as st

from core.exceptions import SolverConfigError, UnknownSolverError
from core.utils import Instance, density, verify_schedule
from fastsolver.utils import (
    FastSolverConfig,
    enumerate_partitions,
    fast_solve,
    rank_partitions,
    run_solver,
    score_partition,
)
from folding.utils import Partition, fold_by_partition
from solver.utils import OutcomeStatus, brute_force_schedulable


class EnumeratePartitionsTests(SimpleTestCase):
    def test_small_example(self):
        found = enumerate_partitions(Instance.of([4, 5, 6]), relaxed=False)
        self.assertEqual([p.text() for p in found], ["[]", "[[1,2]]", "[[0,1]]", "[[0,2]]"])

    def test_equal_values_are_not_repeated(self):
        found = enumerate_partitions(Instance.of([4, 4, 4]), relaxed=False)
        self.assertEqual([p.text() for p in found], ["[]", "[[0,1]]", "[[0,1,2]]"])

    def test_cap(self):
        self.assertEqual(len(enumerate_partitions(Instance.of([4, 5, 6]), cap=2, relaxed=False)), 2)

    def test_groups_below_one_are_skipped(self):
        found = enumerate_partitions(Instance.of([1, 2]), relaxed=False)
        self.assertEqual([p.text() for p in found], ["[]"])

    def test_fractional_input_is_rejected(self):
        with self.assertRaises(SolverConfigError):
            enumerate_partitions(Instance.of([Fraction(5, 2), 4]))

    @hsettings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(min_value=2, max_value=30), min_size=1, max_size=7))
    def test_every_partition_is_valid(self, values):
        instance = Instance.of(values)
        found = enumerate_partitions(instance, relaxed=False)
        self.assertEqual(found[0], Partition())
        self.assertEqual(len(found), len(set(found)))
        for partition in found:
            folded, trace = fold_by_partition(instance, partition, relaxed=False)
            self.assertEqual(trace.terminal_positions(), list(range(len(instance))))
            self.assertEqual(len(folded), len(instance) - sum(len(g) - 1 for g in partition.groups))


class ScoreTests(SimpleTestCase):
    def test_baseline_score(self):
        scored = score_partition(Instance.of([4, 5, 6]), Partition())
        self.assertEqual(scored.density, float(Fraction(37, 60)))
        # sqrt(120) / (0.95 - 37/60)^2
        self.assertAlmostEqual(scored.score, 98.590, places=2)

    def test_density_cap(self):
        self.assertIsNone(score_partition(Instance.of([2, 3, 6]), Partition()))
        self.assertIsNone(score_partition(Instance.of([4, 5, 6]), Partition(), density_cap=0.6))

    def test_ranking(self):
        instance = Instance.of([4, 5, 6])
        ranked = rank_partitions(instance, enumerate_partitions(instance, relaxed=False))
        self.assertEqual([s.partition.text() for s in ranked], ["[[1,2]]", "[[0,1]]", "[[0,2]]", "[]"])
        scores = [s.score for s in ranked]
        self.assertEqual(scores, sorted(scores))
        self.assertTrue(all(s > 0 for s in scores))


class FastSolveTests(SimpleTestCase):
    def config(self, **overrides):
        options = {"time_limit_ms": 10_000, "per_attempt_ms": 5_000}
        options.update(overrides)
        return FastSolverConfig(**options)

    def test_examples(self):
        for values in ([4, 4, 4, 4], [2, 4, 8, 8], [4, 5, 6]):
            instance = Instance.of(values)
            outcome = fast_solve(instance, self.config())
            self.assertEqual(outcome.status, OutcomeStatus.SCHEDULABLE, str(instance))
            self.assertTrue(outcome.schedule.verified)
            self.assertIsNone(verify_schedule(instance, outcome.schedule))

    def test_never_reports_unschedulable(self):
        outcome = fast_solve(Instance.of([2, 3, 6]), self.config(time_limit_ms=2_000, per_attempt_ms=1_000))
        self.assertEqual(outcome.status, OutcomeStatus.TIMEOUT)
        self.assertIsNone(outcome.schedule)

    def test_empty_instance(self):
        self.assertTrue(fast_solve(Instance(), self.config()).is_schedulable)

    def test_bad_input(self):
        with self.assertRaises(SolverConfigError):
            fast_solve(Instance.of([Fraction(5, 2)]), self.config())
        with self.assertRaises(SolverConfigError):
            FastSolverConfig(time_limit_ms=0)

    def test_baseline_only_matches_brute_force(self):
        for n in (1, 2, 3):
            for periods in combinations_with_replacement(range(2, 7), n):
                instance = Instance.of(periods)
                outcome = fast_solve(instance, self.config(partitions=(Partition(),)))
                expected = OutcomeStatus.SCHEDULABLE if brute_force_schedulable(instance) else OutcomeStatus.TIMEOUT
                self.assertEqual(outcome.status, expected, str(instance))

    def test_random_corpus(self):
        rng = random.Random(3)
        for _ in range(60):
            instance = Instance.of(rng.randint(3, 30) for _ in range(rng.randint(2, 8)))
            if density(instance) > Fraction(4, 5):
                continue
            outcome = fast_solve(instance, self.config(time_limit_ms=5_000, per_attempt_ms=2_000))
            self.assertNotEqual(outcome.status, OutcomeStatus.UNSCHEDULABLE)
            if outcome.is_schedulable:
                self.assertIsNone(verify_schedule(instance, outcome.schedule))

    def test_parallel_attempts(self):
        instance = Instance.of([4, 5, 6, 12, 12])
        outcome = fast_solve(instance, self.config(workers=2))
        self.assertTrue(outcome.is_schedulable)
        self.assertIsNone(verify_schedule(instance, outcome.schedule))


class RunSolverTests(SimpleTestCase):
    def test_dispatch(self):
        instance = Instance.of([2, 4, 8, 8])
        self.assertTrue(run_solver("foresight", instance, time_limit_ms=5_000).is_schedulable)
        self.assertTrue(run_solver("fast", instance, time_limit_ms=5_000, per_attempt_ms=2_000).is_schedulable)

    def test_unknown_name(self):
        with self.assertRaises(UnknownSolverError):
            run_solver("greedy", Instance.of([2, 4]))
