import tempfile
import unittest
from io import StringIO
from pathlib import Path

from django.contrib.auth.models import User
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase
from django.urls import reverse
from rest_framework.test import APITestCase

from core.exceptions import GeneratorConfigError, UnknownSolverError
from core.utils import Instance, density, pinwheel_setting
from harness.models import BenchResult
from harness.utils import (
    CSV_COLUMNS,
    DENSITY_HIGH,
    DENSITY_LOW,
    BenchRecord,
    GenConfig,
    XorShift64Star,
    bench_run,
    gen_density,
    gen_scaling,
    generate,
    read_instance_file,
    read_records,
    speedup,
    summarize,
    time_to_k,
    write_instance_file,
    write_records,
)

SLOW = bool(pinwheel_setting("RUN_SLOW_TESTS", False))


def record(solver, elapsed, outcome="schedulable", max_param=None):
    return BenchRecord("2,4,8,8", solver, outcome, elapsed, seed=1, max_param=max_param)


SAMPLE = [
    record("foresight", 10.0),
    record("foresight", 30.0),
    record("foresight", 50.0, outcome="timeout"),
    record("fast", 3.0),
    record("fast", 1.0),
    record("fast", 2.0),
]


class XorShiftTests(SimpleTestCase):
    def test_reference_value(self):
        self.assertEqual(XorShift64Star(1).next_u64(), 0x47E4CE4B896CDD1D)

    def test_zero_seed(self):
        zero, fixed = XorShift64Star(0), XorShift64Star(XorShift64Star.ZERO_SEED)
        self.assertEqual([zero.next_u64() for _ in range(5)], [fixed.next_u64() for _ in range(5)])

    def test_randint_range(self):
        rng = XorShift64Star(42)
        draws = [rng.randint(3, 7) for _ in range(2000)]
        self.assertEqual(set(draws), {3, 4, 5, 6, 7})
        with self.assertRaises(GeneratorConfigError):
            rng.below(0)


class GeneratorTests(SimpleTestCase):
    def test_density_mode(self):
        instances = gen_density(seed=1, count=3)
        self.assertEqual(len(instances), 3)
        for instance in instances:
            self.assertTrue(10 <= len(instance) <= 15)
            self.assertTrue(all(1 <= v <= 25 for v in instance))
            self.assertTrue(DENSITY_LOW <= density(instance) <= DENSITY_HIGH)

    def test_scaling_mode(self):
        instances = gen_scaling(max_param=30, seed=7, count=5)
        for instance in instances:
            self.assertTrue(10 <= len(instance) <= 20)
            self.assertTrue(all(15 <= v <= 30 for v in instance))
            self.assertTrue(DENSITY_LOW <= density(instance) <= DENSITY_HIGH)

    def test_deterministic(self):
        config = GenConfig("scaling", seed=9, count=4, max_param=24)
        self.assertEqual(generate(config), generate(config))
        self.assertNotEqual(gen_scaling(24, 9, 4), gen_scaling(24, 10, 4))

    def test_bad_configs(self):
        for args in (("uniform", 1, 5), ("density", 1, 0), ("scaling", 1, 5), ("scaling", 1, 5, 5)):
            with self.subTest(args=args), self.assertRaises(GeneratorConfigError):
                GenConfig(*args)


class RecordFileTests(SimpleTestCase):
    def test_round_trip(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bench.csv"
            rows = SAMPLE + [BenchRecord("3,4,4", "fast", "timeout", 12.5)]
            write_records(path, rows)
            self.assertEqual(read_records(path), rows)
            self.assertEqual(path.read_text().splitlines()[0], ",".join(CSV_COLUMNS))

    def test_empty_file_keeps_header(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bench.csv"
            write_records(path, [])
            self.assertEqual(path.read_text().strip(), ",".join(CSV_COLUMNS))
            self.assertEqual(read_records(path), [])

    def test_instance_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "instances.txt"
            instances = [Instance.of([2, 4, 8, 8]), Instance.of([3, 5, 7])]
            write_instance_file(path, instances)
            self.assertEqual(read_instance_file(path), instances)
            write_instance_file(path, [])
            self.assertEqual(read_instance_file(path), [])


class SummaryTests(SimpleTestCase):
    def test_summarize(self):
        summaries = summarize(SAMPLE)
        self.assertEqual(summaries["foresight"].runs, 3)
        self.assertEqual(summaries["foresight"].solved, 2)
        self.assertAlmostEqual(summaries["foresight"].mean_ms, 30.0)
        self.assertAlmostEqual(summaries["fast"].median_ms, 2.0)
        self.assertEqual(summaries["fast"].solved_times, [1.0, 2.0, 3.0])

    def test_time_to_k(self):
        self.assertEqual(time_to_k(SAMPLE, "fast", 2), 2.0)
        self.assertEqual(time_to_k(SAMPLE, "foresight", 2), 30.0)
        self.assertIsNone(time_to_k(SAMPLE, "foresight", 3))
        self.assertIsNone(time_to_k(SAMPLE, "greedy", 1))

    def test_max_param_filter(self):
        rows = [record("fast", 5.0, max_param=30), record("fast", 7.0, max_param=60)]
        self.assertEqual(summarize(rows, max_param=60)["fast"].runs, 1)

    def test_speedup(self):
        self.assertAlmostEqual(speedup(SAMPLE), 15.0)
        self.assertAlmostEqual(speedup(SAMPLE, statistic="mean"), 15.0)
        self.assertIsNone(speedup(SAMPLE[:3]))
        with self.assertRaises(ValueError):
            speedup(SAMPLE, statistic="max")


class BenchRunTests(SimpleTestCase):
    def test_records_in_input_order(self):
        instances = [Instance.of([2, 4, 8, 8]), Instance.of([2, 3, 6])]
        rows = bench_run(instances, ["foresight", "fast"], 2_000, seed=3)
        self.assertEqual([(r.instance, r.solver) for r in rows], [
            ("2,4,8,8", "foresight"), ("2,4,8,8", "fast"), ("2,3,6", "foresight"), ("2,3,6", "fast"),
        ])
        self.assertEqual([r.outcome for r in rows], ["schedulable", "schedulable", "unschedulable", "timeout"])
        self.assertTrue(all(r.seed == 3 and r.elapsed_ms >= 0 for r in rows))

    def test_unknown_solver(self):
        with self.assertRaises(UnknownSolverError):
            bench_run([Instance.of([2, 4])], ["greedy"], 1_000)
        with self.assertRaises(UnknownSolverError):
            bench_run([Instance.of([2, 4])], [], 1_000)

    @unittest.skipUnless(SLOW, "set PINWHEEL_RUN_SLOW_TESTS=1")
    def test_density_race(self):
        instances = gen_density(seed=1, count=50)
        rows = bench_run(instances, ["foresight", "fast"], 60_000, seed=1)
        fast = [r for r in rows if r.solver == "fast"]
        self.assertTrue(all(r.solved for r in fast))
        self.assertGreaterEqual(speedup(rows), 10.0)


@unittest.skipUnless(SLOW, "set PINWHEEL_RUN_SLOW_TESTS=1")
class ScalingRaceTests(SimpleTestCase):
    """Both solvers over 50-instance scaling suites with 10 s budgets."""

    MAX_PARAMS = (16, 20, 24, 28)

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.rows = []
        for max_param in cls.MAX_PARAMS:
            instances = gen_scaling(max_param=max_param, seed=1, count=50)
            cls.rows += bench_run(instances, ["foresight", "fast"], 10_000, seed=1, max_param=max_param)

    def time_to_12(self, solver, max_param):
        found = time_to_k(self.rows, solver, 12, max_param=max_param)
        return float("inf") if found is None else found

    def test_fast_solves_twice_as_many_at_28(self):
        summaries = summarize(self.rows, max_param=28)
        self.assertEqual(summaries["fast"].runs, 50)
        self.assertNotIn("unschedulable", [r.outcome for r in self.rows if r.solver == "fast"])
        self.assertGreaterEqual(summaries["fast"].solved, 2 * summaries["foresight"].solved)

    def test_time_to_twelve_solves_grows_slower_for_fast(self):
        growth = {}
        for solver in ("foresight", "fast"):
            times = [self.time_to_12(solver, max_param) for max_param in self.MAX_PARAMS]
            self.assertEqual(times, sorted(times), solver)
            self.assertLess(times[0], times[-1], solver)
            growth[solver] = times[-1] / times[0]
        self.assertLess(growth["fast"], growth["foresight"], growth)


class HarnessCommandTests(TestCase):
    def test_gen_then_bench(self):
        with tempfile.TemporaryDirectory() as tmp:
            suite = Path(tmp) / "suite.txt"
            call_command("gen", mode="scaling", count=3, seed=5, max_param=24, out=str(suite), stdout=StringIO())
            self.assertEqual(len(read_instance_file(suite)), 3)

            small = Path(tmp) / "small.txt"
            write_instance_file(small, [Instance.of([2, 4, 8, 8]), Instance.of([3, 4, 4, 12])])
            out = StringIO()
            csv_path = Path(tmp) / "bench.csv"
            call_command("bench", instances=str(small), solvers="foresight,fast", timeout_ms=5_000,
                         out=str(csv_path), seed=5, save=True, stdout=out)
            self.assertEqual(len(read_records(csv_path)), 4)
            self.assertEqual(BenchResult.objects.count(), 4)
            self.assertIn("foresight: solved", out.getvalue())

    def test_bad_arguments(self):
        with self.assertRaises(CommandError):
            call_command("gen", mode="scaling", count=3, out="unused.txt", stdout=StringIO())
        with tempfile.TemporaryDirectory() as tmp:
            small = Path(tmp) / "small.txt"
            write_instance_file(small, [Instance.of([2, 4])])
            with self.assertRaises(CommandError):
                call_command("bench", instances=str(small), solvers="greedy", out=str(Path(tmp) / "x.csv"),
                             stdout=StringIO())


class BenchResultApiTests(APITestCase):
    def setUp(self):
        self.user = User.objects.create_user(username="analyst", password="analyst123")
        self.client.force_authenticate(user=self.user)
        BenchResult.objects.create(instance="2,4,8,8", solver="fast", outcome="schedulable", elapsed_ms=3.0, max_param=30)
        BenchResult.objects.create(instance="2,3,6", solver="foresight", outcome="unschedulable", elapsed_ms=1.0, max_param=60)

    def test_list_and_filters(self):
        response = self.client.get(reverse("bench_results"))
        self.assertEqual(response.status_code, 200)
        self.assertEqual(len(response.data), 2)
        response = self.client.get(reverse("bench_results"), {"solver": "fast"})
        self.assertEqual([row["instance"] for row in response.data], ["2,4,8,8"])
        self.assertTrue(response.data[0]["solved"])
        response = self.client.get(reverse("bench_results"), {"max_param": "60"})
        self.assertEqual([row["solver"] for row in response.data], ["foresight"])

    def test_requires_authentication(self):
        self.client.force_authenticate(user=None)
        self.assertEqual(self.client.get(reverse("bench_results")).status_code, 401)
