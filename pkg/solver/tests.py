import tempfile
import unittest
from bisect import bisect_left, bisect_right
from fractions import Fraction
from io import StringIO
from itertools import combinations_with_replacement, product
from pathlib import Path

from django.contrib.auth.models import User
from django.core.management import call_command
from django.test import SimpleTestCase
from django.urls import reverse
from rest_framework.test import APITestCase

from core.exceptions import SolverConfigError
from core.utils import IDLE, Instance, Schedule, pinwheel_setting, verify_schedule
from solver.models import SolveRun
from solver.utils import (
    JobState,
    OutcomeStatus,
    SolverConfig,
    brute_force_schedulable,
    check_fractional,
    solve,
    unschedulable_family,
)

SLOW = bool(pinwheel_setting("RUN_SLOW_TESTS", False))


def periodic_times(gaps, repeats=3):
    times, t = [0], 0
    for gap in list(gaps) * repeats:
        t += gap
        times.append(t)
    return times


def single_job_cycle(gaps):
    cycle = [IDLE] * sum(gaps)
    t = 0
    for gap in gaps:
        cycle[t] = 1
        t += gap
    return tuple(cycle)


def newly_violated(times, t, r):
    """Some window of the pattern times + [t] that ends after times[-1] holds fewer than floor(a/r) occurrences."""
    occurrences = times + [t]
    for end in range(times[-1] + 1, t + 1):
        for start in range(0, end + 1):
            count = bisect_right(occurrences, end) - bisect_left(occurrences, start)
            if count < (end - start + 1) // r:
                return True
    return False


class CheckFractionalTests(SimpleTestCase):
    def test_half(self):
        r = Fraction(5, 2)
        self.assertFalse(check_fractional(r, [0, 3], 6))
        self.assertTrue(check_fractional(r, [0, 3], 5))
        self.assertTrue(check_fractional(r, [0], 3))
        self.assertTrue(check_fractional(r, [], 0))
        self.assertFalse(check_fractional(Fraction(15, 2), [0, 8], 16))
        self.assertTrue(check_fractional(Fraction(15, 2), [0, 7], 15))

    def test_thirds(self):
        # 7/3: a ceiling gap may not follow a ceiling gap within the last two
        self.assertFalse(check_fractional(Fraction(7, 3), [0, 3, 5], 8))
        self.assertTrue(check_fractional(Fraction(7, 3), [0, 2, 4], 7))
        # 8/3: three ceiling gaps in a row are forbidden, two are fine
        self.assertFalse(check_fractional(Fraction(8, 3), [0, 3, 6], 9))
        self.assertTrue(check_fractional(Fraction(8, 3), [0, 2, 5], 8))
        self.assertFalse(check_fractional(Fraction(13, 3), [0, 5, 8], 13))
        self.assertFalse(check_fractional(Fraction(17, 3), [0, 6, 12], 18))
        self.assertTrue(check_fractional(Fraction(17, 3), [0, 6, 11], 17))

    def test_job_state_form(self):
        r = Fraction(5, 2)
        self.assertFalse(check_fractional(r, JobState(elapsed=2, flags=(True,))))
        self.assertTrue(check_fractional(r, JobState(elapsed=1, flags=(True,))))
        self.assertTrue(check_fractional(r, JobState(elapsed=2, flags=(False,))))

    def test_integer_period_is_rejected(self):
        with self.assertRaises(SolverConfigError):
            check_fractional(Fraction(4), [0], 4)

    def _compare_with_verifier(self, max_numerator, max_length):
        """
        Every gap pattern up to max_length: accepted patterns give valid periodic schedules.
        For halves and p/3 with p = 2 (mod 3) the check is exact; p = 1 (mod 3) may refuse
        a few valid patterns.
        """
        periods = sorted({Fraction(p, q) for q in (2, 3) for p in range(q + 1, max_numerator + 1) if p % q})
        for r in periods:
            exact = r.denominator == 2 or r.numerator % 3 == 2
            ceiling = -(-r.numerator // r.denominator)
            for length in range(1, max_length + 1):
                for gaps in product(range(1, ceiling + 1), repeat=length):
                    times = periodic_times(gaps)
                    accepted = all(check_fractional(r, times[:i], times[i]) for i in range(1, len(times)))
                    valid = verify_schedule(Instance.of([r]), Schedule(single_job_cycle(gaps))) is None
                    if accepted:
                        self.assertTrue(valid, f"{r} accepted invalid gaps {gaps}")
                    if exact:
                        self.assertEqual(accepted, valid, f"{r} gaps {gaps}")

    def test_against_exact_verification(self):
        self._compare_with_verifier(max_numerator=11, max_length=4)

    @unittest.skipUnless(SLOW, "set PINWHEEL_RUN_SLOW_TESTS=1")
    def test_against_exact_verification_wide(self):
        self._compare_with_verifier(max_numerator=20, max_length=5)

    def _compare_with_window_oracle(self, max_length):
        """
        Extend every window-valid occurrence pattern (first occurrence on day 0, all days
        below max_length) by one more occurrence and compare the checker with the windows.
        Only p/3 with p = 1 (mod 3) may refuse an extension the windows allow.
        """
        periods = sorted({Fraction(p, q) for q in (2, 3) for p in range(q + 1, 21) if p % q})
        for r in periods:
            exact = r.denominator == 2 or r.numerator % 3 == 2
            ceiling = -(-r.numerator // r.denominator)
            stack = [[0]]
            while stack:
                times = stack.pop()
                for t in range(times[-1] + 1, min(times[-1] + ceiling, max_length - 1) + 1):
                    accepted = check_fractional(r, times, t)
                    valid = not newly_violated(times, t, r)
                    if accepted:
                        self.assertTrue(valid, f"{r} accepted {times} + {t}")
                    elif exact:
                        self.assertFalse(valid, f"{r} refused {times} + {t}")
                    else:
                        # the refused gap is a ceiling gap after a ceiling gap within the last two
                        self.assertEqual(t - times[-1], ceiling, f"{r} refused {times} + {t}")
                    if valid:
                        stack.append(times + [t])

    def test_against_window_oracle(self):
        self._compare_with_window_oracle(max_length=10)

    @unittest.skipUnless(SLOW, "set PINWHEEL_RUN_SLOW_TESTS=1")
    def test_against_window_oracle_full(self):
        self._compare_with_window_oracle(max_length=14)


class SolveTests(SimpleTestCase):
    def assertSchedulable(self, instance):
        outcome = solve(instance, SolverConfig(time_limit_ms=10_000))
        self.assertEqual(outcome.status, OutcomeStatus.SCHEDULABLE, str(instance))
        self.assertTrue(outcome.schedule.verified)
        self.assertIsNone(verify_schedule(instance, outcome.schedule))
        return outcome

    def assertUnschedulable(self, instance, complete=True):
        outcome = solve(instance, SolverConfig(time_limit_ms=30_000, complete=complete))
        self.assertEqual(outcome.status, OutcomeStatus.UNSCHEDULABLE, str(instance))
        self.assertIsNone(outcome.schedule)

    def test_examples(self):
        self.assertSchedulable(Instance.of([4, 4, 4, 4]))
        self.assertSchedulable(Instance.of([2, 4, 8, 8]))
        self.assertSchedulable(Instance.of([Fraction(3, 2), 3]))
        self.assertSchedulable(Instance.of([Fraction(5, 2), Fraction(5, 2)]))
        self.assertUnschedulable(Instance.of([2, 3, 6]))

    def test_empty_instance(self):
        outcome = solve(Instance(), SolverConfig(time_limit_ms=100))
        self.assertTrue(outcome.is_schedulable)
        self.assertEqual(outcome.schedule.cycle, (IDLE,))
        self.assertIsNone(verify_schedule(Instance(), outcome.schedule))

    def test_zero_time_limit(self):
        with self.assertRaises(SolverConfigError):
            SolverConfig(time_limit_ms=0)

    def test_unschedulable_families(self):
        for x in range(2, 21):
            with self.subTest(x=x):
                self.assertUnschedulable(Instance.of([2, 3, x]))
                self.assertUnschedulable(Instance.of([3, 4, 4, x]))
        for m in (2, 3, 4):
            with self.subTest(m=m):
                self.assertUnschedulable(unschedulable_family(m, 50))
        self.assertUnschedulable(unschedulable_family(3, 50), complete=False)

    def test_agrees_with_brute_force(self):
        for n in (1, 2, 3):
            for periods in combinations_with_replacement(range(1, 7), n):
                instance = Instance.of(periods)
                outcome = solve(instance, SolverConfig(time_limit_ms=10_000))
                self.assertNotEqual(outcome.status, OutcomeStatus.TIMEOUT, str(instance))
                self.assertEqual(outcome.is_schedulable, brute_force_schedulable(instance), str(instance))

    def test_brute_force_rejects_fractions(self):
        with self.assertRaises(SolverConfigError):
            brute_force_schedulable(Instance.of([Fraction(5, 2)]))


class SolveCommandTests(SimpleTestCase):
    def run_command(self, *args, **options):
        out = StringIO()
        with self.assertRaises(SystemExit) as raised:
            call_command("solve", *args, stdout=out, stderr=StringIO(), **options)
        return raised.exception.code, out.getvalue()

    def test_exit_codes(self):
        code, output = self.run_command("2,4,8")
        self.assertEqual(code, 0)
        self.assertTrue(output.startswith("schedulable"))
        self.assertEqual(self.run_command("2,3,5")[0], 1)
        self.assertEqual(self.run_command("5/4")[0], 3)
        self.assertEqual(self.run_command("4,4,4,4", solver="fast", timeout_ms=10_000)[0], 0)

    def test_emit_schedule(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = Path(tmp) / "cycle.txt"
            code, _ = self.run_command("2,4,4", emit_schedule=str(target))
            self.assertEqual(code, 0)
            schedule = Schedule.parse(target.read_text().strip())
            self.assertIsNone(verify_schedule(Instance.of([2, 4, 4]), schedule))


class SolverApiTests(APITestCase):
    def setUp(self):
        self.user = User.objects.create_user(username="planner", password="planner123")
        self.client.force_authenticate(user=self.user)

    def test_solve(self):
        response = self.client.post(reverse("solver_solve"), {"instance": "2,4,8", "solver": "foresight"}, format="json")
        self.assertEqual(response.status_code, 200)
        self.assertIn("result", response.data)
        self.assertEqual(response.data["result"]["outcome"], "schedulable")
        self.assertEqual(SolveRun.objects.count(), 1)
        run = SolveRun.objects.get()
        self.assertIsNone(verify_schedule(Instance.parse(run.instance), Schedule.parse(run.schedule)))

    def test_fast_solver_needs_integers(self):
        response = self.client.post(reverse("solver_solve"), {"instance": "3/2,5", "solver": "fast"}, format="json")
        self.assertEqual(response.status_code, 400)
        self.assertEqual(SolveRun.objects.count(), 0)

    def test_bad_instance(self):
        response = self.client.post(reverse("solver_solve"), {"instance": "5/4"}, format="json")
        self.assertEqual(response.status_code, 400)

    def test_usage(self):
        response = self.client.get(reverse("solver_solve"))
        self.assertEqual(response.status_code, 200)
        self.assertIn("usage", response.data)

    def test_requires_authentication(self):
        self.client.force_authenticate(user=None)
        response = self.client.post(reverse("solver_solve"), {"instance": "2,4,8"}, format="json")
        self.assertEqual(response.status_code, 401)

    def test_verify(self):
        url = reverse("solver_verify")
        response = self.client.post(url, {"instance": "2,4,4", "schedule": "1,2,1,3"}, format="json")
        self.assertEqual(response.data, {"valid": True})
        response = self.client.post(url, {"instance": "2,4,4", "schedule": "1,2,3,1"}, format="json")
        self.assertFalse(response.data["valid"])
        self.assertEqual(response.data["violation"]["job"], 1)
        response = self.client.post(url, {"instance": "2,4", "schedule": "1,3"}, format="json")
        self.assertEqual(response.status_code, 400)

    def test_runs_filter(self):
        SolveRun.objects.create(instance="2,3,5", solver="foresight", outcome="unschedulable")
        SolveRun.objects.create(instance="2,4,8", solver="foresight", outcome="schedulable", schedule="1,2,1,3,1,2,1,0")
        response = self.client.get(reverse("solver_runs"), {"outcome": "schedulable"})
        self.assertEqual(response.status_code, 200)
        self.assertEqual([row["instance"] for row in response.data], ["2,4,8"])
        self.assertEqual(response.data[0]["cycle_length"], 8)
        SolveRun.objects.create(instance="4,4,4,4", solver="fast", outcome="schedulable", schedule="1,2,3,4")
        response = self.client.get(reverse("solver_runs"), {"solver": "fast"})
        self.assertEqual([row["instance"] for row in response.data], ["4,4,4,4"])
        response = self.client.get(reverse("solver_runs"), {"outcome": "schedulable", "solver": "foresight"})
        self.assertEqual([row["instance"] for row in response.data], ["2,4,8"])
