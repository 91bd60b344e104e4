from fractions import Fraction

from django.test import SimpleTestCase
from hypothesis import given, settings as hsettings, strategies as st

from core.exceptions import InstanceParseError, InvalidPeriodError, MalformedScheduleError
from core.utils import (
    IDLE,
    Instance,
    Period,
    Schedule,
    density,
    dominates,
    dprime,
    empty_schedule,
    gap_check,
    lcm_of_periods,
    mark_verified,
    transfer_schedule,
    verify_schedule,
)


def window_oracle(r: Fraction, cycle: tuple) -> bool:
    """Brute force: every window of every length up to (p+2)L holds >= floor(a/r) occurrences."""
    length = len(cycle)
    horizon = (r.numerator + 2) * length
    stream = [token == 1 for token in cycle] * (horizon // length + 2)
    for a in range(1, horizon + 1):
        need = (a * r.denominator) // r.numerator
        for start in range(length):
            if sum(stream[start:start + a]) < need:
                return False
    return True


class PeriodAndInstanceTests(SimpleTestCase):
    def test_period_is_canonical(self):
        self.assertEqual(Period.of(4, 2).value, 2)
        self.assertTrue(Period.of(4, 2).is_integer)
        self.assertEqual(str(Period.of(17, 2)), "17/2")
        self.assertEqual(Period.of(13, 3).ceil, 5)

    def test_period_rejects_bad_values(self):
        with self.assertRaises(InvalidPeriodError):
            Period.of(5, 4)
        with self.assertRaises(InvalidPeriodError):
            Period.of(1, 2)
        with self.assertRaises(InvalidPeriodError):
            Period.of(3, 0)

    def test_parse_canonicalizes(self):
        instance = Instance.parse("9, 17/2, 5,7")
        self.assertEqual(instance.text(), "5,7,17/2,9")
        self.assertEqual(instance, Instance.of([5, 7, Fraction(17, 2), 9]))
        self.assertEqual(Instance.parse(""), Instance())

    def test_parse_errors(self):
        for text in ("5/4", "0", "a,b", "3,,4"):
            with self.subTest(text=text), self.assertRaises(InstanceParseError):
                Instance.parse(text)

    def test_integral_values_are_ints(self):
        instance = Instance.of([Fraction(8, 2), 6])
        self.assertTrue(instance.is_integral)
        self.assertIsInstance(instance[0], int)


class DensityTests(SimpleTestCase):
    def test_density_examples(self):
        self.assertEqual(density(Instance.of([2, 3, 6])), 1)
        self.assertEqual(density(Instance.of([4, 5, 5, 5])), Fraction(17, 20))
        self.assertEqual(density(Instance()), 0)

    def test_folded_example_density_is_exact(self):
        folded = Instance.of([7, 7, 8, 9, 11, 15, 19, 20, 23, 23, 23])
        expected = (Fraction(2, 7) + Fraction(1, 8) + Fraction(1, 9) + Fraction(1, 11) + Fraction(1, 15)
                    + Fraction(1, 19) + Fraction(1, 20) + Fraction(3, 23))
        self.assertEqual(folded.density(), expected)
        self.assertAlmostEqual(float(expected), 0.9125, places=3)

    def test_dprime_examples(self):
        self.assertEqual(dprime(Instance.of([4, 4, 6]), 12), Fraction(1, 4) + Fraction(1, 4) + Fraction(1, 7))
        self.assertEqual(dprime(Instance.of([11]), 12), Fraction(1, 12))
        value = dprime(Instance.of([5, 7, 8, 8, 11, 15, 15, 15, 15]), 16)
        self.assertEqual(value, Fraction(1, 5) + Fraction(1, 7) + Fraction(2, 9) + Fraction(1, 12) + Fraction(4, 16))
        self.assertLessEqual(value, Fraction(84, 100) + Fraction(1, 16))

    def test_dprime_rejects_fractions(self):
        with self.assertRaises(InvalidPeriodError):
            dprime(Instance.of([Fraction(15, 2), 4]), 12)

    @given(st.lists(st.integers(min_value=1, max_value=40), max_size=12), st.sampled_from(range(12, 31, 2)))
    def test_dprime_never_exceeds_density(self, values, theta):
        instance = Instance.of(values)
        self.assertLessEqual(dprime(instance, theta), density(instance))

    def test_lcm_of_periods(self):
        self.assertEqual(lcm_of_periods(Instance.of([4, 6])), 12)
        self.assertEqual(lcm_of_periods(Instance.of([Fraction(3, 2), 4])), 4)
        self.assertEqual(lcm_of_periods(Instance()), 1)


class DominationTests(SimpleTestCase):
    def test_examples(self):
        self.assertIsNotNone(dominates(Instance.of([4, 5]), Instance.of([4, 5])))
        witness = dominates(Instance.of([4, 5, 9]), Instance.of([5, 6]))
        self.assertEqual(witness.assignment, ((0, 0), (1, 1)))
        self.assertIsNone(dominates(Instance.of([4, 5]), Instance.of([3, 9])))
        self.assertIsNone(dominates(Instance.of([4]), Instance.of([4, 5])))

    @given(st.lists(st.integers(min_value=1, max_value=9), min_size=1, max_size=5),
           st.lists(st.integers(min_value=1, max_value=9), min_size=1, max_size=5),
           st.lists(st.integers(min_value=1, max_value=9), min_size=1, max_size=5))
    def test_order_properties(self, a, b, c):
        a, b, c = Instance.of(a), Instance.of(b), Instance.of(c)
        self.assertIsNotNone(dominates(a, a))
        if dominates(a, b) and dominates(b, c):
            self.assertIsNotNone(dominates(a, c))
        if dominates(a, b) and dominates(b, a) and len(a) == len(b):
            self.assertEqual(a, b)

    def test_transfer_schedule(self):
        cover = Instance.of([2, 4, 4])
        schedule = mark_verified(cover, Schedule((1, 2, 1, 3)))
        target = Instance.of([3, 5])
        moved = transfer_schedule(schedule, dominates(cover, target))
        self.assertEqual(moved.cycle, (1, 2, 1, IDLE))
        self.assertIsNone(verify_schedule(target, moved))


class VerifyScheduleTests(SimpleTestCase):
    def test_round_robin(self):
        self.assertIsNone(verify_schedule(Instance.of([4, 4, 4, 4]), Schedule((1, 2, 3, 4))))

    def test_violation_is_reported(self):
        violation = verify_schedule(Instance.of([2, 3, 6]), Schedule((1, 2, 1, 3)))
        self.assertIsNotNone(violation)
        self.assertEqual(violation.job, 2)
        self.assertEqual(violation.start, 2)
        self.assertEqual(violation.length, 3)
        self.assertEqual((violation.required, violation.found), (1, 0))

    def test_fractional_regression(self):
        # occurrences at 0, 1, 3 in a cycle of 5: gaps 1, 2, 2
        cycle = (1, 1, IDLE, 1, IDLE)
        self.assertIsNone(verify_schedule(Instance.of([Fraction(5, 2)]), Schedule(cycle)))
        self.assertTrue(window_oracle(Fraction(5, 2), cycle))

    def test_fractional_count_violation(self):
        # gaps 3, 3: every 2-window is fine but 5 days may hold only one occurrence
        violation = verify_schedule(Instance.of([Fraction(5, 2)]), Schedule((1, IDLE, IDLE)))
        self.assertIsNotNone(violation)

    def test_malformed(self):
        with self.assertRaises(MalformedScheduleError):
            verify_schedule(Instance.of([2, 2]), Schedule((1, 3)))
        with self.assertRaises(MalformedScheduleError):
            verify_schedule(Instance.of([2]), Schedule(()))
        with self.assertRaises(MalformedScheduleError):
            Schedule.parse("1,x")

    def test_empty_instance(self):
        self.assertIsNone(verify_schedule(Instance(), empty_schedule()))

    @hsettings(max_examples=300, deadline=None)
    @given(st.integers(min_value=3, max_value=11), st.sampled_from([2, 3]),
           st.lists(st.sampled_from([0, 1]), min_size=1, max_size=8))
    def test_fractional_matches_window_oracle(self, p, q, tokens):
        r = Fraction(p, q)
        if r.denominator == 1:
            return
        cycle = tuple(tokens)
        ok = verify_schedule(Instance.of([r]), Schedule(cycle)) is None
        self.assertEqual(ok, window_oracle(r, cycle))

    @hsettings(max_examples=500, deadline=None)
    @given(st.lists(st.integers(min_value=1, max_value=6), min_size=1, max_size=3), st.data())
    def test_integer_matches_gap_checker(self, periods, data):
        instance = Instance.of(periods)
        cycle = tuple(data.draw(st.lists(st.integers(min_value=0, max_value=len(instance)), min_size=1, max_size=12)))
        schedule = Schedule(cycle)
        self.assertEqual(verify_schedule(instance, schedule) is None, gap_check(instance, schedule))

    def test_removing_an_occurrence_names_the_job(self):
        instance = Instance.of([2, 4, 8, 8])
        schedule = mark_verified(instance, Schedule((1, 2, 1, 3, 1, 2, 1, 4)))
        largest = len(instance)
        day = schedule.occurrences(largest)[0]
        broken = Schedule(tuple(IDLE if i == day else t for i, t in enumerate(schedule.cycle)))
        violation = verify_schedule(instance, broken)
        self.assertIsNotNone(violation)
        self.assertEqual(violation.job, largest)
