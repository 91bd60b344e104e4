import argparse
import logging
import sys
from pathlib import Path

from django.core.management.base import BaseCommand

from core.exceptions import PinwheelError
from core.utils import Instance
from fastsolver.utils import SOLVER_NAMES, run_solver
from solver.utils import OutcomeStatus

logger = logging.getLogger(__name__)

EXIT_CODES = {
    OutcomeStatus.SCHEDULABLE: 0,
    OutcomeStatus.UNSCHEDULABLE: 1,
    OutcomeStatus.TIMEOUT: 2,
}
EXIT_ERROR = 3


class Command(BaseCommand):
    help = "Decide one pinwheel instance. Exit code 0 schedulable, 1 unschedulable, 2 timeout, 3 error."

    def add_arguments(self, parser):
        parser.add_argument("instance", help='comma-separated periods, e.g. "2,4,8" or "3/2,5"')
        parser.add_argument("--solver", choices=SOLVER_NAMES, default="foresight")
        parser.add_argument("--complete", action=argparse.BooleanOptionalAction, default=True,
                            help="memoize failed states (foresight)")
        parser.add_argument("--timeout-ms", type=int)
        parser.add_argument("--per-attempt-ms", type=int)
        parser.add_argument("--max-partitions", type=int)
        parser.add_argument("--workers", type=int, help="parallel partition attempts (fast)")
        parser.add_argument("--emit-schedule", help="write the cycle to this file when schedulable")

    def handle(self, *args, **options):
        try:
            instance = Instance.parse(options["instance"])
            outcome = run_solver(
                options["solver"],
                instance,
                time_limit_ms=options["timeout_ms"],
                complete=options["complete"],
                per_attempt_ms=options["per_attempt_ms"],
                max_partitions=options["max_partitions"],
                workers=options["workers"],
            )
        except PinwheelError as e:
            logger.exception("solve failed for %s", options["instance"])
            self.stderr.write(self.style.ERROR(f"error: {e}"))
            sys.exit(EXIT_ERROR)

        self.stdout.write(f"{outcome.status.value} {outcome.elapsed_ms:.1f}ms")
        if outcome.schedule is not None:
            self.stdout.write(outcome.schedule.text())
            if options["emit_schedule"]:
                Path(options["emit_schedule"]).write_text(outcome.schedule.text() + "\n")
        sys.exit(EXIT_CODES[outcome.status])
