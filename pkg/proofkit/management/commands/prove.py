import logging
from fractions import Fraction

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import PinwheelError
from proofkit.utils import ProofParams, prove

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Run the density-bound proof chain and write stage files plus a manifest."

    def add_arguments(self, parser):
        parser.add_argument("--out", required=True, help="output directory")
        parser.add_argument("--min", dest="m", type=int, default=4, help="minimum period")
        parser.add_argument("--bound", default="84/100", help="density bound as an exact fraction")
        parser.add_argument("--theta-min", type=int, default=12)
        parser.add_argument("--theta-max", type=int, default=30)
        parser.add_argument("--budget-ms", type=int, default=10_000, help="fast solver budget per candidate")
        parser.add_argument("--exact", action="store_true", help="enumerate every base instance, not only saturated ones")

    def handle(self, *args, **options):
        try:
            params = ProofParams(
                m=options["m"],
                d=Fraction(options["bound"]),
                theta_min=options["theta_min"],
                theta_max=options["theta_max"],
                budget_ms=options["budget_ms"],
            )
            stages = prove(params, out_dir=options["out"], exact=options["exact"])
        except (PinwheelError, ValueError, ZeroDivisionError) as e:
            logger.exception("prove failed")
            raise CommandError(str(e)) from e

        for stage in stages:
            self.stdout.write(f"theta={stage.theta} candidates={len(stage.candidates)} "
                              f"L={len(stage.L)} R={len(stage.R)}")
        if stages[-1].R:
            self.stdout.write(self.style.WARNING(f"{len(stages[-1].R)} instances remain deferred at theta_max"))
        else:
            self.stdout.write(self.style.SUCCESS(f"proof written to {options['out']}"))
