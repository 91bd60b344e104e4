from fractions import Fraction

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import PinwheelError
from proofkit.utils import enumerate_base


class Command(BaseCommand):
    help = "Print the base candidates for one fold parameter, one instance per line."

    def add_arguments(self, parser):
        parser.add_argument("--theta", type=int, required=True)
        parser.add_argument("--min", dest="m", type=int, required=True)
        parser.add_argument("--bound", required=True, help="density bound as an exact fraction")
        parser.add_argument("--exact", action="store_true")

    def handle(self, *args, **options):
        try:
            candidates = enumerate_base(options["theta"], options["m"], Fraction(options["bound"]), exact=options["exact"])
        except (PinwheelError, ValueError, ZeroDivisionError) as e:
            raise CommandError(str(e)) from e
        for candidate in candidates:
            self.stdout.write(candidate.text())
