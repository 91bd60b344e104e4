from fractions import Fraction

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import PinwheelError
from folding.utils import unfold
from proofkit.utils import read_instances, write_instances


class Command(BaseCommand):
    help = "Unfold a deferred set into the candidates of the next fold parameter."

    def add_arguments(self, parser):
        parser.add_argument("--theta", type=int, required=True, help="fold parameter of the input set")
        parser.add_argument("--bound", required=True, help="density bound as an exact fraction")
        parser.add_argument("--min", dest="m", type=int, default=4)
        parser.add_argument("--in", dest="source", required=True, help="removed.csv of the input stage")
        parser.add_argument("--out", required=True)

    def handle(self, *args, **options):
        try:
            members = read_instances(options["source"])
            candidates = unfold(members, options["theta"], Fraction(options["bound"]), options["m"])
        except (PinwheelError, OSError, ValueError, ZeroDivisionError) as e:
            raise CommandError(str(e)) from e
        write_instances(options["out"], candidates)
        self.stdout.write(f"{len(members)} instances -> {len(candidates)} candidates at theta={options['theta'] + 2}")
