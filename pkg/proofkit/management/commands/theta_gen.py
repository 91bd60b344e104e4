from django.core.management.base import BaseCommand, CommandError

from core.exceptions import PinwheelError
from core.utils import Instance
from proofkit.utils import load_stages, theta_generator


class Command(BaseCommand):
    help = "Find the first fold parameter at which a proof directory covers an instance."

    def add_arguments(self, parser):
        parser.add_argument("--dir", required=True)
        parser.add_argument("instance", help="comma-separated integer periods")

    def handle(self, *args, **options):
        try:
            params, stages = load_stages(options["dir"])
            theta = theta_generator(Instance.parse(options["instance"]), stages, params)
        except PinwheelError as e:
            raise CommandError(str(e)) from e
        if theta is None:
            raise CommandError("no stage covers this instance")
        self.stdout.write(str(theta))
