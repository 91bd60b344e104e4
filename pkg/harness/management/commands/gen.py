from django.core.management.base import BaseCommand, CommandError

from core.exceptions import PinwheelError
from harness.utils import GenConfig, generate, write_instance_file


class Command(BaseCommand):
    help = "Sample benchmark instances with density in [0.89, 0.91]; one instance per line."

    def add_arguments(self, parser):
        parser.add_argument("--mode", choices=["density", "scaling"], default="density")
        parser.add_argument("--count", type=int, default=50)
        parser.add_argument("--seed", type=int, default=1)
        parser.add_argument("--max", dest="max_param", type=int, help="largest period (scaling mode)")
        parser.add_argument("--out", required=True)

    def handle(self, *args, **options):
        try:
            config = GenConfig(options["mode"], options["seed"], options["count"], options["max_param"])
            instances = generate(config)
        except PinwheelError as e:
            raise CommandError(str(e)) from e
        write_instance_file(options["out"], instances)
        self.stdout.write(self.style.SUCCESS(f"wrote {len(instances)} instances to {options['out']}"))
