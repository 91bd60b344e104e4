from django.core.management.base import BaseCommand, CommandError

from proofkit.utils import certify


class Command(BaseCommand):
    help = "Re-check a proof directory without solving; prints machine-readable rejections."

    def add_arguments(self, parser):
        parser.add_argument("--dir", required=True, help="proof directory written by `prove`")

    def handle(self, *args, **options):
        result = certify(options["dir"])
        if result.accepted:
            self.stdout.write(self.style.SUCCESS("accept"))
            return
        for rejection in result.rejections:
            self.stdout.write(f"{rejection.property}\t{rejection.theta or ''}\t{rejection.instance}\t{rejection.detail}")
        raise CommandError(f"reject: {len(result.rejections)} failed checks")
