import logging

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import PinwheelError
from harness.models import BenchResult
from harness.utils import bench_run, read_instance_file, speedup, summarize, write_records

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Race solvers over an instance file under a per-instance time limit and write a CSV."

    def add_arguments(self, parser):
        parser.add_argument("--instances", required=True)
        parser.add_argument("--solvers", default="fast,foresight")
        parser.add_argument("--timeout-ms", type=int, default=10_000)
        parser.add_argument("--out", required=True)
        parser.add_argument("--seed", type=int, help="seed the instances were generated with")
        parser.add_argument("--max", dest="max_param", type=int, help="max_param of a scaling suite")
        parser.add_argument("--workers", type=int, default=1)
        parser.add_argument("--save", action="store_true", help="also store rows in the database")

    def handle(self, *args, **options):
        solvers = [name.strip() for name in options["solvers"].split(",") if name.strip()]
        try:
            instances = read_instance_file(options["instances"])
            records = bench_run(instances, solvers, options["timeout_ms"], seed=options["seed"],
                                max_param=options["max_param"], workers=options["workers"])
        except (PinwheelError, OSError) as e:
            logger.exception("bench failed")
            raise CommandError(str(e)) from e

        write_records(options["out"], records)
        if options["save"]:
            BenchResult.objects.bulk_create(
                BenchResult(instance=r.instance, solver=r.solver, outcome=r.outcome, elapsed_ms=r.elapsed_ms,
                            seed=r.seed, max_param=r.max_param)
                for r in records
            )

        for summary in summarize(records).values():
            self.stdout.write(f"{summary.solver}: solved {summary.solved}/{summary.runs} "
                              f"mean {summary.mean_ms:.1f}ms median {summary.median_ms:.1f}ms")
        ratio = speedup(records)
        if ratio is not None:
            self.stdout.write(f"median speedup foresight/fast: {ratio:.1f}x")
