from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from benchmarks.exceptions import BenchmarkError
from benchmarks.harness import extrapolate_footprint, read_csv
from benchmarks.models import BenchmarkRun


class Command(BaseCommand):
    help = 'Extrapolate the qubit count needed to reach a target logical error rate per round.'

    def add_arguments(self, parser):
        parser.add_argument('--in', dest='source', default='', help='Benchmark CSV. Uses stored runs when omitted.')
        parser.add_argument('--family', default=None, help='Circuit family to fit.')
        parser.add_argument('--p', type=float, default=None, help='Noise strength to fit.')
        parser.add_argument('--target', type=float, default=None, help='Target error rate per round.')

    def handle(self, *args, **options):
        source = (options.get('source') or '').strip()
        target = options['target'] or settings.COLORBENCH_TARGET_ERROR_RATE
        family = (options['family'] or '').strip().lower() or None

        try:
            if source:
                rows = read_csv(source)
            else:
                runs = BenchmarkRun.objects.all()
                if family:
                    runs = runs.filter(family=family)
                rows = [run.as_stat_row() for run in runs]
            footprint = extrapolate_footprint(rows, family=family, p=options['p'], target=target)
        except OSError as exc:
            raise CommandError(f'Cannot read {source}: {exc}') from exc
        except BenchmarkError as exc:
            raise CommandError(str(exc)) from exc

        self.stdout.write(self.style.SUCCESS(
            f'{footprint.family} at p={footprint.p:g} reaches {target:g} per round at '
            f'd={footprint.size} (fit d*={footprint.distance:.2f}, slope {footprint.slope:.4f}): '
            f'{footprint.qubits} qubits.'
        ))
