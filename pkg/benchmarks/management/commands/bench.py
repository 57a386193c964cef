from io import StringIO

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from django.db import transaction

from benchmarks.exceptions import BenchmarkError
from benchmarks.harness import expand_grid, run_grid, write_csv
from benchmarks.models import BenchmarkRun


def split_values(text: str, cast, name: str) -> list:
    values = [x.strip() for x in (text or '').split(',') if x.strip()]
    if not values:
        raise CommandError(f'--{name} needs at least one value.')
    try:
        return [cast(x) for x in values]
    except ValueError as exc:
        raise CommandError(f'Invalid --{name} value: {exc}') from exc


class Command(BaseCommand):
    help = (
        'Generate, sample and decode a grid of circuits and report logical error counts. '
        'Grid points run sequentially in one process.'
    )

    def add_arguments(self, parser):
        parser.add_argument('--family', required=True, help='Comma separated circuit families.')
        parser.add_argument('--d', required=True, help='Comma separated distances.')
        parser.add_argument('--p', required=True, help='Comma separated noise strengths.')
        parser.add_argument('--basis', default='Z', help='Comma separated memory bases.')
        parser.add_argument('--rounds', type=int, default=None, help='Rounds per circuit. Defaults to d.')
        parser.add_argument('--shots', type=int, default=None, help='Shots per grid point.')
        parser.add_argument('--seed', type=int, default=None, help='RNG seed.')
        parser.add_argument('--batch-size', type=int, default=None, help='Shots per decoding batch.')
        parser.add_argument('--max-batch-seconds', type=float, default=None, help='Target decoding time per batch.')
        parser.add_argument(
            '--workers', type=int, default=None,
            help='Sampler threads. Grid points still run one after another; only sampling is parallel.',
        )
        parser.add_argument('--out', default='', help='CSV file. Prints CSV to stdout when omitted.')
        parser.add_argument('--save', action='store_true', help='Store the results as benchmark runs.')
        parser.add_argument(
            '--lenient', action='store_true',
            help='Log decoder requirement violations instead of failing, splitting undecomposable errors by force.',
        )

    def handle(self, *args, **options):
        out = (options.get('out') or '').strip()
        shots = options['shots'] if options['shots'] is not None else settings.COLORBENCH_DEFAULT_SHOTS
        seed = options['seed'] if options['seed'] is not None else settings.COLORBENCH_DEFAULT_SEED
        if shots < 0:
            raise CommandError('--shots must be non-negative.')

        points = expand_grid(
            split_values(options['family'], str.lower, 'family'),
            split_values(options['d'], int, 'd'),
            split_values(options['p'], float, 'p'),
            bases=split_values(options['basis'], str.upper, 'basis'),
            rounds=options['rounds'],
        )
        try:
            rows = run_grid(
                points, shots, seed=seed,
                batch_size=options['batch_size'],
                max_batch_seconds=options['max_batch_seconds'],
                strict=False if options['lenient'] else None,
                workers=options['workers'],
            )
        except BenchmarkError as exc:
            raise CommandError(str(exc)) from exc

        if options['save']:
            with transaction.atomic():
                BenchmarkRun.objects.bulk_create([BenchmarkRun.from_stat_row(row, seed=seed) for row in rows])

        if not out:
            buffer = StringIO()
            write_csv(rows, buffer)
            self.stdout.write(buffer.getvalue(), ending='')
            return
        try:
            write_csv(rows, out)
        except OSError as exc:
            raise CommandError(f'Cannot write {out}: {exc}') from exc

        errors = sum(row.errors for row in rows)
        self.stdout.write(self.style.SUCCESS(
            f'Ran {len(rows)} grid points ({errors} logical errors) to {out}.'
        ))
