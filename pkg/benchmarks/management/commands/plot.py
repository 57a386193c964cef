from django.core.management.base import BaseCommand, CommandError

from benchmarks.exceptions import BenchmarkError
from benchmarks.harness import read_csv
from benchmarks.models import BenchmarkRun
from benchmarks.plots import error_rate_drawing, save_svg, timing_drawing


class Command(BaseCommand):
    help = 'Draw benchmark results as a log-log SVG plot.'

    def add_arguments(self, parser):
        parser.add_argument('--in', dest='source', default='', help='Benchmark CSV. Uses stored runs when omitted.')
        parser.add_argument('--out', required=True, help='SVG file.')
        parser.add_argument('--kind', default='rate', choices=('rate', 'timing'), help='What to plot.')
        parser.add_argument('--title', default='', help='Plot title.')

    def handle(self, *args, **options):
        source = (options.get('source') or '').strip()
        out = (options['out'] or '').strip()
        if not out:
            raise CommandError('Output file is required.')

        draw = error_rate_drawing if options['kind'] == 'rate' else timing_drawing
        title = (options['title'] or '').strip()
        try:
            rows = read_csv(source) if source else [run.as_stat_row() for run in BenchmarkRun.objects.all()]
            if not rows:
                raise CommandError('There are no benchmark results to plot.')
            drawing = draw(rows, title) if title else draw(rows)
            save_svg(drawing, out)
        except OSError as exc:
            raise CommandError(f'Cannot plot: {exc}') from exc
        except BenchmarkError as exc:
            raise CommandError(str(exc)) from exc

        self.stdout.write(self.style.SUCCESS(f'Plotted {len(rows)} rows to {out}.'))
