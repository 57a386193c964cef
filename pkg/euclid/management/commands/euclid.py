from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from euclid.drawing import save_svg, solution_drawing
from euclid.exceptions import EuclidError
from euclid.files import read_instance, read_solution, serialize_solution
from euclid.problem import cost, validate
from euclid.solver import solve_restricted


class Command(BaseCommand):
    help = 'Solve or check continuous color decoding problems.'

    def add_arguments(self, parser):
        actions = parser.add_subparsers(dest='action', required=True)

        solve = actions.add_parser('solve', help='Solve an instance with the pair/triple search.')
        solve.add_argument('--in', dest='source', required=True, help='Instance file ("color x y" lines).')
        solve.add_argument('--out', default='', help='Solution file. Prints to stdout when omitted.')
        solve.add_argument('--svg', default='', help='Also draw the solution to this SVG file.')
        solve.add_argument('--pairs-only', action='store_true', help='Only join same-color pairs.')

        check = actions.add_parser('validate', help='Check a solution against an instance.')
        check.add_argument('--in', dest='source', required=True, help='Instance file.')
        check.add_argument('--solution', required=True, help='Solution file.')

    def handle(self, *args, **options):
        source = (options['source'] or '').strip()
        try:
            instance = read_instance(source)
            if options['action'] == 'validate':
                return self._validate(instance, (options['solution'] or '').strip())
            solution = solve_restricted(instance, allow_triples=not options['pairs_only'])
        except OSError as exc:
            raise CommandError(f'Cannot read input: {exc}') from exc
        except EuclidError as exc:
            raise CommandError(str(exc)) from exc

        out = (options.get('out') or '').strip()
        svg = (options.get('svg') or '').strip()
        text = serialize_solution(solution)
        try:
            if out:
                Path(out).write_text(text, encoding='utf-8')
            if svg:
                save_svg(solution_drawing(instance, solution), svg)
        except OSError as exc:
            raise CommandError(f'Cannot write output: {exc}') from exc

        if not out:
            self.stdout.write(text, ending='')
            return
        self.stdout.write(self.style.SUCCESS(
            f'Solved {len(instance.points)} points with {len(solution.neutral_points)} neutral points, '
            f'cost {cost(solution):.6f}, to {out}.'
        ))

    def _validate(self, instance, solution_path: str):
        solution = read_solution(solution_path)
        result = validate(instance, solution)
        if not result:
            raise CommandError(f'Invalid solution: {result.diagnostics[0]}')
        self.stdout.write(self.style.SUCCESS(f'Valid solution with cost {cost(solution):.6f}.'))
