from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from circuits.circuit_ir import parse_circuit
from circuits.exceptions import CircuitError
from circuits.frame_sim import sample, write_01, write_b8


class Command(BaseCommand):
    help = 'Sample detection events and observable flips from a circuit file.'

    def add_arguments(self, parser):
        parser.add_argument('--circuit', required=True, help='Circuit file.')
        parser.add_argument('--shots', type=int, default=None, help='Number of shots.')
        parser.add_argument('--seed', type=int, default=None, help='RNG seed.')
        parser.add_argument('--out', required=True, help='Output file.')
        parser.add_argument('--format', default='b8', choices=('b8', '01'), help='Output format.')
        parser.add_argument('--workers', type=int, default=None, help='Sampler threads.')

    def handle(self, *args, **options):
        source = (options['circuit'] or '').strip()
        out = (options['out'] or '').strip()
        shots = options['shots'] if options['shots'] is not None else settings.COLORBENCH_DEFAULT_SHOTS
        seed = options['seed'] if options['seed'] is not None else settings.COLORBENCH_DEFAULT_SEED
        if not out:
            raise CommandError('Output file is required.')

        try:
            circuit = parse_circuit(Path(source).read_text(encoding='utf-8'))
            batch = sample(circuit, shots, seed=seed, workers=options['workers'])
        except OSError as exc:
            raise CommandError(f'Cannot read {source}: {exc}') from exc
        except (CircuitError, ValueError) as exc:
            raise CommandError(str(exc)) from exc

        writer = write_b8 if options['format'] == 'b8' else write_01
        writer(out, batch)
        self.stdout.write(self.style.SUCCESS(
            f'Sampled {batch.num_shots} shots ({batch.num_detectors} detectors, '
            f'{batch.detection_events} detection events) to {out}.'
        ))
