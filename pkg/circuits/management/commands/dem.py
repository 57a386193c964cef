from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from circuits.circuit_ir import parse_circuit
from circuits.dem import circuit_to_dem, serialize_dem
from circuits.exceptions import CircuitError


class Command(BaseCommand):
    help = 'Extract the detector error model of a circuit file.'

    def add_arguments(self, parser):
        parser.add_argument('--circuit', required=True, help='Circuit file.')
        parser.add_argument('--out', default='', help='Output file. Prints to stdout when omitted.')

    def handle(self, *args, **options):
        source = (options['circuit'] or '').strip()
        out = (options.get('out') or '').strip()
        if not source:
            raise CommandError('Circuit file is required.')

        try:
            circuit = parse_circuit(Path(source).read_text(encoding='utf-8'))
            dem = circuit_to_dem(circuit)
        except OSError as exc:
            raise CommandError(f'Cannot read {source}: {exc}') from exc
        except CircuitError as exc:
            raise CommandError(str(exc)) from exc

        text = serialize_dem(dem)
        if not out:
            self.stdout.write(text, ending='')
            return
        Path(out).write_text(text, encoding='utf-8')
        self.stdout.write(self.style.SUCCESS(
            f'Wrote {len(dem.errors)} error mechanisms over {dem.detector_count} detectors to {out}.'
        ))
