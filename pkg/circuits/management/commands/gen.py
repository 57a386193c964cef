from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from circuits.choices import CircuitFamily
from circuits.circuit_ir import serialize_circuit
from circuits.exceptions import CircuitError
from circuits.generators import generate


class Command(BaseCommand):
    help = 'Generate a noisy memory experiment circuit.'

    def add_arguments(self, parser):
        parser.add_argument('--circuit', required=True, choices=CircuitFamily.values, help='Circuit family.')
        parser.add_argument('--d', type=int, required=True, help='Code distance (torus size for toric families).')
        parser.add_argument('--rounds', type=int, default=1, help='Number of stabilizer rounds.')
        parser.add_argument('--p', type=float, default=0.0, help='Noise strength.')
        parser.add_argument('--basis', default='Z', help='Memory basis, X or Z.')
        parser.add_argument('--out', default='', help='Output file. Prints to stdout when omitted.')

    def handle(self, *args, **options):
        out = (options.get('out') or '').strip()
        try:
            circuit = generate(
                options['circuit'],
                options['d'],
                rounds=options['rounds'],
                p=options['p'],
                basis=options['basis'],
            )
        except (CircuitError, ValueError) as exc:
            raise CommandError(str(exc)) from exc

        text = serialize_circuit(circuit)
        if not out:
            self.stdout.write(text, ending='')
            return
        Path(out).write_text(text, encoding='utf-8')
        self.stdout.write(self.style.SUCCESS(
            f'Wrote {options["circuit"]} d={options["d"]} with {circuit.num_qubits} qubits, '
            f'{circuit.detector_count} detectors to {out}.'
        ))
