import time
from pathlib import Path

import numpy as np
from django.core.management.base import BaseCommand, CommandError

from circuits.dem import parse_dem
from circuits.exceptions import CircuitError
from circuits.frame_sim import ShotBatch, read_01, read_b8, write_b8
from decoding.exceptions import DecodingError
from decoding.mobius import configure, decode_batch, prediction_bits


class Command(BaseCommand):
    help = 'Predict observable flips for sampled shots using a detector error model.'

    def add_arguments(self, parser):
        parser.add_argument('--dem', required=True, help='Detector error model file.')
        parser.add_argument('--shots', required=True, help='Shots file (detectors then observables per row).')
        parser.add_argument('--out', required=True, help='Predictions file (b8).')
        parser.add_argument('--format', default='b8', choices=('b8', '01'), help='Shots file format.')
        parser.add_argument(
            '--no-observables', action='store_true',
            help='Shots rows hold detection events only.',
        )
        parser.add_argument(
            '--lenient', action='store_true',
            help='Log decoder requirement violations instead of failing, splitting undecomposable errors by force.',
        )

    def handle(self, *args, **options):
        dem_path = (options['dem'] or '').strip()
        shots_path = (options['shots'] or '').strip()
        out = (options['out'] or '').strip()
        if not out:
            raise CommandError('Output file is required.')

        try:
            dem = parse_dem(Path(dem_path).read_text(encoding='utf-8'))
            observables = 0 if options['no_observables'] else dem.observable_count
            reader = read_b8 if options['format'] == 'b8' else read_01
            batch = reader(shots_path, dem.detector_count, observables)
            cfg = configure(dem, strict=False if options['lenient'] else None)
            started = time.perf_counter()
            predictions = decode_batch(cfg, batch)
            seconds = time.perf_counter() - started
        except OSError as exc:
            raise CommandError(f'Cannot read input: {exc}') from exc
        except (CircuitError, DecodingError, ValueError) as exc:
            raise CommandError(str(exc)) from exc

        bits = prediction_bits(predictions, dem.observable_count)
        write_b8(out, ShotBatch(
            num_shots=len(predictions),
            detection_bits=np.zeros((len(predictions), 0), dtype=np.uint8),
            observable_bits=bits,
        ))

        summary = f'Decoded {len(predictions)} shots in {seconds:.3f}s to {out}'
        if observables:
            mistakes = int(np.any(bits != batch.observable_bits, axis=1).sum())
            summary += f' ({mistakes} logical errors)'
        self.stdout.write(self.style.SUCCESS(summary + '.'))
