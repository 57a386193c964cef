import math
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.conf import settings
from django.core.management import CommandError, call_command
from django.db import IntegrityError, transaction
from django.test import SimpleTestCase, TestCase

from circuits.generators import family_qubit_count
from decoding.exceptions import DecodingError

from .exceptions import BenchmarkError, InsufficientData, NonDecreasing
from .harness import (
    CSV_FIELDS,
    GridPoint,
    StatRow,
    binomial_likelihood_band,
    combine_xz,
    expand_grid,
    extrapolate_footprint,
    fit_log_linear,
    merge_rows,
    per_round,
    point_seed,
    read_csv,
    run_grid,
    run_point,
    summarize,
    write_csv,
)
from .management.commands.bench import Command
from .models import BenchmarkRun
from .plots import error_rate_drawing, save_svg


def stat_row(family='midout', d=3, p=0.001, errors=10, shots=10**6, basis='Z', rounds=1, detections=100):
    return StatRow(
        family=family, d=d, rounds=rounds, p=p, basis=basis,
        shots=shots, errors=errors, seconds=1.0, detections=detections,
    )


def decaying_rows(family='midout', p=0.001):
    # 1e-3, 1e-4, 1e-5 per round at d = 3, 5, 7.
    return [stat_row(family, d, p, errors, shots=10**9) for d, errors in ((3, 10**6), (5, 10**5), (7, 10**4))]


class RateConversionTests(SimpleTestCase):
    def test_combine_xz(self):
        self.assertEqual(combine_xz(0, 0), 0)
        self.assertAlmostEqual(combine_xz(0.1, 0), 0.1)
        self.assertAlmostEqual(combine_xz(0.1, 0.2), 0.28)

    def test_combine_xz_is_symmetric_and_dominates(self):
        for px, pz in ((0.01, 0.3), (0.2, 0.2), (0.5, 0.0), (0.0, 0.4)):
            self.assertAlmostEqual(combine_xz(px, pz), combine_xz(pz, px))
            self.assertGreaterEqual(combine_xz(px, pz), max(px, pz))
            self.assertGreaterEqual(combine_xz(px + 0.01, pz), combine_xz(px, pz))

    def test_per_round(self):
        self.assertEqual(per_round(0, 7), 0)
        self.assertEqual(per_round(0.123456789, 1), 0.123456789)
        q, rounds = 0.01, 5
        p_shot = 0.5 - (1 - 2 * q) ** rounds / 2
        self.assertAlmostEqual(per_round(p_shot, rounds), q, places=12)
        self.assertLess(per_round(0.1, 4), per_round(0.2, 4))
        self.assertAlmostEqual(per_round(0.5, 3), 0.5)

    def test_per_round_rejects_zero_rounds(self):
        with self.assertRaises(ValueError):
            per_round(0.1, 0)


class LikelihoodBandTests(SimpleTestCase):
    def test_no_errors(self):
        low, high = binomial_likelihood_band(0, 1000, ratio=1000)
        self.assertEqual(low, 0.0)
        self.assertAlmostEqual(high, -math.expm1(-math.log(1000) / 1000), places=9)

    def test_band_edges_are_a_likelihood_ratio_apart(self):
        errors, shots = 50, 1000

        def log_likelihood(q):
            return errors * math.log(q) + (shots - errors) * math.log1p(-q)

        low, high = binomial_likelihood_band(errors, shots, ratio=1000)
        self.assertLess(low, 0.05)
        self.assertGreater(high, 0.05)
        for edge in (low, high):
            self.assertAlmostEqual(log_likelihood(0.05) - log_likelihood(edge), math.log(1000), places=6)

    def test_all_errors(self):
        low, high = binomial_likelihood_band(20, 20, ratio=1000)
        self.assertEqual(high, 1.0)
        self.assertLess(low, 1.0)

    def test_ratio_comes_from_settings(self):
        self.assertEqual(binomial_likelihood_band(3, 100), binomial_likelihood_band(3, 100, ratio=1000))

    def test_no_shots(self):
        with self.assertRaises(InsufficientData):
            binomial_likelihood_band(0, 0)


class FootprintTests(SimpleTestCase):
    def test_fit_recovers_exact_decay(self):
        slope, intercept = fit_log_linear([3, 5, 7, 9], [1e-3, 1e-4, 1e-5, 1e-6])
        self.assertAlmostEqual(slope, -0.5, delta=1e-9)
        self.assertAlmostEqual(intercept, -1.5, delta=1e-9)

    def test_extrapolated_footprint(self):
        footprint = extrapolate_footprint(decaying_rows(), target=1e-12)
        self.assertAlmostEqual(footprint.slope, -0.5, delta=1e-9)
        self.assertAlmostEqual(footprint.distance, 21, places=6)
        self.assertEqual(footprint.size, 21)
        self.assertEqual(footprint.qubits, family_qubit_count('midout', 21))
        self.assertAlmostEqual(footprint.suppression, 10.0)

    def test_combines_bases(self):
        rows = [stat_row(basis='X', errors=10, shots=1000), stat_row(basis='Z', errors=20, shots=1000)]
        [point] = summarize(rows)
        self.assertAlmostEqual(point.rate, 1 - 0.99 * 0.98)
        self.assertEqual(point.bases, 'XZ')
        self.assertEqual((point.shots, point.errors), (2000, 30))
        self.assertLess(point.low, point.rate)
        self.assertGreater(point.high, point.rate)

    def test_merges_repeated_runs(self):
        [row] = merge_rows([stat_row(errors=3, shots=100), stat_row(errors=5, shots=300)])
        self.assertEqual((row.errors, row.shots, row.seconds), (8, 400, 2.0))

    def test_needs_three_distances(self):
        with self.assertRaises(InsufficientData):
            extrapolate_footprint(decaying_rows()[:2])

    def test_zero_rates_do_not_count(self):
        rows = decaying_rows()
        rows[-1] = stat_row(d=7, errors=0)
        with self.assertRaises(InsufficientData):
            extrapolate_footprint(rows)

    def test_increasing_rates(self):
        rows = [stat_row(d=d, errors=e) for d, e in ((3, 10), (5, 100), (7, 1000))]
        with self.assertRaises(NonDecreasing):
            extrapolate_footprint(rows)

    def test_mixed_families_need_a_choice(self):
        rows = decaying_rows('midout') + decaying_rows('superdense')
        with self.assertRaises(InsufficientData):
            extrapolate_footprint(rows)
        footprint = extrapolate_footprint(rows, family='superdense')
        self.assertEqual(footprint.qubits, family_qubit_count('superdense', footprint.size))


class StatRowTests(SimpleTestCase):
    def test_invalid_counts(self):
        with self.assertRaises(BenchmarkError):
            stat_row(errors=11, shots=10)
        with self.assertRaises(BenchmarkError):
            StatRow('transit', 3, 1, 0.1, 'Z', shots=10, errors=1, seconds=0.0, detections=0)

    def test_csv_header_only(self):
        buffer = StringIO()
        write_csv([], buffer)
        self.assertEqual(buffer.getvalue(), ','.join(CSV_FIELDS) + '\n')

    def test_csv_one_row(self):
        buffer = StringIO()
        write_csv([stat_row()], buffer)
        lines = buffer.getvalue().splitlines()
        self.assertEqual(len(lines), 2)
        self.assertEqual(lines[1], 'midout,3,1,0.001,Z,1000000,10,1.0,100')

    def test_csv_file_round_trip(self):
        rows = [stat_row(), stat_row(d=5, basis='X', errors=0, p=0.0025)]
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'stats.csv'
            write_csv(rows, path)
            self.assertEqual(read_csv(path), rows)

    def test_csv_errors(self):
        with self.assertRaises(BenchmarkError):
            read_csv(StringIO('family,d\ntransit,3\n'))
        header = ','.join(CSV_FIELDS)
        with self.assertRaisesMessage(BenchmarkError, 'line 3'):
            read_csv(StringIO(f'{header}\nmidout,3,1,0.001,Z,10,1,1.0,4\nmidout,five,1,0.001,Z,10,1,1.0,4\n'))


class RunGridTests(SimpleTestCase):
    def test_noiseless_point(self):
        row = run_point(GridPoint('transit', 3, 1, 0.0), 64)
        self.assertEqual((row.shots, row.errors, row.detections), (64, 0, 0))
        self.assertGreater(row.seconds, 0)

    def test_same_seed_same_counts(self):
        points = expand_grid(['transit'], [3], [0.05], rounds=1)
        first = run_grid(points, 200, seed=11)
        second = run_grid(points, 200, seed=11)
        self.assertEqual(
            [(r.errors, r.detections) for r in first],
            [(r.errors, r.detections) for r in second],
        )

    def test_point_seed_ignores_grid_order(self):
        a, b = GridPoint('transit', 3, 1, 0.05), GridPoint('transit', 5, 1, 0.05)
        self.assertEqual(point_seed(4, a), point_seed(4, a))
        self.assertNotEqual(point_seed(4, a), point_seed(4, b))
        forward = run_grid([a, b], 64, seed=4)
        backward = run_grid([b, a], 64, seed=4)
        self.assertEqual(forward[0].detections, backward[1].detections)

    def test_expand_grid_defaults_rounds_to_distance(self):
        points = expand_grid(['midout'], [3, 5], [0.001], bases=('X', 'Z'))
        self.assertEqual(len(points), 4)
        self.assertEqual({(pt.d, pt.rounds) for pt in points}, {(3, 3), (5, 5)})

    def test_slow_batches_shrink(self):
        point = GridPoint('transit', 3, 1, 0.05)
        with self.assertLogs('benchmarks.harness', level='WARNING') as logs:
            row = run_point(point, 16, batch_size=8, max_batch_seconds=1e-12)
        self.assertIn('shrinking', logs.output[0])
        self.assertEqual(row.shots, 16)

    def test_errors_carry_grid_point(self):
        point = GridPoint('transit', 3, 1, 0.05)
        with mock.patch('benchmarks.harness.configure', side_effect=DecodingError('boom')):
            with self.assertRaisesMessage(BenchmarkError, 'transit d=3 rounds=1 p=0.05 basis=Z: boom'):
                run_point(point, 8)
        with self.assertRaises(BenchmarkError):
            run_point(GridPoint('hexagonal', 3, 1, 0.05), 8)

    def test_transit_error_rate_falls_with_distance(self):
        if not settings.COLORBENCH_RUN_SLOW:
            self.skipTest('Set COLORBENCH_RUN_SLOW=true to run.')
        rows = run_grid(expand_grid(['transit'], [3, 5, 7], [0.05], rounds=1), 10**5, seed=1)
        rates = [row.error_rate for row in rows]
        for small, large, row in zip(rates, rates[1:], rows):
            sigma = math.sqrt(small * (1 - small) / row.shots)
            self.assertLess(large, small - 3 * sigma)


def rate_sigma(point) -> float:
    """Binomial spread of a per-round rate, taken as relative to its error count."""
    return point.rate / math.sqrt(max(point.errors, 1))


class AcceptanceTests(SimpleTestCase):
    def setUp(self):
        if not settings.COLORBENCH_RUN_SLOW:
            self.skipTest('Set COLORBENCH_RUN_SLOW=true to run.')

    def assertClearlyBelow(self, lower, upper):
        if min(lower.errors, upper.errors) >= 10:
            self.assertLess(lower.rate + 3 * math.hypot(rate_sigma(lower), rate_sigma(upper)), upper.rate)
        else:
            self.assertLess(lower.high, upper.low)

    def test_midout_threshold_bracket(self):
        rows = run_grid(expand_grid(['midout'], [3, 5, 7], [0.003, 0.010], bases=('X', 'Z')), 10**5, seed=5)
        below = [pt for pt in summarize(rows) if pt.p == 0.003]
        above = [pt for pt in summarize(rows) if pt.p == 0.010]
        for small, large in zip(below, below[1:]):
            self.assertClearlyBelow(large, small)
        for small, large in zip(above, above[1:]):
            self.assertClearlyBelow(small, large)

    def test_midout_beats_superdense(self):
        rows = run_grid(expand_grid(['midout', 'superdense'], [5], [0.001], bases=('X', 'Z')), 10**6, seed=6)
        points = {pt.family: pt for pt in summarize(rows)}
        self.assertClearlyBelow(points['midout'], points['superdense'])

    def test_midout_footprint_from_samples(self):
        rows = run_grid(expand_grid(['midout'], [3, 5, 7], [0.003], bases=('X', 'Z')), 10**6, seed=7)
        footprint = extrapolate_footprint(rows)
        self.assertLess(footprint.slope, 0)
        self.assertTrue(math.isfinite(footprint.distance))
        self.assertGreater(footprint.qubits, 0)

    def test_ablated_torus_is_no_worse(self):
        points = expand_grid(['toric', 'toric_ablated'], [2], [0.02], bases=('X', 'Z'), rounds=2)
        rates = {pt.family: pt for pt in summarize(run_grid(points, 10**5, seed=8))}
        full, ablated = rates['toric'], rates['toric_ablated']
        self.assertLessEqual(ablated.rate, full.rate + 3 * math.hypot(rate_sigma(full), rate_sigma(ablated)))


class BenchmarkRunTests(TestCase):
    def test_stat_row_round_trip(self):
        row = stat_row(basis='X', errors=7, shots=500)
        run = BenchmarkRun.from_stat_row(row, seed=3)
        run.save()
        stored = BenchmarkRun.objects.get(pk=run.pk)
        self.assertEqual(stored.as_stat_row(), row)
        self.assertEqual(stored.seed, 3)
        self.assertAlmostEqual(stored.error_rate, 7 / 500)
        self.assertIn('midout d=3', str(stored))

    def test_errors_cannot_exceed_shots(self):
        with self.assertRaises(IntegrityError):
            with transaction.atomic():
                BenchmarkRun.objects.create(
                    family='transit', distance=3, rounds=1, noise=0.1,
                    shots=5, errors=6, seconds=1.0,
                )


class BenchmarkCommandTests(TestCase):
    def test_bench_writes_csv_and_saves(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / 'stats.csv'
            stdout = StringIO()
            call_command(
                'bench', family='transit', d='3', p='0,0.02', rounds=1,
                shots=32, seed=5, out=str(out), save=True, stdout=stdout,
            )
            rows = read_csv(out)
        self.assertEqual([(r.p, r.shots) for r in rows], [(0.0, 32), (0.02, 32)])
        self.assertEqual(rows[0].errors, 0)
        self.assertEqual(BenchmarkRun.objects.count(), 2)
        self.assertIn('Ran 2 grid points', stdout.getvalue())

    def test_bench_prints_csv(self):
        stdout = StringIO()
        call_command('bench', family='transit', d='3', p='0', rounds=1, shots=8, stdout=stdout)
        self.assertTrue(stdout.getvalue().startswith(','.join(CSV_FIELDS)))

    def test_bench_lenient_and_help(self):
        stdout = StringIO()
        call_command('bench', family='transit', d='3', p='0.02', rounds=1, shots=8, lenient=True, stdout=stdout)
        self.assertEqual(len(stdout.getvalue().splitlines()), 2)
        self.assertIn('sequentially', Command.help)

    def test_bench_rejects_bad_grid(self):
        with self.assertRaises(CommandError):
            call_command('bench', family='hexagonal', d='3', p='0.01', shots=8, stdout=StringIO())
        with self.assertRaises(CommandError):
            call_command('bench', family='transit', d='three', p='0.01', shots=8, stdout=StringIO())

    def test_footprint_from_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            source = Path(tmp) / 'stats.csv'
            write_csv(decaying_rows(), source)
            stdout = StringIO()
            call_command('footprint', source=str(source), target=1e-12, stdout=stdout)
        self.assertIn('d=21', stdout.getvalue())
        self.assertIn(f'{family_qubit_count("midout", 21)} qubits', stdout.getvalue())

    def test_footprint_from_stored_runs(self):
        BenchmarkRun.objects.bulk_create([BenchmarkRun.from_stat_row(row) for row in decaying_rows()])
        stdout = StringIO()
        call_command('footprint', family='midout', target=1e-12, stdout=stdout)
        self.assertIn('midout at p=0.001', stdout.getvalue())

    def test_footprint_needs_data(self):
        with self.assertRaises(CommandError):
            call_command('footprint', stdout=StringIO())

    def test_plot_rates_and_timing(self):
        rows = [
            stat_row(d=d, p=p, errors=errors)
            for d, p, errors in ((3, 0.001, 400), (3, 0.002, 900), (5, 0.001, 90), (5, 0.002, 0))
        ]
        with tempfile.TemporaryDirectory() as tmp:
            source = Path(tmp) / 'stats.csv'
            write_csv(rows, source)
            for kind in ('rate', 'timing'):
                out = Path(tmp) / f'{kind}.svg'
                call_command('plot', source=str(source), out=str(out), kind=kind, stdout=StringIO())
                self.assertIn('<svg', out.read_text(encoding='utf-8'))

    def test_plot_needs_rows(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError):
                call_command('plot', out=str(Path(tmp) / 'empty.svg'), stdout=StringIO())

    def test_drawing_labels_curves(self):
        drawing = error_rate_drawing([stat_row(d=3, errors=5), stat_row(d=5, errors=1)])
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / 'rates.svg'
            save_svg(drawing, out)
            text = out.read_text(encoding='utf-8')
        self.assertIn('midout d=3', text)
        self.assertIn('midout d=5', text)
