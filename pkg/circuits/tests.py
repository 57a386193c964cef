import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase, override_settings

from circuits.choices import Basis, Color, annotation_for, decode_annotation
from circuits.circuit_ir import (
    INSTRUCTION_NAMES,
    MEASUREMENTS,
    NOISE_CHANNELS,
    PAIR_INSTRUCTIONS,
    Circuit,
    DetectorDef,
    Instruction,
    ObservableDef,
    parse_circuit,
    serialize_circuit,
    validate_circuit,
)
from circuits.dem import (
    circuit_to_dem,
    merge_mechanisms,
    parse_dem,
    sample_dem,
    serialize_dem,
    single_fault_dem,
)
from circuits.exceptions import (
    CircuitSyntaxError,
    DemSyntaxError,
    InvalidCircuit,
    InvalidLayout,
    NondeterministicDetector,
    UnannotatedDetector,
    UnknownNoiseModel,
)
from circuits.frame_sim import ShotBatch, read_01, read_b8, sample, write_01, write_b8
from circuits.generators import (
    family_qubit_count,
    gen_midout,
    gen_phenom,
    gen_superdense,
    gen_transit,
    generate,
    is_ablated,
    next_valid_size,
)
from circuits.layouts import gf2_rank, surface_layout, toric_layout, triangle_layout
from circuits.noise import apply_noise
from circuits.tableau import reference_run, trace_measurements
from decoding.oracles import min_logical_weight


FIXTURES = Path(__file__).resolve().parent / 'fixtures'


def load_fixture(name: str) -> Circuit:
    return parse_circuit((FIXTURES / name).read_text(encoding='utf-8'))


def layer_shapes(circuit: Circuit) -> list[dict]:
    """Per non-empty layer: instruction name -> set of targets (pairs for CX)."""
    shapes = []
    for layer in circuit.layers():
        if not layer:
            continue
        shape = {}
        for instruction in layer:
            items = instruction.pairs() if instruction.name == 'CX' else instruction.targets
            shape.setdefault(instruction.name, set()).update(items)
        shapes.append(shape)
    return shapes


def detector_flip_rates(dem) -> np.ndarray:
    rates = np.zeros(dem.detector_count)
    for d in range(dem.detector_count):
        product = 1.0
        for error in dem.errors:
            if d in error.symptoms:
                product *= 1 - 2 * error.probability
        rates[d] = (1 - product) / 2
    return rates


def random_circuit(rng) -> Circuit:
    """Arbitrary instruction soup in the dialect, with annotations on random records."""
    num_qubits = int(rng.integers(2, 7))
    coords = {q: (float(q), float(rng.integers(0, 4))) for q in range(num_qubits)}
    names = sorted(INSTRUCTION_NAMES)
    instructions = []
    measured = 0
    for _ in range(int(rng.integers(1, 25))):
        name = str(rng.choice(names))
        if name == 'TICK':
            instructions.append(Instruction('TICK'))
            continue
        if name in PAIR_INSTRUCTIONS:
            count = 2 * int(rng.integers(1, num_qubits // 2 + 1))
        else:
            count = int(rng.integers(1, num_qubits + 1))
        targets = tuple(int(q) for q in rng.choice(num_qubits, size=count, replace=False))
        argument = None
        if name in NOISE_CHANNELS:
            argument = int(rng.integers(0, 1001)) / 1000
        elif name in MEASUREMENTS and rng.random() < 0.5:
            argument = int(rng.integers(1, 100)) / 1000
        instructions.append(Instruction(name, targets, argument))
        if name in MEASUREMENTS:
            measured += count

    def refs() -> tuple[int, ...]:
        size = int(rng.integers(1, min(measured, 3) + 1))
        return tuple(int(r) for r in rng.choice(measured, size=size, replace=False))

    detectors = []
    observables = []
    if measured:
        for _ in range(int(rng.integers(0, 5))):
            place = (float(rng.integers(0, 5)), float(rng.integers(0, 5)) / 2, float(rng.integers(0, 3)))
            detectors.append(DetectorDef(refs(), place + (float(rng.integers(0, 6)),)))
        observables = [ObservableDef(index, refs()) for index in range(int(rng.integers(0, 3)))]
    return Circuit(
        qubit_coords=coords,
        instructions=tuple(instructions),
        detectors=tuple(detectors),
        observables=tuple(observables),
    )


def chi_square(counts) -> float:
    """Pearson statistic of ``counts`` against a uniform spread."""
    counts = np.asarray(counts, dtype=float)
    expected = counts.sum() / len(counts)
    return float(((counts - expected) ** 2 / expected).sum())


# Bell pairs (0, 1) and (2, 3) opened and closed around the channel, so the
# X-basis records show Z components and the Z-basis records show X components.
BELL_DEPOLARIZE1 = '''RX 0
RZ 1
CX 0 1
DEPOLARIZE1(0.3) 0
CX 0 1
MX 0
MZ 1
DETECTOR(0,0,0,0) rec[-2]
DETECTOR(0,0,0,3) rec[-1]
'''
BELL_DEPOLARIZE2 = '''RX 0 2
RZ 1 3
CX 0 1 2 3
DEPOLARIZE2(0.3) 0 2
CX 0 1 2 3
MX 0 2
MZ 1 3
DETECTOR(0,0,0,0) rec[-4]
DETECTOR(0,0,0,0) rec[-3]
DETECTOR(0,0,0,3) rec[-2]
DETECTOR(0,0,0,3) rec[-1]
'''


class CircuitDialectTests(SimpleTestCase):
    def test_parse_annotated_detector(self):
        circuit = parse_circuit('R 0\nMZ(0.01) 0\nDETECTOR(0,0,0,3) rec[-1]')
        self.assertEqual(circuit.num_qubits, 1)
        self.assertEqual([i.name for i in circuit.instructions], ['RZ', 'MZ'])
        self.assertEqual(circuit.instructions[1].argument, 0.01)
        self.assertEqual(circuit.detector_count, 1)
        self.assertEqual(circuit.detectors[0].measurement_refs, (0,))
        self.assertEqual(circuit.detectors[0].basis_color, (Basis.Z, Color.RED))

    def test_empty_text_is_empty_circuit(self):
        circuit = parse_circuit('')
        self.assertEqual(circuit.instructions, ())
        self.assertEqual(serialize_circuit(circuit), '')

    def test_visualization_lines_and_aliases(self):
        circuit = parse_circuit('POLYGON(1,0,0,0.25) 0 1\nR 0 1\nMARKX(0) 1\nM 0 1\n')
        self.assertEqual([i.name for i in circuit.instructions], ['RZ', 'MZ'])
        self.assertEqual(circuit.num_measurements, 2)

    def test_serialize_single_instruction(self):
        circuit = Circuit(qubit_coords={0: (1.0, 2.0)}, instructions=(Instruction('RX', (0,)),))
        self.assertEqual(serialize_circuit(circuit), 'QUBIT_COORDS(1,2) 0\nRX 0\n')

    def test_syntax_errors_carry_position(self):
        with self.assertRaises(CircuitSyntaxError) as caught:
            parse_circuit('RZ 0\nCX 0\n')
        self.assertEqual(caught.exception.line, 2)

        with self.assertRaises(CircuitSyntaxError) as caught:
            parse_circuit('MZ 0\nDETECTOR rec[-2]')
        self.assertEqual(caught.exception.line, 2)

        with self.assertRaises(CircuitSyntaxError):
            parse_circuit('MZ 0\nDETECTOR rec[0]')
        with self.assertRaises(CircuitSyntaxError):
            parse_circuit('H 0')
        with self.assertRaises(CircuitSyntaxError):
            parse_circuit('X_ERROR(1.5) 0')
        with self.assertRaises(CircuitSyntaxError):
            parse_circuit('CX 0 0')

    def test_observable_include_accumulates(self):
        circuit = parse_circuit('MZ 0 1\nOBSERVABLE_INCLUDE(0) rec[-1]\nOBSERVABLE_INCLUDE(0) rec[-2]')
        self.assertEqual(circuit.observables[0].measurement_refs, (1, 0))

    def test_validate_reports_annotations(self):
        missing = parse_circuit('RZ 0\nMZ 0\nDETECTOR(0,0,0) rec[-1]')
        self.assertIn('annotated with a basis and color', validate_circuit(missing)[0])
        out_of_range = parse_circuit('RZ 0\nMZ 0\nDETECTOR(0,0,0,7) rec[-1]')
        self.assertIn('annotation out of range', validate_circuit(out_of_range)[0])

    def test_fixtures_parse_validate_and_round_trip(self):
        for name in ('superdense_d7.circuit', 'midout_d7.circuit'):
            with self.subTest(name=name):
                circuit = load_fixture(name)
                self.assertEqual(validate_circuit(circuit), [])
                reference_run(circuit)
                self.assertEqual(parse_circuit(serialize_circuit(circuit)), circuit)

    def test_generated_circuit_round_trip(self):
        circuit = gen_phenom('color-hex', 3, 2, 0.01)
        self.assertEqual(parse_circuit(serialize_circuit(circuit)), circuit)

    def test_random_circuits_round_trip(self):
        rng = np.random.default_rng(17)
        for trial in range(300):
            circuit = random_circuit(rng)
            with self.subTest(trial=trial):
                text = serialize_circuit(circuit)
                self.assertEqual(parse_circuit(text), circuit)
                self.assertEqual(serialize_circuit(parse_circuit(text)), text)

    def test_annotation_encoding(self):
        self.assertEqual(annotation_for(Basis.Z, Color.BLUE), 5)
        self.assertEqual(decode_annotation(5), (Basis.Z, Color.BLUE))
        self.assertEqual(decode_annotation(0), (Basis.X, Color.RED))
        with self.assertRaises(ValueError):
            decode_annotation(6)


class ReferenceRunTests(SimpleTestCase):
    def test_plus_state_measured_in_x(self):
        run = trace_measurements(parse_circuit('RX 0\nMX 0'))
        self.assertEqual(run.record.tolist(), [0])
        self.assertFalse(run.random[0])

    def test_random_outcome_is_flagged(self):
        circuit = parse_circuit('RZ 0\nMX 0')
        run = reference_run(circuit)
        self.assertTrue(run.random[0])
        self.assertEqual(run.record.tolist(), [0])

        with self.assertRaises(NondeterministicDetector) as caught:
            reference_run(parse_circuit('RZ 0\nMX 0\nDETECTOR(0,0,0,0) rec[-1]'))
        self.assertEqual(caught.exception.detector, 0)

    def test_bell_pair_parities(self):
        run = trace_measurements(parse_circuit('RX 0\nRZ 1\nCX 0 1\nMZ 0 1'))
        self.assertTrue(run.random[0])
        self.assertFalse(run.random[1])
        self.assertTrue(run.is_deterministic((0, 1)))

    def test_solve_uses_the_pool(self):
        run = trace_measurements(parse_circuit('RX 0\nMZ 0\nMZ 0'))
        self.assertFalse(run.is_deterministic((1,)))
        self.assertEqual(run.solve((1,), [0]), (0, 1))
        self.assertIsNone(run.solve((1,), []))

    def test_unsupported_gate(self):
        with self.assertRaises(InvalidCircuit):
            trace_measurements(Circuit(instructions=(Instruction('H', (0,)),)))


class FrameSamplerTests(SimpleTestCase):
    def test_noiseless_circuit_never_fires(self):
        batch = sample(gen_transit(3, 0.0), 200, seed=3)
        self.assertEqual(batch.detection_events, 0)
        self.assertEqual(int(batch.observable_bits.sum()), 0)

    def test_forced_flip(self):
        batch = sample(parse_circuit('RZ 0\nX_ERROR(1) 0\nMZ 0\nDETECTOR(0,0,0,3) rec[-1]'), 50)
        self.assertTrue(batch.detection_bits.all())

    def test_same_seed_same_bits(self):
        circuit = gen_transit(3, 0.1)
        first = sample(circuit, 2500, seed=11)
        second = sample(circuit, 2500, seed=11, workers=3)
        np.testing.assert_array_equal(first.detection_bits, second.detection_bits)
        np.testing.assert_array_equal(first.observable_bits, second.observable_bits)
        other = sample(circuit, 2500, seed=12)
        self.assertFalse(np.array_equal(first.detection_bits, other.detection_bits))

    def test_detector_marginals_match_dem(self):
        circuit = gen_transit(3, 0.1)
        shots = 20000
        batch = sample(circuit, shots, seed=5)
        expected = detector_flip_rates(circuit_to_dem(circuit))
        observed = batch.detection_bits.mean(axis=0)
        sigma = np.sqrt(expected * (1 - expected) / shots)
        self.assertTrue(np.all(np.abs(observed - expected) <= 5 * sigma + 1e-9))

    def test_dem_sampler_matches_circuit_sampler(self):
        circuit = gen_transit(3, 0.05)
        dem = circuit_to_dem(circuit)
        shots = 20000
        from_circuit = sample(circuit, shots, seed=1).detection_bits.mean(axis=0)
        from_dem = sample_dem(dem, shots, seed=2).detection_bits.mean(axis=0)
        expected = detector_flip_rates(dem)
        sigma = np.sqrt(expected * (1 - expected) / shots)
        self.assertTrue(np.all(np.abs(from_circuit - from_dem) <= 7 * sigma + 1e-9))

    def test_depolarizing_channels_are_uniform(self):
        shots = 60000
        # Critical values of the chi-square distribution at 0.1% for 2 and 14 degrees of freedom.
        for text, width, critical in ((BELL_DEPOLARIZE1, 2, 13.82), (BELL_DEPOLARIZE2, 4, 36.12)):
            with self.subTest(qubits=width // 2):
                bits = sample(parse_circuit(text), shots, seed=21).detection_bits.astype(np.int64)
                codes = bits @ (1 << np.arange(width))
                counts = np.bincount(codes, minlength=1 << width)
                hit = 1 - counts[0] / shots
                self.assertLess(abs(hit - 0.3), 5 * np.sqrt(0.3 * 0.7 / shots))
                self.assertLess(chi_square(counts[1:]), critical)

    def test_b8_layout(self):
        bits = np.array([[1, 0, 0, 0, 0, 0, 0, 0, 1]], dtype=np.uint8)
        batch = ShotBatch(num_shots=1, detection_bits=bits, observable_bits=np.zeros((1, 0), dtype=np.uint8))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'shots.b8'
            write_b8(path, batch)
            self.assertEqual(path.read_bytes(), bytes([0x01, 0x01]))
            again = read_b8(path, num_detectors=9)
            np.testing.assert_array_equal(again.detection_bits, bits)

    def test_01_files(self):
        batch = sample(gen_transit(3, 0.2), 7, seed=4)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'shots.01'
            write_01(path, batch)
            again = read_01(path, batch.num_detectors, batch.num_observables)
        np.testing.assert_array_equal(again.detection_bits, batch.detection_bits)
        np.testing.assert_array_equal(again.observable_bits, batch.observable_bits)


class DetectorErrorModelTests(SimpleTestCase):
    def test_single_flip(self):
        dem = circuit_to_dem(parse_circuit('RZ 0\nX_ERROR(0.01) 0\nMZ 0\nDETECTOR(0,0,0,3) rec[-1]'))
        self.assertEqual(len(dem.errors), 1)
        self.assertEqual(dem.errors[0].symptoms, (0,))
        self.assertAlmostEqual(dem.errors[0].probability, 0.01)

    def test_identical_mechanisms_merge(self):
        dem = circuit_to_dem(parse_circuit(
            'RZ 0\nX_ERROR(0.1) 0\nX_ERROR(0.1) 0\nMZ 0\nDETECTOR(0,0,0,3) rec[-1]'
        ))
        self.assertEqual(len(dem.errors), 1)
        self.assertAlmostEqual(dem.errors[0].probability, 0.18)

    def test_merge_never_exceeds_half(self):
        errors = merge_mechanisms([(0.5, (0,), 0), (0.3, (0,), 0), (0.4, (0,), 0)])
        self.assertLessEqual(errors[0].probability, 0.5)

    def test_measurement_error(self):
        dem = circuit_to_dem(parse_circuit('RX 0\nMX(0.2) 0\nDETECTOR(0,0,0,1) rec[-1]'))
        self.assertEqual(dem.errors[0].symptoms, (0,))
        self.assertAlmostEqual(dem.errors[0].probability, 0.2)
        self.assertEqual(dem.basis_of(0), Basis.X)
        self.assertEqual(dem.color_of(0), Color.GREEN)

    def test_unannotated_symptom(self):
        with self.assertRaises(UnannotatedDetector):
            circuit_to_dem(parse_circuit('RZ 0\nX_ERROR(0.1) 0\nMZ 0\nDETECTOR rec[-1]'))

    def test_transit_d3_has_one_mechanism_per_data_qubit(self):
        dem = circuit_to_dem(gen_transit(3, 0.1))
        self.assertEqual(len(dem.errors), 7)
        for error in dem.errors:
            self.assertAlmostEqual(error.probability, 0.1)
            self.assertLessEqual(len(error.symptoms), 3)
            self.assertEqual({dem.basis_of(d) for d in error.symptoms}, {Basis.Z})
            self.assertEqual(len({dem.color_of(d) for d in error.symptoms}), len(error.symptoms))
        self.assertEqual(sum(1 for e in dem.errors if e.observables), 3)

    def assertMatchesOracle(self, circuit):
        extracted = circuit_to_dem(circuit)
        oracle = single_fault_dem(circuit)
        self.assertEqual(
            [e.signature for e in extracted.errors],
            [e.signature for e in oracle.errors],
        )
        for mine, theirs in zip(extracted.errors, oracle.errors):
            self.assertAlmostEqual(mine.probability, theirs.probability, delta=1e-12)

    def test_transit_matches_single_fault_oracle(self):
        for d in (3, 5):
            with self.subTest(d=d):
                self.assertMatchesOracle(gen_transit(d, 0.01))

    def test_phenom_matches_single_fault_oracle(self):
        self.assertMatchesOracle(gen_phenom('color-hex', 3, 2, 0.01))

    def test_parse_example(self):
        dem = parse_dem('error(0.25) D0 D1 L0\ndetector(0,0,0,0) D0\ndetector(0,0,0,1) D1\n')
        self.assertEqual(len(dem.errors), 1)
        self.assertEqual(dem.errors[0].symptoms, (0, 1))
        self.assertEqual(dem.errors[0].observables, 1)
        self.assertEqual(dem.detector_count, 2)
        self.assertEqual(dem.observable_count, 1)
        self.assertEqual(dem.detector_annotations, {0: (Basis.X, Color.RED), 1: (Basis.X, Color.GREEN)})

    def test_parse_blue_z_annotation(self):
        dem = parse_dem('error(0.1) D0\ndetector(1,2,0,5) D0')
        self.assertEqual(dem.detector_annotations[0], (Basis.Z, Color.BLUE))

    def test_parse_errors(self):
        with self.assertRaises(DemSyntaxError) as caught:
            parse_dem('error(0.1) D0\nshift_detectors 1')
        self.assertEqual(caught.exception.line, 2)
        with self.assertRaises(DemSyntaxError):
            parse_dem('error(2) D0\ndetector(0,0,0,0) D0')
        with self.assertRaises(DemSyntaxError):
            parse_dem('error(0.1) D0\ndetector(0,0,0,9) D0')
        with self.assertRaises(UnannotatedDetector):
            parse_dem('error(0.1) D0')

    def test_serialize_then_parse(self):
        dem = circuit_to_dem(gen_phenom('color-hex', 3, 2, 0.02))
        again = parse_dem(serialize_dem(dem))
        self.assertEqual(again.errors, dem.errors)
        self.assertEqual(again.detector_annotations, dem.detector_annotations)
        self.assertEqual(again.detector_count, dem.detector_count)
        self.assertEqual(again.observable_count, dem.observable_count)


class NoiseTests(SimpleTestCase):
    def test_uniform_gate_layer(self):
        circuit = parse_circuit('CX 0 1\nTICK\nMZ 0 1 2')
        noisy = apply_noise(circuit, 'uniform', 0.001)
        first, second = noisy.layers()
        self.assertEqual(
            [(i.name, i.targets, i.argument) for i in first],
            [('CX', (0, 1), None), ('DEPOLARIZE2', (0, 1), 0.001), ('DEPOLARIZE1', (2,), 0.001)],
        )
        self.assertEqual(
            [(i.name, i.targets, i.argument) for i in second],
            [('MZ', (0, 1, 2), 0.001), ('DEPOLARIZE1', (0, 1, 2), 0.001)],
        )

    def test_uniform_resets(self):
        noisy = apply_noise(parse_circuit('RZ 0\nRX 1'), 'uniform', 0.01)
        self.assertEqual(
            [i.name for i in noisy.instructions],
            ['RZ', 'X_ERROR', 'RX', 'Z_ERROR'],
        )

    def test_zero_strength_strips_noise(self):
        circuit = parse_circuit('RZ 0\nX_ERROR(0.1) 0\nMZ(0.1) 0')
        self.assertEqual(apply_noise(circuit, 'uniform', 0), parse_circuit('RZ 0\nMZ 0'))

    def test_unknown_model(self):
        with self.assertRaises(UnknownNoiseModel):
            apply_noise(parse_circuit('RZ 0'), 'si1000', 0.01)

    def test_transit_noise_between_rounds(self):
        circuit = gen_transit(3, 0.02, rounds=3)
        self.assertEqual(circuit.count('X_ERROR'), 7 * 3)
        self.assertEqual(circuit.count('DEPOLARIZE1'), 0)
        self.assertTrue(all(not i.argument for i in circuit.instructions if i.is_measurement))

    def test_phenom_noise_between_rounds(self):
        circuit = gen_phenom('color-hex', 3, 2, 0.02)
        self.assertEqual(circuit.count('DEPOLARIZE1'), 7 * 2)
        noisy_measurements = [i for i in circuit.instructions if i.is_measurement and i.argument]
        self.assertEqual(sum(len(i.targets) for i in noisy_measurements), 6 * 2)


class LayoutTests(SimpleTestCase):
    def test_triangle_sizes(self):
        for d, qubits in ((3, 7), (5, 19), (7, 37)):
            with self.subTest(d=d):
                layout = triangle_layout(d)
                self.assertEqual(layout.num_data, qubits)
                self.assertEqual(len(layout.faces), (qubits - 1) // 2)
                matrix = layout.stabilizer_matrix('X')
                self.assertEqual(gf2_rank(matrix), len(layout.faces))

    def test_spurs_complete_the_top_faces(self):
        layout = triangle_layout(7, spurs=True)
        self.assertEqual(layout.num_data, 43)
        self.assertEqual(len([f for f in layout.faces if f.kind == 'spur']), 3)

    def test_invalid_distance(self):
        with self.assertRaises(InvalidLayout):
            triangle_layout(4)
        with self.assertRaises(InvalidLayout):
            toric_layout(3)

    def test_surface_logicals_commute_with_checks(self):
        layout = surface_layout(3)
        z_checks = layout.stabilizer_matrix('Z')
        x_logical = np.zeros(layout.num_data, dtype=np.int64)
        x_logical[list(layout.logical('X'))] = 1
        self.assertFalse(np.any(z_checks.astype(np.int64) @ x_logical % 2))
        self.assertEqual(len(layout.faces), 8)

    def test_toric_logicals(self):
        layout = toric_layout(2)
        self.assertEqual(layout.num_data, 24)
        self.assertEqual(len(layout.faces), 12)
        self.assertTrue(layout.logical('X'))
        self.assertTrue(layout.logical('Z'))


class GeneratorTests(SimpleTestCase):
    SMALL = (
        ('transit', 3, 'Z'),
        ('phenom', 3, 'X'),
        ('phenom', 3, 'Z'),
        ('superdense', 3, 'X'),
        ('superdense', 3, 'Z'),
        ('midout', 3, 'X'),
        ('midout', 3, 'Z'),
        ('surface', 3, 'Z'),
        ('rep', 3, 'Z'),
        ('toric', 2, 'Z'),
        ('toric_ablated', 2, 'X'),
    )

    def test_small_circuits_are_valid_and_deterministic(self):
        for family, d, basis in self.SMALL:
            with self.subTest(family=family, basis=basis):
                rounds = 1 if family == 'transit' else 2
                circuit = generate(family, d, rounds=rounds, p=0.0, basis=basis)
                self.assertEqual(validate_circuit(circuit), [])
                reference_run(circuit)
                self.assertGreater(circuit.detector_count, 0)
                self.assertEqual(circuit.observable_count, 1)
                for detector in circuit.detectors:
                    self.assertIn(detector.annotation, range(6))
                batch = sample(circuit, 64, seed=1)
                self.assertEqual(batch.detection_events, 0)
                self.assertEqual(int(batch.observable_bits.sum()), 0)

    def test_noisy_circuits_are_deterministic(self):
        for family in ('superdense', 'midout'):
            with self.subTest(family=family):
                circuit = generate(family, 3, rounds=2, p=0.001, basis='X')
                self.assertEqual(validate_circuit(circuit), [])
                self.assertGreater(len(circuit_to_dem(circuit).errors), 0)

    def test_midout_matches_fixture(self):
        fixture = load_fixture('midout_d7.circuit')
        generated = gen_midout(7, rounds=2, p=0.0, basis='X')
        self.assertEqual(generated.num_qubits, fixture.num_qubits)
        self.assertEqual(layer_shapes(generated), layer_shapes(fixture))
        for q, xy in fixture.qubit_coords.items():
            self.assertEqual(tuple(generated.qubit_coords[q][:2]), tuple(xy[:2]))

    def test_superdense_matches_fixture_structure(self):
        fixture = load_fixture('superdense_d7.circuit')
        generated = gen_superdense(7, rounds=4, p=0.0, basis='X')
        self.assertEqual(generated.num_qubits, 73)
        self.assertEqual(fixture.num_qubits, 73)
        for name in ('CX', 'RZ', 'RX', 'MZ', 'MX'):
            self.assertEqual(generated.count(name), fixture.count(name), name)
        self.assertEqual(
            [sorted({i.name for i in layer}) for layer in generated.layers() if layer],
            [sorted({i.name for i in layer}) for layer in fixture.layers() if layer],
        )
        self.assertEqual(generated.count('CX') // 4, 216)

    def test_midout_uses_fewer_qubits_than_superdense(self):
        for d in (3, 5, 7):
            with self.subTest(d=d):
                midout = family_qubit_count('midout', d)
                superdense = family_qubit_count('superdense', d)
                self.assertLess(midout, superdense)
                self.assertEqual(gen_midout(d, 1, 0.0).num_qubits, midout)
        self.assertEqual(family_qubit_count('midout', 7), 43)
        self.assertEqual(family_qubit_count('superdense', 7), 73)
        self.assertEqual(family_qubit_count('transit', 3), 10)
        self.assertEqual(family_qubit_count('surface', 3), 17)
        self.assertEqual(family_qubit_count('rep', 5), 9)

    def test_toric_ablation_keeps_instructions(self):
        full = gen_phenom('toric-color', 2, 2, 0.01)
        ablated = gen_phenom('toric-color-ablated', 2, 2, 0.01)
        self.assertEqual(full.instructions, ablated.instructions)
        dropped = sum(1 for d in full.detectors if is_ablated(d))
        self.assertGreater(dropped, 0)
        self.assertEqual(full.detector_count - ablated.detector_count, dropped)
        self.assertFalse(any(is_ablated(d) for d in ablated.detectors))

    def test_surface_uses_two_colors(self):
        dem = circuit_to_dem(gen_phenom('surface', 3, 2, 0.01))
        colors = {color for _, color in dem.detector_annotations.values()}
        self.assertEqual(colors, {Color.RED, Color.GREEN})

    def test_rejects_bad_arguments(self):
        with self.assertRaises(InvalidLayout):
            generate('hyperbolic', 3)
        with self.assertRaises(InvalidLayout):
            generate('transit', 3, basis='X')
        with self.assertRaises(InvalidLayout):
            generate('rep', 3, basis='X')
        with self.assertRaises(InvalidLayout):
            generate('midout', 3, rounds=0)

    def test_next_valid_size(self):
        self.assertEqual(next_valid_size('midout', 6.2), 7)
        self.assertEqual(next_valid_size('midout', 1.0), 3)
        self.assertEqual(next_valid_size('toric', 3.0), 4)

    def test_slow_transit_distance(self):
        if not settings.COLORBENCH_RUN_SLOW:
            self.skipTest('Set COLORBENCH_RUN_SLOW=true to run.')
        for d in (3, 5):
            with self.subTest(d=d):
                dem = circuit_to_dem(gen_transit(d, 0.01))
                self.assertEqual(min_logical_weight(dem, limit=d), d)

    def test_midout_hooks_halve_the_distance(self):
        dem = circuit_to_dem(gen_midout(3, 2, 0.001))
        self.assertIsNone(min_logical_weight(dem, limit=1))
        self.assertEqual(min_logical_weight(dem, limit=2), 2)


class CircuitCommandTests(SimpleTestCase):
    def test_gen_dem_sample_pipeline(self):
        with tempfile.TemporaryDirectory() as tmp:
            circuit_path = Path(tmp) / 'transit.circuit'
            dem_path = Path(tmp) / 'transit.dem'
            shots_path = Path(tmp) / 'shots.b8'
            out = StringIO()
            call_command('gen', circuit='transit', d=3, p=0.1, out=str(circuit_path), stdout=out)
            self.assertIn('Wrote transit d=3', out.getvalue())

            call_command('dem', circuit=str(circuit_path), out=str(dem_path), stdout=StringIO())
            dem = parse_dem(dem_path.read_text(encoding='utf-8'))
            self.assertEqual(len(dem.errors), 7)

            call_command('sample', circuit=str(circuit_path), shots=10, seed=3, out=str(shots_path), stdout=StringIO())
            batch = read_b8(shots_path, dem.detector_count, dem.observable_count)
            self.assertEqual(batch.num_shots, 10)

    @override_settings(COLORBENCH_DEFAULT_SHOTS=5)
    def test_sample_uses_default_shots(self):
        with tempfile.TemporaryDirectory() as tmp:
            circuit_path = Path(tmp) / 'c.circuit'
            circuit_path.write_text(serialize_circuit(gen_transit(3, 0.1)), encoding='utf-8')
            shots_path = Path(tmp) / 'shots.01'
            call_command('sample', circuit=str(circuit_path), out=str(shots_path), format='01', stdout=StringIO())
            self.assertEqual(len(shots_path.read_text(encoding='utf-8').splitlines()), 5)

    def test_gen_prints_to_stdout(self):
        out = StringIO()
        call_command('gen', circuit='rep', d=3, stdout=out)
        self.assertEqual(parse_circuit(out.getvalue()), generate('rep', 3))

    def test_errors_become_command_errors(self):
        with self.assertRaises(CommandError):
            call_command('gen', circuit='midout', d=4, stdout=StringIO())
        with self.assertRaises(CommandError):
            call_command('dem', circuit='/nonexistent/file.circuit', stdout=StringIO())
