"""
Detector error models: extraction from noisy circuits, text form, sampling.

Text form::

    error(0.25) D0 D1 L0
    detector(0,0,0,0) D0
    detector(0,0,0,1) D1
    logical_observable L1

The 4th detector coordinate is the (basis, color) annotation, 0..5.
"""

import logging
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .choices import decode_annotation
from .circuit_ir import Circuit, Instruction, format_number
from .exceptions import DemSyntaxError, UnannotatedDetector
from .frame_sim import BLOCK_SIZE, ShotBatch, _block_rng, sample
from .tableau import reference_run


logger = logging.getLogger(__name__)

MIN_PROBABILITY = 1e-15


def xor_probability(p1: float, p2: float) -> float:
    """Probability that exactly one of two independent events happens."""
    return p1 * (1 - p2) + p2 * (1 - p1)


@dataclass(frozen=True)
class ErrorMechanism:
    probability: float
    symptoms: tuple[int, ...]
    observables: int = 0

    @property
    def signature(self) -> tuple[tuple[int, ...], int]:
        return self.symptoms, self.observables

    @property
    def observable_indices(self) -> list[int]:
        return [k for k in range(self.observables.bit_length()) if self.observables >> k & 1]

    def to_text(self) -> str:
        parts = [f'error({format_number(self.probability)})']
        parts.extend(f'D{d}' for d in self.symptoms)
        parts.extend(f'L{k}' for k in self.observable_indices)
        return ' '.join(parts)


@dataclass(frozen=True)
class DetectorErrorModel:
    errors: tuple[ErrorMechanism, ...] = ()
    detector_annotations: dict[int, tuple[str, int]] = field(default_factory=dict)
    detector_count: int = 0
    observable_count: int = 0
    detector_coords: dict[int, tuple[float, ...]] = field(default_factory=dict)

    def color_of(self, detector: int) -> int:
        try:
            return self.detector_annotations[detector][1]
        except KeyError:
            raise UnannotatedDetector(detector) from None

    def basis_of(self, detector: int) -> str:
        try:
            return self.detector_annotations[detector][0]
        except KeyError:
            raise UnannotatedDetector(detector) from None

    def check_annotations(self) -> None:
        for error in self.errors:
            for d in error.symptoms:
                if d not in self.detector_annotations:
                    raise UnannotatedDetector(d)


def merge_mechanisms(pieces) -> tuple[ErrorMechanism, ...]:
    """
    Merge (probability, symptoms, observables) pieces with equal signatures,
    drop no-op and negligible ones, and sort canonically.
    """
    merged = {}
    for probability, symptoms, observables in pieces:
        symptoms = tuple(sorted(symptoms))
        if not symptoms and not observables:
            continue
        key = (symptoms, observables)
        merged[key] = xor_probability(merged.get(key, 0.0), probability)
    errors = [
        ErrorMechanism(p, symptoms, observables)
        for (symptoms, observables), p in merged.items()
        if p >= MIN_PROBABILITY
    ]
    errors.sort(key=lambda e: (e.symptoms, e.observables))
    return tuple(errors)


def _annotations_from(circuit: Circuit) -> tuple[dict, dict]:
    annotations = {}
    coords = {}
    for index, detector in enumerate(circuit.detectors):
        coords[index] = detector.coords
        if detector.annotation is not None and 0 <= detector.annotation <= 5:
            annotations[index] = decode_annotation(detector.annotation)
    return annotations, coords


def _bits(mask: int, detector_count: int) -> tuple[tuple[int, ...], int]:
    low = mask & ((1 << detector_count) - 1)
    symptoms = []
    d = 0
    while low:
        if low & 1:
            symptoms.append(d)
        low >>= 1
        d += 1
    return tuple(symptoms), mask >> detector_count


def circuit_to_dem(circuit: Circuit) -> DetectorErrorModel:
    """
    Propagate every elementary fault to the detectors and observables it flips.

    Runs backwards over the circuit keeping, per qubit, the detector set an X
    (or Z) error at the current point would flip. Detectors occupy the low
    bits of each word and observables sit above them.
    """
    reference_run(circuit)
    num_detectors = circuit.detector_count
    num_qubits = max(circuit.num_qubits, 1)

    sensitivity = [0] * circuit.num_measurements
    for index, detector in enumerate(circuit.detectors):
        for ref in detector.measurement_refs:
            sensitivity[ref] ^= 1 << index
    for observable in circuit.observables:
        for ref in observable.measurement_refs:
            sensitivity[ref] ^= 1 << (num_detectors + observable.index)

    sx = [0] * num_qubits
    sz = [0] * num_qubits
    pieces = []
    cursor = circuit.num_measurements

    for instruction in reversed(circuit.instructions):
        name = instruction.name
        p = instruction.argument or 0.0
        if name == 'CX':
            for control, target in reversed(instruction.pairs()):
                sx[control] ^= sx[target]
                sz[target] ^= sz[control]
        elif instruction.is_measurement:
            for q in reversed(instruction.targets):
                cursor -= 1
                word = sensitivity[cursor]
                if p:
                    pieces.append((p, word))
                if name == 'MZ':
                    sx[q] ^= word
                else:
                    sz[q] ^= word
        elif instruction.is_reset:
            for q in instruction.targets:
                sx[q] = 0
                sz[q] = 0
        elif name == 'X_ERROR':
            pieces.extend((p, sx[q]) for q in instruction.targets)
        elif name == 'Z_ERROR':
            pieces.extend((p, sz[q]) for q in instruction.targets)
        elif name == 'DEPOLARIZE1':
            for q in instruction.targets:
                pieces.extend([(p / 3, sx[q]), (p / 3, sz[q]), (p / 3, sx[q] ^ sz[q])])
        elif name == 'DEPOLARIZE2':
            for a, b in instruction.pairs():
                for pauli in range(1, 16):
                    word = 0
                    if pauli & 1:
                        word ^= sx[a]
                    if pauli & 2:
                        word ^= sz[a]
                    if pauli & 4:
                        word ^= sx[b]
                    if pauli & 8:
                        word ^= sz[b]
                    pieces.append((p / 15, word))

    errors = merge_mechanisms(
        (p, *_bits(word, num_detectors)) for p, word in pieces if p > 0
    )
    annotations, coords = _annotations_from(circuit)
    dem = DetectorErrorModel(
        errors=errors,
        detector_annotations=annotations,
        detector_count=num_detectors,
        observable_count=circuit.observable_count,
        detector_coords=coords,
    )
    dem.check_annotations()
    logger.debug('Extracted %d mechanisms over %d detectors.', len(errors), num_detectors)
    return dem


def fault_sites(circuit: Circuit):
    """
    Yield (probability, replacement instructions, instruction index) for every
    elementary fault of the circuit, each fault written as certain noise.
    """
    for index, instruction in enumerate(circuit.instructions):
        p = instruction.argument or 0.0
        if not p:
            continue
        name = instruction.name
        if instruction.is_measurement:
            targets = instruction.targets
            for k in range(len(targets)):
                replacement = []
                if targets[:k]:
                    replacement.append(Instruction(name, targets[:k]))
                replacement.append(Instruction(name, (targets[k],), 1.0))
                if targets[k + 1:]:
                    replacement.append(Instruction(name, targets[k + 1:]))
                yield p, replacement, index
        elif name in ('X_ERROR', 'Z_ERROR'):
            for q in instruction.targets:
                yield p, [Instruction(name, (q,), 1.0)], index
        elif name == 'DEPOLARIZE1':
            for q in instruction.targets:
                for pauli in (1, 2, 3):
                    yield p / 3, _pauli_instructions(((q, pauli),)), index
        elif name == 'DEPOLARIZE2':
            for a, b in instruction.pairs():
                for pauli in range(1, 16):
                    yield p / 15, _pauli_instructions(((a, pauli & 3), (b, pauli >> 2))), index


def _pauli_instructions(parts) -> list[Instruction]:
    out = []
    for q, pauli in parts:
        if pauli & 1:
            out.append(Instruction('X_ERROR', (q,), 1.0))
        if pauli & 2:
            out.append(Instruction('Z_ERROR', (q,), 1.0))
    return out


def single_fault_dem(circuit: Circuit) -> DetectorErrorModel:
    """
    Reference model built by simulating each elementary fault alone at
    probability 1 and reading off the flipped detectors and observables.
    """
    pieces = []
    for p, replacement, index in fault_sites(circuit):
        instructions = []
        for position, instruction in enumerate(circuit.instructions):
            if position == index:
                instructions.extend(replacement)
            elif instruction.is_noise:
                continue
            elif instruction.is_measurement and instruction.argument:
                instructions.append(replace(instruction, argument=None))
            else:
                instructions.append(instruction)
        batch = sample(replace(circuit, instructions=tuple(instructions)), 1, seed=0)
        symptoms = tuple(int(d) for d in np.flatnonzero(batch.detection_bits[0]))
        observables = 0
        for k in np.flatnonzero(batch.observable_bits[0]):
            observables |= 1 << int(k)
        pieces.append((p, symptoms, observables))

    annotations, coords = _annotations_from(circuit)
    return DetectorErrorModel(
        errors=merge_mechanisms(pieces),
        detector_annotations=annotations,
        detector_count=circuit.detector_count,
        observable_count=circuit.observable_count,
        detector_coords=coords,
    )


_ERROR_RE = re.compile(r'^error\(([^)]*)\)(.*)$')
_DETECTOR_RE = re.compile(r'^detector(?:\(([^)]*)\))?\s+D(\d+)\s*$')
_OBSERVABLE_RE = re.compile(r'^logical_observable\s+L(\d+)\s*$')


def parse_dem(text: str) -> DetectorErrorModel:
    pieces = []
    coords = {}
    highest_detector = -1
    highest_observable = -1

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split('#', 1)[0].strip()
        if not line:
            continue
        match = _ERROR_RE.match(line)
        if match:
            try:
                probability = float(match.group(1))
            except ValueError:
                raise DemSyntaxError(f'Bad probability "{match.group(1)}".', line_no) from None
            if not 0 <= probability <= 1:
                raise DemSyntaxError(f'Probability {probability} is outside [0, 1].', line_no)
            symptoms = set()
            observables = 0
            for token in match.group(2).split():
                if re.fullmatch(r'D\d+', token):
                    symptoms ^= {int(token[1:])}
                elif re.fullmatch(r'L\d+', token):
                    observables ^= 1 << int(token[1:])
                else:
                    raise DemSyntaxError(f'Bad error target "{token}".', line_no)
            highest_detector = max([highest_detector, *symptoms])
            highest_observable = max(highest_observable, observables.bit_length() - 1)
            pieces.append((probability, tuple(sorted(symptoms)), observables))
            continue
        match = _DETECTOR_RE.match(line)
        if match:
            values = ()
            if match.group(1) and match.group(1).strip():
                try:
                    values = tuple(float(v) for v in match.group(1).split(','))
                except ValueError:
                    raise DemSyntaxError(f'Bad detector coordinates "{match.group(1)}".', line_no) from None
            detector = int(match.group(2))
            coords[detector] = values
            highest_detector = max(highest_detector, detector)
            continue
        match = _OBSERVABLE_RE.match(line)
        if match:
            highest_observable = max(highest_observable, int(match.group(1)))
            continue
        raise DemSyntaxError(f'Cannot read line "{line}".', line_no)

    annotations = {}
    for detector, values in coords.items():
        if len(values) < 4:
            continue
        value = values[3]
        if not float(value).is_integer() or not 0 <= value <= 5:
            raise DemSyntaxError(f'Detector D{detector} has annotation {format_number(value)} outside 0..5.')
        annotations[detector] = decode_annotation(int(value))

    dem = DetectorErrorModel(
        errors=merge_mechanisms(pieces),
        detector_annotations=annotations,
        detector_count=highest_detector + 1,
        observable_count=highest_observable + 1,
        detector_coords=coords,
    )
    dem.check_annotations()
    return dem


def serialize_dem(dem: DetectorErrorModel) -> str:
    lines = [error.to_text() for error in dem.errors]
    for detector in sorted(dem.detector_coords):
        values = dem.detector_coords[detector]
        head = f'detector({",".join(format_number(v) for v in values)})' if values else 'detector'
        lines.append(f'{head} D{detector}')
    used = 0
    for error in dem.errors:
        used |= error.observables
    lines.extend(
        f'logical_observable L{k}' for k in range(dem.observable_count) if not used >> k & 1
    )
    return '\n'.join(lines) + ('\n' if lines else '')


def sample_dem(dem: DetectorErrorModel, shots: int, seed: int = 0) -> ShotBatch:
    """Treat every mechanism as an independent coin and XOR together what it flips."""
    shots = int(shots)
    detection = np.zeros((shots, dem.detector_count), dtype=np.uint8)
    observables = np.zeros((shots, dem.observable_count), dtype=np.uint8)
    for block, start in enumerate(range(0, shots, BLOCK_SIZE)):
        size = min(BLOCK_SIZE, shots - start)
        rng = _block_rng(seed, block)
        coins = rng.random((size, len(dem.errors))) < np.array([e.probability for e in dem.errors])
        for j, error in enumerate(dem.errors):
            rows = start + np.flatnonzero(coins[:, j])
            if not rows.size:
                continue
            if error.symptoms:
                detection[np.ix_(rows, error.symptoms)] ^= 1
            if error.observables:
                observables[np.ix_(rows, error.observable_indices)] ^= 1
    return ShotBatch(num_shots=shots, detection_bits=detection, observable_bits=observables, seed=int(seed))
