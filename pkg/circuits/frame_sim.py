"""
Pauli-frame sampling of detection events and observable flips.

Each shot carries an X frame and a Z frame per qubit. Noise channels toggle
frame bits, CX conjugates them, measurements read the anticommuting frame
into the record. Random outcomes of the noiseless circuit are handled by
re-randomizing the stabilizing frame after every measurement and reset, so
only deterministic parities ever reach the output.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circuit_ir import Circuit
from .conf import setting
from .tableau import reference_run


logger = logging.getLogger(__name__)

# Shots per RNG stream. Fixed so that results never depend on worker count.
BLOCK_SIZE = 1024


@dataclass
class ShotBatch:
    num_shots: int
    detection_bits: np.ndarray
    observable_bits: np.ndarray
    seed: int = 0

    @property
    def num_detectors(self) -> int:
        return self.detection_bits.shape[1]

    @property
    def num_observables(self) -> int:
        return self.observable_bits.shape[1]

    @property
    def detection_events(self) -> int:
        return int(self.detection_bits.sum())

    def slice(self, start: int, stop: int) -> 'ShotBatch':
        stop = min(stop, self.num_shots)
        return ShotBatch(
            num_shots=max(stop - start, 0),
            detection_bits=self.detection_bits[start:stop],
            observable_bits=self.observable_bits[start:stop],
            seed=self.seed,
        )


def _block_rng(seed: int, block: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(block,))
    return np.random.Generator(np.random.Philox(sequence))


def _compile(circuit: Circuit) -> list[tuple]:
    ops = []
    for instruction in circuit.instructions:
        if instruction.name == 'TICK' or not instruction.targets:
            continue
        targets = np.array(instruction.targets, dtype=np.intp)
        if instruction.name in ('CX', 'DEPOLARIZE2'):
            ops.append((instruction.name, targets[0::2], targets[1::2], instruction.argument or 0.0))
        else:
            ops.append((instruction.name, targets, None, instruction.argument or 0.0))
    return ops


def _run_block(ops, num_qubits, num_measurements, shots, rng, detector_rows, observable_rows):
    fx = np.zeros((num_qubits, shots), dtype=bool)
    fz = np.zeros((num_qubits, shots), dtype=bool)
    flips = np.zeros((num_measurements, shots), dtype=bool)
    cursor = 0

    for name, a, b, p in ops:
        if name == 'CX':
            fx[b] ^= fx[a]
            fz[a] ^= fz[b]
        elif name == 'RZ':
            fx[a] = False
            fz[a] = rng.random((len(a), shots)) < 0.5
        elif name == 'RX':
            fz[a] = False
            fx[a] = rng.random((len(a), shots)) < 0.5
        elif name in ('MZ', 'MX'):
            seen = fx[a] if name == 'MZ' else fz[a]
            if p:
                seen = seen ^ (rng.random((len(a), shots)) < p)
            flips[cursor:cursor + len(a)] = seen
            cursor += len(a)
            if name == 'MZ':
                fz[a] = rng.random((len(a), shots)) < 0.5
            else:
                fx[a] = rng.random((len(a), shots)) < 0.5
        elif name == 'X_ERROR':
            fx[a] ^= rng.random((len(a), shots)) < p
        elif name == 'Z_ERROR':
            fz[a] ^= rng.random((len(a), shots)) < p
        elif name == 'DEPOLARIZE1':
            hit = rng.random((len(a), shots)) < p
            # 1 = X, 2 = Z, 3 = Y
            pauli = rng.integers(1, 4, size=(len(a), shots)) * hit
            fx[a] ^= (pauli & 1).astype(bool)
            fz[a] ^= (pauli & 2).astype(bool)
        elif name == 'DEPOLARIZE2':
            hit = rng.random((len(a), shots)) < p
            # bit 0: X on first, bit 1: Z on first, bit 2: X on second, bit 3: Z on second.
            pauli = rng.integers(1, 16, size=(len(a), shots)) * hit
            fx[a] ^= (pauli & 1).astype(bool)
            fz[a] ^= (pauli & 2).astype(bool)
            fx[b] ^= (pauli & 4).astype(bool)
            fz[b] ^= (pauli & 8).astype(bool)

    def parities(rows):
        out = np.zeros((len(rows), shots), dtype=bool)
        for i, refs in enumerate(rows):
            if refs:
                out[i] = np.logical_xor.reduce(flips[list(refs)], axis=0)
        return out.T

    return parities(detector_rows), parities(observable_rows)


def sample(circuit: Circuit, shots: int, seed: int = 0, workers: int | None = None) -> ShotBatch:
    """
    Sample ``shots`` runs of a noisy circuit.
    Same circuit, shot count and seed always give the same bits.
    """
    shots = int(shots)
    if shots < 0:
        raise ValueError('shots must be non-negative.')
    reference_run(circuit)

    ops = _compile(circuit)
    num_qubits = max(circuit.num_qubits, 1)
    num_measurements = circuit.num_measurements
    detector_rows = [d.measurement_refs for d in circuit.detectors]
    observable_rows = [o.measurement_refs for o in circuit.observables]

    blocks = [(start, min(BLOCK_SIZE, shots - start)) for start in range(0, shots, BLOCK_SIZE)]

    def run(index_and_block):
        index, (_, size) = index_and_block
        return _run_block(
            ops, num_qubits, num_measurements, size, _block_rng(seed, index),
            detector_rows, observable_rows,
        )

    workers = workers or setting('COLORBENCH_SAMPLER_WORKERS', 1)
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, enumerate(blocks)))
    else:
        results = [run(item) for item in enumerate(blocks)]

    if results:
        detection = np.concatenate([r[0] for r in results], axis=0).astype(np.uint8)
        observables = np.concatenate([r[1] for r in results], axis=0).astype(np.uint8)
    else:
        detection = np.zeros((0, len(detector_rows)), dtype=np.uint8)
        observables = np.zeros((0, len(observable_rows)), dtype=np.uint8)

    logger.debug('Sampled %d shots over %d blocks (seed=%d).', shots, len(blocks), seed)
    return ShotBatch(num_shots=shots, detection_bits=detection, observable_bits=observables, seed=int(seed))


def _row_bits(batch: ShotBatch) -> np.ndarray:
    return np.concatenate([batch.detection_bits, batch.observable_bits], axis=1).astype(np.uint8)


def _split_rows(rows: np.ndarray, num_detectors: int, num_observables: int, seed: int) -> ShotBatch:
    return ShotBatch(
        num_shots=rows.shape[0],
        detection_bits=rows[:, :num_detectors].astype(np.uint8),
        observable_bits=rows[:, num_detectors:num_detectors + num_observables].astype(np.uint8),
        seed=seed,
    )


def write_b8(path, batch: ShotBatch) -> None:
    """Packed rows, little-endian bit order, detectors then observables, padded to whole bytes."""
    packed = np.packbits(_row_bits(batch), axis=1, bitorder='little')
    Path(path).write_bytes(packed.tobytes())


def read_b8(path, num_detectors: int, num_observables: int = 0, seed: int = 0) -> ShotBatch:
    width = num_detectors + num_observables
    row_bytes = (width + 7) // 8
    data = np.frombuffer(Path(path).read_bytes(), dtype=np.uint8)
    if row_bytes == 0:
        return _split_rows(np.zeros((0, 0), dtype=np.uint8), num_detectors, num_observables, seed)
    if data.size % row_bytes:
        raise ValueError(f'b8 data of {data.size} bytes is not a whole number of {row_bytes}-byte rows.')
    rows = np.unpackbits(data.reshape(-1, row_bytes), axis=1, bitorder='little')[:, :width]
    return _split_rows(rows, num_detectors, num_observables, seed)


def write_01(path, batch: ShotBatch) -> None:
    rows = _row_bits(batch)
    text = ''.join(''.join('1' if bit else '0' for bit in row) + '\n' for row in rows)
    Path(path).write_text(text, encoding='utf-8')


def read_01(path, num_detectors: int, num_observables: int = 0, seed: int = 0) -> ShotBatch:
    width = num_detectors + num_observables
    rows = []
    for line_no, line in enumerate(Path(path).read_text(encoding='utf-8').splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if len(line) != width or set(line) - {'0', '1'}:
            raise ValueError(f'line {line_no}: expected {width} characters of 0/1.')
        rows.append([ch == '1' for ch in line])
    array = np.array(rows, dtype=np.uint8).reshape(len(rows), width)
    return _split_rows(array, num_detectors, num_observables, seed)
