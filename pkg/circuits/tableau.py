"""
Noiseless stabilizer-tableau run of a circuit.

Every measurement outcome is tracked symbolically: bit 0 of a dependency
word is the constant part of the outcome and bit ``v + 1`` marks a random
variable ``v``. A random measurement introduces a fresh variable; resets
that collapse a random state introduce a hidden variable that no record
entry carries. A parity of record entries is deterministic exactly when
its dependency words XOR down to a constant.

The gate set keeps every tableau row a pure X-type or pure Z-type Pauli,
so row products never pick up phases and signs reduce to XORs.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .circuit_ir import Circuit
from .exceptions import InvalidCircuit, NondeterministicDetector


logger = logging.getLogger(__name__)

HIDDEN = -1


@dataclass(frozen=True)
class ReferenceRun:
    record: np.ndarray
    random: np.ndarray
    dependencies: tuple[int, ...]
    variable_owner: tuple[int, ...]

    def parity(self, refs) -> int:
        total = 0
        for ref in refs:
            total ^= self.dependencies[ref]
        return total

    def is_deterministic(self, refs) -> bool:
        return self.parity(refs) >> 1 == 0

    def solve(self, refs, pool) -> tuple[int, ...] | None:
        """
        Add a subset of ``pool`` to ``refs`` so that their parity becomes
        deterministic. Earlier entries of ``pool`` are preferred.
        Returns None when no such subset exists.
        """
        chosen = set()
        for ref in refs:
            chosen ^= {ref}
        target = self.parity(chosen) >> 1
        if not target:
            return tuple(sorted(chosen))

        basis = {}
        for m in pool:
            word = self.dependencies[m] >> 1
            members = {m}
            while word:
                top = word.bit_length() - 1
                if top not in basis:
                    basis[top] = (word, members)
                    break
                pivot_word, pivot_members = basis[top]
                word ^= pivot_word
                members = members ^ pivot_members

        while target:
            top = target.bit_length() - 1
            if top not in basis:
                return None
            pivot_word, pivot_members = basis[top]
            target ^= pivot_word
            chosen ^= pivot_members
        return tuple(sorted(chosen))


class _Tableau:
    def __init__(self, num_qubits: int):
        n = num_qubits
        self.n = n
        self.xs = np.zeros((2 * n, n), dtype=bool)
        self.zs = np.zeros((2 * n, n), dtype=bool)
        self.xs[np.arange(n), np.arange(n)] = True
        self.zs[n + np.arange(n), np.arange(n)] = True
        self.signs = [0] * (2 * n)
        self.variable_owner = []

    def new_variable(self, owner: int) -> int:
        self.variable_owner.append(owner)
        return 1 << len(self.variable_owner)

    def cx(self, control: int, target: int) -> None:
        self.xs[:, target] ^= self.xs[:, control]
        self.zs[:, control] ^= self.zs[:, target]

    def measure(self, qubit: int, basis: str, owner: int) -> tuple[int, bool]:
        """Collapse onto the basis eigenstate; returns (dependency word, was random)."""
        n = self.n
        # Rows anticommuting with Z_q carry X on q, and vice versa.
        hit = self.xs[:, qubit] if basis == 'Z' else self.zs[:, qubit]
        stab_hits = np.flatnonzero(hit[n:])
        if stab_hits.size:
            p = n + int(stab_hits[0])
            for i in np.flatnonzero(hit):
                i = int(i)
                if i == p:
                    continue
                self.xs[i] ^= self.xs[p]
                self.zs[i] ^= self.zs[p]
                self.signs[i] ^= self.signs[p]
            self.xs[p - n] = self.xs[p]
            self.zs[p - n] = self.zs[p]
            self.signs[p - n] = self.signs[p]
            self.xs[p] = False
            self.zs[p] = False
            if basis == 'Z':
                self.zs[p, qubit] = True
            else:
                self.xs[p, qubit] = True
            word = self.new_variable(owner)
            self.signs[p] = word
            return word, True

        word = 0
        for i in np.flatnonzero(hit[:n]):
            word ^= self.signs[n + int(i)]
        return word, False

    def flip_conditionally(self, qubit: int, basis: str, word: int) -> None:
        """Apply X (basis Z) or Z (basis X) on ``qubit`` whenever ``word`` is 1."""
        if not word:
            return
        hit = self.zs[self.n:, qubit] if basis == 'Z' else self.xs[self.n:, qubit]
        for i in np.flatnonzero(hit):
            self.signs[self.n + int(i)] ^= word


def trace_measurements(circuit: Circuit) -> ReferenceRun:
    """Run the circuit without noise, tracking what every measurement depends on."""
    tableau = _Tableau(max(circuit.num_qubits, 1))
    dependencies = []
    random_flags = []

    for instruction in circuit.instructions:
        name = instruction.name
        if name == 'CX':
            for control, target in instruction.pairs():
                tableau.cx(control, target)
        elif instruction.is_measurement:
            for q in instruction.targets:
                word, was_random = tableau.measure(q, instruction.basis, len(dependencies))
                dependencies.append(word)
                random_flags.append(was_random)
        elif instruction.is_reset:
            for q in instruction.targets:
                word, _ = tableau.measure(q, instruction.basis, HIDDEN)
                tableau.flip_conditionally(q, instruction.basis, word)
        elif name == 'TICK' or instruction.is_noise:
            continue
        else:
            raise InvalidCircuit(f'Cannot simulate instruction "{name}".')

    return ReferenceRun(
        record=np.array([w & 1 for w in dependencies], dtype=np.uint8),
        random=np.array(random_flags, dtype=bool),
        dependencies=tuple(dependencies),
        variable_owner=tuple(tableau.variable_owner),
    )


def reference_run(circuit: Circuit) -> ReferenceRun:
    """
    Deterministic reference record of a circuit. Random outcomes are fixed to 0.
    Raises NondeterministicDetector when a detector or observable parity is random.
    """
    run = trace_measurements(circuit)
    for index, detector in enumerate(circuit.detectors):
        if not run.is_deterministic(detector.measurement_refs):
            raise NondeterministicDetector(f'Detector D{index} depends on a random measurement.', index)
    for observable in circuit.observables:
        if not run.is_deterministic(observable.measurement_refs):
            raise NondeterministicDetector(f'Observable L{observable.index} depends on a random measurement.')
    if run.random.any():
        logger.debug('Reference run fixed %d random outcomes to 0.', int(run.random.sum()))
    return run
