"""
Circuit families: transit and phenomenological stabilizer rounds, the
superdense color code cycle and the middle-out color code cycle.

Generators lay out an ideal circuit, tag each stabilizer measurement with
the face and basis it reports, and then derive detectors from a noiseless
reference run: a measurement is compared with the previous report of the
same stabilizer, and random outcomes left over (feedback that was never
applied) are cancelled with the fewest recent measurements possible.
"""

import logging
import math
from dataclasses import dataclass, field

from .choices import Basis, CircuitFamily, NoiseModel, annotation_for
from .circuit_ir import Circuit, DetectorDef, Instruction, ObservableDef
from .exceptions import InvalidLayout
from .layouts import (
    Layout,
    check_distance,
    repetition_layout,
    surface_layout,
    toric_layout,
    triangle_layout,
)
from .noise import apply_noise
from .tableau import trace_measurements


logger = logging.getLogger(__name__)


class PhenomCode:
    COLOR = 'color-hex'
    SURFACE = 'surface'
    REPETITION = 'repetition'
    TORIC = 'toric-color'
    TORIC_ABLATED = 'toric-color-ablated'

    ALL = (COLOR, SURFACE, REPETITION, TORIC, TORIC_ABLATED)


def other_basis(basis: str) -> str:
    return 'Z' if basis == 'X' else 'X'


def check_basis(basis: str) -> str:
    basis = (basis or '').strip().upper()
    if basis not in Basis.values:
        raise InvalidLayout(f'Basis must be X or Z, got "{basis}".')
    return basis


def check_rounds(rounds: int) -> int:
    rounds = int(rounds)
    if rounds < 1:
        raise InvalidLayout(f'Rounds must be >= 1, got {rounds}.')
    return rounds


@dataclass
class _Builder:
    """
    Accumulates layers and measurement tags. With ``dual`` set every gate is
    conjugated by Hadamards on all qubits: resets and measurements swap basis
    and CX swaps control and target.
    """
    coords: dict[int, tuple[float, ...]]
    dual: bool = False
    layers: list = field(default_factory=list)
    keys: list = field(default_factory=list)
    times: list = field(default_factory=list)
    measure_layers: list = field(default_factory=list)
    last_measurement: dict = field(default_factory=dict)

    def basis(self, basis: str) -> str:
        return other_basis(basis) if self.dual else basis

    def cx(self, pairs) -> None:
        if not pairs:
            return
        if self.dual:
            pairs = [(b, a) for a, b in pairs]
        self.layers.append([Instruction('CX', tuple(q for pair in pairs for q in pair))])

    def reset(self, z=(), x=()) -> None:
        z, x = (x, z) if self.dual else (z, x)
        layer = []
        if z:
            layer.append(Instruction('RZ', tuple(z)))
        if x:
            layer.append(Instruction('RX', tuple(x)))
        if layer:
            self.layers.append(layer)

    def measure(self, items, time: int) -> None:
        """``items`` holds (qubit, basis, key) with key None for untagged readouts."""
        layer = []
        indices = []
        for basis in ('Z', 'X'):
            chosen = [(q, key) for q, b, key in items if self.basis(b) == basis]
            if not chosen:
                continue
            layer.append(Instruction('MZ' if basis == 'Z' else 'MX', tuple(q for q, _ in chosen)))
            for q, key in chosen:
                index = len(self.keys)
                if key is not None:
                    key = (key[0], self.basis(key[1]))
                self.keys.append(key)
                self.times.append(time)
                self.last_measurement[q] = index
                indices.append(index)
        self.layers.append(layer)
        self.measure_layers.append(indices)

    def instructions(self) -> tuple[Instruction, ...]:
        out = []
        for position, layer in enumerate(self.layers):
            if position:
                out.append(Instruction('TICK'))
            out.extend(layer)
        return tuple(out)


def _centroid(layout: Layout, face) -> tuple[float, float]:
    xs = [layout.coords[q][0] for q in face.qubits]
    ys = [layout.coords[q][1] for q in face.qubits]
    return round(sum(xs) / len(xs), 3), round(sum(ys) / len(ys), 3)


def _localize(run, refs, earlier_layers) -> tuple[int, ...] | None:
    """Deterministic version of ``refs``, widening the pool one earlier layer at a time."""
    pool = []
    solved = run.solve(refs, pool)
    for layer in earlier_layers:
        if solved is not None:
            break
        pool.extend(layer)
        solved = run.solve(refs, pool)
    return solved


def _annotate(builder: _Builder, layout: Layout, finals, observable_refs) -> Circuit:
    """
    Attach detectors and the observable to the built circuit.

    ``finals`` holds (face index, basis, refs) for stabilizers read off the
    final data measurement.
    """
    bare = Circuit(qubit_coords=builder.coords, instructions=builder.instructions())
    run = trace_measurements(bare)
    layer_of = {}
    for number, indices in enumerate(builder.measure_layers):
        for index in indices:
            layer_of[index] = number

    def earlier(index):
        number = layer_of[index]
        same = [i for i in builder.measure_layers[number] if i < index]
        return [same] + [builder.measure_layers[k] for k in range(number - 1, -1, -1)]

    detectors = []
    emitted = set()
    previous = {}

    def emit(key, refs, time):
        face = layout.faces[key[0]]
        x, y = _centroid(layout, face)
        if not refs or refs in emitted:
            return
        emitted.add(refs)
        detectors.append(DetectorDef(refs, (x, y, float(time), float(annotation_for(key[1], face.color)))))

    for index, key in enumerate(builder.keys):
        if key is None:
            continue
        candidate = [index]
        if key in previous:
            candidate.append(previous[key])
        previous[key] = index
        emit(key, _localize(run, candidate, earlier(index)), builder.times[index])

    final_time = max(builder.times, default=0) + 1
    recent_layers = builder.measure_layers[::-1]
    for face_index, basis, refs in finals:
        key = (face_index, builder.basis(basis))
        candidate = list(refs)
        if key in previous:
            candidate.append(previous[key])
        emit(key, _localize(run, candidate, recent_layers), final_time)

    observables = ()
    if observable_refs is not None:
        refs = _localize(run, observable_refs, recent_layers)
        if refs is None:
            raise InvalidLayout(f'{layout.name}: the logical observable is not deterministic.')
        observables = (ObservableDef(0, refs),)

    circuit = Circuit(
        qubit_coords=builder.coords,
        instructions=bare.instructions,
        detectors=tuple(detectors),
        observables=observables,
    )
    logger.debug('%s: %d detectors.', layout.name, len(detectors))
    return circuit


def _greedy_layers(pairs) -> list[list[tuple[int, int]]]:
    layers = []
    busy = []
    for a, b in pairs:
        for layer, used in zip(layers, busy):
            if a not in used and b not in used:
                layer.append((a, b))
                used.update((a, b))
                break
        else:
            layers.append([(a, b)])
            busy.append({a, b})
    return layers


def _gadget_pairs(layout: Layout, ancillas, basis: str) -> list[tuple[int, int]]:
    """CX pairs of every ``basis`` gadget, ordered by position within the face."""
    pairs = []
    for position in range(max((len(face.qubits) for face in layout.faces), default=0)):
        for q, f, b in ancillas:
            qubits = layout.faces[f].qubits
            if b != basis or position >= len(qubits):
                continue
            pairs.append((qubits[position], q) if basis == 'Z' else (q, qubits[position]))
    return pairs


def _stabilizer_rounds(layout: Layout, rounds: int, basis: str, measured_bases: str) -> Circuit:
    """Ideal memory experiment with one ancilla per measured stabilizer."""
    n = layout.num_data
    coords = {q: xy for q, xy in enumerate(layout.coords)}
    ancillas = []
    for face_index, face in enumerate(layout.faces):
        x, y = _centroid(layout, face)
        for b in measured_bases:
            if face.measures(b):
                q = n + len(ancillas)
                coords[q] = (x - 0.25, y) if b == 'X' else (x + 0.25, y)
                ancillas.append((q, face_index, b))

    z_pairs = _gadget_pairs(layout, ancillas, 'Z')
    x_pairs = _gadget_pairs(layout, ancillas, 'X')

    builder = _Builder(coords)
    data = list(range(n))
    builder.reset(z=data if basis == 'Z' else (), x=data if basis == 'X' else ())
    for t in range(rounds):
        builder.reset(
            z=[q for q, _, b in ancillas if b == 'Z'],
            x=[q for q, _, b in ancillas if b == 'X'],
        )
        for layer in _greedy_layers(z_pairs) + _greedy_layers(x_pairs):
            builder.cx(layer)
        builder.measure([(q, b, (f, b)) for q, f, b in ancillas], time=t)
    builder.measure([(q, basis, None) for q in data], time=rounds)

    finals = [
        (f, basis, [builder.last_measurement[q] for q in face.qubits])
        for f, face in enumerate(layout.faces) if face.measures(basis) and basis in measured_bases
    ]
    observable = [builder.last_measurement[q] for q in layout.logical(basis)]
    return _annotate(builder, layout, finals, observable)


def gen_transit(d: int, p: float, rounds: int = 1) -> Circuit:
    """Color code under bit flips between rounds of perfect Z stabilizer readout."""
    layout = triangle_layout(check_distance(d))
    ideal = _stabilizer_rounds(layout, check_rounds(rounds), 'Z', 'Z')
    return apply_noise(ideal, NoiseModel.TRANSIT, p)


def _phenom_layout(code: str, size: int) -> Layout:
    if code == PhenomCode.COLOR:
        return triangle_layout(check_distance(size))
    if code == PhenomCode.SURFACE:
        return surface_layout(size)
    if code == PhenomCode.REPETITION:
        return repetition_layout(size)
    if code in (PhenomCode.TORIC, PhenomCode.TORIC_ABLATED):
        return toric_layout(size)
    raise InvalidLayout(f'Unknown phenomenological code "{code}". Choose from {", ".join(PhenomCode.ALL)}.')


def is_ablated(detector: DetectorDef) -> bool:
    """Detectors the ablated toric code drops: red X checks and green Z checks."""
    basis, color = detector.basis_color
    return (basis, int(color)) in (('X', 1), ('Z', 2))


def gen_phenom(code: str, size: int, rounds: int, p: float, basis: str = 'Z') -> Circuit:
    layout = _phenom_layout(code, size)
    basis = check_basis(basis)
    measured = 'Z' if code == PhenomCode.REPETITION else 'XZ'
    ideal = _stabilizer_rounds(layout, check_rounds(rounds), basis, measured)
    if code == PhenomCode.TORIC_ABLATED:
        ideal = ideal.without_detectors(lambda det: not is_ablated(det))
    return apply_noise(ideal, NoiseModel.PHENOM, p)


def gen_superdense(d: int, rounds: int, p: float, basis: str = 'X') -> Circuit:
    """
    Superdense cycles: each face gets a Bell pair (A, B); the face's data is
    split between A and B, coupled in three layers and uncoupled in three more,
    then the pair is measured in the Bell basis, A reporting the X stabilizer
    and B the Z stabilizer.
    """
    layout = triangle_layout(check_distance(d))
    rounds = check_rounds(rounds)
    basis = check_basis(basis)
    index = {tuple(int(v) for v in xy): q for q, xy in enumerate(layout.coords)}
    n = layout.num_data
    coords = {q: xy for q, xy in enumerate(layout.coords)}
    pairs = []
    for f, face in enumerate(layout.faces):
        c, r0 = face.anchor
        a, b = n + 2 * f, n + 2 * f + 1
        coords[a] = (c + 0.5, r0 + 0.5)
        coords[b] = (c + 0.5, r0 + 1.5)
        pairs.append((f, a, b, c, r0))

    builder = _Builder(coords)
    data = list(range(n))
    for t in range(rounds):
        z_resets = [b for _, _, b, _, _ in pairs]
        x_resets = [a for _, a, _, _, _ in pairs]
        if t == 0:
            (z_resets if basis == 'Z' else x_resets).extend(data)
        builder.reset(z=z_resets, x=x_resets)
        builder.cx([(a, b) for _, a, b, _, _ in pairs])
        couplings = []
        for k in range(3):
            layer = []
            for _, a, b, c, r0 in pairs:
                if (c, r0 + k) in index:
                    layer.append((index[(c, r0 + k)], a))
                if (c + 1, r0 + k) in index:
                    layer.append((index[(c + 1, r0 + k)], b))
            couplings.append(layer)
        for layer in couplings:
            builder.cx(layer)
        for layer in couplings:
            builder.cx([(anc, q) for q, anc in layer])
        builder.cx([(a, b) for _, a, b, _, _ in pairs])
        items = [(b, 'Z', (f, 'Z')) for f, _, b, _, _ in pairs]
        items += [(a, 'X', (f, 'X')) for f, a, _, _, _ in pairs]
        if t == rounds - 1:
            items += [(q, basis, None) for q in data]
        builder.measure(items, time=t)

    finals = [
        (f, basis, [builder.last_measurement[q] for q in face.qubits])
        for f, face in enumerate(layout.faces)
    ]
    observable = [builder.last_measurement[q] for q in layout.logical(basis)]
    ideal = _annotate(builder, layout, finals, observable)
    return apply_noise(ideal, NoiseModel.UNIFORM, p)


def midout_layers(layout: Layout) -> dict[str, list[tuple[int, int]]]:
    """
    The three folding layers of the middle-out cycle: rungs, then even rows
    into the odd row below, then odd rows into the even row below. Primed
    layers run the same pairs in the opposite direction.
    """
    index = {tuple(int(v) for v in xy): q for q, xy in enumerate(layout.coords)}
    rungs, down_even, down_odd = [], [], []
    for (c, r), q in sorted(index.items()):
        if (r - c - 1) % 2 == 0 and (c + 1, r) in index:
            rungs.append((q, index[(c + 1, r)]))
        if (c, r - 1) in index:
            (down_even if r % 2 == 0 else down_odd).append((q, index[(c, r - 1)]))
    layers = {'L1': rungs, 'L2': down_even, 'L3': down_odd}
    for name in list(layers):
        layers[name + "'"] = [(b, a) for a, b in layers[name]]
    return layers


def midout_carriers(layout: Layout) -> list[tuple[int, int, str]]:
    """(face index, carrier qubit, basis measured in the even half-cycles)."""
    index = {tuple(int(v) for v in xy): q for q, xy in enumerate(layout.coords)}
    carriers = []
    for f, face in enumerate(layout.faces):
        if face.kind == 'spur':
            carriers.append((f, index[face.anchor], 'X'))
            continue
        c, r0 = face.anchor
        if c % 2:
            carriers.append((f, index[(c, r0 + 2)], 'Z'))
        else:
            carriers.append((f, index[(c + 1, r0)], 'X'))
    return carriers


def _propagate(support, layers) -> set[int]:
    """Push an X-type Pauli forward through CX layers given as (control, target) pairs."""
    support = set(support)
    for layer in layers:
        for control, target in layer:
            if control in support:
                support ^= {target}
    return support


def gen_midout(d: int, rounds: int, p: float, basis: str = 'X') -> Circuit:
    """
    Middle-out cycles without ancillas. Each half-cycle unfolds the code
    state out of single-qubit carriers, folds it back the other way and
    measures the carriers, so every face reports one basis per half-cycle and
    the bases swap between half-cycles. Cycles alternate with their reverse.
    """
    layout = triangle_layout(check_distance(d), spurs=True)
    rounds = check_rounds(rounds)
    basis = check_basis(basis)
    layers = midout_layers(layout)
    carriers = midout_carriers(layout)
    carrier_qubits = {q for _, q, _ in carriers}
    forward = [layers[k] for k in ('L1', 'L2', 'L3', "L3'", "L2'", "L1'")]
    backward = [layers[k] for k in ("L1'", "L2'", "L3'", 'L3', 'L2', 'L1')]

    # The schedule is written for X memory; Z memory is its Hadamard dual.
    builder = _Builder({q: xy for q, xy in enumerate(layout.coords)}, dual=basis == 'Z')
    first_x = [q for _, q, b in carriers if b == 'X']
    builder.reset(z=first_x, x=[q for q in range(layout.num_data) if q not in set(first_x)])

    half_cycles = 2 * rounds
    for i in range(half_cycles):
        schedule = forward if i % 2 == 0 else backward
        for layer in schedule:
            builder.cx(layer)
        frame = [(f, q, b if i % 2 == 0 else other_basis(b)) for f, q, b in carriers]
        last = i == half_cycles - 1
        items = [
            (q, b, None if last and b == 'X' else (f, b))
            for f, q, b in frame
        ]
        if last:
            items += [(q, 'X', None) for q in range(layout.num_data) if q not in carrier_qubits]
            builder.measure(items, time=i)
        else:
            builder.measure(items, time=i)
            builder.reset(
                z=[q for _, q, b in frame if b == 'Z'],
                x=[q for _, q, b in frame if b == 'X'],
            )

    # The last half-cycle always runs the backward schedule; its final three
    # layers fold the code state onto the measured qubits.
    fold = backward[3:]
    z_measured = {q for _, q, b in frame if b == 'Z'}
    finals = []
    for f, face in enumerate(layout.faces):
        support = _propagate(face.qubits, fold)
        if support & z_measured:
            logger.warning('%s: face %d folds onto Z-measured qubits; no final detector.', layout.name, f)
            continue
        finals.append((f, 'X', [builder.last_measurement[q] for q in sorted(support)]))
    support = _propagate(layout.logical('X'), fold)
    if support & z_measured:
        raise InvalidLayout(f'{layout.name}: the logical observable folds onto Z-measured qubits.')
    observable = [builder.last_measurement[q] for q in sorted(support)]
    ideal = _annotate(builder, layout, finals, observable)
    return apply_noise(ideal, NoiseModel.UNIFORM, p)


def generate(family: str, d: int, rounds: int = 1, p: float = 0.0, basis: str = 'Z') -> Circuit:
    """Dispatch a circuit family by its command-line name."""
    family = (family or '').strip().lower()
    if family == CircuitFamily.TRANSIT:
        if check_basis(basis) != 'Z':
            raise InvalidLayout('Transit circuits only protect the Z observable.')
        return gen_transit(d, p, rounds)
    if family == CircuitFamily.SUPERDENSE:
        return gen_superdense(d, rounds, p, basis)
    if family == CircuitFamily.MIDOUT:
        return gen_midout(d, rounds, p, basis)
    codes = {
        CircuitFamily.PHENOM: PhenomCode.COLOR,
        CircuitFamily.SURFACE: PhenomCode.SURFACE,
        CircuitFamily.REPETITION: PhenomCode.REPETITION,
        CircuitFamily.TORIC: PhenomCode.TORIC,
        CircuitFamily.TORIC_ABLATED: PhenomCode.TORIC_ABLATED,
    }
    if family in codes:
        return gen_phenom(codes[family], d, rounds, p, basis)
    raise InvalidLayout(f'Unknown circuit family "{family}". Choose from {", ".join(CircuitFamily.values)}.')


def family_qubit_count(family: str, d: int) -> int:
    """Physical qubits used by one patch of a family at size ``d``."""
    family = (family or '').strip().lower()
    if family == CircuitFamily.MIDOUT:
        return triangle_layout(check_distance(d), spurs=True).num_data
    if family == CircuitFamily.SUPERDENSE:
        layout = triangle_layout(check_distance(d))
        return layout.num_data + 2 * len(layout.faces)
    if family == CircuitFamily.TRANSIT:
        layout = triangle_layout(check_distance(d))
        return layout.num_data + len(layout.faces)
    if family == CircuitFamily.PHENOM:
        layout = triangle_layout(check_distance(d))
        return layout.num_data + 2 * len(layout.faces)
    if family == CircuitFamily.SURFACE:
        return 2 * check_distance(d) ** 2 - 1
    if family == CircuitFamily.REPETITION:
        return 2 * check_distance(d) - 1
    if family in (CircuitFamily.TORIC, CircuitFamily.TORIC_ABLATED):
        layout = toric_layout(d)
        return layout.num_data + 2 * len(layout.faces)
    raise InvalidLayout(f'Unknown circuit family "{family}".')


def next_valid_size(family: str, value: float) -> int:
    """Smallest valid size of a family that is at least ``value``."""
    size = max(int(math.ceil(value - 1e-9)), 2)
    if family in (CircuitFamily.TORIC, CircuitFamily.TORIC_ABLATED):
        return size + size % 2
    size = max(size, 3)
    return size if size % 2 else size + 1
