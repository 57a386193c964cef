"""
The restricted Clifford circuit dialect shared by generators, simulators and
the decoder pipeline.

Text form, one instruction per line::

    QUBIT_COORDS(x,y) q
    RZ 0 1
    CX 0 1
    MZ(0.01) 1
    DETECTOR(0,0,0,3) rec[-1]
    OBSERVABLE_INCLUDE(0) rec[-1]
    TICK

Record references are negative lookbacks into the measurement record.
"""

import re
from dataclasses import dataclass, field, replace

from .choices import decode_annotation
from .exceptions import CircuitSyntaxError


RESETS = frozenset({'RZ', 'RX'})
MEASUREMENTS = frozenset({'MZ', 'MX'})
GATES = frozenset({'CX'})
NOISE_CHANNELS = frozenset({'X_ERROR', 'Z_ERROR', 'DEPOLARIZE1', 'DEPOLARIZE2'})
PAIR_INSTRUCTIONS = frozenset({'CX', 'DEPOLARIZE2'})
INSTRUCTION_NAMES = RESETS | MEASUREMENTS | GATES | NOISE_CHANNELS | {'TICK'}

ALIASES = {'R': 'RZ', 'M': 'MZ'}
# Visualization annotations carried by exported circuits; no decoder meaning.
IGNORED_NAMES = frozenset({'MARKX', 'MARKZ', 'POLYGON'})

_LINE_RE = re.compile(r'^([A-Za-z_][A-Za-z0-9_]*)(?:\(([^)]*)\))?(.*)$')
_REC_RE = re.compile(r'^rec\[(-?\d+)\]$')


def format_number(value: float) -> str:
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


@dataclass(frozen=True)
class Instruction:
    name: str
    targets: tuple[int, ...] = ()
    argument: float | None = None

    @property
    def is_measurement(self) -> bool:
        return self.name in MEASUREMENTS

    @property
    def is_reset(self) -> bool:
        return self.name in RESETS

    @property
    def is_noise(self) -> bool:
        return self.name in NOISE_CHANNELS

    @property
    def basis(self) -> str | None:
        if self.name in ('RZ', 'MZ'):
            return 'Z'
        if self.name in ('RX', 'MX'):
            return 'X'
        return None

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.targets[::2], self.targets[1::2]))

    def to_text(self) -> str:
        head = self.name
        if self.argument is not None and (self.is_noise or self.argument > 0):
            head += f'({format_number(self.argument)})'
        if not self.targets:
            return head
        return head + ' ' + ' '.join(str(t) for t in self.targets)


@dataclass(frozen=True)
class DetectorDef:
    measurement_refs: tuple[int, ...]
    coords: tuple[float, ...] = ()

    @property
    def annotation(self) -> int | None:
        if len(self.coords) < 4:
            return None
        value = self.coords[3]
        if not float(value).is_integer():
            return None
        return int(value)

    @property
    def basis_color(self) -> tuple[str, int]:
        return decode_annotation(self.annotation)


@dataclass(frozen=True)
class ObservableDef:
    index: int
    measurement_refs: tuple[int, ...]


@dataclass(frozen=True)
class Circuit:
    qubit_coords: dict[int, tuple[float, ...]] = field(default_factory=dict)
    instructions: tuple[Instruction, ...] = ()
    detectors: tuple[DetectorDef, ...] = ()
    observables: tuple[ObservableDef, ...] = ()

    @property
    def num_qubits(self) -> int:
        highest = max(self.qubit_coords, default=-1)
        for instruction in self.instructions:
            if instruction.targets:
                highest = max(highest, max(instruction.targets))
        return highest + 1

    @property
    def num_measurements(self) -> int:
        return sum(len(i.targets) for i in self.instructions if i.is_measurement)

    @property
    def detector_count(self) -> int:
        return len(self.detectors)

    @property
    def observable_count(self) -> int:
        return len(self.observables)

    def count(self, name: str) -> int:
        """Number of gate applications (pairs for CX/DEPOLARIZE2) of one instruction kind."""
        total = 0
        for instruction in self.instructions:
            if instruction.name != name:
                continue
            total += len(instruction.targets) // (2 if name in PAIR_INSTRUCTIONS else 1) if instruction.targets else 1
        return total

    def layers(self) -> list[list[Instruction]]:
        layers = [[]]
        for instruction in self.instructions:
            if instruction.name == 'TICK':
                layers.append([])
            else:
                layers[-1].append(instruction)
        return layers

    def measurement_sites(self) -> list[tuple[int, int, str]]:
        """(instruction index, qubit, basis) for every record entry, in record order."""
        sites = []
        for index, instruction in enumerate(self.instructions):
            if instruction.is_measurement:
                sites.extend((index, q, instruction.basis) for q in instruction.targets)
        return sites

    def without_noise(self) -> 'Circuit':
        instructions = []
        for instruction in self.instructions:
            if instruction.is_noise:
                continue
            if instruction.is_measurement and instruction.argument:
                instruction = replace(instruction, argument=None)
            instructions.append(instruction)
        return replace(self, instructions=tuple(instructions))

    def without_detectors(self, keep) -> 'Circuit':
        """Copy keeping only detectors for which ``keep(detector)`` is true."""
        return replace(self, detectors=tuple(d for d in self.detectors if keep(d)))


def _parse_args(raw: str | None, line_no: int, column: int) -> list[float]:
    if raw is None or not raw.strip():
        return []
    values = []
    for piece in raw.split(','):
        try:
            values.append(float(piece.strip()))
        except ValueError:
            raise CircuitSyntaxError(f'Bad numeric argument "{piece.strip()}".', line_no, column) from None
    return values


def _iter_tokens(rest: str, offset: int):
    for match in re.finditer(r'\S+', rest):
        yield match.group(0), offset + match.start() + 1


def parse_circuit(text: str) -> Circuit:
    coords = {}
    instructions = []
    detectors = []
    observable_refs = {}
    measurements = 0

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split('#', 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        line = line.strip()
        match = _LINE_RE.match(line)
        if not match:
            raise CircuitSyntaxError('Cannot read instruction.', line_no, indent + 1)
        name, raw_args, rest = match.group(1), match.group(2), match.group(3)
        name = name.upper()
        name = ALIASES.get(name, name)
        rest_offset = indent + match.start(3)
        if name in IGNORED_NAMES:
            continue
        args = _parse_args(raw_args, line_no, indent + match.start(2) + 1 if raw_args is not None else indent + 1)

        if name in ('DETECTOR', 'OBSERVABLE_INCLUDE'):
            refs = []
            for token, column in _iter_tokens(rest, rest_offset):
                rec = _REC_RE.match(token)
                if not rec:
                    raise CircuitSyntaxError(f'Expected a record reference, got "{token}".', line_no, column)
                lookback = int(rec.group(1))
                if lookback >= 0:
                    raise CircuitSyntaxError('Only negative record lookbacks are allowed.', line_no, column)
                if -lookback > measurements:
                    raise CircuitSyntaxError(f'Record reference rec[{lookback}] is out of range.', line_no, column)
                refs.append(measurements + lookback)
            if name == 'DETECTOR':
                detectors.append(DetectorDef(tuple(refs), tuple(args)))
            else:
                if len(args) != 1 or not float(args[0]).is_integer() or args[0] < 0:
                    raise CircuitSyntaxError('OBSERVABLE_INCLUDE needs one non-negative index.', line_no, indent + 1)
                bucket = observable_refs.setdefault(int(args[0]), [])
                for ref in refs:
                    if ref in bucket:
                        bucket.remove(ref)
                    else:
                        bucket.append(ref)
            continue

        targets = []
        for token, column in _iter_tokens(rest, rest_offset):
            if not token.isdigit():
                raise CircuitSyntaxError(f'Bad qubit target "{token}".', line_no, column)
            targets.append(int(token))

        if name == 'QUBIT_COORDS':
            if len(targets) != 1:
                raise CircuitSyntaxError('QUBIT_COORDS takes exactly one qubit.', line_no, indent + 1)
            coords[targets[0]] = tuple(args)
            continue
        if name not in INSTRUCTION_NAMES:
            raise CircuitSyntaxError(f'Unknown instruction "{name}".', line_no, indent + 1)
        if name == 'TICK':
            instructions.append(Instruction('TICK'))
            continue
        if len(set(targets)) != len(targets):
            raise CircuitSyntaxError(f'{name} targets a qubit more than once.', line_no, indent + 1)
        if name in PAIR_INSTRUCTIONS and len(targets) % 2:
            raise CircuitSyntaxError(f'{name} needs an even number of targets.', line_no, indent + 1)

        argument = None
        if name in NOISE_CHANNELS:
            if len(args) != 1:
                raise CircuitSyntaxError(f'{name} needs one probability argument.', line_no, indent + 1)
            argument = args[0]
        elif name in MEASUREMENTS and args:
            # MZ(0) is the same instruction as MZ.
            argument = args[0] or None
        elif args:
            raise CircuitSyntaxError(f'{name} takes no arguments.', line_no, indent + 1)
        if argument is not None and not 0 <= argument <= 1:
            raise CircuitSyntaxError(f'Probability {argument} is outside [0, 1].', line_no, indent + 1)

        instructions.append(Instruction(name, tuple(targets), argument))
        if name in MEASUREMENTS:
            measurements += len(targets)

    for instruction in instructions:
        for q in instruction.targets:
            coords.setdefault(q, (float(q), 0.0))

    observables = tuple(
        ObservableDef(index, tuple(refs)) for index, refs in sorted(observable_refs.items())
    )
    return Circuit(
        qubit_coords=dict(sorted(coords.items())),
        instructions=tuple(instructions),
        detectors=tuple(detectors),
        observables=observables,
    )


def serialize_circuit(circuit: Circuit) -> str:
    lines = [
        f'QUBIT_COORDS({",".join(format_number(v) for v in xy)}) {q}'
        for q, xy in sorted(circuit.qubit_coords.items())
    ]

    # Record index -> number of measurements completed after that instruction.
    instruction_of_record = []
    for index, instruction in enumerate(circuit.instructions):
        if instruction.is_measurement:
            instruction_of_record.extend([index] * len(instruction.targets))

    def anchor(refs) -> int:
        return max((instruction_of_record[r] for r in refs), default=-1)

    placed = {}
    position = -1
    for detector in circuit.detectors:
        position = max(position, anchor(detector.measurement_refs))
        placed.setdefault(position, []).append(('DETECTOR', detector))
    for observable in circuit.observables:
        placed.setdefault(anchor(observable.measurement_refs), []).append(('OBSERVABLE_INCLUDE', observable))

    measured = 0

    def annotation_lines(position: int):
        for kind, item in placed.get(position, []):
            refs = ' '.join(f'rec[{r - measured}]' for r in item.measurement_refs)
            if kind == 'DETECTOR':
                head = f'DETECTOR({",".join(format_number(v) for v in item.coords)})'
            else:
                head = f'OBSERVABLE_INCLUDE({item.index})'
            yield f'{head} {refs}'.rstrip()

    lines.extend(annotation_lines(-1))
    for index, instruction in enumerate(circuit.instructions):
        lines.append(instruction.to_text())
        if instruction.is_measurement:
            measured += len(instruction.targets)
        lines.extend(annotation_lines(index))
    return '\n'.join(lines) + ('\n' if lines else '')


def validate_circuit(circuit: Circuit) -> list[str]:
    diagnostics = []
    total = circuit.num_measurements

    for position, instruction in enumerate(circuit.instructions):
        label = f'instruction {position} ({instruction.name})'
        if instruction.name not in INSTRUCTION_NAMES:
            diagnostics.append(f'{label}: unknown instruction')
            continue
        missing = sorted({q for q in instruction.targets if q not in circuit.qubit_coords})
        if missing:
            diagnostics.append(f'{label}: qubits without coordinates {missing}')
        if len(set(instruction.targets)) != len(instruction.targets):
            diagnostics.append(f'{label}: a qubit appears more than once')
        if instruction.name in PAIR_INSTRUCTIONS and len(instruction.targets) % 2:
            diagnostics.append(f'{label}: odd number of pair targets')
        if instruction.argument is not None and not 0 <= instruction.argument <= 1:
            diagnostics.append(f'{label}: probability outside [0, 1]')

    for index, detector in enumerate(circuit.detectors):
        if any(not 0 <= r < total for r in detector.measurement_refs):
            diagnostics.append(f'D{index}: measurement record reference out of range')
        if len(detector.coords) < 4:
            diagnostics.append(f'D{index}: detector must be annotated with a basis and color (4th coordinate)')
            continue
        value = detector.coords[3]
        if not float(value).is_integer() or not 0 <= value <= 5:
            diagnostics.append(f'D{index}: annotation out of range ({format_number(value)})')

    for position, observable in enumerate(circuit.observables):
        if observable.index != position:
            diagnostics.append(f'L{observable.index}: observable indices must be dense from 0')
        if any(not 0 <= r < total for r in observable.measurement_refs):
            diagnostics.append(f'L{observable.index}: measurement record reference out of range')
    return diagnostics
