import logging
from dataclasses import replace

from .choices import NoiseModel
from .circuit_ir import Circuit, Instruction
from .exceptions import UnknownNoiseModel


logger = logging.getLogger(__name__)


def _join(layers: list[list[Instruction]]) -> tuple[Instruction, ...]:
    out = []
    for position, layer in enumerate(layers):
        if position:
            out.append(Instruction('TICK'))
        out.extend(layer)
    return tuple(out)


def _uniform(layers, all_qubits, p):
    noisy = []
    for layer in layers:
        gates = [i for i in layer if not i.is_noise]
        if not gates:
            noisy.append(list(layer))
            continue
        out = []
        touched = set()
        for instruction in gates:
            touched.update(instruction.targets)
            if instruction.name == 'CX':
                out.append(instruction)
                out.append(Instruction('DEPOLARIZE2', instruction.targets, p))
            elif instruction.name == 'RZ':
                out.append(instruction)
                out.append(Instruction('X_ERROR', instruction.targets, p))
            elif instruction.name == 'RX':
                out.append(instruction)
                out.append(Instruction('Z_ERROR', instruction.targets, p))
            elif instruction.is_measurement:
                out.append(replace(instruction, argument=p))
                out.append(Instruction('DEPOLARIZE1', instruction.targets, p))
            else:
                out.append(instruction)
        idle = tuple(q for q in all_qubits if q not in touched)
        if idle:
            out.append(Instruction('DEPOLARIZE1', idle, p))
        noisy.append(out)
    return noisy


def data_qubits(layers) -> tuple[int, ...]:
    """Qubits reset in the first reset layer and never again."""
    reset_layers = [layer for layer in layers if any(i.is_reset for i in layer)]
    if not reset_layers:
        return ()
    first = {q for i in reset_layers[0] if i.is_reset for q in i.targets}
    later = {q for layer in reset_layers[1:] for i in layer if i.is_reset for q in i.targets}
    return tuple(sorted(first - later))


def _between_rounds(layers, p, channel, measurement_errors):
    data = data_qubits(layers)
    measure_layers = [k for k, layer in enumerate(layers) if any(i.is_measurement for i in layer)]
    last_measure = measure_layers[-1] if measure_layers else -1
    first_reset = next((k for k, layer in enumerate(layers) if any(i.is_reset for i in layer)), None)

    noisy = []
    for k, layer in enumerate(layers):
        is_transition = k != first_reset and any(i.is_reset for i in layer)
        if is_transition and data:
            noisy.append([Instruction(channel, data, p)])
        out = []
        for instruction in layer:
            if measurement_errors and instruction.is_measurement and k != last_measure:
                instruction = replace(instruction, argument=p)
            out.append(instruction)
        noisy.append(out)
    return noisy


def apply_noise(circuit: Circuit, model: str, p: float) -> Circuit:
    """
    Noisy version of an ideal circuit.

    uniform: every gate, reset, measurement and idle qubit of every layer is noisy.
    phenom: data depolarized between rounds and noisy stabilizer readout.
    transit: data bit flips between rounds, perfect readout.
    """
    if model not in NoiseModel.values:
        raise UnknownNoiseModel(f'Unknown noise model "{model}". Choose from {", ".join(NoiseModel.values)}.')
    p = float(p)
    if not 0 <= p <= 1:
        raise ValueError(f'Noise strength {p} is outside [0, 1].')
    if p == 0:
        return circuit.without_noise()

    layers = circuit.without_noise().layers()
    if model == NoiseModel.UNIFORM:
        all_qubits = tuple(range(circuit.num_qubits))
        layers = _uniform(layers, all_qubits, p)
    elif model == NoiseModel.PHENOM:
        layers = _between_rounds(layers, p, 'DEPOLARIZE1', measurement_errors=True)
    else:
        layers = _between_rounds(layers, p, 'X_ERROR', measurement_errors=False)

    logger.debug('Applied %s noise at p=%s.', model, p)
    return replace(circuit, instructions=_join(layers))
