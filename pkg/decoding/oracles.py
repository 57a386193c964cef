"""
Exact reference decoders for small detector error models.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from circuits.dem import DetectorErrorModel

from .exceptions import DecodingError


logger = logging.getLogger(__name__)

MAX_ML_STATES = 1 << 22


def _mask(symptoms) -> int:
    mask = 0
    for d in symptoms:
        mask |= 1 << d
    return mask


@dataclass
class MaximumLikelihoodDecoder:
    """
    Coset probabilities for every reachable syndrome, computed by folding the
    mechanisms in one at a time.
    """

    dem: DetectorErrorModel
    max_states: int = MAX_ML_STATES
    table: dict[int, int] = field(init=False, default_factory=dict)

    def __post_init__(self):
        distribution = {(0, 0): 1.0}
        for error in self.dem.errors:
            flip = (_mask(error.symptoms), error.observables)
            p = error.probability
            folded = {}
            for (syndrome, observables), weight in distribution.items():
                stay = (syndrome, observables)
                move = (syndrome ^ flip[0], observables ^ flip[1])
                folded[stay] = folded.get(stay, 0.0) + weight * (1 - p)
                folded[move] = folded.get(move, 0.0) + weight * p
            if len(folded) > self.max_states:
                raise DecodingError(f'Maximum likelihood table exceeds {self.max_states} states.')
            distribution = folded

        best = {}
        for (syndrome, observables), weight in sorted(distribution.items()):
            if syndrome not in best or weight > best[syndrome][1]:
                best[syndrome] = (observables, weight)
        self.table = {syndrome: observables for syndrome, (observables, _) in best.items()}

    def decode(self, detection_bits) -> int:
        syndrome = _mask(np.flatnonzero(np.asarray(detection_bits)))
        return self.table.get(syndrome, 0)


def decode_ml(dem: DetectorErrorModel, detection_bits) -> np.ndarray:
    """Most likely observable flips for each row of ``detection_bits``."""
    decoder = MaximumLikelihoodDecoder(dem)
    rows = np.atleast_2d(np.asarray(detection_bits, dtype=np.uint8))
    out = np.zeros((rows.shape[0], dem.observable_count), dtype=np.uint8)
    for i, row in enumerate(rows):
        mask = decoder.decode(row)
        for k in range(dem.observable_count):
            out[i, k] = mask >> k & 1
    return out


def min_logical_weight(dem: DetectorErrorModel, limit: int) -> int | None:
    """
    Fewest mechanisms that flip an observable without any symptom, searched
    breadth first up to ``limit`` mechanisms. None when nothing is found.
    """
    flips = sorted({(_mask(e.symptoms), e.observables) for e in dem.errors if e.symptoms or e.observables})
    seen = {(0, 0)}
    frontier = [(0, 0)]
    for weight in range(1, limit + 1):
        following = []
        for syndrome, observables in frontier:
            for flip_syndrome, flip_observables in flips:
                state = (syndrome ^ flip_syndrome, observables ^ flip_observables)
                if state[0] == 0 and state[1]:
                    logger.debug('Undetectable logical of weight %d.', weight)
                    return weight
                if state not in seen:
                    seen.add(state)
                    following.append(state)
        frontier = following
    return None
