"""
Color code decoding by matching on a doubled graph.

Each detector k of color c is split into two nodes, 2k and 2k+1, living in
the two subgraphs that exclude the other colors (for other colors c1 < c2,
2k is in not-c1 and 2k+1 in not-c2). Errors become edges between split
nodes, a perfect matching pairs the excited split nodes, and the matched
edges are flattened back onto detectors and lifted into an observable
prediction by dragging excitations along Euler tours (see ``lift``).
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations, product

import networkx as nx
import numpy as np

from circuits.choices import Basis
from circuits.conf import setting
from circuits.dem import DetectorErrorModel, xor_probability
from circuits.frame_sim import ShotBatch

from .exceptions import (
    DecompositionFailure,
    ImmovableExcitation,
    LiftFailure,
    MatchableColorViolation,
    RainbowViolation,
)
from .lift import LiftTable, Move, Prediction, lift
from .matcher import WeightedGraph, build_graph, clamp_probability, match_edges


logger = logging.getLogger(__name__)

MAX_XOR_PARTS = 3
MAX_CANDIDATES = 24


class EdgeKind:
    BULK = 'bulk-part'
    BOUNDARY = 'boundary-part'
    BOUNDARY_LINK = 'boundary-link'
    CORNER = 'corner'
    SHIFT = 'shift-part'


def other_colors(color: int) -> tuple[int, int]:
    c1, c2 = sorted({1, 2, 3} - {int(color)})
    return c1, c2


def split_node(detector: int, color: int, subgraph: int) -> int:
    """Split node of ``detector`` in the subgraph excluding color ``subgraph``."""
    c1, c2 = other_colors(color)
    if subgraph == c1:
        return 2 * detector
    if subgraph == c2:
        return 2 * detector + 1
    raise ValueError(f'Detector {detector} of color {color} has no node in subgraph not-{subgraph}.')


def subgraph_of(node: int, color: int) -> int:
    return other_colors(color)[node & 1]


@dataclass(frozen=True)
class AtomicError:
    symptoms: tuple[int, ...]
    observables: int
    probability: float
    origin: int

    @property
    def log_probability(self) -> float:
        return math.log(clamp_probability(self.probability))


@dataclass(frozen=True)
class MobiusEdge:
    u: int
    v: int
    probability: float
    origin: int
    kind: str
    observables: int = 0


@dataclass
class MobiusGraph:
    colors: dict[int, int]
    edges: list[MobiusEdge] = field(default_factory=list)
    weighted: WeightedGraph = field(default_factory=WeightedGraph)

    def splits(self, detector: int) -> tuple[int, int]:
        return 2 * detector, 2 * detector + 1


@dataclass
class DecoderConfig:
    dem: DetectorErrorModel
    graph: MobiusGraph
    table: LiftTable
    forced: list[int] = field(default_factory=list)
    singles: dict[frozenset, int] = field(default_factory=dict)
    adjacency: dict[int, set[int]] = field(default_factory=dict)
    presolve: bool = True
    fallback: bool = False

    @property
    def observable_count(self) -> int:
        return self.dem.observable_count

    def __iter__(self):
        return iter((self.graph, self.table))


def is_atomic_shape(symptoms, colors: dict[int, int]) -> bool:
    if not 1 <= len(symptoms) <= 3:
        return False
    if len(symptoms) == 3:
        return len({colors[d] for d in symptoms}) == 3
    return True


def _split_by_basis(symptoms, dem: DetectorErrorModel) -> list[tuple[int, ...]]:
    x_part = tuple(d for d in symptoms if dem.basis_of(d) == Basis.X)
    z_part = tuple(d for d in symptoms if dem.basis_of(d) == Basis.Z)
    return [part for part in (x_part, z_part) if part]


def _index(keys) -> dict[int, list[tuple[int, ...]]]:
    by_detector = {}
    for key in sorted(keys, key=lambda k: (-len(k), k)):
        for d in key:
            by_detector.setdefault(d, []).append(key)
    return by_detector


def _candidates(symptoms, by_detector, accept, parts: int, disjoint: bool) -> list[list[tuple[int, ...]]]:
    """
    Every way to write ``symptoms`` as ``parts`` indexed keys, the last one
    only needing to pass ``accept``. Disjoint search uses unions, otherwise
    symmetric differences. Each step takes a key holding the smallest
    remaining detector, so every decomposition is reached.
    """
    found = set()

    def walk(remaining: frozenset, left: int, chosen: tuple):
        if len(found) >= MAX_CANDIDATES:
            return
        if left == 1:
            key = tuple(sorted(remaining))
            if accept(key):
                found.add(tuple(sorted(chosen + (key,))))
            return
        for key in by_detector.get(min(remaining), ()):
            if disjoint and not remaining.issuperset(key):
                continue
            rest = remaining.difference(key) if disjoint else remaining.symmetric_difference(key)
            if rest:
                walk(rest, left - 1, chosen + (key,))

    walk(frozenset(symptoms), parts, ())
    return [list(c) for c in sorted(found)]


def minimal_decompositions(symptoms, basic, remnant=None, index=None) -> list[list[tuple[int, ...]]]:
    """
    Fewest-part decompositions of ``symptoms`` into ``basic`` symptom sets.

    Disjoint unions are tried first, then symmetric differences of up to
    MAX_XOR_PARTS sets. With ``remnant``, the last part may be any set it
    accepts instead of a basic one. ``index`` maps detectors to the basic
    sets holding them and is rebuilt when not given.
    """
    index = _index(basic) if index is None else index
    target = frozenset(symptoms)
    in_basic = lambda key: key in basic
    disjoint_index = _index({key for d in target for key in index.get(d, ()) if target.issuperset(key)})
    for parts in range(1, len(target) + 1):
        found = _candidates(target, disjoint_index, in_basic, parts, disjoint=True)
        if found:
            return found

    accept = in_basic if remnant is None else (lambda key: key in basic or remnant(key))
    for parts in range(2, MAX_XOR_PARTS + 1):
        found = _candidates(target, index, accept, parts, disjoint=False)
        if found:
            return found
    return []


def decompose(symptoms, basic) -> list[tuple[int, ...]] | None:
    """
    Split ``symptoms`` into the fewest known basic symptom sets.

    Ties go to the lexicographically smallest list of parts.
    """
    found = minimal_decompositions(symptoms, basic)
    return found[0] if found else None


def mobius_edges(piece: AtomicError, colors: dict[int, int], observables: int = 0) -> list[MobiusEdge]:
    """
    Edges of the doubled graph standing in for one atomic error. The first
    edge carries ``observables``, the part of a composite error's flips
    that its pieces do not account for.
    """
    p = piece.probability
    symptoms = piece.symptoms
    node = lambda d, s: split_node(d, colors[d], s)

    if len(symptoms) == 1:
        (a,) = symptoms
        s1, s2 = other_colors(colors[a])
        edges = [MobiusEdge(node(a, s1), node(a, s2), p * p, piece.origin, EdgeKind.CORNER)]
    elif len(symptoms) == 2:
        a, b = symptoms
        ca, cb = colors[a], colors[b]
        if ca == cb:
            edges = [
                MobiusEdge(node(a, s), node(b, s), p, piece.origin, EdgeKind.SHIFT)
                for s in other_colors(ca)
            ]
        else:
            third = ca ^ cb
            edges = [
                MobiusEdge(node(a, third), node(b, third), p, piece.origin, EdgeKind.BOUNDARY),
                MobiusEdge(node(a, cb), node(b, ca), p, piece.origin, EdgeKind.BOUNDARY_LINK),
            ]
    else:
        edges = []
        for excluded in (1, 2, 3):
            a, b = (d for d in symptoms if colors[d] != excluded)
            edges.append(MobiusEdge(node(a, excluded), node(b, excluded), p, piece.origin, EdgeKind.BULK))

    if observables:
        first = edges[0]
        edges[0] = MobiusEdge(first.u, first.v, first.probability, first.origin, first.kind, observables)
    return edges


def _most_likely_masks(groups: dict) -> dict:
    """Per key, the observable mask with the largest combined probability."""
    chosen = {}
    for key, masks in groups.items():
        mask = min(masks, key=lambda m: (-masks[m], m))
        chosen[key] = (mask, masks[mask])
    return chosen


def _basic_errors(dem, colors) -> dict[tuple[int, ...], AtomicError]:
    """Single-basis errors already shaped like an atomic error."""
    groups = {}
    origins = {}
    for index, error in enumerate(dem.errors):
        parts = _split_by_basis(error.symptoms, dem)
        if len(parts) == 1 and is_atomic_shape(parts[0], colors):
            masks = groups.setdefault(parts[0], {})
            masks[error.observables] = xor_probability(masks.get(error.observables, 0.0), error.probability)
            origins.setdefault((parts[0], error.observables), index)
    return {
        key: AtomicError(key, mask, p, origins[(key, mask)])
        for key, (mask, p) in _most_likely_masks(groups).items()
    }


def _part_options(part, basic, by_detector, colors, index, strict) -> tuple[list, bool]:
    """Candidate decompositions of one basis part, and whether they needed a remnant."""
    if is_atomic_shape(part, colors):
        return [[part]], False
    found = minimal_decompositions(part, basic, index=by_detector)
    if found:
        return found, False
    found = minimal_decompositions(
        part, basic, remnant=lambda key: is_atomic_shape(key, colors), index=by_detector,
    )
    if found:
        logger.debug('Error %d part %s needs a remnant piece.', index, list(part))
        return found, True
    if strict:
        if len(part) == 3:
            raise RainbowViolation(part)
        raise DecompositionFailure(part)
    return [], False


def _forced_split(part) -> list[tuple[int, ...]]:
    ordered = sorted(part)
    return [tuple(ordered[k:k + 2]) for k in range(0, len(ordered), 2)]


def _pieces(dem, colors, basic, strict) -> tuple[list[tuple[AtomicError, int]], list[int]]:
    """
    Atomic pieces of every error with the observable residual each error
    leaves on its first piece's edges.
    """
    pieces = []
    forced = []
    by_detector = _index(basic)
    for index, error in enumerate(dem.errors):
        if not error.symptoms:
            if error.observables:
                logger.warning('Error %d flips observables without any symptom; ignoring it.', index)
            continue
        parts = _split_by_basis(error.symptoms, dem)
        if len(parts) == 1 and is_atomic_shape(parts[0], colors):
            own = basic[parts[0]].observables
            pieces.append((AtomicError(parts[0], own, error.probability, index), error.observables ^ own))
            continue

        options = []
        for part in parts:
            found, _ = _part_options(part, basic, by_detector, colors, index, strict)
            if not found:
                logger.warning('Splitting error %d with symptoms %s by force.', index, list(error.symptoms))
                forced.append(index)
                found = [_forced_split(part)]
            options.append(found)

        def residual(choice) -> int:
            mask = error.observables
            for key in (key for keys in choice for key in keys):
                if key in basic:
                    mask ^= basic[key].observables
            return mask

        choice = min(product(*options), key=lambda c: (residual(c) != 0, c))
        keys = [key for keys in choice for key in keys]
        left = residual(choice)
        unknown = [k for k, key in enumerate(keys) if key not in basic]
        masks = [basic[key].observables if key in basic else 0 for key in keys]
        if unknown:
            masks[unknown[0]] = left
            left = 0
        for k, key in enumerate(keys):
            pieces.append((AtomicError(key, masks[k], error.probability, index), left if k == 0 else 0))
    return pieces, sorted(set(forced))


def _lift_table(colors, atomic: list[AtomicError]) -> LiftTable:
    table = LiftTable(colors=colors)
    representatives = {}
    for error in atomic:
        best = representatives.get(error.symptoms)
        if best is None or error.probability > best.probability:
            representatives[error.symptoms] = error
    table.atomic = [representatives[key] for key in sorted(representatives)]

    def offer(move: Move) -> None:
        if move.better_than(table.moves.get(move.symptoms)):
            table.moves[move.symptoms] = move

    touching = {}
    for i, error in enumerate(table.atomic):
        offer(Move(frozenset(error.symptoms), (i,), error.observables, error.log_probability))
        for d in error.symptoms:
            touching.setdefault(d, []).append(i)
            table.neighbors.setdefault(d, set()).update(x for x in error.symptoms if x != d)

    for ids in touching.values():
        for i, j in combinations(ids, 2):
            first, second = table.atomic[i], table.atomic[j]
            symptoms = frozenset(first.symptoms) ^ frozenset(second.symptoms)
            if 1 <= len(symptoms) <= 2:
                offer(Move(
                    symptoms,
                    (i, j),
                    first.observables ^ second.observables,
                    first.log_probability + second.log_probability,
                ))

    for key, move in sorted(table.moves.items(), key=lambda item: sorted(item[0])):
        if len(key) == 2 and len({colors[d] for d in key}) == 1:
            table.drag_graph.add_edge(*sorted(key))
        elif len(key) == 3:
            for pair in combinations(sorted(key), 2):
                (rest,) = key - set(pair)
                table.completions.setdefault(frozenset(pair), []).append((rest, move))
    return table


def _needed_drags(graph: MobiusGraph):
    """Same-color detector pairs that a tour can visit with one detector in between."""
    adjacency = graph.weighted.graph
    for node in sorted(adjacency.nodes):
        around = sorted({other >> 1 for other in adjacency[node]} - {node >> 1})
        for a, b in combinations(around, 2):
            if graph.colors[a] == graph.colors[b]:
                yield a, b


def check_moveable(graph: MobiusGraph, table: LiftTable) -> list[tuple[int, int]]:
    missing = set()
    for a, b in _needed_drags(graph):
        if table.drag(a, b) is None:
            missing.add((a, b))
    return sorted(missing)


def check_matchable_colors(table: LiftTable) -> list[tuple[int, int, int]]:
    """Rainbow triangles among detectors that no three-symptom error touches."""
    in_bulk = {d for error in table.atomic if len(error.symptoms) == 3 for d in error.symptoms}
    found = []
    for a in sorted(table.neighbors):
        if a in in_bulk:
            continue
        for b in sorted(table.neighbors[a]):
            if b <= a or b in in_bulk or table.colors[a] == table.colors[b]:
                continue
            for c in sorted(table.neighbors[a] & table.neighbors[b]):
                if c > b and c not in in_bulk and table.colors[c] == table.colors[a] ^ table.colors[b]:
                    found.append((a, b, c))
    return found


def _singles(dem: DetectorErrorModel) -> tuple[dict[frozenset, int], dict[int, set[int]]]:
    """Most likely flips per single-error symptom set, and detectors sharing an error."""
    groups = {}
    adjacency = {}
    for error in dem.errors:
        if not error.symptoms:
            continue
        masks = groups.setdefault(frozenset(error.symptoms), {})
        masks[error.observables] = masks.get(error.observables, 0.0) + error.probability / (1 - error.probability)
        for d in error.symptoms:
            adjacency.setdefault(d, set()).update(error.symptoms)
    singles = {key: mask for key, (mask, _) in _most_likely_masks(groups).items()}
    return singles, adjacency


def configure(dem: DetectorErrorModel, strict: bool | None = None, presolve: bool | None = None) -> DecoderConfig:
    """
    Build the doubled matching graph and the presolved lift table for ``dem``.

    With ``strict`` (default: COLORBENCH_STRICT_CONFIGURE) requirement
    violations raise. Otherwise errors that do not decompose are split by
    force, the other violations are logged, and tours that cannot resolve
    fall back to a local solve. ``presolve`` (default:
    COLORBENCH_PRESOLVE_SINGLES) answers isolated clusters of detection
    events that one error explains by lookup.
    """
    if strict is None:
        strict = setting('COLORBENCH_STRICT_CONFIGURE', True)
    if presolve is None:
        presolve = setting('COLORBENCH_PRESOLVE_SINGLES', True)
    dem.check_annotations()
    colors = {d: int(dem.color_of(d)) for d in dem.detector_annotations}

    basic = _basic_errors(dem, colors)
    pieces, forced = _pieces(dem, colors, basic, strict)
    graph = MobiusGraph(colors=colors)
    for piece, observables in pieces:
        graph.edges.extend(mobius_edges(piece, colors, observables))
    graph.weighted = build_graph((e.u, e.v, e.probability, e.observables) for e in graph.edges)
    table = _lift_table(colors, [piece for piece, _ in pieces])

    missing = check_moveable(graph, table)
    if missing:
        if strict:
            raise ImmovableExcitation(*missing[0])
        logger.warning('%d detector pairs cannot be dragged between locally, e.g. %s.', len(missing), missing[0])

    triangles = check_matchable_colors(table)
    if triangles:
        if strict:
            raise MatchableColorViolation(triangles[0])
        logger.warning('%d rainbow triangles in matchable regions, e.g. %s.', len(triangles), triangles[0])

    singles, adjacency = _singles(dem)
    logger.info(
        'Configured decoder: %d detectors, %d matching edges, %d moves, %d forced splits.',
        len(colors), len(graph.weighted.edges), len(table.moves), len(forced),
    )
    return DecoderConfig(
        dem=dem,
        graph=graph,
        table=table,
        forced=forced,
        singles=singles,
        adjacency=adjacency,
        presolve=presolve,
        fallback=not strict,
    )


def _clusters(adjacency: dict[int, set[int]], fired: list[int]) -> list[list[int]]:
    """Groups of detection events joined through errors they share."""
    remaining = set(fired)
    clusters = []
    for d in fired:
        if d not in remaining:
            continue
        remaining.discard(d)
        cluster = [d]
        stack = [d]
        while stack:
            near = adjacency.get(stack.pop(), set()) & remaining
            remaining -= near
            cluster.extend(near)
            stack.extend(near)
        clusters.append(cluster)
    return clusters


def decode_shot(cfg: DecoderConfig, detection_bits, shot: int | None = None) -> Prediction:
    fired = [int(d) for d in np.flatnonzero(np.asarray(detection_bits))]
    prediction = Prediction()
    if cfg.presolve and fired:
        rest = []
        for cluster in _clusters(cfg.adjacency, fired):
            mask = cfg.singles.get(frozenset(cluster))
            if mask is None:
                rest.extend(cluster)
            else:
                prediction.observables ^= mask
                prediction.presolved += 1
        fired = sorted(rest)
    if not fired:
        return prediction

    excited = [node for d in fired for node in cfg.graph.splits(d)]
    flat = nx.MultiGraph()
    for edge_id in match_edges(cfg.graph.weighted, excited):
        edge = cfg.graph.weighted.edges[edge_id]
        flat.add_edge(edge.u >> 1, edge.v >> 1)
        prediction.observables ^= edge.observables
    logger.debug('Shot %s: %d events, %d matched edges.', shot, len(fired), flat.number_of_edges())

    lifted = lift(cfg.table, flat, set(fired), shot=shot, fallback=cfg.fallback)
    prediction.observables ^= lifted.observables
    prediction.components = lifted.components
    prediction.discharges = lifted.discharges
    prediction.fallbacks = lifted.fallbacks
    return prediction


def decode_batch(cfg: DecoderConfig, batch: ShotBatch) -> list[Prediction]:
    predictions = []
    for shot, row in enumerate(batch.detection_bits):
        try:
            predictions.append(decode_shot(cfg, row, shot=shot))
        except LiftFailure as e:
            if e.shot is None:
                raise LiftFailure(str(e), shot=shot) from e
            raise
    return predictions


def prediction_bits(predictions: list[Prediction], observable_count: int) -> np.ndarray:
    bits = np.zeros((len(predictions), observable_count), dtype=np.uint8)
    for row, prediction in enumerate(predictions):
        bits[row] = prediction.bits(observable_count)
    return bits
