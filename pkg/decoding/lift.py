"""
Lifting a flattened matching into an observable prediction.

The matched edges, flattened onto detectors, form components with Euler
tours. Walking a tour, each detection event is grabbed on its first visit
and at most one excitation is held at a time, so the walk has four states:
holding nothing, or holding a red, green or blue excitation. Held
excitations are dragged along to nearby detectors of the same color,
combined with grabbed events of other colors, or discharged into a
boundary, each step inserting a small presolved set of errors. The most
likely history is kept per state and a tour resolves when it ends holding
nothing.
"""

import logging
from dataclasses import dataclass, field, replace

import networkx as nx
import numpy as np

from circuits.layouts import gf2_row_reduce

from .exceptions import LiftFailure


logger = logging.getLogger(__name__)

# A drag chains at most this many presolved two-symptom moves.
MAX_DRAG_MOVES = 3


@dataclass(frozen=True)
class Move:
    """A set of atomic errors whose symptoms XOR to exactly ``symptoms``."""

    symptoms: frozenset
    errors: tuple[int, ...]
    observables: int
    log_probability: float

    def better_than(self, other: 'Move | None') -> bool:
        if other is None:
            return True
        return (self.log_probability, -len(self.errors), -self.observables) > (
            other.log_probability, -len(other.errors), -other.observables,
        )


@dataclass
class LiftTable:
    colors: dict[int, int]
    atomic: list = field(default_factory=list)
    moves: dict[frozenset, Move] = field(default_factory=dict)
    neighbors: dict[int, set[int]] = field(default_factory=dict)
    completions: dict[frozenset, list[tuple[int, Move]]] = field(default_factory=dict)
    drag_graph: nx.Graph = field(default_factory=nx.Graph)
    _routes: dict[int, dict] = field(default_factory=dict, repr=False)
    _drags: dict[tuple[int, int], Move] = field(default_factory=dict, repr=False)

    @property
    def drags(self) -> dict[frozenset, Move]:
        return {k: m for k, m in self.moves.items() if len(k) == 2 and len({self.colors[d] for d in k}) == 1}

    @property
    def discharges(self) -> dict[frozenset, Move]:
        return {k: m for k, m in self.moves.items() if len(k) == 1}

    @property
    def combines(self) -> dict[frozenset, Move]:
        return {k: m for k, m in self.moves.items() if len(k) == 3}

    def discharge(self, detector: int) -> Move | None:
        return self.moves.get(frozenset((detector,)))

    def near(self, a: int, b: int) -> bool:
        return a == b or b in self.neighbors.get(a, ())

    def routes_from(self, detector: int) -> dict[int, list[int]]:
        """Fewest-move drag routes from ``detector`` to everything within reach."""
        if detector not in self._routes:
            if detector in self.drag_graph:
                self._routes[detector] = nx.single_source_shortest_path(
                    self.drag_graph, detector, cutoff=MAX_DRAG_MOVES,
                )
            else:
                self._routes[detector] = {detector: [detector]}
        return self._routes[detector]

    def route_move(self, path: list[int]) -> Move:
        """Compose the two-symptom moves along ``path`` into one move."""
        errors = []
        observables = 0
        log_probability = 0.0
        for a, b in zip(path, path[1:]):
            move = self.moves[frozenset((a, b))]
            errors.extend(move.errors)
            observables ^= move.observables
            log_probability += move.log_probability
        ends = frozenset((path[0], path[-1])) if len(path) > 1 else frozenset()
        return Move(ends, tuple(errors), observables, log_probability)

    def drag(self, source: int, target: int) -> Move | None:
        """Cheapest way to move an excitation from ``source`` onto ``target``."""
        key = (source, target)
        if key not in self._drags:
            route = self.routes_from(source).get(target)
            self._drags[key] = None if route is None or source == target else self.route_move(route)
        return self._drags[key]

    def pair(self, a: int, b: int) -> Move | None:
        """A move whose symptoms are exactly ``{a, b}``."""
        if self.colors[a] == self.colors[b]:
            return self.drag(a, b)
        return self.moves.get(frozenset((a, b)))


@dataclass
class Prediction:
    observables: int = 0
    components: int = 0
    discharges: int = 0
    fallbacks: int = 0
    presolved: int = 0

    def bits(self, observable_count: int) -> np.ndarray:
        return np.array([self.observables >> k & 1 for k in range(observable_count)], dtype=np.uint8)


@dataclass(frozen=True)
class _State:
    held: int | None = None
    log_probability: float = 0.0
    errors: int = 0
    observables: int = 0
    discharges: int = 0
    stretched: int = 0

    def apply(self, move: Move, held: int | None, discharged: int = 0) -> '_State':
        return _State(
            held=held,
            log_probability=self.log_probability + move.log_probability,
            errors=self.errors + len(move.errors),
            observables=self.observables ^ move.observables,
            discharges=self.discharges + discharged,
            stretched=self.stretched,
        )

    def stretch(self) -> '_State':
        return replace(self, stretched=self.stretched + 1)


def _arrive(table: LiftTable, state: _State, v: int):
    """States after stepping onto ``v`` with the held excitation kept close."""
    h = state.held
    if h is None or h == v:
        yield state
        if h is not None and table.discharge(h) is not None:
            yield state.apply(table.discharge(h), None, discharged=1)
        return

    if table.colors[h] == table.colors[v]:
        move = table.drag(h, v)
        yield state.stretch() if move is None else state.apply(move, v)
    elif table.near(h, v):
        yield state
    else:
        moved = False
        for target in table.routes_from(h):
            if target != h and table.near(target, v):
                moved = True
                yield state.apply(table.drag(h, target), target)
        if not moved:
            yield state.stretch()

    if table.discharge(h) is not None:
        yield state.apply(table.discharge(h), None, discharged=1)


def _grab(table: LiftTable, state: _State, v: int):
    """States after picking up the detection event at ``v``."""
    h = state.held
    if h is None:
        yield replace(state, held=v)
        return
    if h == v:
        yield replace(state, held=None)
        return

    move = table.pair(h, v)
    if move is not None:
        yield state.apply(move, None)
    for x, completion in table.completions.get(frozenset((h, v)), ()):
        yield state.apply(completion, x)
    if table.discharge(h) is not None:
        yield state.apply(table.discharge(h), v, discharged=1)
    if table.discharge(v) is not None:
        yield state.apply(table.discharge(v), h, discharged=1)


def _rank(table: LiftTable, state: _State, ahead: int | None) -> tuple:
    close = state.held is None or ahead is None or table.near(state.held, ahead)
    return (
        -state.stretched,
        round(state.log_probability, 9),
        close,
        -state.errors,
        -state.observables,
        -(state.held if state.held is not None else -1),
    )


def _keep_best(table: LiftTable, states, ahead: int | None) -> dict[int, _State]:
    """Most likely state per held color, 0 standing for holding nothing."""
    best = {}
    ranks = {}
    for state in states:
        color = 0 if state.held is None else table.colors[state.held]
        rank = _rank(table, state, ahead)
        if color not in best or rank > ranks[color]:
            best[color] = state
            ranks[color] = rank
    return best


def drag_along(table: LiftTable, tour: list[int], fired: set[int]) -> _State | None:
    """
    Walk ``tour`` keeping the most likely history for each of the four states.

    Each detection event is grabbed once, on its first visit, so tours that
    pass through a node several times never consume it twice.
    """
    states = {0: _State()}
    grabbed = set()
    for i, v in enumerate(tour):
        ahead = tour[i + 1] if i + 1 < len(tour) else None
        following = [after for state in states.values() for after in _arrive(table, state, v)]
        if v in fired and v not in grabbed:
            grabbed.add(v)
            following = [after for state in following for after in _grab(table, state, v)]
        states = _keep_best(table, following, ahead)
        if not states:
            return None
    return states.get(0)


def solve_locally(table: LiftTable, detectors, fired) -> _State | None:
    """
    Explain ``fired`` with errors supported next to ``detectors``, preferring
    likely errors as pivots of a GF(2) elimination.
    """
    region = set(detectors)
    for d in detectors:
        region |= table.neighbors.get(d, set())
    candidates = [i for i, error in enumerate(table.atomic) if set(error.symptoms) <= region]
    candidates.sort(key=lambda i: (-table.atomic[i].probability, i))
    rows = {d: k for k, d in enumerate(sorted(region))}

    matrix = np.zeros((len(rows), len(candidates) + 1), dtype=np.uint8)
    for col, i in enumerate(candidates):
        for d in table.atomic[i].symptoms:
            matrix[rows[d], col] = 1
    for d in fired:
        matrix[rows[d], -1] = 1

    reduced, pivots = gf2_row_reduce(matrix)
    if len(candidates) in pivots:
        return None
    state = _State()
    for row, col in enumerate(pivots):
        if reduced[row, -1]:
            error = table.atomic[candidates[col]]
            move = Move(frozenset(error.symptoms), (candidates[col],), error.observables, error.log_probability)
            state = state.apply(move, None)
    return state


def lift(
    table: LiftTable,
    flat: nx.MultiGraph,
    fired: set[int],
    shot: int | None = None,
    fallback: bool = False,
) -> Prediction:
    """
    Observable prediction from the flattened matching ``flat``.

    A tour that cannot end holding nothing raises LiftFailure unless
    ``fallback`` allows a local GF(2) solve for that component.
    """
    prediction = Prediction()
    stranded = sorted(fired - set(flat.nodes))
    if stranded:
        raise LiftFailure(f'Detection events {stranded} are not on any matched edge.', shot=shot)

    for component in sorted(nx.connected_components(flat), key=min):
        prediction.components += 1
        start = min(component)
        tour = [start] + [v for _, v in nx.eulerian_circuit(flat.subgraph(component), source=start)]
        state = drag_along(table, tour, fired)
        if state is None:
            if not fallback:
                raise LiftFailure(f'Tour at D{start} ends still dragging an excitation.', shot=shot)
            state = solve_locally(table, component, fired & component)
            if state is None:
                raise LiftFailure(f'No consistent lift for the component at D{start}.', shot=shot)
            prediction.fallbacks += 1
            logger.warning('Shot %s: tour at D%d fell back to a local solve.', shot, start)
        prediction.observables ^= state.observables
        prediction.discharges += state.discharges
    return prediction
