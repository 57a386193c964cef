"""
Qubit layouts for the code families: the triangular hexagonal color code on a
brick-wall grid, the hexagonal toric color code, the rotated surface code and
the repetition code.

Brick-wall coordinates are (column, row). Column ``c`` holds rows
``1..H(c)``; a rung joins (c, r) and (c + 1, r) when ``r`` and ``c`` have
different parity. Each face is anchored at (c, r0) and covers rows
r0..r0+2 of columns c and c+1.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .choices import Color
from .exceptions import InvalidLayout


# Brick-wall face colors cycle blue, red, green.
_COLOR_CYCLE = (Color.BLUE, Color.RED, Color.GREEN)


@dataclass(frozen=True)
class Face:
    color: int
    qubits: tuple[int, ...]
    bases: str = 'XZ'
    anchor: tuple = ()
    kind: str = 'face'

    def measures(self, basis: str) -> bool:
        return basis in self.bases


@dataclass(frozen=True)
class Layout:
    name: str
    coords: tuple[tuple[float, float], ...]
    faces: tuple[Face, ...]
    logicals: dict[str, tuple[int, ...]] = field(default_factory=dict)
    spurs: tuple[int, ...] = ()

    @property
    def num_data(self) -> int:
        return len(self.coords)

    @property
    def index(self) -> dict[tuple, int]:
        return {xy: q for q, xy in enumerate(self.coords)}

    def faces_for(self, basis: str) -> list[Face]:
        return [face for face in self.faces if face.measures(basis)]

    def logical(self, basis: str) -> tuple[int, ...]:
        try:
            return self.logicals[basis]
        except KeyError:
            raise InvalidLayout(f'{self.name} layout has no {basis} logical observable.') from None

    def check_coloring(self) -> None:
        """Every data qubit touches at most one face of each color per stabilizer basis."""
        for basis in 'XZ':
            seen = set()
            for face in self.faces_for(basis):
                for q in face.qubits:
                    if (q, face.color) in seen:
                        raise InvalidLayout(
                            f'{self.name}: qubit {q} touches two {Color(face.color).label} {basis} faces.'
                        )
                    seen.add((q, face.color))

    def stabilizer_matrix(self, basis: str) -> np.ndarray:
        faces = self.faces_for(basis)
        matrix = np.zeros((len(faces), self.num_data), dtype=np.uint8)
        for row, face in enumerate(faces):
            matrix[row, list(face.qubits)] = 1
        return matrix


def check_distance(d: int) -> int:
    d = int(d)
    if d < 3 or d % 2 == 0:
        raise InvalidLayout(f'Distance must be an odd integer >= 3, got {d}.')
    return d


def brick_height(d: int, c: int) -> int:
    return min(3 * c + 1, 3 * (d - 1 - c) + 2)


def brick_color(c: int, r0: int) -> Color:
    if c % 2:
        return _COLOR_CYCLE[(r0 // 2) % 3]
    return _COLOR_CYCLE[((r0 + 3) // 2) % 3]


@lru_cache(maxsize=None)
def triangle_layout(d: int, spurs: bool = False) -> Layout:
    """
    Triangular color code patch of distance ``d``. With ``spurs`` every odd
    column face cut down to three plus one vertices by the top boundary gets
    two extra qubits, completing it to a hexagon, and the two extra qubits
    form a weight-2 face of their own.
    """
    d = check_distance(d)
    sites = {(c, r) for c in range(d) for r in range(1, brick_height(d, c) + 1)}

    plain = []
    for c in range(d):
        for r0 in range(-1, brick_height(d, c) + 1):
            if (r0 - c - 1) % 2:
                continue
            left = [(c, r0 + k) for k in range(3) if (c, r0 + k) in sites]
            right = [(c + 1, r0 + k) for k in range(3) if (c + 1, r0 + k) in sites]
            if len(left) + len(right) >= 4:
                plain.append((c, r0, left, right))

    extra = []
    spur_faces = []
    if spurs:
        for c, r0, left, right in plain:
            if c % 2 == 0 or r0 <= 0 or sorted((len(left), len(right))) != [1, 3]:
                continue
            col = c if len(left) == 1 else c + 1
            pair = [(col, r0 + 1), (col, r0 + 2)]
            extra.extend(pair)
            spur_faces.append((c, r0, col, pair))
        sites |= set(extra)

    coords = tuple(sorted(sites))
    index = {xy: q for q, xy in enumerate(coords)}
    faces = []
    for c, r0, _, _ in plain:
        members = [(cc, r0 + k) for cc in (c, c + 1) for k in range(3) if (cc, r0 + k) in sites]
        faces.append(Face(
            color=brick_color(c, r0),
            qubits=tuple(sorted(index[xy] for xy in members)),
            anchor=(c, r0),
        ))
    for c, r0, col, pair in spur_faces:
        faces.append(Face(
            color=brick_color(c, r0 - 2),
            qubits=tuple(index[xy] for xy in pair),
            anchor=(col, r0 + 1),
            kind='spur',
        ))

    bottom = tuple(index[(c, 1)] for c in range(d))
    layout = Layout(
        name=f'triangle-d{d}{"-spurs" if spurs else ""}',
        coords=tuple((float(c), float(r)) for c, r in coords),
        faces=tuple(faces),
        logicals={'X': bottom, 'Z': bottom},
        spurs=tuple(index[xy] for xy in sorted(extra)),
    )
    layout.check_coloring()
    return layout


def hex_edges(columns: int, rows: int, wrap: bool) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    edges = []
    for c in range(columns):
        for r in range(rows):
            if wrap or r + 1 < rows:
                edges.append(((c, r), (c, (r + 1) % rows)))
            if (r - c - 1) % 2 == 0 and (wrap or c + 1 < columns):
                edges.append(((c, r), ((c + 1) % columns, r)))
    return edges


@lru_cache(maxsize=None)
def toric_layout(size: int) -> Layout:
    """
    Hexagonal color code on a torus of 2L columns by 3L rows. X memory keeps
    a red X string as its observable and Z memory a green Z string.
    """
    size = int(size)
    if size < 2 or size % 2:
        raise InvalidLayout(f'Toric size must be an even integer >= 2, got {size}.')
    columns, rows = 2 * size, 3 * size
    coords = tuple((c, r) for c in range(columns) for r in range(rows))
    index = {xy: q for q, xy in enumerate(coords)}

    faces = []
    for c in range(columns):
        for r0 in range(rows):
            if (r0 - c - 1) % 2:
                continue
            members = {index[((c + dc) % columns, (r0 + k) % rows)] for dc in (0, 1) for k in range(3)}
            faces.append(Face(color=brick_color(c, r0), qubits=tuple(sorted(members)), anchor=(c, r0)))

    layout = Layout(
        name=f'toric-{size}',
        coords=tuple((float(c), float(r)) for c, r in coords),
        faces=tuple(faces),
    )
    edges = [(index[a], index[b]) for a, b in hex_edges(columns, rows, wrap=True)]
    logicals = {
        'X': colored_string(layout, edges, Color.RED),
        'Z': colored_string(layout, edges, Color.GREEN),
    }
    layout = Layout(name=layout.name, coords=layout.coords, faces=layout.faces, logicals=logicals)
    layout.check_coloring()
    return layout


def edge_color(layout: Layout, a: int, b: int) -> int:
    """Color of an edge: the color of neither face it borders."""
    shared = [face.color for face in layout.faces if a in face.qubits and b in face.qubits]
    if len(shared) != 2:
        raise InvalidLayout(f'Edge {a}-{b} borders {len(shared)} faces instead of 2.')
    return shared[0] ^ shared[1]


def colored_string(layout: Layout, edges, color: int) -> tuple[int, ...]:
    """
    A non-trivial logical supported on edges of one color: a closed string
    commuting with every stabilizer but not itself a product of stabilizers.
    """
    chosen = [(a, b) for a, b in edges if edge_color(layout, a, b) == color]
    incidence = np.zeros((layout.num_data, len(chosen)), dtype=np.uint8)
    for k, (a, b) in enumerate(chosen):
        incidence[a, k] = 1
        incidence[b, k] = 1
    checks = layout.stabilizer_matrix('X')
    loops = gf2_nullspace(checks.astype(np.int64) @ incidence % 2)

    best = None
    for loop in loops:
        support = incidence.astype(np.int64) @ loop % 2
        if not support.any() or gf2_in_rowspace(checks, support):
            continue
        qubits = tuple(int(q) for q in np.flatnonzero(support))
        if best is None or len(qubits) < len(best):
            best = qubits
    if best is None:
        raise InvalidLayout(f'{layout.name}: no {Color(color).label} logical string found.')
    return best


@lru_cache(maxsize=None)
def surface_layout(d: int) -> Layout:
    """
    Rotated surface code. Plaquette (x, y) covers data (x-1..x, y-1..y); it is a
    Z check when x + y is even. Checks alternate red and green along x.
    """
    d = check_distance(d)
    coords = tuple((float(i), float(j)) for i in range(d) for j in range(d))

    def q(i, j):
        return i * d + j

    faces = []
    for x in range(d + 1):
        for y in range(d + 1):
            basis = 'Z' if (x + y) % 2 == 0 else 'X'
            inside_x = 1 <= x <= d - 1
            inside_y = 1 <= y <= d - 1
            if not (inside_x and inside_y):
                if basis == 'Z' and not (inside_y and x in (0, d)):
                    continue
                if basis == 'X' and not (inside_x and y in (0, d)):
                    continue
            members = [
                q(i, j)
                for i in (x - 1, x) for j in (y - 1, y)
                if 0 <= i < d and 0 <= j < d
            ]
            color = Color.RED if x % 2 == 0 else Color.GREEN
            faces.append(Face(color=color, qubits=tuple(sorted(members)), bases=basis, anchor=(x, y)))

    layout = Layout(
        name=f'surface-d{d}',
        coords=coords,
        faces=tuple(faces),
        logicals={
            'X': tuple(q(0, j) for j in range(d)),
            'Z': tuple(q(i, 0) for i in range(d)),
        },
    )
    layout.check_coloring()
    return layout


@lru_cache(maxsize=None)
def repetition_layout(d: int) -> Layout:
    d = check_distance(d)
    faces = tuple(
        Face(color=Color.RED if i % 2 == 0 else Color.GREEN, qubits=(i, i + 1), bases='Z', anchor=(i,))
        for i in range(d - 1)
    )
    return Layout(
        name=f'repetition-d{d}',
        coords=tuple((float(i), 0.0) for i in range(d)),
        faces=faces,
        logicals={'Z': (0,)},
    )


def gf2_row_reduce(matrix: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2) and the pivot columns."""
    m = (np.array(matrix, dtype=np.uint8) % 2).copy()
    pivots = []
    row = 0
    rows, cols = m.shape
    for col in range(cols):
        if row >= rows:
            break
        hits = np.flatnonzero(m[row:, col])
        if not hits.size:
            continue
        pivot = row + int(hits[0])
        if pivot != row:
            m[[row, pivot]] = m[[pivot, row]]
        others = np.flatnonzero(m[:, col])
        others = others[others != row]
        m[others] ^= m[row]
        pivots.append(col)
        row += 1
    return m[:row], pivots


def gf2_rank(matrix: np.ndarray) -> int:
    return len(gf2_row_reduce(matrix)[1])


def gf2_nullspace(matrix: np.ndarray) -> np.ndarray:
    matrix = np.atleast_2d(np.array(matrix, dtype=np.uint8))
    cols = matrix.shape[1]
    reduced, pivots = gf2_row_reduce(matrix)
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for row, p in enumerate(pivots):
            basis[k, p] = reduced[row, f]
    return basis


def gf2_in_rowspace(matrix: np.ndarray, vector: np.ndarray) -> bool:
    if not len(matrix):
        return not np.any(vector)
    return gf2_rank(np.vstack([matrix, vector])) == gf2_rank(matrix)
