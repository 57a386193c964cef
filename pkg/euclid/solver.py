"""
Exact search over a restricted family of solutions: every input point is
either paired with a point of its own color by one edge, or joined with
one point of each other color through a neutral point at the three
points' geometric median.
"""

import logging
import math
from functools import cache

import numpy as np

from .exceptions import EuclidError, NoNeutralPartition
from .problem import Edge, EuclidInstance, EuclidSolution, Position


logger = logging.getLogger(__name__)

MAX_POINTS = 12
WEISZFELD_TOLERANCE = 1e-9
MAX_ITERATIONS = 10_000
NUDGE = 1e-12


def _step_off(position: np.ndarray, toward: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    """Move ``position`` a tiny distance toward ``toward`` so it stops being an input point."""
    direction = toward - position
    if not np.any(direction):
        direction = fallback - position
    direction = direction / np.linalg.norm(direction)
    step = max(NUDGE, 4 * math.ulp(float(np.abs(position).max())))
    moved = position + step * direction
    while tuple(moved) == tuple(position):
        step *= 2
        moved = position + step * direction
    return moved


def geometric_median(positions, tolerance: float = WEISZFELD_TOLERANCE) -> Position:
    """
    Weiszfeld iteration from the centroid. When the median is one of the
    inputs it is nudged toward the centroid, so the result never coincides
    with an input point.
    """
    points = np.asarray(positions, dtype=float)
    centroid = points.mean(axis=0)

    for i, vertex in enumerate(points):
        others = np.delete(points, i, axis=0)
        offsets = others - vertex
        pull = (offsets / np.linalg.norm(offsets, axis=1)[:, None]).sum(axis=0)
        if np.linalg.norm(pull) <= 1:
            moved = _step_off(vertex, centroid, others[0])
            return float(moved[0]), float(moved[1])

    current = centroid
    for _ in range(MAX_ITERATIONS):
        distances = np.linalg.norm(points - current, axis=1)
        weights = 1 / distances
        following = (points * weights[:, None]).sum(axis=0) / weights.sum()
        if np.linalg.norm(following - current) < tolerance:
            current = following
            break
        current = following
    else:
        logger.warning('Weiszfeld iteration did not converge for %s.', positions)
    return float(current[0]), float(current[1])


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def solve_restricted(instance: EuclidInstance, allow_triples: bool = True) -> EuclidSolution:
    """
    Cheapest solution made of same-color pairs and distinct-color triples,
    found by exhaustive search over partitions of the input points.
    """
    instance.check()
    points = instance.points
    if len(points) > MAX_POINTS:
        raise EuclidError(f'Exhaustive search handles at most {MAX_POINTS} points, got {len(points)}.')
    colors = [point.color for point in points]
    where = [point.position for point in points]

    @cache
    def median(i: int, j: int, k: int) -> tuple[Position, float]:
        center = geometric_median([where[i], where[j], where[k]])
        return center, math.fsum(math.dist(center, where[x]) for x in (i, j, k))

    @cache
    def best(mask: int) -> tuple[float, tuple | None]:
        if not mask:
            return 0.0, ()
        i = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << i)
        chosen = (math.inf, None)
        for j in _bits(rest):
            if colors[j] == colors[i]:
                below, groups = best(rest ^ (1 << j))
                total = math.dist(where[i], where[j]) + below
                if total < chosen[0]:
                    chosen = (total, ((i, j),) + groups)
            elif allow_triples:
                for k in _bits(rest >> (j + 1) << (j + 1)):
                    if colors[k] in (colors[i], colors[j]):
                        continue
                    below, groups = best(rest ^ (1 << j) ^ (1 << k))
                    total = median(i, j, k)[1] + below
                    if total < chosen[0]:
                        chosen = (total, ((i, j, k),) + groups)
        return chosen

    total, groups = best((1 << len(points)) - 1)
    if groups is None:
        raise NoNeutralPartition('No partition of the points into neutral pairs and triples exists.')

    solution = EuclidSolution()
    taken = set(where)
    for group in groups:
        if len(group) == 2:
            i, j = group
            solution.edges.append(Edge(colors[i], where[i], where[j]))
            continue
        center, _ = median(*group)
        while center in taken:
            center = (math.nextafter(center[0], math.inf), center[1])
        taken.add(center)
        solution.neutral_points.append(center)
        solution.edges.extend(Edge(colors[x], center, where[x]) for x in group)

    logger.debug('Solved %d points with %d groups, cost %.6f.', len(points), len(groups), total)
    return solution
