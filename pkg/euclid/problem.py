"""
Continuous color decoding: colored points in the plane are explained by
colored edges and extra neutral points, paying the total edge length.
"""

import math
from dataclasses import dataclass, field
from functools import reduce

from circuits.choices import Color

from .exceptions import InvalidInstance


Position = tuple[float, float]


@dataclass(frozen=True)
class ColoredPoint:
    color: int
    position: Position


@dataclass(frozen=True)
class Edge:
    color: int
    start: Position
    end: Position

    @property
    def length(self) -> float:
        return math.dist(self.start, self.end)


@dataclass
class EuclidInstance:
    points: list[ColoredPoint] = field(default_factory=list)

    @property
    def net_color(self) -> int:
        return reduce(lambda acc, point: acc ^ point.color, self.points, 0)

    def check(self) -> 'EuclidInstance':
        for point in self.points:
            if point.color not in Color.values:
                raise InvalidInstance(f'Point {point.position} has color {point.color}; expected 1, 2 or 3.')
        positions = [point.position for point in self.points]
        if len(set(positions)) != len(positions):
            raise InvalidInstance('Points must not overlap.')
        if self.net_color:
            raise InvalidInstance(f'Net color is {self.net_color}, not neutral.')
        return self


@dataclass
class EuclidSolution:
    neutral_points: list[Position] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)


@dataclass
class Validation:
    diagnostics: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.diagnostics

    def __bool__(self):
        return self.valid


def validate(instance: EuclidInstance, solution: EuclidSolution) -> Validation:
    """
    A solution is valid when its edges only end on nodes and the colors of
    the edges touching each node XOR to the node's color (neutral is 0).
    """
    result = Validation()
    nodes = {point.position: point.color for point in instance.points}
    for position in solution.neutral_points:
        if position in nodes:
            result.diagnostics.append(f'Neutral point {position} overlaps another node.')
            return result
        nodes[position] = 0

    touching = dict.fromkeys(nodes, 0)
    for index, edge in enumerate(solution.edges):
        if edge.color not in Color.values:
            result.diagnostics.append(f'Edge {index} has color {edge.color}; expected 1, 2 or 3.')
            return result
        for end in (edge.start, edge.end):
            if end not in nodes:
                result.diagnostics.append(f'Edge {index} ends at {end}: edge must terminate on nodes.')
                return result
            touching[end] ^= edge.color

    for position, color in nodes.items():
        if touching[position] != color:
            result.diagnostics.append(
                f'Node {position} has color {color} but its edges explain {touching[position]}.'
            )
            return result
    return result


def cost(solution: EuclidSolution) -> float:
    return math.fsum(edge.length for edge in solution.edges)
