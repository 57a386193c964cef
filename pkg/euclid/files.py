"""
Text formats. Instances hold one ``color x y`` line per point; solutions
hold ``neutral x y`` and ``edge color x1 y1 x2 y2`` lines. ``#`` starts a
comment. Colors are 1, 2, 3 or R, G, B.
"""

from pathlib import Path

from circuits.choices import Color

from .exceptions import InstanceSyntaxError
from .problem import ColoredPoint, Edge, EuclidInstance, EuclidSolution


COLOR_LETTERS = {'R': Color.RED, 'G': Color.GREEN, 'B': Color.BLUE}


def _color(token: str, line: int) -> int:
    token = token.strip().upper()
    if token in COLOR_LETTERS:
        return int(COLOR_LETTERS[token])
    if token.isdigit() and int(token) in Color.values:
        return int(token)
    raise InstanceSyntaxError(f'Unknown color "{token}".', line)


def _numbers(tokens, line: int) -> list[float]:
    try:
        return [float(token) for token in tokens]
    except ValueError as exc:
        raise InstanceSyntaxError(str(exc), line) from exc


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split('#', 1)[0].split()
        if content:
            yield number, content


def parse_instance(text: str) -> EuclidInstance:
    instance = EuclidInstance()
    for line, tokens in _lines(text):
        if len(tokens) != 3:
            raise InstanceSyntaxError('Expected "color x y".', line)
        x, y = _numbers(tokens[1:], line)
        instance.points.append(ColoredPoint(_color(tokens[0], line), (x, y)))
    return instance


def serialize_instance(instance: EuclidInstance) -> str:
    return ''.join(f'{p.color} {p.position[0]!r} {p.position[1]!r}\n' for p in instance.points)


def parse_solution(text: str) -> EuclidSolution:
    solution = EuclidSolution()
    for line, tokens in _lines(text):
        kind = tokens[0].lower()
        if kind == 'neutral' and len(tokens) == 3:
            x, y = _numbers(tokens[1:], line)
            solution.neutral_points.append((x, y))
        elif kind == 'edge' and len(tokens) == 6:
            x1, y1, x2, y2 = _numbers(tokens[2:], line)
            solution.edges.append(Edge(_color(tokens[1], line), (x1, y1), (x2, y2)))
        else:
            raise InstanceSyntaxError('Expected "neutral x y" or "edge color x1 y1 x2 y2".', line)
    return solution


def serialize_solution(solution: EuclidSolution) -> str:
    lines = [f'neutral {x!r} {y!r}\n' for x, y in solution.neutral_points]
    lines += [
        f'edge {e.color} {e.start[0]!r} {e.start[1]!r} {e.end[0]!r} {e.end[1]!r}\n'
        for e in solution.edges
    ]
    return ''.join(lines)


def read_instance(path) -> EuclidInstance:
    return parse_instance(Path(path).read_text(encoding='utf-8'))


def read_solution(path) -> EuclidSolution:
    return parse_solution(Path(path).read_text(encoding='utf-8'))
