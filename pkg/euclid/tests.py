import math
import tempfile
from functools import cache
from io import StringIO
from itertools import combinations
from pathlib import Path

import numpy as np
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase

from .exceptions import EuclidError, InstanceSyntaxError, InvalidInstance, NoNeutralPartition
from .files import parse_instance, parse_solution, serialize_instance, serialize_solution
from .problem import ColoredPoint, Edge, EuclidInstance, EuclidSolution, cost, validate
from .solver import geometric_median, solve_restricted


RED, GREEN, BLUE = 1, 2, 3
EQUILATERAL = [(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3) / 2)]


def instance(*points):
    return EuclidInstance([ColoredPoint(color, (float(x), float(y))) for color, x, y in points])


def random_instance(rng, max_points=8):
    while True:
        parity = int(rng.integers(2))
        counts = [parity + 2 * int(rng.integers(0, 3)) for _ in range(3)]
        if 0 < sum(counts) <= max_points:
            break
    colors = [color for color, count in zip((RED, GREEN, BLUE), counts) for _ in range(count)]
    positions = rng.uniform(-5, 5, size=(len(colors), 2))
    return EuclidInstance([ColoredPoint(c, (float(x), float(y))) for c, (x, y) in zip(colors, positions)])


@cache
def triple_cost(points):
    center = geometric_median([p.position for p in points])
    return math.fsum(math.dist(center, p.position) for p in points)


def enumerate_cost(points, allow_triples=True):
    """Cheapest pair/triple partition, by plain recursion over every partition."""
    if not points:
        return 0.0
    first, rest = points[0], points[1:]
    best = math.inf
    for index, other in enumerate(rest):
        if other.color == first.color:
            remaining = rest[:index] + rest[index + 1:]
            best = min(best, math.dist(first.position, other.position) + enumerate_cost(remaining, allow_triples))
    if allow_triples:
        for a, b in combinations(range(len(rest)), 2):
            if {first.color, rest[a].color, rest[b].color} == {RED, GREEN, BLUE}:
                remaining = [p for k, p in enumerate(rest) if k not in (a, b)]
                best = min(best, triple_cost((first, rest[a], rest[b])) + enumerate_cost(remaining, allow_triples))
    return best


class ValidationTests(SimpleTestCase):
    def test_same_color_pair(self):
        problem = instance((RED, 0, 0), (RED, 2, 0))
        solution = EuclidSolution(edges=[Edge(RED, (0.0, 0.0), (2.0, 0.0))])
        self.assertTrue(validate(problem, solution))

    def test_rainbow_triangle_needs_a_neutral_point(self):
        problem = instance(*[(c, x, y) for c, (x, y) in zip((RED, GREEN, BLUE), EQUILATERAL)])
        corners = [p.position for p in problem.points]
        for color in (RED, GREEN, BLUE):
            pairwise = EuclidSolution(edges=[Edge(color, a, b) for a, b in combinations(corners, 2)])
            self.assertFalse(validate(problem, pairwise))

        center = (0.5, math.sqrt(3) / 6)
        star = EuclidSolution(
            neutral_points=[center],
            edges=[Edge(p.color, center, p.position) for p in problem.points],
        )
        self.assertTrue(validate(problem, star).valid)
        self.assertAlmostEqual(cost(star), 3 / math.sqrt(3))

    def test_dangling_edge(self):
        problem = instance((RED, 0, 0), (RED, 2, 0))
        solution = EuclidSolution(edges=[Edge(RED, (0.0, 0.0), (1.0, 0.0))])
        result = validate(problem, solution)
        self.assertFalse(result)
        self.assertIn('edge must terminate on nodes', result.diagnostics[0])

    def test_neutral_point_on_input_point(self):
        problem = instance((RED, 0, 0), (RED, 2, 0))
        solution = EuclidSolution(neutral_points=[(0.0, 0.0)], edges=[Edge(RED, (0.0, 0.0), (2.0, 0.0))])
        self.assertIn('overlaps', validate(problem, solution).diagnostics[0])

    def test_cost(self):
        self.assertEqual(cost(EuclidSolution()), 0)
        self.assertEqual(cost(EuclidSolution(edges=[Edge(GREEN, (0.0, 0.0), (0.0, 1.0))])), 1)

    def test_instance_checks(self):
        with self.assertRaises(InvalidInstance):
            instance((RED, 0, 0), (RED, 0, 0)).check()
        with self.assertRaises(InvalidInstance):
            instance((RED, 0, 0), (GREEN, 1, 0)).check()
        with self.assertRaises(InvalidInstance):
            instance((4, 0, 0), (4, 1, 0)).check()
        self.assertEqual(instance((RED, 0, 0), (GREEN, 1, 0), (BLUE, 0, 1)).net_color, 0)


class SolverTests(SimpleTestCase):
    def test_pair(self):
        solution = solve_restricted(instance((RED, 0, 0), (RED, 2, 0)))
        self.assertEqual(solution.edges, [Edge(RED, (0.0, 0.0), (2.0, 0.0))])
        self.assertEqual(solution.neutral_points, [])
        self.assertEqual(cost(solution), 2)

    def test_equilateral_triangle(self):
        problem = instance(*[(c, x, y) for c, (x, y) in zip((RED, GREEN, BLUE), EQUILATERAL)])
        solution = solve_restricted(problem)
        [center] = solution.neutral_points
        self.assertAlmostEqual(center[0], 0.5, places=8)
        self.assertAlmostEqual(center[1], math.sqrt(3) / 6, places=8)
        self.assertAlmostEqual(cost(solution), math.sqrt(3), places=9)
        self.assertTrue(validate(problem, solution))

    def test_empty_instance(self):
        solution = solve_restricted(EuclidInstance())
        self.assertEqual((solution.neutral_points, solution.edges), ([], []))

    def test_median_at_an_input_point_is_nudged(self):
        problem = instance((RED, 0, 0), (GREEN, 1, 0), (BLUE, -1, 0.01))
        solution = solve_restricted(problem)
        [center] = solution.neutral_points
        self.assertNotEqual(center, (0.0, 0.0))
        self.assertLess(math.dist(center, (0.0, 0.0)), 1e-9)
        self.assertTrue(validate(problem, solution))

    def test_symmetric_collinear_triple(self):
        problem = instance((RED, 0, 0), (GREEN, -1, 0), (BLUE, 1, 0))
        solution = solve_restricted(problem)
        self.assertTrue(validate(problem, solution))
        self.assertAlmostEqual(cost(solution), 2.0, places=9)

    def test_median_is_stationary(self):
        rng = np.random.default_rng(3)
        checked = 0
        while checked < 20:
            corners = [tuple(p) for p in rng.uniform(-1, 1, size=(3, 2))]
            center = geometric_median(corners)
            if any(math.dist(center, c) < 1e-6 for c in corners):
                continue
            here = sum(math.dist(center, c) for c in corners)
            for dx, dy in ((1e-6, 0), (-1e-6, 0), (0, 1e-6), (0, -1e-6)):
                moved = (center[0] + dx, center[1] + dy)
                self.assertGreater(sum(math.dist(moved, c) for c in corners), here - 1e-6)
            checked += 1

    def test_random_instances_validate_and_are_optimal(self):
        rng = np.random.default_rng(2024)
        for _ in range(500):
            problem = random_instance(rng)
            solution = solve_restricted(problem)
            self.assertTrue(validate(problem, solution), validate(problem, solution).diagnostics)
            self.assertAlmostEqual(cost(solution), enumerate_cost(problem.points), places=9)

    def test_triples_never_cost_more_than_pairs(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            colors = [RED, RED, GREEN, GREEN, BLUE, BLUE]
            positions = rng.uniform(0, 10, size=(6, 2))
            problem = EuclidInstance([ColoredPoint(c, (float(x), float(y))) for c, (x, y) in zip(colors, positions)])
            with_triples = cost(solve_restricted(problem))
            pairs_only = cost(solve_restricted(problem, allow_triples=False))
            self.assertLessEqual(with_triples, pairs_only + 1e-12)
            self.assertAlmostEqual(pairs_only, enumerate_cost(problem.points, allow_triples=False), places=9)

    def test_limits(self):
        with self.assertRaises(NoNeutralPartition):
            solve_restricted(instance((RED, 0, 0), (GREEN, 1, 0), (BLUE, 0, 1)), allow_triples=False)
        crowd = EuclidInstance([ColoredPoint(RED, (float(k), 0.0)) for k in range(14)])
        with self.assertRaises(EuclidError):
            solve_restricted(crowd)


class FileFormatTests(SimpleTestCase):
    def test_parse_instance(self):
        problem = parse_instance('# rainbow\nR 0 0\n2 1.5 0  # green\n\nb 0 2\n')
        self.assertEqual(
            problem.points,
            [ColoredPoint(RED, (0.0, 0.0)), ColoredPoint(GREEN, (1.5, 0.0)), ColoredPoint(BLUE, (0.0, 2.0))],
        )
        self.assertEqual(parse_instance(serialize_instance(problem)), problem)

    def test_syntax_errors(self):
        with self.assertRaisesMessage(InstanceSyntaxError, 'line 2'):
            parse_instance('R 0 0\nX 1 1\n')
        with self.assertRaisesMessage(InstanceSyntaxError, 'line 1'):
            parse_instance('R 0\n')
        with self.assertRaises(InstanceSyntaxError):
            parse_solution('edge R 0 0 1\n')

    def test_solution_text(self):
        problem = instance((RED, 0, 0), (GREEN, 1, 0), (BLUE, 0.25, 1), (RED, 3, 3), (RED, 4, 3))
        solution = solve_restricted(problem)
        text = serialize_solution(solution)
        self.assertEqual(len(text.splitlines()), 1 + 3 + 1)
        self.assertTrue(validate(problem, parse_solution(text)))


class EuclidCommandTests(SimpleTestCase):
    def test_solve_and_validate(self):
        with tempfile.TemporaryDirectory() as tmp:
            source = Path(tmp) / 'points.txt'
            out = Path(tmp) / 'solution.txt'
            svg = Path(tmp) / 'solution.svg'
            source.write_text('R 0 0\nG 1 0\nB 0.5 0.8660254037844386\nR 5 5\nR 6 5\n', encoding='utf-8')

            stdout = StringIO()
            call_command('euclid', 'solve', '--in', str(source), '--out', str(out), '--svg', str(svg), stdout=stdout)
            self.assertIn('1 neutral points', stdout.getvalue())
            self.assertIn('<svg', svg.read_text(encoding='utf-8'))

            stdout = StringIO()
            call_command('euclid', 'validate', '--in', str(source), '--solution', str(out), stdout=stdout)
            self.assertIn('Valid solution', stdout.getvalue())

    def test_solve_prints_solution(self):
        with tempfile.TemporaryDirectory() as tmp:
            source = Path(tmp) / 'points.txt'
            source.write_text('1 0 0\n1 0 3\n', encoding='utf-8')
            stdout = StringIO()
            call_command('euclid', 'solve', '--in', str(source), stdout=stdout)
        self.assertEqual(stdout.getvalue(), 'edge 1 0.0 0.0 0.0 3.0\n')

    def test_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            source = Path(tmp) / 'points.txt'
            source.write_text('R 0 0\nG 1 0\n', encoding='utf-8')
            with self.assertRaises(CommandError):
                call_command('euclid', 'solve', '--in', str(source), stdout=StringIO())
            with self.assertRaises(CommandError):
                call_command('euclid', 'solve', '--in', str(Path(tmp) / 'missing.txt'), stdout=StringIO())

            source.write_text('R 0 0\nR 1 0\n', encoding='utf-8')
            bad = Path(tmp) / 'bad.txt'
            bad.write_text('edge 1 0 0 0.5 0\n', encoding='utf-8')
            with self.assertRaisesMessage(CommandError, 'edge must terminate on nodes'):
                call_command('euclid', 'validate', '--in', str(source), '--solution', str(bad), stdout=StringIO())
