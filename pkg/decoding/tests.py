import math
import tempfile
import time
from io import StringIO
from itertools import product
from pathlib import Path

import networkx as nx
import numpy as np
from django.conf import settings
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase, override_settings

from circuits.circuit_ir import serialize_circuit
from circuits.dem import DetectorErrorModel, ErrorMechanism, circuit_to_dem, parse_dem, sample_dem, serialize_dem
from circuits.exceptions import UnannotatedDetector
from circuits.frame_sim import ShotBatch, read_b8, sample, write_b8
from circuits.generators import gen_midout, gen_phenom, gen_superdense, gen_transit
from decoding.exceptions import (
    DecompositionFailure,
    ImmovableExcitation,
    InfeasibleMatching,
    LiftFailure,
    MatchableColorViolation,
    RainbowViolation,
)
from decoding.lift import lift
from decoding.matcher import WeightedEdge, WeightedGraph, build_graph, decode_matching, match_edges
from decoding.mobius import (
    EdgeKind,
    configure,
    decode_batch,
    decode_shot,
    decompose,
    prediction_bits,
    split_node,
    subgraph_of,
)
from decoding.oracles import decode_ml, min_logical_weight


# Annotations: X red/green/blue = 0/1/2, Z red/green/blue = 3/4/5.
def dem_text(annotations, *errors) -> str:
    lines = list(errors)
    lines.extend(f'detector(0,0,0,{a}) D{d}' for d, a in enumerate(annotations))
    return '\n'.join(lines) + '\n'


def weighted_graph(edges) -> WeightedGraph:
    g = WeightedGraph()
    for u, v, w in edges:
        edge = WeightedEdge(len(g.edges), u, v, 0.0, w)
        g.edges.append(edge)
        g.graph.add_edge(u, v, weight=w, id=edge.id)
    return g


def random_instance(rng):
    n = int(rng.integers(4, 13))
    edges = [(k, k + 1) for k in range(n - 1)]
    edges += [(a, b) for a in range(n) for b in range(a + 2, n) if rng.random() < 0.3]
    g = weighted_graph([(a, b, float(rng.uniform(0.1, 5.0))) for a, b in edges])
    size = 2 * int(rng.integers(1, min(n // 2, 5) + 1))
    excited = sorted(int(x) for x in rng.choice(n, size=size, replace=False))
    return g, excited


def brute_force_weight(g: WeightedGraph, excited) -> float:
    distances = dict(nx.all_pairs_dijkstra_path_length(g.graph, weight='weight'))

    def best(nodes):
        if not nodes:
            return 0.0
        first, rest = nodes[0], nodes[1:]
        return min(distances[first][other] + best(rest[:k] + rest[k + 1:]) for k, other in enumerate(rest))

    return best(list(excited))


def detection_row(dem, symptoms) -> np.ndarray:
    row = np.zeros(dem.detector_count, dtype=np.uint8)
    row[list(symptoms)] = 1
    return row


class MatcherTests(SimpleTestCase):
    def test_weights(self):
        self.assertEqual(build_graph([(0, 1, 0.5)]).edges[0].weight, 0.0)
        merged = build_graph([(0, 1, 0.1), (1, 0, 0.1)])
        self.assertEqual(len(merged.edges), 1)
        self.assertAlmostEqual(merged.edges[0].probability, 0.18)
        self.assertAlmostEqual(merged.edges[0].weight, math.log(0.82 / 0.18))
        self.assertAlmostEqual(build_graph([(0, 1, 1e-4)]).edges[0].weight, 9.2102, places=4)

    def test_probability_above_half_is_clamped(self):
        with self.assertLogs('decoding.matcher', level='WARNING'):
            g = build_graph([(0, 1, 0.7)])
        self.assertEqual(g.edges[0].weight, 0.0)

    def test_self_loop_rejected(self):
        with self.assertRaises(ValueError):
            build_graph([(3, 3, 0.1)])

    def test_nothing_excited(self):
        solution = decode_matching(build_graph([(0, 1, 0.1)]), [])
        self.assertEqual(solution.pairs, [])
        self.assertEqual(solution.paths, [])

    def test_path_graph(self):
        g = build_graph([(0, 1, 0.1), (1, 2, 0.1)])
        solution = decode_matching(g, {0, 2})
        self.assertEqual(solution.pairs, [(0, 2)])
        self.assertEqual(solution.paths, [[g.graph[0][1]['id'], g.graph[1][2]['id']]])
        self.assertEqual(solution.edge_ids(), [0, 1])

    def test_odd_component_is_infeasible(self):
        g = build_graph([(0, 1, 0.1), (2, 3, 0.1)])
        with self.assertRaises(InfeasibleMatching):
            decode_matching(g, [0, 1, 2])
        with self.assertRaises(InfeasibleMatching):
            decode_matching(g, [0, 9])

    def test_matches_brute_force(self):
        rng = np.random.default_rng(2024)
        for trial in range(1000):
            g, excited = random_instance(rng)
            with self.subTest(trial=trial):
                best = brute_force_weight(g, excited)
                solution = decode_matching(g, excited)
                self.assertEqual(sorted(x for pair in solution.pairs for x in pair), excited)
                self.assertAlmostEqual(solution.weight, best, places=9)
                total = sum(g.edges[e].weight for path in solution.paths for e in path)
                self.assertAlmostEqual(total, solution.weight, places=9)

                used = match_edges(g, excited)
                # Integer weights inside the blossom solver cost a little precision.
                self.assertAlmostEqual(sum(g.edges[e].weight for e in used), best, delta=1e-3 * max(1.0, best))
                degree = {}
                for e in used:
                    for node in (g.edges[e].u, g.edges[e].v):
                        degree[node] = degree.get(node, 0) ^ 1
                self.assertEqual(sorted(node for node, odd in degree.items() if odd), excited)

    def test_match_edges_rejects_unpairable_events(self):
        g = build_graph([(0, 1, 0.1), (2, 3, 0.1)])
        self.assertEqual(match_edges(g, []), [])
        self.assertEqual(match_edges(g, [0, 1]), [0])
        with self.assertRaisesMessage(InfeasibleMatching, 'odd number'):
            match_edges(g, [0, 1, 2])
        with self.assertRaisesMessage(InfeasibleMatching, 'have no edges'):
            match_edges(g, [0, 9])

    def test_scaling_keeps_pairing(self):
        rng = np.random.default_rng(7)
        for trial in range(50):
            g, excited = random_instance(rng)
            scaled = weighted_graph((e.u, e.v, e.weight * 3.5) for e in g.edges)
            with self.subTest(trial=trial):
                self.assertEqual(decode_matching(g, excited).pairs, decode_matching(scaled, excited).pairs)

    def test_deterministic(self):
        g, excited = random_instance(np.random.default_rng(11))
        first = decode_matching(g, excited)
        second = decode_matching(g, excited)
        self.assertEqual(first.pairs, second.pairs)
        self.assertEqual(first.paths, second.paths)


class ConfigureTests(SimpleTestCase):
    # Z red, Z green, Z blue, Z red.
    ANNOTATIONS = (3, 4, 5, 3)

    def configure_text(self, *errors, annotations=ANNOTATIONS, strict=True, **options):
        return configure(parse_dem(dem_text(annotations, *errors)), strict=strict, **options)

    def edge_set(self, cfg):
        return {(min(e.u, e.v), max(e.u, e.v), e.kind) for e in cfg.graph.edges}

    def test_split_convention(self):
        # Red detector 0: node 0 in not-green, node 1 in not-blue.
        self.assertEqual(split_node(0, 1, 2), 0)
        self.assertEqual(split_node(0, 1, 3), 1)
        self.assertEqual(subgraph_of(5, 3), 2)
        with self.assertRaises(ValueError):
            split_node(0, 1, 1)

    def test_bulk_error_gives_one_edge_per_subgraph(self):
        cfg = self.configure_text('error(0.1) D0 D1 D2')
        self.assertEqual(self.edge_set(cfg), {
            (2, 4, EdgeKind.BULK),
            (0, 5, EdgeKind.BULK),
            (1, 3, EdgeKind.BULK),
        })
        for edge in cfg.graph.edges:
            self.assertEqual(
                subgraph_of(edge.u, cfg.graph.colors[edge.u >> 1]),
                subgraph_of(edge.v, cfg.graph.colors[edge.v >> 1]),
            )

    def test_corner_probability_is_squared(self):
        cfg = self.configure_text('error(0.1) D0')
        (edge,) = cfg.graph.edges
        self.assertEqual((edge.u, edge.v, edge.kind), (0, 1, EdgeKind.CORNER))
        self.assertAlmostEqual(edge.probability, 0.01)

    def test_shift_error_gives_parallel_edges(self):
        cfg = self.configure_text('error(0.1) D0 D3')
        self.assertEqual(self.edge_set(cfg), {(0, 6, EdgeKind.SHIFT), (1, 7, EdgeKind.SHIFT)})

    def test_boundary_error_links_subgraphs(self):
        cfg = self.configure_text('error(0.1) D0 D1')
        self.assertEqual(self.edge_set(cfg), {(1, 3, EdgeKind.BOUNDARY), (0, 2, EdgeKind.BOUNDARY_LINK)})

    def test_composite_error_splits_by_basis(self):
        # X red, X green, X blue, Z red, Z green, Z blue.
        annotations = (0, 1, 2, 3, 4, 5)
        errors = ('error(0.1) D0 D1 D2', 'error(0.1) D3 D4 D5 L0', 'error(0.05) D0 D1 D2 D3 D4 D5 L0')
        cfg = self.configure_text(*errors, annotations=annotations, presolve=False)
        self.assertEqual(len(cfg.graph.edges), 12)
        self.assertEqual(cfg.forced, [])
        prediction = decode_shot(cfg, detection_row(cfg.dem, range(6)))
        self.assertEqual(prediction.observables, 1)
        self.assertEqual(prediction.components, 2)

        presolved = decode_shot(self.configure_text(*errors, annotations=annotations), detection_row(cfg.dem, range(6)))
        self.assertEqual(presolved.observables, 1)
        self.assertEqual((presolved.presolved, presolved.components), (1, 0))

    def test_residual_flips_ride_on_the_first_edge(self):
        # X red, X green, X blue, Z red, Z green, Z blue.
        cfg = self.configure_text(
            'error(0.1) D0 D1 D2',
            'error(0.1) D3 D4 D5',
            'error(0.05) D0 D1 D2 D3 D4 D5 L0',
            annotations=(0, 1, 2, 3, 4, 5),
            presolve=False,
        )
        carried = [e for e in cfg.graph.edges if e.observables]
        self.assertEqual(len(carried), 1)
        self.assertEqual(carried[0].origin, 2)
        self.assertEqual(decode_shot(cfg, detection_row(cfg.dem, range(6))).observables, 0)

    def test_xor_decomposition(self):
        basic = {(0, 1), (1, 2), (2, 3)}
        self.assertEqual(decompose((0, 1, 2, 3), basic), [(0, 1), (2, 3)])
        self.assertEqual(decompose((0, 3), basic), [(0, 1), (1, 2), (2, 3)])
        self.assertIsNone(decompose((0, 4), basic))

    def test_decompose_prefers_fewest_parts(self):
        basic = {(0,), (1,), (2,), (0, 1), (0, 1, 2)}
        self.assertEqual(decompose((0, 1, 2), basic), [(0, 1, 2)])
        self.assertEqual(decompose((0, 1, 2, 3), {(0, 1), (2, 3), (2,), (3,)}), [(0, 1), (2, 3)])
        self.assertIsNone(decompose((0, 5), {(0,)}))

    def test_rainbow_violation(self):
        with self.assertRaises(RainbowViolation):
            self.configure_text('error(0.1) D0 D1 D3')
        with self.assertLogs('decoding.mobius', level='WARNING'):
            cfg = self.configure_text('error(0.1) D0 D1 D3', 'error(0.1) D2', strict=False)
        self.assertEqual(cfg.forced, [0])

    def test_rainbow_error_decomposes_at_boundary(self):
        cfg = self.configure_text('error(0.1) D0 D1 D3', 'error(0.1) D0 D1', 'error(0.1) D3')
        self.assertEqual(cfg.forced, [])

    def test_decomposition_failure(self):
        with self.assertRaises(DecompositionFailure):
            self.configure_text('error(0.1) D0 D1 D2 D3')

    def test_immovable_excitation(self):
        # Green D0, red D1 and D2, blue D3 and D4.
        text = ('error(0.1) D0 D1 D3', 'error(0.1) D0 D2 D4')
        with self.assertRaises(ImmovableExcitation):
            self.configure_text(*text, annotations=(4, 3, 3, 5, 5))
        with self.assertLogs('decoding.mobius', level='WARNING'):
            self.configure_text(*text, annotations=(4, 3, 3, 5, 5), strict=False)

    def test_matchable_color_violation(self):
        with self.assertRaises(MatchableColorViolation):
            self.configure_text('error(0.1) D0 D1', 'error(0.1) D1 D2', 'error(0.1) D0 D2')

    def test_unannotated_detector(self):
        dem = DetectorErrorModel(errors=(ErrorMechanism(0.1, (0,)),), detector_count=1)
        with self.assertRaises(UnannotatedDetector):
            configure(dem)

    @override_settings(COLORBENCH_STRICT_CONFIGURE=True)
    def test_strict_setting(self):
        with self.assertRaises(RainbowViolation):
            configure(parse_dem(dem_text(self.ANNOTATIONS, 'error(0.1) D0 D1 D3')))
        self.assertFalse(configure(parse_dem(dem_text(self.ANNOTATIONS, 'error(0.1) D0 D1 D2'))).fallback)

    @override_settings(COLORBENCH_STRICT_CONFIGURE=False)
    def test_lenient_setting_keeps_every_error(self):
        with self.assertLogs('decoding.mobius', level='WARNING'):
            cfg = configure(parse_dem(dem_text(self.ANNOTATIONS, 'error(0.1) D0 D1 D3', 'error(0.1) D2')))
        self.assertEqual(cfg.forced, [0])
        self.assertTrue(cfg.fallback)
        self.assertEqual({e.origin for e in cfg.graph.edges}, {0, 1})

    def test_lift_table_moves_match_their_errors(self):
        cfg = configure(circuit_to_dem(gen_transit(3, 0.1)))
        table = cfg.table
        self.assertTrue(table.discharges)
        self.assertTrue(table.combines)
        for symptoms, move in table.moves.items():
            combined = set()
            for i in move.errors:
                combined ^= set(table.atomic[i].symptoms)
            self.assertEqual(combined, set(symptoms))
            self.assertLessEqual(len(move.errors), 2)


class DecodeTests(SimpleTestCase):
    def assertWeightOneComplete(self, dem, **options):
        """Every error decodes to its own flips unless another error shares its symptoms."""
        cfg = configure(dem, **options)
        self.assertEqual(cfg.forced, [])
        masks = {}
        for error in dem.errors:
            masks.setdefault(frozenset(error.symptoms), set()).add(error.observables)
        checked = 0
        for index, error in enumerate(dem.errors):
            if not error.symptoms or len(masks[frozenset(error.symptoms)]) > 1:
                continue
            checked += 1
            with self.subTest(error=index, symptoms=error.symptoms):
                prediction = decode_shot(cfg, detection_row(dem, error.symptoms))
                self.assertEqual(prediction.observables, error.observables)
                self.assertEqual(prediction.fallbacks, 0)
        self.assertGreater(checked, 0)

    def assertNoFallbacks(self, dem, shots, seed=3):
        cfg = configure(dem, strict=False)
        batch = sample_dem(dem, shots, seed=seed)
        self.assertEqual(sum(p.fallbacks for p in decode_batch(cfg, batch)), 0)

    def test_no_detection_events(self):
        cfg = configure(circuit_to_dem(gen_transit(3, 0.1)))
        prediction = decode_shot(cfg, np.zeros(cfg.dem.detector_count, dtype=np.uint8))
        self.assertEqual(prediction.observables, 0)
        self.assertEqual(prediction.components, 0)

    def test_transit_weight_one(self):
        self.assertWeightOneComplete(circuit_to_dem(gen_transit(3, 0.1)), presolve=False)

    def test_phenom_weight_one(self):
        self.assertWeightOneComplete(circuit_to_dem(gen_phenom('color-hex', 3, 2, 0.01)), presolve=False)

    def test_superdense_weight_one(self):
        for basis in ('X', 'Z'):
            with self.subTest(basis=basis):
                self.assertWeightOneComplete(circuit_to_dem(gen_superdense(3, 3, 0.001, basis=basis)))

    def test_midout_weight_one(self):
        for basis in ('X', 'Z'):
            with self.subTest(basis=basis):
                self.assertWeightOneComplete(circuit_to_dem(gen_midout(3, 3, 0.001, basis=basis)))

    def test_hardware_circuits_configure_strictly(self):
        for generator in (gen_superdense, gen_midout):
            for basis in ('X', 'Z'):
                with self.subTest(family=generator.__name__, basis=basis):
                    cfg = configure(circuit_to_dem(generator(3, 3, 0.001, basis=basis)), strict=True)
                    self.assertEqual(cfg.forced, [])
                    self.assertFalse(cfg.fallback)

    def test_no_fallbacks_on_sampled_shots(self):
        self.assertNoFallbacks(circuit_to_dem(gen_transit(3, 0.05)), 500)
        self.assertNoFallbacks(circuit_to_dem(gen_phenom('color-hex', 3, 2, 0.02)), 500)
        self.assertNoFallbacks(circuit_to_dem(gen_superdense(3, 3, 0.001, basis='Z')), 300)
        self.assertNoFallbacks(circuit_to_dem(gen_midout(3, 3, 0.001)), 300)

    def test_worked_example(self):
        # Blue b, red r1, blue b2, red r2, green g2, green g1. One event on b
        # is resolved by dragging it over b2 and discharging through g2 and r2.
        annotations = (5, 3, 5, 3, 4, 4)
        errors = (
            'error(0.1) D0 D5 D1',
            'error(0.1) D2 D5 D1',
            'error(0.1) D2 D4 D3',
            'error(0.1) D4 D3 L0',
        )
        with self.assertLogs('decoding.mobius', level='WARNING'):
            cfg = configure(parse_dem(dem_text(annotations, *errors)), strict=False)

        flat = nx.MultiGraph([(0, 5), (5, 2), (2, 4), (4, 3), (3, 2), (2, 1), (1, 0)])
        prediction = lift(cfg.table, flat, {0})
        self.assertEqual(prediction.observables, 1)
        self.assertEqual(prediction.discharges, 1)
        self.assertEqual(prediction.fallbacks, 0)

        for presolve in (False, True):
            with self.subTest(presolve=presolve):
                cfg.presolve = presolve
                decoded = decode_shot(cfg, detection_row(cfg.dem, (0,)))
                self.assertEqual(decoded.observables, 1)
                self.assertEqual(decoded.presolved, 0)

    def test_transit_agrees_with_maximum_likelihood_everywhere(self):
        dem = circuit_to_dem(gen_transit(3, 0.1))
        cfg = configure(dem)
        active = sorted({d for e in dem.errors for d in e.symptoms})
        for bits in product((0, 1), repeat=len(active)):
            row = np.zeros(dem.detector_count, dtype=np.uint8)
            row[active] = bits
            with self.subTest(bits=bits):
                expected = decode_ml(dem, row)[0]
                self.assertEqual(list(decode_shot(cfg, row).bits(dem.observable_count)), list(expected))

    def test_tour_through_node_twice_grabs_once(self):
        dem = circuit_to_dem(gen_transit(3, 0.1))
        cfg = configure(dem)
        bulk = next(e for e in dem.errors if len(e.symptoms) == 3)
        r, g, b = sorted(bulk.symptoms, key=lambda d: cfg.graph.colors[d])
        flat = nx.MultiGraph([(r, g), (g, b), (b, g), (g, r)])
        prediction = lift(cfg.table, flat, {r, g, b})
        self.assertEqual(prediction.observables, bulk.observables)
        self.assertEqual(prediction.components, 1)

    def test_inconsistent_tour_fails(self):
        cfg = configure(parse_dem(dem_text((3, 4, 5), 'error(0.1) D0 D1 D2 L0')))
        flat = nx.MultiGraph([(0, 1), (1, 0)])
        with self.assertRaises(LiftFailure) as caught:
            lift(cfg.table, flat, {0, 1}, shot=7)
        self.assertEqual(caught.exception.shot, 7)

    def test_infeasible_events(self):
        cfg = configure(parse_dem(dem_text((3, 4, 5), 'error(0.1) D0 D1 D2 L0')))
        with self.assertRaises(InfeasibleMatching):
            decode_shot(cfg, detection_row(cfg.dem, (0, 1)))

    def test_batches(self):
        dem = circuit_to_dem(gen_phenom('color-hex', 3, 2, 0.02))
        cfg = configure(dem)
        batch = sample_dem(dem, 200, seed=5)
        first = decode_batch(cfg, batch)
        second = decode_batch(cfg, batch)
        self.assertEqual(len(first), 200)
        self.assertEqual([p.observables for p in first], [p.observables for p in second])
        self.assertEqual(decode_batch(cfg, batch.slice(0, 0)), [])
        self.assertEqual(prediction_bits(first, dem.observable_count).shape, (200, dem.observable_count))

    def test_logical_error_rate_is_low(self):
        dem = circuit_to_dem(gen_phenom('color-hex', 3, 2, 0.005))
        cfg = configure(dem)
        batch = sample_dem(dem, 500, seed=9)
        bits = prediction_bits(decode_batch(cfg, batch), dem.observable_count)
        mistakes = int(np.any(bits != batch.observable_bits, axis=1).sum())
        self.assertLess(mistakes, 25)

    def test_close_to_maximum_likelihood(self):
        if not settings.COLORBENCH_RUN_SLOW:
            self.skipTest('Set COLORBENCH_RUN_SLOW=true to run.')
        dem = circuit_to_dem(gen_phenom('color-hex', 3, 2, 0.03))
        cfg = configure(dem)
        batch = sample_dem(dem, 3000, seed=1)
        mine = prediction_bits(decode_batch(cfg, batch), dem.observable_count)
        best = decode_ml(dem, batch.detection_bits)
        my_mistakes = int(np.any(mine != batch.observable_bits, axis=1).sum())
        ml_mistakes = int(np.any(best != batch.observable_bits, axis=1).sum())
        self.assertLessEqual(my_mistakes, 2 * ml_mistakes + 10)

    def test_transit_d5_weight_one(self):
        if not settings.COLORBENCH_RUN_SLOW:
            self.skipTest('Set COLORBENCH_RUN_SLOW=true to run.')
        self.assertWeightOneComplete(circuit_to_dem(gen_transit(5, 0.01)))

    def test_transit_within_half_again_of_maximum_likelihood(self):
        if not settings.COLORBENCH_RUN_SLOW:
            self.skipTest('Set COLORBENCH_RUN_SLOW=true to run.')
        dem = circuit_to_dem(gen_transit(3, 0.05))
        cfg = configure(dem)
        batch = sample_dem(dem, 100_000, seed=12)
        mine = prediction_bits(decode_batch(cfg, batch), dem.observable_count)
        best = decode_ml(dem, batch.detection_bits)
        my_mistakes = int(np.any(mine != batch.observable_bits, axis=1).sum())
        ml_mistakes = int(np.any(best != batch.observable_bits, axis=1).sum())
        self.assertLessEqual(my_mistakes, 1.5 * ml_mistakes + 3 * math.sqrt(ml_mistakes))

    def test_slow_midout_throughput(self):
        if not settings.COLORBENCH_RUN_SLOW:
            self.skipTest('Set COLORBENCH_RUN_SLOW=true to run.')
        dem = circuit_to_dem(gen_midout(9, 9, 0.001))
        cfg = configure(dem)
        batch = sample_dem(dem, 2000, seed=8)
        events = int(batch.detection_bits.sum())
        start = time.perf_counter()
        predictions = decode_batch(cfg, batch)
        elapsed = time.perf_counter() - start
        self.assertEqual(len(predictions), 2000)
        self.assertGreaterEqual(events / elapsed, 50_000)


class OracleTests(SimpleTestCase):
    def test_single_errors_decode_to_themselves(self):
        dem = circuit_to_dem(gen_transit(3, 0.1))
        rows = np.array([detection_row(dem, e.symptoms) for e in dem.errors])
        expected = np.array([[e.observables >> k & 1 for k in range(dem.observable_count)] for e in dem.errors])
        np.testing.assert_array_equal(decode_ml(dem, rows), expected)

    def test_min_logical_weight(self):
        dem = circuit_to_dem(gen_transit(3, 0.1))
        self.assertEqual(min_logical_weight(dem, limit=3), 3)
        self.assertIsNone(min_logical_weight(dem, limit=2))

    def test_repeated_symptoms_with_other_observable(self):
        dem = parse_dem(dem_text((3,), 'error(0.1) D0', 'error(0.2) D0 L0'))
        self.assertEqual(min_logical_weight(dem, limit=4), 2)


class DecodeCommandTests(SimpleTestCase):
    def test_decode_sampled_shots(self):
        circuit = gen_transit(3, 0.05)
        dem = circuit_to_dem(circuit)
        batch = sample(circuit, 100, seed=2)
        with tempfile.TemporaryDirectory() as tmp:
            dem_path = Path(tmp) / 'transit.dem'
            shots_path = Path(tmp) / 'shots.b8'
            out_path = Path(tmp) / 'predictions.b8'
            dem_path.write_text(serialize_dem(dem), encoding='utf-8')
            write_b8(shots_path, batch)
            out = StringIO()
            call_command('decode', dem=str(dem_path), shots=str(shots_path), out=str(out_path), stdout=out)
            self.assertIn('Decoded 100 shots', out.getvalue())
            self.assertIn('logical errors', out.getvalue())
            predictions = read_b8(out_path, 0, dem.observable_count)

        parsed = parse_dem(serialize_dem(dem))
        expected = prediction_bits(decode_batch(configure(parsed), batch), dem.observable_count)
        np.testing.assert_array_equal(predictions.observable_bits, expected)

    def test_detection_only_shots(self):
        dem = circuit_to_dem(gen_transit(3, 0.05))
        batch = sample_dem(dem, 20, seed=4)
        bare = ShotBatch(
            num_shots=20,
            detection_bits=batch.detection_bits,
            observable_bits=np.zeros((20, 0), dtype=np.uint8),
        )
        with tempfile.TemporaryDirectory() as tmp:
            dem_path = Path(tmp) / 'transit.dem'
            shots_path = Path(tmp) / 'shots.b8'
            dem_path.write_text(serialize_dem(dem), encoding='utf-8')
            write_b8(shots_path, bare)
            out = StringIO()
            call_command(
                'decode', dem=str(dem_path), shots=str(shots_path),
                out=str(Path(tmp) / 'p.b8'), no_observables=True, stdout=out,
            )
        self.assertNotIn('logical errors', out.getvalue())

    def test_missing_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError):
                call_command('decode', dem=str(Path(tmp) / 'nope.dem'), shots='x.b8', out=str(Path(tmp) / 'p.b8'))

    def test_circuit_round_trip_still_decodes(self):
        circuit = gen_transit(3, 0.05)
        with tempfile.TemporaryDirectory() as tmp:
            circuit_path = Path(tmp) / 'transit.circuit'
            dem_path = Path(tmp) / 'transit.dem'
            circuit_path.write_text(serialize_circuit(circuit), encoding='utf-8')
            call_command('dem', circuit=str(circuit_path), out=str(dem_path), stdout=StringIO())
            dem = parse_dem(dem_path.read_text(encoding='utf-8'))
        self.assertEqual(configure(dem).forced, [])
