"""
Minimum-weight perfect matching of excited nodes.

Every excited node is paired with another excited node; there is no
boundary node. ``decode_matching`` is the exact reference: Dijkstra runs
over the weighted graph and networkx's blossom matching on the derived
complete graph. ``match_edges`` answers the same question through a cached
PyMatching graph and is what shot decoding uses.
"""

import logging
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
import pymatching

from circuits.dem import MIN_PROBABILITY, xor_probability

from .exceptions import InfeasibleMatching


logger = logging.getLogger(__name__)

MAX_PROBABILITY = 0.5


def clamp_probability(p: float) -> float:
    if p > MAX_PROBABILITY:
        logger.warning('Edge probability %s clamped to %s.', p, MAX_PROBABILITY)
        return MAX_PROBABILITY
    return max(p, MIN_PROBABILITY)


def edge_weight(p: float) -> float:
    p = clamp_probability(p)
    return math.log((1 - p) / p)


@dataclass(frozen=True)
class WeightedEdge:
    id: int
    u: int
    v: int
    probability: float
    weight: float
    observables: int = 0


@dataclass
class WeightedGraph:
    edges: list[WeightedEdge] = field(default_factory=list)
    graph: nx.Graph = field(default_factory=nx.Graph)
    _matching: pymatching.Matching | None = field(default=None, repr=False)
    _components: dict[int, int] | None = field(default=None, repr=False)

    @property
    def nodes(self) -> list[int]:
        return sorted(self.graph.nodes)

    def edge_between(self, u: int, v: int) -> WeightedEdge:
        return self.edges[self.graph[u][v]['id']]

    @property
    def matching(self) -> pymatching.Matching:
        if self._matching is None:
            matching = pymatching.Matching()
            for edge in self.edges:
                matching.add_edge(edge.u, edge.v, fault_ids=edge.id, weight=edge.weight)
            self._matching = matching
        return self._matching

    @property
    def components(self) -> dict[int, int]:
        """Connected component label of every node."""
        if self._components is None:
            self._components = {
                node: label
                for label, component in enumerate(nx.connected_components(self.graph))
                for node in component
            }
        return self._components


@dataclass
class MatchingSolution:
    pairs: list[tuple[int, int]] = field(default_factory=list)
    paths: list[list[int]] = field(default_factory=list)
    weight: float = 0.0

    def edge_ids(self) -> list[int]:
        """Edges used an odd number of times across all paths."""
        used = {}
        for path in self.paths:
            for edge in path:
                used[edge] = used.get(edge, 0) ^ 1
        return sorted(edge for edge, odd in used.items() if odd)


def build_graph(mechanism_edges) -> WeightedGraph:
    """
    Merge parallel edges and weigh them by ln((1 - p) / p).

    Items are ``(u, v, p)`` or ``(u, v, p, observables)``. A merged edge
    keeps the observable mask of its most likely contributors.
    """
    merged = {}
    for item in mechanism_edges:
        u, v, p = item[:3]
        mask = item[3] if len(item) > 3 else 0
        if u == v:
            raise ValueError(f'Self-loop on node {u}.')
        groups = merged.setdefault((min(u, v), max(u, v)), {})
        groups[mask] = xor_probability(groups.get(mask, 0.0), p)

    result = WeightedGraph()
    for (u, v), groups in sorted(merged.items()):
        p = 0.0
        for q in groups.values():
            p = xor_probability(p, q)
        mask = min(groups, key=lambda m: (-groups[m], m))
        edge = WeightedEdge(len(result.edges), u, v, p, edge_weight(p), mask)
        result.edges.append(edge)
        result.graph.add_edge(u, v, weight=edge.weight, id=edge.id)
    return result


def _check_parity(g: WeightedGraph, excited: list[int]) -> None:
    missing = [node for node in excited if node not in g.graph]
    if missing:
        raise InfeasibleMatching(f'Excited nodes {missing} have no edges.')
    counts = {}
    for node in excited:
        label = g.components[node]
        counts[label] = counts.get(label, 0) ^ 1
    odd = sorted(node for node in excited if counts[g.components[node]])
    if odd:
        raise InfeasibleMatching(f'Component containing node {odd[0]} has an odd number of excited nodes.')


def match_edges(g: WeightedGraph, excited) -> list[int]:
    """Edge ids of a minimum-weight pairing of ``excited`` nodes."""
    excited = sorted(set(excited))
    if not excited:
        return []
    _check_parity(g, excited)

    matching = g.matching
    syndrome = np.zeros(matching.num_detectors, dtype=np.uint8)
    syndrome[excited] = 1
    try:
        pairs = matching.decode_to_edges_array(syndrome)
    except ValueError as e:
        raise InfeasibleMatching(str(e)) from e

    used = {}
    for u, v in pairs:
        edge = g.graph[int(u)][int(v)]['id']
        used[edge] = used.get(edge, 0) ^ 1
    return sorted(edge for edge, odd in used.items() if odd)


def _path_edges(g: WeightedGraph, nodes: list[int]) -> list[int]:
    return [g.graph[a][b]['id'] for a, b in zip(nodes, nodes[1:])]


def decode_matching(g: WeightedGraph, excited) -> MatchingSolution:
    """Minimum total path weight pairing of ``excited`` nodes."""
    excited = sorted(set(excited))
    solution = MatchingSolution()
    if not excited:
        return solution

    missing = [node for node in excited if node not in g.graph]
    if missing:
        raise InfeasibleMatching(f'Excited nodes {missing} have no edges.')

    remaining = set(excited)
    for node in excited:
        if node not in remaining:
            continue
        component = nx.node_connected_component(g.graph, node)
        group = sorted(remaining & component)
        remaining -= component
        if len(group) % 2:
            raise InfeasibleMatching(f'Component containing node {node} has {len(group)} excited nodes.')
        _match_group(g, group, solution)
    return solution


def _match_group(g: WeightedGraph, group: list[int], solution: MatchingSolution) -> None:
    derived = nx.Graph()
    derived.add_nodes_from(group)
    routes = {}
    for a in group:
        distances, paths = nx.single_source_dijkstra(g.graph, a, weight='weight')
        for b in group:
            if b <= a:
                continue
            derived.add_edge(a, b, weight=distances[b])
            routes[(a, b)] = paths[b]

    if len(group) == 2:
        matched = {(group[0], group[1])}
    else:
        matched = nx.min_weight_matching(derived, weight='weight')

    for a, b in sorted((min(pair), max(pair)) for pair in matched):
        solution.pairs.append((a, b))
        solution.paths.append(_path_edges(g, routes[(a, b)]))
        solution.weight += derived[a][b]['weight']
