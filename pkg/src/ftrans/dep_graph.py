"""Unit dependency graph, SCC condensation, and translation ordering.

Edges point from a unit to the units it depends on. Mutually recursive
units are condensed into one group and translated as a single chunk, so a
cycle is never fatal. Ordering is Kahn's algorithm over the condensation
with ties broken by ascending unit name, which keeps sessions reproducible
when files are discovered in a different order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DuplicateUnitName
from .fortran_units import (
    KIND_DERIVED_TYPE,
    KIND_MODULE_VARS,
    SourceUnit,
)

EDGE_CALL = "call"
EDGE_TYPE_USE = "type_use"
EDGE_MODULE_USE = "module_use"


@dataclass(frozen=True)
class Edge:
    src: str  # depends on dst
    dst: str
    kind: str = EDGE_CALL


@dataclass
class DependencyGraph:
    nodes: set[str] = field(default_factory=set)
    edges: set[Edge] = field(default_factory=set)
    # unit id -> referenced names with no matching unit (library symbols etc.)
    externals: dict[str, tuple[str, ...]] = field(default_factory=dict)
    name_of: dict[str, str] = field(default_factory=dict)  # node id -> unit name

    def dependencies(self, node: str) -> set[str]:
        return {e.dst for e in self.edges if e.src == node}

    def out_degree(self, node: str) -> int:
        return sum(1 for e in self.edges if e.src == node)


@dataclass(frozen=True)
class TranslationOrder:
    groups: tuple[tuple[str, ...], ...]

    def flat(self) -> tuple[str, ...]:
        return tuple(uid for group in self.groups for uid in group)

    def group_index(self, unit_id: str) -> int:
        for i, group in enumerate(self.groups):
            if unit_id in group:
                return i
        raise KeyError(unit_id)


def build_graph(units: Sequence[SourceUnit]) -> DependencyGraph:
    """One node per unit, one edge per reference to another known unit.

    References that do not name a scanned unit are kept as external
    symbols. Two units sharing a canonical name is an error because
    references are matched by name.
    """
    by_name: dict[str, SourceUnit] = {}
    for u in units:
        if u.name in by_name:
            other = by_name[u.name]
            raise DuplicateUnitName(
                u.name,
                f"{other.file}:{other.line_span[0]}",
                f"{u.file}:{u.line_span[0]}",
            )
        by_name[u.name] = u

    graph = DependencyGraph()
    for u in units:
        graph.nodes.add(u.id)
        graph.name_of[u.id] = u.name
    for u in units:
        externals: list[str] = []
        for ref in u.references:
            target = by_name.get(ref)
            if target is None:
                externals.append(ref)
                continue
            if target.id == u.id:
                continue  # self-edges are excluded by contract
            graph.edges.add(Edge(u.id, target.id, _edge_kind(target)))
        if externals:
            graph.externals[u.id] = tuple(externals)
    return graph


def _edge_kind(target: SourceUnit) -> str:
    if target.kind == KIND_DERIVED_TYPE:
        return EDGE_TYPE_USE
    if target.kind == KIND_MODULE_VARS:
        return EDGE_MODULE_USE
    return EDGE_CALL


def strongly_connected_components(graph: DependencyGraph) -> list[tuple[str, ...]]:
    """Tarjan's algorithm, iterative so deep graphs cannot blow the stack."""
    adjacency: dict[str, list[str]] = {n: [] for n in graph.nodes}
    for e in graph.edges:
        adjacency[e.src].append(e.dst)
    for targets in adjacency.values():
        targets.sort()

    index_of: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    components: list[tuple[str, ...]] = []
    counter = 0

    for start in sorted(graph.nodes):
        if start in index_of:
            continue
        work: list[tuple[str, int]] = [(start, 0)]
        while work:
            node, child_i = work[-1]
            if child_i == 0:
                index_of[node] = lowlink[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            children = adjacency[node]
            while child_i < len(children):
                child = children[child_i]
                child_i += 1
                if child not in index_of:
                    work[-1] = (node, child_i)
                    work.append((child, 0))
                    advanced = True
                    break
                if child in on_stack:
                    lowlink[node] = min(lowlink[node], index_of[child])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index_of[node]:
                component: list[str] = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    component.append(w)
                    if w == node:
                        break
                components.append(tuple(sorted(component, key=lambda n: graph.name_of.get(n, n))))
    return components


def order_for_translation(graph: DependencyGraph) -> TranslationOrder:
    """Dependencies-first group order: Kahn over the SCC condensation.

    Within every ready set the group whose smallest member name sorts
    first is emitted first, so the order is a pure function of the graph.
    """
    components = strongly_connected_components(graph)
    group_of: dict[str, int] = {}
    for gi, comp in enumerate(components):
        for node in comp:
            group_of[node] = gi

    # Condensed edge u->v means group(u) depends on group(v).
    blocked_by: dict[int, set[int]] = {gi: set() for gi in range(len(components))}
    dependents: dict[int, set[int]] = {gi: set() for gi in range(len(components))}
    for e in graph.edges:
        gs, gd = group_of[e.src], group_of[e.dst]
        if gs != gd:
            blocked_by[gs].add(gd)
            dependents[gd].add(gs)

    def group_key(gi: int) -> str:
        names = [graph.name_of.get(n, n) for n in components[gi]]
        return min(names)

    ready = [(group_key(gi), gi) for gi, deps in blocked_by.items() if not deps]
    heapq.heapify(ready)
    ordered: list[tuple[str, ...]] = []
    emitted: set[int] = set()
    while ready:
        _, gi = heapq.heappop(ready)
        emitted.add(gi)
        ordered.append(components[gi])
        for dep_gi in sorted(dependents[gi]):
            blocked_by[dep_gi].discard(gi)
            if not blocked_by[dep_gi] and dep_gi not in emitted:
                heapq.heappush(ready, (group_key(dep_gi), dep_gi))
    return TranslationOrder(tuple(ordered))


def to_dot(graph: DependencyGraph) -> str:
    """Graphviz digraph text, byte-stable across runs."""
    if not graph.nodes:
        return "digraph deps {\n}\n"
    lines = ["digraph deps {"]
    for node in sorted(graph.nodes, key=lambda n: graph.name_of.get(n, n)):
        lines.append(f'  "{graph.name_of.get(node, node)}";')
    edge_labels = sorted(
        (graph.name_of.get(e.src, e.src), graph.name_of.get(e.dst, e.dst))
        for e in graph.edges
    )
    for src, dst in edge_labels:
        lines.append(f'  "{src}" -> "{dst}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_json(graph: DependencyGraph) -> dict:
    """Nodes/edges document consumed by the orchestrator and the CLI."""
    return {
        "nodes": sorted(graph.nodes),
        "edges": [
            {"from": e.src, "to": e.dst, "kind": e.kind}
            for e in sorted(graph.edges, key=lambda e: (e.src, e.dst))
        ],
        "externals": {k: list(v) for k, v in sorted(graph.externals.items())},
    }


def order_to_json(order: TranslationOrder) -> list[list[str]]:
    return [list(g) for g in order.groups]
