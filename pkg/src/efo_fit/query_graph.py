"""Multigraph view of a conjunctive clause.

One node per distinct term and one edge per literal. Analyses that talk
about cycles or leaves use the collapsed graph: undirected, parallel edges
merged, self-loops dropped.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ConstantSelfLoopError, DisconnectedQueryError, EnumerationError
from .logic import Const, ConjunctiveClause, ExistVar, FreeVar, Literal

CONSTANT, EXISTENTIAL, FREE = "constant", "existential", "free"


@dataclass(frozen=True)
class Node:
    kind: str
    value: object  # entity id for constants, variable name otherwise

    def term(self):
        if self.kind == CONSTANT:
            return Const(self.value)
        return FreeVar(self.value) if self.kind == FREE else ExistVar(self.value)

    def label(self):
        return f"a{self.value}" if self.kind == CONSTANT else str(self.value)


@dataclass(frozen=True)
class Edge:
    head: int
    relation: int
    tail: int
    positive: bool = True


def _node_of(term) -> Node:
    if isinstance(term, Const):
        return Node(CONSTANT, term.id)
    return Node(FREE if isinstance(term, FreeVar) else EXISTENTIAL, term.name)


def components(nodes, edges) -> list:
    """Connected components (as sets) of ``nodes`` using edges among them."""
    nodes = set(nodes)
    adj = {v: set() for v in nodes}
    for e in edges:
        if e.head in nodes and e.tail in nodes:
            adj[e.head].add(e.tail)
            adj[e.tail].add(e.head)
    seen, out = set(), []
    for start in sorted(nodes):
        if start in seen:
            continue
        comp, stack = {start}, [start]
        while stack:
            for w in adj[stack.pop()]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        out.append(comp)
    return out


def collapsed_pairs(edges) -> set:
    return {frozenset((e.head, e.tail)) for e in edges if e.head != e.tail}


class QueryGraph:
    """Immutable clause multigraph; node indices follow first appearance in the literals."""

    def __init__(self, nodes, edges):
        self.nodes = tuple(nodes)
        self.edges = tuple(edges)
        frees = [i for i, n in enumerate(self.nodes) if n.kind == FREE]
        if len(frees) != 1:
            raise ValueError(f"query graph needs exactly one free node, has {len(frees)}")
        self.free = frees[0]

    @classmethod
    def from_clause(cls, clause: ConjunctiveClause, check_connected: bool = True) -> "QueryGraph":
        index, nodes, edges = {}, [], []
        for lit in clause.literals:
            ends = []
            for term in (lit.head, lit.tail):
                node = _node_of(term)
                if node not in index:
                    index[node] = len(nodes)
                    nodes.append(node)
                ends.append(index[node])
            if ends[0] == ends[1] and nodes[ends[0]].kind == CONSTANT:
                raise ConstantSelfLoopError(f"self-loop on constant a{nodes[ends[0]].value}")
            edges.append(Edge(ends[0], lit.relation, ends[1], lit.positive))
        g = cls(nodes, edges)
        if check_connected and len(components(range(len(nodes)), edges)) > 1:
            raise DisconnectedQueryError("clause graph is disconnected; one part is a sentence")
        return g

    def literals(self) -> list:
        return [Literal(e.relation, self.nodes[e.head].term(), self.nodes[e.tail].term(), e.positive)
                for e in self.edges]

    def kind(self, i) -> str:
        return self.nodes[i].kind

    def incident(self, i) -> list:
        return [e for e in self.edges if i in (e.head, e.tail)]

    def to_json(self) -> dict:
        return {"nodes": [{"kind": n.kind, "value": n.value} for n in self.nodes],
                "edges": [[e.head, e.relation, e.tail, e.positive] for e in self.edges]}

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    def __repr__(self):
        lab = [n.label() for n in self.nodes]
        parts = [f"{'' if e.positive else '!'}r{e.relation}({lab[e.head]},{lab[e.tail]})"
                 for e in self.edges]
        return f"QueryGraph({' & '.join(parts)})"


def _is_acyclic(nodes, edges) -> bool:
    pairs = collapsed_pairs(edges)
    return len(pairs) == len(nodes) - len(components(nodes, edges))


def _is_simple(edges) -> bool:
    seen = set()
    for e in edges:
        if e.head == e.tail:
            return False
        key = frozenset((e.head, e.tail))
        if key in seen:
            return False
        seen.add(key)
    return True


def can_be_leaf(nodes, edges, v) -> bool:
    """True when some spanning forest of the graph has ``v`` as a leaf (v is no cut vertex)."""
    nodes = set(nodes)
    before = len(components(nodes, edges))
    after = len(components(nodes - {v}, edges))
    return after <= before


def structural_report(g: QueryGraph) -> dict:
    nodes = range(len(g.nodes))
    degree = {i: 0 for i in nodes}
    for pair in collapsed_pairs(g.edges):
        for v in pair:
            degree[v] += 1
    return {
        "acyclic": _is_acyclic(nodes, g.edges),
        "simple": _is_simple(g.edges),
        "self_loops": sorted({e.head for e in g.edges if e.head == e.tail}),
        "leaves": [i for i in nodes if degree[i] == 1],
        "property1": any(not e.positive and g.kind(e.head) != CONSTANT and g.kind(e.tail) != CONSTANT
                         for e in g.edges),
        "property2": any(g.kind(v) == EXISTENTIAL and can_be_leaf(nodes, g.edges, v) for v in nodes),
    }


def pick_enumeration_node(g: QueryGraph, alive=None, edges=None) -> int:
    """Existential node whose removal keeps the remaining graph connected.

    ``alive``/``edges`` restrict the analysis to a partially reduced graph.
    Ties prefer fewer incident edges, then the smaller index.
    """
    alive = set(range(len(g.nodes))) if alive is None else set(alive)
    edges = list(g.edges) if edges is None else list(edges)
    edges = [e for e in edges if e.head in alive and e.tail in alive]
    if _is_acyclic(alive, edges):
        raise EnumerationError("graph is acyclic; nothing to enumerate")
    best = None
    for v in sorted(alive):
        if g.kind(v) != EXISTENTIAL:
            continue
        if len(components(alive - {v}, edges)) != 1:
            continue
        key = (sum(1 for e in edges if v in (e.head, e.tail)), v)
        if best is None or key < best:
            best = key
    if best is None:
        raise EnumerationError("no existential node can be cut while keeping the graph connected")
    return best[1]
