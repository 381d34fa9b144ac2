"""Knowledge graph loading and indexing.

Entities and relations are re-indexed densely at load time; everything
downstream works with integer ids. Reverse relations are numbered
``r + n_relations`` so that ``rev(rev(r)) == r``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import KGFormatError, SplitError

REVERSE_SUFFIX = "^-1"


@dataclass(frozen=True)
class Triple:
    head: int
    relation: int
    tail: int


@dataclass(frozen=True)
class LabelMaps:
    entities: dict
    relations: dict

    @classmethod
    def empty(cls):
        return cls({}, {})


def _csr(keys, values, n_keys):
    order = np.lexsort((values, keys))
    keys, values = keys[order], values[order]
    ptr = np.zeros(n_keys + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=n_keys), out=ptr[1:])
    return ptr, values


@dataclass(eq=False)
class KnowledgeGraph:
    """Immutable triple store with (head, relation) and (tail, relation) indexes.

    ``triples`` is an ``(m, 3)`` int64 array of unique rows sorted
    lexicographically by (relation, head, tail).
    """

    entity_count: int
    relation_count: int
    triples: np.ndarray
    entity_labels: list = field(default_factory=list)
    relation_labels: list = field(default_factory=list)

    def __post_init__(self):
        t = np.asarray(self.triples, dtype=np.int64).reshape(-1, 3)
        if t.size:
            if t[:, [0, 2]].min() < 0 or t[:, [0, 2]].max() >= self.entity_count:
                raise KGFormatError("entity id out of range")
            if t[:, 1].min() < 0 or t[:, 1].max() >= self.relation_count:
                raise KGFormatError("relation id out of range")
        t = np.unique(t, axis=0) if t.size else t
        t = t[np.lexsort((t[:, 2], t[:, 0], t[:, 1]))] if t.size else t
        t.setflags(write=False)
        self.triples = t
        if not self.entity_labels:
            self.entity_labels = [f"e{i}" for i in range(self.entity_count)]
        if not self.relation_labels:
            self.relation_labels = [f"r{i}" for i in range(self.relation_count)]
        if len(self.entity_labels) != self.entity_count or len(self.relation_labels) != self.relation_count:
            raise KGFormatError("label tables do not match id counts")
        self._build_indexes()

    def _build_indexes(self):
        n, nr = self.entity_count, self.relation_count
        h, r, t = self.triples[:, 0], self.triples[:, 1], self.triples[:, 2]
        # row key = relation * n + entity
        self._out_ptr, self._out_tails = _csr(r * n + h, t, n * nr)
        self._in_ptr, self._in_heads = _csr(r * n + t, h, n * nr)
        self._set = {(int(a), int(b), int(c)) for a, b, c in self.triples}

    # queries ------------------------------------------------------------
    def __len__(self):
        return len(self.triples)

    def __contains__(self, triple):
        return tuple(int(x) for x in triple) in self._set

    def tails(self, head: int, relation: int) -> np.ndarray:
        k = relation * self.entity_count + head
        return self._out_tails[self._out_ptr[k]:self._out_ptr[k + 1]]

    def heads(self, tail: int, relation: int) -> np.ndarray:
        k = relation * self.entity_count + tail
        return self._in_heads[self._in_ptr[k]:self._in_ptr[k + 1]]

    def tail_set(self, head: int, relation: int) -> set:
        return {int(x) for x in self.tails(head, relation)}

    def head_set(self, tail: int, relation: int) -> set:
        return {int(x) for x in self.heads(tail, relation)}

    def relation_triples(self, relation: int) -> np.ndarray:
        lo, hi = np.searchsorted(self.triples[:, 1], [relation, relation + 1])
        return self.triples[lo:hi]

    def triple_set(self) -> set:
        return set(self._set)

    def iter_triples(self):
        for h, r, t in self.triples:
            yield Triple(int(h), int(r), int(t))

    def label_maps(self) -> LabelMaps:
        return LabelMaps({l: i for i, l in enumerate(self.entity_labels)},
                         {l: i for i, l in enumerate(self.relation_labels)})

    def check_subgraph_of(self, other: "KnowledgeGraph"):
        if self.entity_count > other.entity_count or self.relation_count > other.relation_count:
            raise SplitError("observed graph has ids unknown to the complete graph")
        missing = self._set - other._set
        if missing:
            raise SplitError(f"{len(missing)} observed triples absent from the complete graph, "
                             f"e.g. {sorted(missing)[0]}")


def reverse_enrich(kg: KnowledgeGraph) -> KnowledgeGraph:
    """Add (b, r + |R|, a) for every (a, r, b)."""
    nr = kg.relation_count
    rev = kg.triples[:, [2, 1, 0]].copy()
    rev[:, 1] += nr
    labels = list(kg.relation_labels) + [l + REVERSE_SUFFIX for l in kg.relation_labels]
    return KnowledgeGraph(kg.entity_count, 2 * nr, np.concatenate([kg.triples, rev]),
                          list(kg.entity_labels), labels)


def reverse_relation(relation: int, base_relation_count: int) -> int:
    return (relation + base_relation_count) % (2 * base_relation_count)


def _split_line(line):
    return line.split("\t") if "\t" in line else line.split()


def read_label_map(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            cols = _split_line(line.rstrip("\n"))
            if len(cols) != 2:
                raise KGFormatError(f"{path}:{lineno}: expected 'label<TAB>id'")
            out[cols[0]] = int(cols[1])
    ids = sorted(out.values())
    if ids != list(range(len(ids))):
        raise KGFormatError(f"{path}: ids must be contiguous from 0")
    return out


def write_label_map(path, labels):
    with open(path, "w", encoding="utf-8") as fh:
        for i, label in enumerate(labels):
            fh.write(f"{label}\t{i}\n")


def load_triples(path, id_maps: LabelMaps | None = None) -> KnowledgeGraph:
    """Read ``head<TAB>relation<TAB>tail`` lines into a graph.

    Without ``id_maps`` unseen labels get fresh ids in order of appearance.
    With ``id_maps`` every label must already be known and the id space is
    the one of the maps.
    """
    fixed = id_maps is not None
    ents = dict(id_maps.entities) if fixed else {}
    rels = dict(id_maps.relations) if fixed else {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            cols = [c.strip() for c in _split_line(line.rstrip("\n"))]
            if len(cols) != 3:
                raise KGFormatError(f"{path}:{lineno}: expected 3 columns, got {len(cols)}")
            ids = []
            for label, table in ((cols[0], ents), (cols[1], rels), (cols[2], ents)):
                if label not in table:
                    if fixed:
                        raise KGFormatError(f"{path}:{lineno}: unknown label {label!r}")
                    table[label] = len(table)
                ids.append(table[label])
            rows.append(ids)
    ent_labels = [None] * len(ents)
    for label, i in ents.items():
        ent_labels[i] = label
    rel_labels = [None] * len(rels)
    for label, i in rels.items():
        rel_labels[i] = label
    return KnowledgeGraph(len(ents), len(rels), np.array(rows, dtype=np.int64).reshape(-1, 3),
                          ent_labels, rel_labels)


def load_split(observed_path, complete_path, id_maps: LabelMaps | None = None):
    """Load complete and observed graphs over one id space; observed must be a subgraph."""
    complete = load_triples(complete_path, id_maps)
    observed = load_triples(observed_path, complete.label_maps())
    observed.check_subgraph_of(complete)
    return observed, complete


def save_triples(kg: KnowledgeGraph, path):
    with open(path, "w", encoding="utf-8") as fh:
        for h, r, t in kg.triples:
            fh.write(f"{kg.entity_labels[h]}\t{kg.relation_labels[r]}\t{kg.entity_labels[t]}\n")


def random_graph(n_entities, n_relations, density, rng, allow_self_loops=False) -> KnowledgeGraph:
    """Erdős–Rényi style graph: each (h, r, t) present with probability ``density``."""
    mask = rng.random((n_relations, n_entities, n_entities)) < density
    if not allow_self_loops:
        idx = np.arange(n_entities)
        mask[:, idx, idx] = False
    r, h, t = np.nonzero(mask)
    return KnowledgeGraph(n_entities, n_relations, np.stack([h, r, t], axis=1))


def random_split(kg: KnowledgeGraph, keep: float, rng) -> KnowledgeGraph:
    """Observed subgraph keeping each triple independently with probability ``keep``."""
    sel = rng.random(len(kg.triples)) < keep
    return KnowledgeGraph(kg.entity_count, kg.relation_count, kg.triples[sel],
                          list(kg.entity_labels), list(kg.relation_labels))
