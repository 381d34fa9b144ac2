"""Query structure catalogue.

Each structure has an EFO1 template over placeholder relations ``r1..r6``
and anchors ``a1..a3``, plus the operator-tree form used by tree-shaped
methods. For the legacy structures the tree is an exact rendering (except
``pni``, whose tree negates a projection chain); for the new structures it
is the closest tree approximation.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .logic import parse_efo1, parse_lisp, substitute


@dataclass(frozen=True)
class Structure:
    name: str
    template: str
    lisp: str
    lisp_relations: tuple  # placeholder relation per p, left to right
    lisp_entities: tuple   # placeholder anchor per e, left to right
    legacy: bool

    @property
    def negated(self) -> bool:
        return "!" in self.template

    def formula(self):
        return _parse(self.template)

    def ground(self, relations: dict, entities: dict):
        """EFO1 formula with placeholders replaced by real ids."""
        return substitute(self.formula(), relations, entities)

    def ground_lisp(self, relations: dict, entities: dict):
        """(lisp, relation ids, entity ids) of the tree form."""
        return (self.lisp, [relations[r] for r in self.lisp_relations],
                [entities[a] for a in self.lisp_entities])


@lru_cache(maxsize=None)
def _parse(text):
    return parse_efo1(text)


_TABLE = [
    # name, template, lisp, lisp relations, lisp anchors, legacy
    ("1p", "r1(a1,f)", "(p,(e))", (1,), (1,), True),
    ("2p", "r1(a1,x1)&r2(x1,f)", "(p,(p,(e)))", (2, 1), (1,), True),
    ("3p", "r1(a1,x1)&r2(x1,x2)&r3(x2,f)", "(p,(p,(p,(e))))", (3, 2, 1), (1,), True),
    ("2i", "r1(a1,f)&r2(a2,f)", "(i,(p,(e)),(p,(e)))", (1, 2), (1, 2), True),
    ("3i", "r1(a1,f)&r2(a2,f)&r3(a3,f)", "(i,(p,(e)),(p,(e)),(p,(e)))", (1, 2, 3), (1, 2, 3), True),
    ("ip", "r1(a1,x1)&r2(a2,x1)&r3(x1,f)", "(p,(i,(p,(e)),(p,(e))))", (3, 1, 2), (1, 2), True),
    ("pi", "r1(a1,x1)&r2(x1,f)&r3(a2,f)", "(i,(p,(p,(e))),(p,(e)))", (2, 1, 3), (1, 2), True),
    ("2in", "r1(a1,f)&!r2(a2,f)", "(i,(p,(e)),(n,(p,(e))))", (1, 2), (1, 2), True),
    ("3in", "r1(a1,f)&r2(a2,f)&!r3(a3,f)", "(i,(p,(e)),(p,(e)),(n,(p,(e))))", (1, 2, 3), (1, 2, 3), True),
    ("inp", "r1(a1,x1)&!r2(a2,x1)&r3(x1,f)", "(p,(i,(p,(e)),(n,(p,(e)))))", (3, 1, 2), (1, 2), True),
    ("pin", "r1(a1,x1)&r2(x1,f)&!r3(a2,f)", "(i,(p,(p,(e))),(n,(p,(e))))", (2, 1, 3), (1, 2), True),
    ("pni", "r1(a1,x1)&!r2(x1,f)&r3(a2,f)", "(i,(n,(p,(p,(e)))),(p,(e)))", (2, 1, 3), (1, 2), True),
    ("2u", "r1(a1,f)|r2(a2,f)", "(u,(p,(e)),(p,(e)))", (1, 2), (1, 2), True),
    ("up", "(r1(a1,x1)|r2(a2,x1))&r3(x1,f)", "(p,(u,(p,(e)),(p,(e))))", (3, 1, 2), (1, 2), True),
    ("2il", "r1(a1,f)&r2(x1,f)", "(p,(e))", (1,), (1,), False),
    ("3il", "r1(a1,f)&r2(a2,f)&r3(x1,f)", "(i,(p,(e)),(p,(e)))", (1, 2), (1, 2), False),
    ("2m", "r1(a1,x1)&r2(x1,f)&r3(x1,f)", "(i,(p,(p,(e))),(p,(p,(e))))", (2, 1, 3, 1), (1, 1), False),
    ("2nm", "r1(a1,x1)&r2(x1,f)&!r3(x1,f)", "(i,(n,(p,(p,(e)))),(p,(p,(e))))", (3, 1, 2, 1), (1, 1), False),
    ("3mp", "r1(a1,x1)&r2(x1,x2)&r3(x2,f)&r4(x1,x2)", "(p,(i,(p,(p,(e))),(p,(p,(e)))))",
     (3, 2, 1, 4, 1), (1, 1), False),
    ("3pm", "r1(a1,x1)&r2(x1,x2)&r3(x2,f)&r4(x2,f)", "(i,(p,(p,(p,(e)))),(p,(p,(p,(e)))))",
     (3, 2, 1, 4, 2, 1), (1, 1), False),
    ("im", "r1(a1,x1)&r2(a2,x1)&r3(x1,f)&r4(x1,f)", "(i,(p,(i,(p,(e)),(p,(e)))),(p,(i,(p,(e)),(p,(e)))))",
     (3, 1, 2, 4, 1, 2), (1, 2, 1, 2), False),
    ("3c", "r1(a1,x1)&r2(x1,f)&r3(a2,x2)&r4(x2,f)&r5(x1,x2)",
     "(i,(p,(i,(p,(e)),(p,(p,(e))))),(p,(p,(e))))", (4, 3, 5, 1, 2, 1), (2, 1, 1), False),
    ("3cm", "r1(a1,x1)&r2(x1,f)&r3(a2,x2)&r4(x2,f)&r5(x1,x2)&r6(x1,f)",
     "(i,(i,(p,(p,(e))),(p,(p,(e)))),(p,(i,(p,(e)),(p,(p,(e))))))", (2, 1, 6, 1, 4, 3, 5, 1), (1, 1, 2, 1), False),
]

STRUCTURES = {row[0]: Structure(*row) for row in _TABLE}
LEGACY = [s.name for s in STRUCTURES.values() if s.legacy]
NEW = ["pni"] + [s.name for s in STRUCTURES.values() if not s.legacy]
ALL = list(STRUCTURES)
NEGATION_FREE = [s.name for s in STRUCTURES.values() if not s.negated]
# no existential variable: the engine may answer these from dense matrices
EXISTENTIAL_FREE = ["1p", "2i", "3i", "2in", "3in", "2u"]
# operator trees that stay inside EFO1 and match the EFO1 template exactly
TREE_EXACT = ["1p", "2p", "3p", "2i", "3i", "ip", "pi", "2in", "3in", "inp", "pin", "2u", "up"]


def get(name: str) -> Structure:
    if name not in STRUCTURES:
        raise KeyError(f"unknown structure {name!r}; known: {', '.join(ALL)}")
    return STRUCTURES[name]


def lisp_formula(name: str, relations: dict, entities: dict):
    s = get(name)
    lisp, rels, ents = s.ground_lisp(relations, entities)
    return parse_lisp(lisp, rels, ents)
