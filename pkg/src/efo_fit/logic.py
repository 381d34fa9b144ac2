"""EFO1 formulas: AST, two surface parsers, printing, DNF and classification.

Text grammar (precedence from loosest to tightest)::

    formula  := 'EX' var (',' var)* '.' formula | disj
    disj     := conj ('|' conj)*
    conj     := unary ('&' unary)*
    unary    := '!' unary | '(' formula ')' | atom
    atom     := r<k> '(' term ',' term ')'
    term     := a<k> | e<k> | x<k> | name

``a<k>``/``e<k>`` are entity ids, ``x<k>`` and every name bound by ``EX`` are
existential, and any other identifier is the single free variable. Unbound
existential names are quantified around the whole formula, in order of first
appearance. ``EX`` extends as far right as possible.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .errors import NotEFO1Error, ParseError, QueryValidationError


# terms ------------------------------------------------------------------
@dataclass(frozen=True)
class Const:
    id: int

    def __str__(self):
        return f"a{self.id}"


@dataclass(frozen=True)
class FreeVar:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class ExistVar:
    name: str

    def __str__(self):
        return self.name


def is_var(term) -> bool:
    return not isinstance(term, Const)


# formulas ---------------------------------------------------------------
@dataclass(frozen=True)
class Atom:
    relation: int
    head: object
    tail: object


@dataclass(frozen=True)
class Not:
    sub: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class Exists:
    var: str
    body: object


@dataclass(frozen=True)
class Literal:
    relation: int
    head: object
    tail: object
    positive: bool = True

    def atom(self) -> Atom:
        return Atom(self.relation, self.head, self.tail)


@dataclass(frozen=True)
class ConjunctiveClause:
    """``EX vars. l_1 & ... & l_n`` with exactly the free variable ``free`` unbound.

    ``tree`` optionally keeps the nesting of the conjunction the clause was
    distributed from (a literal or a pair of subtrees); :meth:`to_formula`
    follows it so that re-evaluating the clause repeats the original order
    of t-norm applications.
    """

    free: str
    exist_vars: tuple
    literals: tuple
    tree: object = field(default=None, compare=False, repr=False)

    def to_formula(self):
        def build(t):
            if isinstance(t, Literal):
                return t.atom() if t.positive else Not(t.atom())
            return And(build(t[0]), build(t[1]))

        if self.tree is not None:
            body = build(self.tree)
        else:
            body = None
            for lit in self.literals:
                node = build(lit)
                body = node if body is None else And(body, node)
        for v in reversed(self.exist_vars):
            body = Exists(v, body)
        return body

    def __str__(self):
        return to_text(self.to_formula())


class QueryClass(enum.Enum):
    TREE_FORM_SAFE = "TreeFormSafe"
    EXISTENTIAL_LEAF = "ExistentialLeaf"
    NEGATION_NO_CONSTANT = "NegationNoConstant"
    MULTIGRAPH = "Multigraph"
    CYCLIC = "Cyclic"
    NOT_EFO1 = "NotEFO1"


# traversal helpers ------------------------------------------------------
def children(node):
    if isinstance(node, Atom):
        return ()
    if isinstance(node, Not):
        return (node.sub,)
    if isinstance(node, (And, Or)):
        return (node.left, node.right)
    if isinstance(node, Exists):
        return (node.body,)
    raise TypeError(f"not a formula node: {node!r}")


def atoms(node):
    if isinstance(node, Atom):
        yield node
    else:
        for c in children(node):
            yield from atoms(c)


def free_variables(node) -> set:
    """Names of variables occurring unbound in ``node``."""
    if isinstance(node, Atom):
        return {t.name for t in (node.head, node.tail) if is_var(t)}
    if isinstance(node, Exists):
        return free_variables(node.body) - {node.var}
    out = set()
    for c in children(node):
        out |= free_variables(c)
    return out


def free_variable(node) -> str:
    names = {t.name for a in atoms(node) for t in (a.head, a.tail) if isinstance(t, FreeVar)}
    if len(names) != 1:
        raise QueryValidationError(f"expected exactly one free variable, found {sorted(names)}")
    return names.pop()


def has_negation(node) -> bool:
    if isinstance(node, Not):
        return True
    return any(has_negation(c) for c in children(node))


def relations_of(node) -> list:
    return sorted({a.relation for a in atoms(node)})


def constants_of(node) -> list:
    return sorted({t.id for a in atoms(node) for t in (a.head, a.tail) if isinstance(t, Const)})


def substitute(node, relation_map=None, entity_map=None):
    """Rename relation and constant ids; unmapped ids are kept."""
    relation_map = relation_map or {}
    entity_map = entity_map or {}

    def term(t):
        return Const(entity_map.get(t.id, t.id)) if isinstance(t, Const) else t

    def walk(n):
        if isinstance(n, Atom):
            return Atom(relation_map.get(n.relation, n.relation), term(n.head), term(n.tail))
        if isinstance(n, Not):
            return Not(walk(n.sub))
        if isinstance(n, And):
            return And(walk(n.left), walk(n.right))
        if isinstance(n, Or):
            return Or(walk(n.left), walk(n.right))
        return Exists(n.var, walk(n.body))

    return walk(node)


def bind_free(node, entity: int):
    """Replace the free variable by a constant, producing a sentence."""

    def term(t):
        return Const(entity) if isinstance(t, FreeVar) else t

    def walk(n):
        if isinstance(n, Atom):
            return Atom(n.relation, term(n.head), term(n.tail))
        if isinstance(n, Not):
            return Not(walk(n.sub))
        if isinstance(n, And):
            return And(walk(n.left), walk(n.right))
        if isinstance(n, Or):
            return Or(walk(n.left), walk(n.right))
        return Exists(n.var, walk(n.body))

    return walk(node)


# EFO1 text parser -------------------------------------------------------
_TOKEN = re.compile(r"\s*(?:(EX\b)|([A-Za-z_][A-Za-z0-9_]*)|(\S))")
_REL = re.compile(r"r(\d+)$")
_ENT = re.compile(r"[ae](\d+)$")
_EXV = re.compile(r"x\d+$")


def _tokenize(text):
    tokens = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos and m.group(0).strip() == "":
            break
        if m.group(1):
            tokens.append(("EX", "EX", m.start(1)))
        elif m.group(2):
            tokens.append(("ID", m.group(2), m.start(2)))
        else:
            tokens.append(("SYM", m.group(3), m.start(3)))
        pos = m.end()
    if text[pos:].strip():
        raise ParseError("unexpected trailing input", pos)
    tokens.append(("END", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.bound = []          # names bound by enclosing EX
        self.seen_bound = set()  # every name ever bound, for uniqueness
        self.implicit = []       # unbound existential names, first-seen order
        self.free = []

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            shown = tok[1] or "end of input"
            raise ParseError(f"expected {value!r}, got {shown!r}", tok[2])
        self.i += 1
        return tok

    def parse(self):
        node = self.formula()
        tok = self.peek()
        if tok[0] != "END":
            raise ParseError(f"unexpected {tok[1]!r}", tok[2])
        if len(self.free) != 1:
            raise ParseError(f"expected exactly one free variable, found {self.free}", 0)
        for name in reversed(self.implicit):
            node = Exists(name, node)
        return node

    def formula(self):
        if self.peek()[0] == "EX":
            self.take()
            names = [self.var_name()]
            while self.peek()[1] == ",":
                self.take()
                names.append(self.var_name())
            self.take(".")
            self.bound.extend(names)
            body = self.formula()
            del self.bound[-len(names):]
            for name in reversed(names):
                body = Exists(name, body)
            return body
        return self.disj()

    def var_name(self):
        kind, name, pos = self.take()
        if kind != "ID" or _REL.match(name) or _ENT.match(name):
            raise ParseError(f"expected a variable name, got {name!r}", pos)
        if name in self.seen_bound or name in self.free or name in self.implicit:
            raise ParseError(f"variable {name!r} bound more than once", pos)
        self.seen_bound.add(name)
        return name

    def disj(self):
        node = self.conj()
        while self.peek()[1] == "|":
            self.take()
            node = Or(node, self.conj())
        return node

    def conj(self):
        node = self.unary()
        while self.peek()[1] == "&":
            self.take()
            node = And(node, self.unary())
        return node

    def unary(self):
        kind, value, pos = self.peek()
        if value == "!":
            self.take()
            sub = self.unary()
            if not isinstance(sub, Atom):
                raise ParseError("negation applies to atoms only", pos)
            return Not(sub)
        if value == "(":
            self.take()
            node = self.formula()
            self.take(")")
            return node
        if kind == "EX":
            return self.formula()
        return self.atom()

    def atom(self):
        kind, name, pos = self.take()
        m = _REL.match(name) if kind == "ID" else None
        if m is None:
            raise ParseError(f"expected an atom like r1(a0,f), got {name or 'end of input'!r}", pos)
        self.take("(")
        head = self.term()
        self.take(",")
        tail = self.term()
        self.take(")")
        return Atom(int(m.group(1)), head, tail)

    def term(self):
        kind, name, pos = self.take()
        if kind != "ID" or _REL.match(name):
            raise ParseError(f"expected a term, got {name or 'end of input'!r}", pos)
        m = _ENT.match(name)
        if m:
            return Const(int(m.group(1)))
        if name in self.bound:
            return ExistVar(name)
        if name in self.seen_bound:
            raise ParseError(f"variable {name!r} used outside its binder", pos)
        if _EXV.match(name):
            if name not in self.implicit:
                self.implicit.append(name)
            return ExistVar(name)
        if name not in self.free:
            self.free.append(name)
        return FreeVar(name)


def parse_efo1(text: str):
    """Parse EFO1 text into a formula with exactly one free variable."""
    return _Parser(text).parse()


# printer ----------------------------------------------------------------
def _term_text(t):
    return f"a{t.id}" if isinstance(t, Const) else t.name


def to_text(node) -> str:
    """Render a formula; ``parse_efo1(to_text(f)) == f`` for EFO1 formulas."""
    if isinstance(node, Atom):
        return f"r{node.relation}({_term_text(node.head)},{_term_text(node.tail)})"
    if isinstance(node, Not):
        inner = to_text(node.sub)
        return "!" + (inner if isinstance(node.sub, Atom) else f"({inner})")
    if isinstance(node, Exists):
        names = [node.var]
        body = node.body
        while isinstance(body, Exists):
            names.append(body.var)
            body = body.body
        return f"EX {','.join(names)}. {to_text(body)}"
    op = "&" if isinstance(node, And) else "|"

    def wrap(child, right):
        text = to_text(child)
        loose = isinstance(child, Exists) or (isinstance(node, And) and isinstance(child, Or))
        same_right = right and type(child) is type(node)
        return f"({text})" if loose or same_right else text

    return f"{wrap(node.left, False)}{op}{wrap(node.right, True)}"


# lisp-like operator trees -----------------------------------------------
@dataclass
class LispNode:
    op: str
    args: list = field(default_factory=list)

    def count(self, op):
        return (self.op == op) + sum(a.count(op) for a in self.args)


_LISP_ARITY = {"p": (1, 1), "n": (1, 1), "e": (0, 0), "i": (2, None), "u": (2, None)}


def parse_lisp_tree(text: str) -> LispNode:
    tokens = [(m.group(0), m.start()) for m in re.finditer(r"[(),]|[A-Za-z]+", text)]
    stripped = re.sub(r"[(),A-Za-z\s]", "", text)
    if stripped:
        raise ParseError(f"unexpected characters {stripped!r}", text.find(stripped[0]))
    pos = 0

    def expect(tok):
        nonlocal pos
        if pos >= len(tokens) or tokens[pos][0] != tok:
            where = tokens[pos][1] if pos < len(tokens) else len(text)
            raise ParseError(f"expected {tok!r}", where)
        pos += 1

    def node():
        nonlocal pos
        expect("(")
        if pos >= len(tokens):
            raise ParseError("unexpected end of input", len(text))
        op, where = tokens[pos]
        if op not in _LISP_ARITY:
            raise ParseError(f"unknown operator {op!r}", where)
        pos += 1
        args = []
        while pos < len(tokens) and tokens[pos][0] == ",":
            pos += 1
            args.append(node())
        expect(")")
        lo, hi = _LISP_ARITY[op]
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise ParseError(f"operator {op!r} given {len(args)} arguments", where)
        return LispNode(op, args)

    root = node()
    if pos != len(tokens):
        raise ParseError("trailing input", tokens[pos][1])
    return root


def lisp_to_text(tree: LispNode) -> str:
    if not tree.args:
        return f"({tree.op})"
    return f"({tree.op}," + ",".join(lisp_to_text(a) for a in tree.args) + ")"


def parse_lisp(text: str, relations, entities, free_name: str = "f"):
    """Build the formula of an operator tree.

    ``relations`` supplies one id per ``p`` and ``entities`` one id per ``e``,
    both in left-to-right textual order. A projection over an entity leaf is
    an atom; a projection over a subtree introduces a fresh ``x<k>``.
    """
    tree = parse_lisp_tree(text)
    if tree.op == "e":
        raise ParseError("an entity leaf is not a query", 0)
    n_p, n_e = tree.count("p"), tree.count("e")
    if len(relations) != n_p or len(entities) != n_e:
        raise ParseError(f"operator tree needs {n_p} relations and {n_e} entities, "
                         f"got {len(relations)} and {len(entities)}", 0)
    rel_iter, ent_iter = iter(relations), iter(entities)
    fresh = [0]

    def build(node, target):
        if node.op == "p":
            r = int(next(rel_iter))
            child = node.args[0]
            if child.op == "e":
                return Atom(r, Const(int(next(ent_iter))), target)
            fresh[0] += 1
            x = f"x{fresh[0]}"
            sub = build(child, ExistVar(x))
            return Exists(x, And(sub, Atom(r, ExistVar(x), target)))
        if node.op in "iu":
            parts = [build(a, target) for a in node.args]
            cls = And if node.op == "i" else Or
            out = parts[0]
            for p in parts[1:]:
                out = cls(out, p)
            return out
        if node.op == "n":
            return Not(build(node.args[0], target))
        raise ParseError("an entity leaf must sit under a projection", 0)

    return build(tree, FreeVar(free_name))


# normal forms -----------------------------------------------------------
def to_nnf(node):
    """Push negation onto atoms; fails when it would cross a quantifier."""
    if isinstance(node, Atom):
        return node
    if isinstance(node, And):
        return And(to_nnf(node.left), to_nnf(node.right))
    if isinstance(node, Or):
        return Or(to_nnf(node.left), to_nnf(node.right))
    if isinstance(node, Exists):
        return Exists(node.var, to_nnf(node.body))
    sub = node.sub
    if isinstance(sub, Atom):
        return node
    if isinstance(sub, Not):
        return to_nnf(sub.sub)
    if isinstance(sub, And):
        return Or(to_nnf(Not(sub.left)), to_nnf(Not(sub.right)))
    if isinstance(sub, Or):
        return And(to_nnf(Not(sub.left)), to_nnf(Not(sub.right)))
    raise NotEFO1Error("negating an existential subformula needs a universal quantifier")


def is_efo1(node) -> bool:
    """Negation on atoms only."""
    if isinstance(node, Not):
        return isinstance(node.sub, Atom)
    return all(is_efo1(c) for c in children(node))


def _rename(tree, old, new):
    def t(term):
        return ExistVar(new) if isinstance(term, ExistVar) and term.name == old else term
    if isinstance(tree, Literal):
        return Literal(tree.relation, t(tree.head), t(tree.tail), tree.positive)
    return (_rename(tree[0], old, new), _rename(tree[1], old, new))


def _leaves(tree):
    if isinstance(tree, Literal):
        return [tree]
    return _leaves(tree[0]) + _leaves(tree[1])


def _tree_vars(tree):
    return {t.name for l in _leaves(tree) for t in (l.head, l.tail) if isinstance(t, ExistVar)}


def to_dnf(node) -> list:
    """Disjunction of conjunctive clauses equivalent to ``node``.

    Literal order follows the left-to-right order of the atoms. Quantifiers
    are distributed over disjunction and dropped from clauses that do not
    mention their variable.
    """
    free = free_variable(node)
    nnf = to_nnf(node)

    def walk(n):
        # returns a list of (exist_vars, conjunction tree)
        if isinstance(n, Atom):
            return [([], Literal(n.relation, n.head, n.tail, True))]
        if isinstance(n, Not):
            a = n.sub
            return [([], Literal(a.relation, a.head, a.tail, False))]
        if isinstance(n, Or):
            return walk(n.left) + walk(n.right)
        if isinstance(n, And):
            out = []
            for ev_l, tree_l in walk(n.left):
                for ev_r, tree_r in walk(n.right):
                    ev_r = list(ev_r)
                    for j, v in enumerate(ev_r):
                        if v in ev_l:  # keep bound names apart
                            new = v
                            while new in ev_l or new in ev_r or new in _tree_vars(tree_l):
                                new += "'"
                            tree_r = _rename(tree_r, v, new)
                            ev_r[j] = new
                    out.append((ev_l + ev_r, (tree_l, tree_r)))
            return out
        out = []
        for ev, tree in walk(n.body):
            if n.var in _tree_vars(tree):
                ev = [n.var] + ev
            out.append((ev, tree))
        return out

    return [ConjunctiveClause(free, tuple(ev), tuple(_leaves(tree)), tree) for ev, tree in walk(nnf)]


# structure checks -------------------------------------------------------
def _closed_subformula(node) -> bool:
    if not free_variables(node):
        return True
    return any(_closed_subformula(c) for c in children(node))


def clause_is_trivial(clause: ConjunctiveClause) -> bool:
    """A clause is trivial when some part of it shares no variable with the free one.

    That part is a sentence once the existential quantifiers are pushed
    inward: a literal between two constants, or a group of existential
    variables not linked to the free variable.
    """
    parent = {}

    def find(v):
        while parent.setdefault(v, v) != v:
            v = parent[v]
        return v

    names = set()
    for lit in clause.literals:
        vs = [t.name for t in (lit.head, lit.tail) if is_var(t)]
        if not vs:
            return True
        names.update(vs)
        for v in vs[1:]:
            parent[find(v)] = find(vs[0])
    if clause.free not in names:
        return True
    root = find(clause.free)
    return any(find(v) != root for v in names)


def detect_trivial_subsentence(node) -> bool:
    """True when the formula contains a subformula that is a sentence."""
    if _closed_subformula(node):
        return True
    try:
        clauses = to_dnf(node)
    except (NotEFO1Error, QueryValidationError):
        return False
    return any(clause_is_trivial(c) for c in clauses)


def classify(node) -> set:
    """Taxonomy labels of a formula, taken as the union over its DNF clauses."""
    from .query_graph import QueryGraph, structural_report

    try:
        clauses = to_dnf(node)
    except NotEFO1Error:
        return {QueryClass.NOT_EFO1}
    out = set()
    for clause in clauses:
        rep = structural_report(QueryGraph.from_clause(clause, check_connected=False))
        if not rep["acyclic"]:
            out.add(QueryClass.CYCLIC)
        if not rep["simple"]:
            out.add(QueryClass.MULTIGRAPH)
        if rep["property1"]:
            out.add(QueryClass.NEGATION_NO_CONSTANT)
        if rep["property2"]:
            out.add(QueryClass.EXISTENTIAL_LEAF)
    if not out:
        out.add(QueryClass.TREE_FORM_SAFE)
    return out
