import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efo_fit.errors import NotEFO1Error, ParseError
from efo_fit.logic import (And, Atom, Const, Exists, ExistVar, FreeVar, Literal, Not, Or, QueryClass,
                           classify, clause_is_trivial, detect_trivial_subsentence, free_variable,
                           is_efo1, parse_efo1, parse_lisp, parse_lisp_tree, lisp_to_text, to_dnf,
                           to_nnf, to_text)
from efo_fit.structures import ALL, get

f = FreeVar("f")


def test_parse_single_atom():
    assert parse_efo1("r1(a0,f)") == Atom(1, Const(0), f)


def test_parse_multigraph_shape():
    got = parse_efo1("r1(a0,x1)&r2(x1,f)&r3(x1,f)")
    x = ExistVar("x1")
    assert got == Exists("x1", And(And(Atom(1, Const(0), x), Atom(2, x, f)), Atom(3, x, f)))


def test_explicit_quantifier_and_scope():
    got = parse_efo1("EX y. r0(a0,y) & r1(y,f)")
    assert got == Exists("y", And(Atom(0, Const(0), ExistVar("y")), Atom(1, ExistVar("y"), f)))


def test_entity_prefix_e_is_accepted():
    assert parse_efo1("r1(e3,f)") == Atom(1, Const(3), f)


@pytest.mark.parametrize("text", ["!(r1(a0,x1)&r2(x1,f))", "r1(a0,f", "r1(a0,f)&", "r1(a0,a1)",
                                  "r1(a0,f)&r2(a0,g)", "EX y. r1(a0,y) & EX y. r2(y,f)", "q1(a0,f)"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_efo1(text)


def test_parse_error_has_position():
    with pytest.raises(ParseError) as info:
        parse_efo1("r1(a0,f) $ r2(a1,f)")
    assert info.value.position == 9


@pytest.mark.parametrize("name", ALL)
def test_structures_round_trip(name):
    formula = get(name).formula()
    assert parse_efo1(to_text(formula)) == formula
    assert is_efo1(formula)


_atoms = st.builds(lambda r, h, t: f"r{r}({h},{t})", st.integers(0, 3),
                   st.sampled_from(["a0", "a1", "x1", "x2", "f"]), st.sampled_from(["a2", "x1", "x2", "f"]))
_lits = st.builds(lambda neg, a: ("!" if neg else "") + a, st.booleans(), _atoms)
_formulas = st.recursive(_lits, lambda sub: st.builds(lambda a, op, b: f"({a}{op}{b})", sub,
                                                      st.sampled_from(["&", "|"]), sub), max_leaves=6)


@settings(max_examples=200)
@given(text=_formulas)
def test_round_trip_property(text):
    try:
        formula = parse_efo1(text)
    except ParseError:
        return  # e.g. no free variable
    assert parse_efo1(to_text(formula)) == formula


def test_lisp_examples():
    assert parse_lisp("(p,(e))", [1], [0]) == Atom(1, Const(0), f)
    assert parse_lisp("(i,(p,(e)),(p,(e)))", [1, 2], [0, 1]) == And(Atom(1, Const(0), f), Atom(2, Const(1), f))
    pni = parse_lisp("(i,(n,(p,(p,(e)))),(p,(e)))", [2, 1, 3], [0, 1])
    assert not is_efo1(pni)
    with pytest.raises(NotEFO1Error):
        to_dnf(pni)


def test_lisp_tree_round_trip_and_errors():
    text = "(i,(n,(p,(p,(e)))),(u,(p,(e)),(p,(e))))"
    assert lisp_to_text(parse_lisp_tree(text)) == text
    for bad in ["(p,(e),(e))", "(x,(e))", "(p,(e)", "(i,(p,(e)))"]:
        with pytest.raises(ParseError):
            parse_lisp_tree(bad)
    with pytest.raises(ParseError):
        parse_lisp("(p,(e))", [1, 2], [0])


def test_dnf_examples():
    clauses = to_dnf(parse_efo1("r1(a0,f)|r2(a1,f)"))
    assert [len(c.literals) for c in clauses] == [1, 1]
    clauses = to_dnf(parse_efo1("(r1(a0,f)|r2(a1,f))&r3(a2,f)"))
    assert [len(c.literals) for c in clauses] == [2, 2]
    x = ExistVar("x")
    with pytest.raises(NotEFO1Error):
        to_dnf(Not(Exists("x", And(Atom(1, Const(0), x), Atom(2, x, f)))))


def test_dnf_drops_unused_quantifier_and_renames_clashes():
    clauses = to_dnf(parse_efo1("(r1(a0,x1)&r2(x1,f)) | r3(a1,f)"))
    assert clauses[0].exist_vars == ("x1",) and clauses[1].exist_vars == ()
    clauses = to_dnf(And(Exists("x", Atom(1, Const(0), ExistVar("x"))),
                         Exists("x", And(Atom(2, Const(1), ExistVar("x")), Atom(3, ExistVar("x"), f)))))
    (clause,) = clauses
    assert len(set(clause.exist_vars)) == 2


def test_nnf_de_morgan():
    got = to_nnf(Not(And(Atom(1, Const(0), f), Atom(2, Const(1), f))))
    assert got == Or(Not(Atom(1, Const(0), f)), Not(Atom(2, Const(1), f)))


def test_clause_formula_keeps_conjunction_shape():
    formula = parse_efo1("r1(a0,f)&(r2(a1,f)&r3(a2,f))")
    (clause,) = to_dnf(formula)
    assert clause.to_formula() == formula
    assert clause.literals[0] == Literal(1, Const(0), f, True)


def test_free_variable():
    assert free_variable(parse_efo1("EX x. r1(x,y)")) == "y"


def test_classify_examples():
    assert classify(get("2il").formula()) == {QueryClass.EXISTENTIAL_LEAF}
    assert classify(get("3c").formula()) == {QueryClass.CYCLIC}
    assert classify(get("2p").formula()) == {QueryClass.TREE_FORM_SAFE}
    assert classify(get("pni").formula()) == {QueryClass.NEGATION_NO_CONSTANT}
    assert QueryClass.MULTIGRAPH in classify(get("2m").formula())
    assert classify(parse_lisp("(i,(n,(p,(p,(e)))),(p,(e)))", [2, 1, 3], [0, 1])) == {QueryClass.NOT_EFO1}


def test_legacy_structures_are_tree_form_safe_except_pni():
    from efo_fit.structures import LEGACY
    for name in LEGACY:
        want = {QueryClass.NEGATION_NO_CONSTANT} if name == "pni" else {QueryClass.TREE_FORM_SAFE}
        assert classify(get(name).formula()) == want, name


def test_trivial_subsentence_examples():
    assert detect_trivial_subsentence(parse_efo1("r1(a0,a1)&r2(a0,f)"))
    assert not detect_trivial_subsentence(parse_efo1("r2(a0,f)"))
    assert detect_trivial_subsentence(parse_efo1("(EX x. r1(a0,x)&r2(x,a1))&r3(a2,f)"))
    # x1 is detached from f even though the whole formula has a free variable
    (clause,) = to_dnf(parse_efo1("r1(a0,x1)&r2(a1,x1)&r3(a2,f)"))
    assert clause_is_trivial(clause)


@pytest.mark.parametrize("name", ALL)
def test_structures_are_not_trivial(name):
    assert not detect_trivial_subsentence(get(name).formula())
