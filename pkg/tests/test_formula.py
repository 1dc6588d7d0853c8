import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from ufx import sampling
from ufx.beta import FiniteUltrafilter
from ufx.formula import (
    EXISTS, FORALL, And, App, Assignment, Eq, EvaluationError, Exists, Forall, FormulaError,
    FormulaSyntaxError, Implies, Not, Or, Pred, UfQuant, Var, check_formula, definable_set, evaluate,
    free_parameters, free_variables, parse_formula, quantifier_depth, substitute, to_text,
)
from ufx.model import Model, Vocabulary, make_model

TAU = Vocabulary(predicates=(("P1", 1), ("P2", 1), ("R", 2)), functions=(("F", 2),))


# --- oracle --------------------------------------------------------------------------
# A second evaluator written from the textbook clauses: terms by substitution, no
# bitmasks, no memoisation. Ultrafilters are explicit families of frozensets.

def family_of(d: FiniteUltrafilter) -> set[frozenset]:
    pts = range(d.size)
    return {frozenset(s) for r in range(d.size + 1) for s in itertools.combinations(pts, r) if d.point in s}


def oracle(m: Model, f, env: dict, fams: dict) -> bool:
    def term(t):
        if isinstance(t, Var):
            return env[t.name]
        return m.funcs[t.func][tuple(term(a) for a in t.args)]

    if isinstance(f, Eq):
        return term(f.left) == term(f.right)
    if isinstance(f, Pred):
        return tuple(term(a) for a in f.args) in m.relations[f.name]
    if isinstance(f, Not):
        return not oracle(m, f.body, env, fams)
    if isinstance(f, And):
        return oracle(m, f.left, env, fams) and oracle(m, f.right, env, fams)
    if isinstance(f, Or):
        return oracle(m, f.left, env, fams) or oracle(m, f.right, env, fams)
    if isinstance(f, Implies):
        return not oracle(m, f.left, env, fams) or oracle(m, f.right, env, fams)
    values = [oracle(m, f.body, {**env, f.var: i}, fams) for i in range(m.size)]
    if isinstance(f, Forall):
        return all(values)
    if isinstance(f, Exists):
        return any(values)
    witnesses = frozenset(i for i, v in enumerate(values) if v)
    if f.mode == FORALL:
        return witnesses in fams[f.param]
    return frozenset(range(m.size)) - witnesses not in fams[f.param]


def triples(seed: int, count: int, depth: int, max_size: int = 4):
    rng = random.Random(seed)
    for _ in range(count):
        vocab = sampling.random_vocabulary(rng)
        m = sampling.random_model(rng, vocab, rng.randint(1, max_size))
        f = sampling.random_formula(rng, vocab, ["x", "z"], ["d", "e"], depth)
        env = {"x": rng.randrange(m.size), "z": rng.randrange(m.size)}
        ufs = {p: FiniteUltrafilter(m.size, rng.randrange(m.size)) for p in ("d", "e")}
        yield m, f, env, ufs


# --- parsing -------------------------------------------------------------------------

PHI1 = "P1(x) & forall y (P1(y) -> F(x,y) = F(y,x))"


def test_parse_phi1_shape():
    f = parse_formula(PHI1, TAU)
    x, y = Var("x"), Var("y")
    assert f == And(Pred("P1", (x,)), Forall("y", Implies(Pred("P1", (y,)), Eq(App("F", (x, y)), App("F", (y, x))))))
    assert free_variables(f) == {"x"}
    assert free_parameters(f) == frozenset()


def test_parse_uf_quantifier():
    f = parse_formula("Uforall[d] x (P1(x))", TAU)
    assert f == UfQuant(FORALL, "d", "x", Pred("P1", (Var("x"),)))
    assert free_parameters(f) == {"d"}
    assert free_variables(f) == frozenset()


@pytest.mark.parametrize("text", ["P1(x,", "P1(x) &", "forall (P1(x))", "x", "Uforall[] x P1(x)", "P1(x) $ P2(x)", "(P1(x)"])
def test_syntax_errors(text):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text, TAU)


def test_syntax_error_position():
    with pytest.raises(FormulaSyntaxError) as exc:
        parse_formula("P1(x) & & P2(x)", TAU)
    assert exc.value.pos == 8


@pytest.mark.parametrize("text", ["Q(x)", "P1(x,x)", "R(x)", "G(x) = x", "F(x) = x"])
def test_symbol_errors(text):
    with pytest.raises(FormulaError):
        parse_formula(text, TAU)


def test_rebinding_on_one_path_rejected():
    with pytest.raises(FormulaError, match="bound twice"):
        parse_formula("forall x (exists x (P1(x)))", TAU)
    # reuse on separate branches is fine
    parse_formula("(forall x (P1(x))) & exists x (P2(x))", TAU)


def test_precedence_and_associativity():
    assert parse_formula("~P1(x) & P2(x) | R(x,x) -> P1(x) -> P2(x)", TAU) == Implies(
        Or(And(Not(Pred("P1", (Var("x"),))), Pred("P2", (Var("x"),))), Pred("R", (Var("x"), Var("x")))),
        Implies(Pred("P1", (Var("x"),)), Pred("P2", (Var("x"),))))
    assert parse_formula("forall y P1(y) & P2(y)", TAU) == Forall("y", And(Pred("P1", (Var("y"),)), Pred("P2", (Var("y"),))))


def test_not_equal_sugar():
    assert parse_formula("x != y", TAU) == Not(Eq(Var("x"), Var("y")))


@settings(max_examples=300)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 3))
def test_text_round_trip(seed, depth):
    rng = random.Random(seed)
    vocab = sampling.random_vocabulary(rng)
    f = sampling.random_formula(rng, vocab, ["x"], ["d"], depth)
    assert parse_formula(to_text(f), vocab) == f


def test_quantifier_depth():
    assert quantifier_depth(parse_formula(PHI1, TAU)) == 1
    assert quantifier_depth(parse_formula("Uforall[d] x (Uexists[e] y (R(x,y)))", TAU)) == 2


# --- evaluation ----------------------------------------------------------------------

def _nested_model():
    return make_model(Vocabulary((("R", 2),)), 3, {"R": {(0, 1)}})


def test_nested_ultrafilter_example():
    m = _nested_model()
    f = parse_formula("Uforall[d1] x1 (Uforall[d2] x2 (R(x1,x2)))", m.vocab)
    j = lambda a: FiniteUltrafilter(3, a)  # noqa: E731
    assert evaluate(m, f, Assignment({}, {"d1": j(0), "d2": j(1)})) is True
    assert evaluate(m, f, Assignment({}, {"d1": j(0), "d2": j(2)})) is False


def test_missing_assignments():
    m = _nested_model()
    with pytest.raises(EvaluationError, match="variables"):
        evaluate(m, parse_formula("R(x,y)", m.vocab), Assignment({"x": 0}))
    with pytest.raises(EvaluationError, match="parameters"):
        evaluate(m, parse_formula("Uforall[d] x (R(x,x))", m.vocab))


def test_ultrafilter_on_wrong_universe():
    m = _nested_model()
    with pytest.raises(EvaluationError, match="size"):
        evaluate(m, parse_formula("Uforall[d] x (R(x,x))", m.vocab), Assignment({}, {"d": FiniteUltrafilter(4, 0)}))


def test_variable_out_of_range():
    m = _nested_model()
    with pytest.raises(EvaluationError):
        evaluate(m, parse_formula("R(x,x)", m.vocab), Assignment({"x": 3}))


def test_definable_set():
    m = _nested_model()
    assert definable_set(m, parse_formula("exists y (R(x,y))", m.vocab), "x") == {0}


def test_substitute_renames_free_occurrences_only():
    f = parse_formula("P1(x) & exists x (P2(x))", TAU)
    g, name = substitute(f, "x", 0)
    assert free_variables(g) == {name}
    assert to_text(g).count(name) == 1


def test_classical_fragment_matches_oracle():
    count = 0
    for m, f, env, _ in triples(seed=5, count=400, depth=3):
        if free_parameters(f):
            continue
        assert evaluate(m, f, Assignment(env)) == oracle(m, f, env, {}), to_text(f)
        count += 1
    assert count > 100


def test_full_language_matches_oracle():
    for m, f, env, ufs in triples(seed=6, count=300, depth=3):
        fams = {p: family_of(d) for p, d in ufs.items()}
        assert evaluate(m, f, Assignment(env, ufs)) == oracle(m, f, env, fams), to_text(f)


def test_principal_reduction():
    # Uforall at j(a) is the body at x := a
    for m, f, env, ufs in triples(seed=7, count=500, depth=3):
        a = env["x"]
        quantified = UfQuant(FORALL, "u", "x", f)
        check_formula(quantified, m.vocab)
        lhs = evaluate(m, quantified, Assignment({"z": env["z"]}, {**ufs, "u": FiniteUltrafilter(m.size, a)}))
        assert lhs == evaluate(m, f, Assignment(env, ufs))


def test_self_duality():
    for m, f, env, ufs in triples(seed=8, count=500, depth=3):
        u = FiniteUltrafilter(m.size, env["z"])
        a = Assignment({"z": env["z"]}, {**ufs, "u": u})
        assert evaluate(m, UfQuant(FORALL, "u", "x", f), a) == evaluate(m, UfQuant(EXISTS, "u", "x", f), a)


def test_exists_reading_differs_on_non_ultrafilter_families():
    # with a mere filter the two quantifiers come apart: the self-duality relies on maximality
    class Improper:
        size = 2

        def __contains__(self, mask):
            return mask == 0b11

    m = make_model(Vocabulary((("P", 1),)), 2, {"P": {(0,)}})
    a = Assignment({}, {"u": Improper()})
    body = Pred("P", (Var("x"),))
    assert evaluate(m, UfQuant(FORALL, "u", "x", body), a) is False
    assert evaluate(m, UfQuant(EXISTS, "u", "x", body), a) is True
