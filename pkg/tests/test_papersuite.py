import itertools
import random

import pytest

from ufx import papersuite
from ufx.beta import FiniteUltrafilter, beta_extend, enumerate_ultrafilters, natural_embedding
from ufx.formula import Assignment, evaluate, free_variables, parse_formula, to_text
from ufx.model import validate_model
from ufx.papersuite import (
    DEVIATIONS, TAU, SuiteError, asymmetric_f_mutant, build_m1, compute_G, cut_segments, formula_phi,
    formula_psi, lemma3_finite, lemma3_symbolic, linear_order, random_partition, run_suite, set_base_size,
    truncation_check,
)
from ufx.symbolic import EVENS, FIRST_LESS, SECOND_LESS, CantorPairing, EPSet, Kleene, ParamFamily


# --- the truncated model ------------------------------------------------------------

@pytest.mark.parametrize("k", range(1, 7))
def test_m1_is_valid_and_keeps_its_invariants(k):
    m1 = build_m1(k)
    assert validate_model(m1.model) == []
    assert papersuite.m1_structure_problems(m1) == []
    assert len(m1.num_sort) == k + k * (k - 1) // 2
    assert len(m1.set_sort) == 2 ** k


def test_k_out_of_range():
    for k in (0, 7):
        with pytest.raises(SuiteError):
            build_m1(k)


def test_set_base_sizes():
    assert [set_base_size(k) for k in range(1, 7)] == [1, 2, 3, 5, 7, 10]


def test_k2_membership():
    m1 = build_m1(2)
    m = m1.model
    assert m1.num_base == (0, 1)
    assert len(m1.set_sort) == 4
    r1 = {(n, m1.subset_of(y)) for n, y in m.relations["R1"] if n in m1.num_base}
    want = {(n, frozenset(s)) for r in range(3) for s in itertools.combinations(range(2), r) for n in s}
    assert r1 == want


@pytest.mark.parametrize("k", range(1, 7))
def test_f_is_symmetric_within_each_sort(k):
    m1 = build_m1(k)
    f = m1.model.funcs["F"]
    for sort in (m1.num_sort, m1.set_sort):
        for a, b in itertools.product(sort, repeat=2):
            assert f[(a, b)] == f[(b, a)]
            assert f[(a, b)] in sort


@pytest.mark.parametrize("k", range(1, 7))
def test_f_is_an_unordered_pairing_on_each_base(k):
    m1 = build_m1(k)
    f = m1.model.funcs["F"]
    for base in (m1.num_base, m1.set_base):
        codes = {}
        for a, b in itertools.combinations_with_replacement(base, 2):
            code = f[(a, b)]
            assert code not in codes, (codes.get(code), (a, b))
            codes[code] = (a, b)


def test_carriers_name_their_pair():
    m1 = build_m1(4)
    f = m1.model.funcs["F"]
    for a, b in itertools.combinations(m1.num_base, 2):
        assert m1.carrier_pair(f[(a, b)]) == (a, b)
    assert m1.carrier_pair(0) is None


def test_subset_indexing_round_trip():
    m1 = build_m1(3)
    for s in m1.set_sort:
        assert m1.index_of_subset(m1.subset_of(s)) == s
    with pytest.raises(ValueError):
        m1.subset_of(0)


def test_deviation_report_has_the_three_entries():
    m1 = build_m1(3)
    assert m1.deviations == DEVIATIONS
    assert len(m1.deviations) == 3
    text = " ".join(m1.deviations)
    for phrase in ("endpoints", "num_base", "mixed-sort"):
        assert phrase in text


# --- formulas -------------------------------------------------------------------------

def test_phi_round_trips_and_is_unary():
    for i in (1, 2):
        f = formula_phi(i)
        assert parse_formula(to_text(f), TAU) == f
        assert free_variables(f) == {"x"}
    assert parse_formula("P2(x) & forall y (P2(y) -> F(x,y) = F(y,x))", TAU) == formula_phi(2)
    with pytest.raises(ValueError):
        formula_phi(3)


def test_psi_is_a_sentence():
    psi = formula_psi()
    assert free_variables(psi) == frozenset()
    assert parse_formula(to_text(psi), TAU) == psi


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_phi2_holds_exactly_on_the_set_sort(k):
    m1 = build_m1(k)
    got = {b for b in range(m1.model.size) if evaluate(m1.model, formula_phi(2), Assignment({"x": b}))}
    assert got == set(m1.set_sort)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_psi_holds_in_m1_and_its_extension(k):
    m = build_m1(k).model
    assert evaluate(m, formula_psi())
    assert evaluate(beta_extend(m).model, formula_psi())
    if m.size <= 12:
        assert evaluate(beta_extend(m, "literal").model, formula_psi())


def test_psi_witness_is_the_singleton():
    m1 = build_m1(3)
    m = m1.model
    sep = parse_formula("P2(y) & forall z (P2(z) -> F(y,z) = F(z,y)) & R1(x1,y) & ~R1(x2,y)", TAU)
    for a, b in itertools.permutations(m1.num_base, 2):
        y = m1.index_of_subset({a})
        assert evaluate(m, sep, Assignment({"x1": a, "x2": b, "y": y}))


def test_psi_needs_the_carrier_rule():
    # with carriers related to no set, two carriers cannot be separated
    m1 = build_m1(3)
    m = m1.model
    r1 = {(a, b) for a, b in m.relations["R1"] if a in m1.num_base}
    stripped = type(m)(m.vocab, m.size, {**m.relations, "R1": r1}, m.funcs)
    assert not evaluate(stripped, formula_psi())


# --- G --------------------------------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_g_on_principal_points(k):
    m = build_m1(k).model
    for (a,) in m.relations["P1"]:
        want = {b for (b,) in m.relations["P2"] if (a, b) in m.relations["R1"]}
        assert compute_G(m, FiniteUltrafilter(m.size, a)) == want


def test_g_example_k2():
    m1 = build_m1(2)
    g = compute_G(m1.model, FiniteUltrafilter(m1.model.size, 0))
    assert {frozenset(m1.subset_of(b)) for b in g} == {frozenset({0}), frozenset({0, 1})}


def test_g_separates_base_points():
    m1 = build_m1(4)
    images = [compute_G(m1.model, FiniteUltrafilter(m1.model.size, a)) for a in m1.num_base]
    assert len(set(images)) == len(images)


def test_g_requires_concentration_on_p1():
    m1 = build_m1(2)
    with pytest.raises(SuiteError):
        compute_G(m1.model, FiniteUltrafilter(m1.model.size, m1.set_sort[0]))


# --- pair sets ------------------------------------------------------------------------

def _proper_subsets(base):
    for r in range(1, len(base)):
        yield from itertools.combinations(base, r)


@pytest.mark.parametrize("k", [4, 5])
def test_b_sets_disjoint_exhaustively(k):
    m1 = build_m1(k)
    subsets = list(_proper_subsets(m1.num_base))
    assert len(subsets) == 2 ** k - 2
    for a1 in subsets:
        assert lemma3_finite(k, a1, m1).disjoint


def test_singleton_case():
    m1 = build_m1(2)
    rep = lemma3_finite(2, {0}, m1)
    assert rep.a2 == {1}
    assert rep.b1 == {m1.model.funcs["F"][(0, 1)]} and rep.b2 == frozenset()


def test_mutant_breaks_disjointness():
    mutant = asymmetric_f_mutant(build_m1(4))
    assert any(not lemma3_finite(4, a1, mutant).disjoint for a1 in _proper_subsets(mutant.num_base))


@pytest.mark.parametrize("bad", [(), (0, 1, 2, 3), (0, 9)])
def test_degenerate_partitions(bad):
    with pytest.raises(SuiteError):
        lemma3_finite(4, bad)


@pytest.mark.parametrize("a1", [EVENS, EPSet.residue_class(3, 0)])
def test_symbolic_verdicts(a1):
    rep = lemma3_symbolic(a1)
    assert (rep.b1_in_f12, rep.b2_in_f12, rep.b2_in_f21, rep.b1_in_f21) == (
        Kleene.TRUE, Kleene.FALSE, Kleene.TRUE, Kleene.FALSE)
    assert rep.expected and rep.extensions_differ
    assert rep.as_dict()["extensions differ"] is True


def test_symbolic_needs_infinite_sides():
    with pytest.raises(SuiteError):
        lemma3_symbolic(EPSet.finite({1, 2, 3}))
    with pytest.raises(SuiteError):
        lemma3_symbolic(~EPSet.finite({1}))


def test_random_partitions_are_infinite_both_ways():
    rng = random.Random(0)
    for _ in range(50):
        a = random_partition(rng)
        assert a.is_infinite() and (~a).is_infinite()


@pytest.mark.parametrize("order", [FIRST_LESS, SECOND_LESS])
def test_truncation_oracle_agrees_up_to_ten_thousand(order):
    for a1 in (EVENS, EPSet.residue_class(3, 0)):
        assert truncation_check(a1, ~a1, order, 10_000).mismatches == 0


def test_truncation_oracle_offsets_and_generic_pairings_agree():
    class Generic:
        def __call__(self, a, b):
            return CantorPairing(5)(a, b)

    rng = random.Random(4)
    for _ in range(6):
        a1 = random_partition(rng)
        for order in (FIRST_LESS, SECOND_LESS):
            assert truncation_check(a1, ~a1, order, 64, CantorPairing(5)).mismatches == 0
            assert truncation_check(a1, ~a1, order, 64, Generic()).mismatches == 0


def test_truncation_oracle_detects_wrong_predictions(monkeypatch):
    real = papersuite.pair_image_cases

    def wrong(a1, a2, order):
        # predict the other order's inner sets
        return real(a1, a2, SECOND_LESS if order == FIRST_LESS else FIRST_LESS)

    monkeypatch.setattr(papersuite, "pair_image_cases", wrong)
    assert truncation_check(EVENS, ~EVENS, FIRST_LESS, 128).mismatches > 0

    def lazy(a1, a2, order):
        cases = real(a1, a2, order)
        region, fam = cases[0]
        return [(region, ParamFamily(fam.base, None))] + cases[1:]

    monkeypatch.setattr(papersuite, "pair_image_cases", lazy)
    assert truncation_check(EVENS, ~EVENS, FIRST_LESS, 128).mismatches > 0
    assert truncation_check(EVENS, ~EVENS, FIRST_LESS, 128, _generic()).mismatches > 0


def _generic():
    return lambda a, b: CantorPairing()(a, b)


# --- cuts -------------------------------------------------------------------------------

def brute_cut(seq, d):
    """Intersections over every initial and final segment that ``d`` contains."""
    n = len(seq)
    full = frozenset(range(n))
    initial = final = full
    for i in range(n + 1):
        head, tail = frozenset(seq[:i]), frozenset(seq[i:])
        if head in d:
            initial &= head
        if tail in d:
            final &= tail
    return initial, final


def test_cut_examples():
    order = linear_order([0, 1, 2, 3])
    cp = cut_segments(order, FiniteUltrafilter(4, 2))
    assert (cp.initial, cp.final) == ({0, 1, 2}, {2, 3})
    cp = cut_segments(order, FiniteUltrafilter(4, 0))
    assert (cp.initial, cp.final) == ({0}, {0, 1, 2, 3})


@pytest.mark.parametrize("n", range(1, 7))
def test_cuts_meet_in_the_witness(n):
    rng = random.Random(n)
    for _ in range(5):
        seq = list(range(n))
        rng.shuffle(seq)
        for d in enumerate_ultrafilters(n):
            cp = cut_segments(linear_order(seq), d)
            assert (cp.initial, cp.final) == brute_cut(seq, d)
            assert cp.initial & cp.final == {d.point}
            assert cp.initial | cp.final == set(range(n))


@pytest.mark.parametrize("pairs", [
    {(0, 1), (1, 0)},               # not antisymmetric
    {(0, 1)},                       # 2 is incomparable
    {(0, 1), (1, 2), (2, 0)},       # cycle
    {(0, 0), (0, 1), (1, 2), (0, 2)},
])
def test_non_linear_orders_rejected(pairs):
    with pytest.raises(SuiteError):
        cut_segments(pairs, FiniteUltrafilter(3, 0))


# --- the suite --------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def clean_report():
    return run_suite(k=3, seed=1, samples=20, partitions=4, limits=(128, 1024))


def test_suite_passes(clean_report):
    assert clean_report.passed, clean_report.failed()
    data = clean_report.as_dict()
    assert data["schema_version"] == 1
    assert data["deviations"] == list(DEVIATIONS)
    assert {c["name"] for c in data["checks"]} >= {
        "psi.truncated_m1", "psi.extension", "G.principal", "lemma3_finite.exhaustive",
        "lemma3_symbolic.verdicts", "lemma4.principal_cuts", "beta.mode_agreement"}


def test_mutant_fails_exactly_the_pairing_checks():
    rep = run_suite(k=3, seed=1, mutant="asymmetric-F", samples=5, partitions=2, limits=(128,))
    failed = rep.failed()
    assert "lemma3_finite.exhaustive" in failed
    assert any(name.startswith("phi_characterization.") for name in failed)
    assert all(name.startswith(("lemma3_finite", "phi_characterization.")) for name in failed)


def test_unknown_mutant():
    with pytest.raises(SuiteError):
        run_suite(mutant="no-such-thing")


def test_suite_text_mentions_every_check(clean_report):
    text = clean_report.to_text()
    for c in clean_report.checks:
        assert c.name in text
    assert text.endswith(f"{len(clean_report.checks)}/{len(clean_report.checks)} checks passed\n")


def test_crashing_check_is_reported_as_failure():
    check = papersuite._run("boom", lambda: 1 / 0)
    assert not check.passed and "ZeroDivisionError" in check.detail


def test_phi_characterization_shadows():
    m1 = build_m1(3)
    assert papersuite.phi_characterization_problems(m1, 1) == []
    assert papersuite.phi_characterization_problems(m1, 2) == []
    assert papersuite.lemma1_shadow_problems(m1) == []
    assert papersuite.lemma2_shadow_problems(m1) == []
    mutant = asymmetric_f_mutant(m1)
    assert papersuite.phi_characterization_problems(mutant, 1)


def test_embedding_preserves_phi_truth_values():
    m = build_m1(3).model
    bm = beta_extend(m)
    j = natural_embedding(m, bm)
    for i in (1, 2):
        for a in range(m.size):
            assert evaluate(m, formula_phi(i), Assignment({"x": a})) == evaluate(
                bm.model, formula_phi(i), Assignment({"x": j(a)}))
