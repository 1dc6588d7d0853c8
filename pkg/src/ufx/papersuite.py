"""The counterexample apparatus: a finite truncation of the model on N + P(N).

``build_m1(k)`` builds a finite stand-in for the two-sorted model. The
number sort holds ``0..k-1`` (``num_base``) plus one carrier per
unordered pair of distinct base numbers; the set sort holds every subset
of ``0..k-1``. No finite structure can carry an unordered pairing
function on a whole sort, so the pairing is exact only on designated
bases and the remaining choices are listed in ``TruncatedM1.deviations``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import beta as beta_mod
from .beta import FiniteUltrafilter, beta_extend, enumerate_ultrafilters, natural_embedding
from .formula import (
    And, App, Assignment, Eq, Exists, Forall, Formula, Implies, Not, Pred, Var, conj, evaluate,
)
from .model import (
    ISOMORPHISM, Model, Vocabulary, classify_map, validate_model,
)
from .symbolic import (
    FIRST_LESS, SECOND_LESS, CantorPairing, EPSet, FrechetOn, Kleene, PairingCode,
    pair_image_cases, pair_image_membership,
)

TAU = Vocabulary(
    predicates=(("P1", 1), ("P2", 1), ("R1", 2), ("R2", 2)),
    functions=(("F", 2),),
)

DEVIATIONS = (
    "R2 on the set sort is the colexicographic order of subsets of {0..k-1}; "
    "it has endpoints (the empty set and the full set), since no finite linear order lacks them.",
    "F is an unordered pairing function only on num_base (F(a,a)=a, F(a,b)=carrier of {a,b}) "
    "and on set_base (the first subsets in colex order); other same-sort pairs get the symmetric value min(a,b).",
    "Values left open by the truncation are fixed: mixed-sort F returns its first argument, "
    "mixed-sort R2 is false, and the carrier of {a,b} is an R1-member of exactly the subsets disjoint from {a,b}.",
)

MAX_K = 6


class SuiteError(ValueError):
    pass


def _pair_index(a: int, b: int) -> int:
    lo, hi = min(a, b), max(a, b)
    return hi * (hi - 1) // 2 + lo


def _pair_of_index(i: int) -> tuple[int, int]:
    hi = 1
    while hi * (hi + 1) // 2 <= i:
        hi += 1
    return i - hi * (hi - 1) // 2, hi


def set_base_size(k: int) -> int:
    """Largest ``s`` with ``s + C(s, 2)`` codes fitting in the ``2**k`` subsets."""
    s = 1
    while (s + 1) + comb(s + 1, 2) <= 2 ** k:
        s += 1
    return s


@dataclass(frozen=True)
class TruncatedM1:
    k: int
    model: Model
    num_base: tuple[int, ...]
    set_base: tuple[int, ...]
    num_sort: tuple[int, ...]
    set_sort: tuple[int, ...]
    deviations: tuple[str, ...] = field(default=DEVIATIONS)

    def subset_of(self, index: int) -> frozenset[int]:
        mask = index - len(self.num_sort)
        if not 0 <= mask < 2 ** self.k:
            raise ValueError(f"{index} is not in the set sort")
        return frozenset(i for i in range(self.k) if mask >> i & 1)

    def index_of_subset(self, s) -> int:
        return len(self.num_sort) + sum(1 << i for i in s)

    def carrier_pair(self, index: int) -> tuple[int, int] | None:
        if self.k <= index < len(self.num_sort):
            return _pair_of_index(index - self.k)
        return None


def build_m1(k: int) -> TruncatedM1:
    if not 1 <= k <= MAX_K:
        raise SuiteError(f"k must be between 1 and {MAX_K}, got {k}")
    n_num = k + comb(k, 2)
    n_set = 2 ** k
    num_sort = tuple(range(n_num))
    set_sort = tuple(range(n_num, n_num + n_set))
    size = n_num + n_set
    s_base = set_base_size(k)
    num_base = tuple(range(k))
    set_base = tuple(n_num + i for i in range(s_base))

    def is_num(x):
        return x < n_num

    def f(a: int, b: int) -> int:
        if is_num(a) != is_num(b):
            return a
        if is_num(a):
            if a < k and b < k:
                return a if a == b else k + _pair_index(a, b)
            return min(a, b)
        i, j = a - n_num, b - n_num
        if i < s_base and j < s_base:
            return a if i == j else n_num + s_base + _pair_index(i, j)
        return min(a, b)

    r1 = set()
    for mask in range(n_set):
        y = n_num + mask
        for n in range(k):
            if mask >> n & 1:
                r1.add((n, y))
        for c in range(k, n_num):
            a, b = _pair_of_index(c - k)
            if not (mask >> a & 1 or mask >> b & 1):
                r1.add((c, y))
    r2 = {(a, b) for a in num_sort for b in num_sort if a < b}
    r2 |= {(a, b) for a in set_sort for b in set_sort if a < b}
    model = Model(
        TAU, size,
        {"P1": {(x,) for x in num_sort}, "P2": {(x,) for x in set_sort}, "R1": r1, "R2": r2},
        {"F": {(a, b): f(a, b) for a in range(size) for b in range(size)}},
    )
    return TruncatedM1(k, model, num_base, set_base, num_sort, set_sort)


def asymmetric_f_mutant(m1: TruncatedM1) -> TruncatedM1:
    """Test double: ``F`` replaced by the first projection on the number sort."""
    m = m1.model
    table = dict(m.funcs["F"])
    for a in m1.num_sort:
        for b in m1.num_sort:
            table[(a, b)] = a
    mutated = Model(m.vocab, m.size, dict(m.relations), {"F": table})
    return TruncatedM1(m1.k, mutated, m1.num_base, m1.set_base, m1.num_sort, m1.set_sort, m1.deviations)


# --- formulas ---------------------------------------------------------------------

def _centre(i: int, x: str, y: str) -> Formula:
    p = f"P{i}"
    return And(Pred(p, (Var(x),)),
               Forall(y, Implies(Pred(p, (Var(y),)),
                                 Eq(App("F", (Var(x), Var(y))), App("F", (Var(y), Var(x)))))))


def formula_phi(i: int) -> Formula:
    """``P_i(x) & forall y (P_i(y) -> F(x,y) = F(y,x))``, free in ``x``."""
    if i not in (1, 2):
        raise ValueError("i must be 1 or 2")
    return _centre(i, "x", "y")


def formula_psi() -> Formula:
    antecedent = conj(Pred("P1", (Var("x1"),)), Pred("P1", (Var("x2"),)), Not(Eq(Var("x1"), Var("x2"))))
    witness = conj(_centre(2, "y", "z"), Pred("R1", (Var("x1"), Var("y"))), Not(Pred("R1", (Var("x2"), Var("y")))))
    return Forall("x1", Forall("x2", Implies(antecedent, Exists("y", witness))))


# --- G -------------------------------------------------------------------------------

def _mask(points) -> int:
    return sum(1 << p for p in points)


def compute_G(m: Model, d: FiniteUltrafilter) -> frozenset[int]:
    """``{b in P2 : {a in P1 : R1(a, b)} in d}`` for ``d`` concentrated on ``P1``."""
    p1 = [a for (a,) in m.relations["P1"]]
    p2 = sorted(b for (b,) in m.relations["P2"])
    if _mask(p1) not in d:
        raise SuiteError("ultrafilter is not concentrated on P1")
    r1 = m.relations["R1"]
    return frozenset(b for b in p2 if _mask(a for a in p1 if (a, b) in r1) in d)


# --- pair sets ------------------------------------------------------------------------

@dataclass(frozen=True)
class Lemma3FiniteReport:
    a1: frozenset[int]
    a2: frozenset[int]
    b1: frozenset[int]
    b2: frozenset[int]

    @property
    def disjoint(self) -> bool:
        return not (self.b1 & self.b2)


def lemma3_finite(k: int, a1, m1: TruncatedM1 | None = None) -> Lemma3FiniteReport:
    m1 = m1 or build_m1(k)
    base = frozenset(m1.num_base)
    a1 = frozenset(a1)
    if not a1 or not a1 < base:
        raise SuiteError("A1 must be a nonempty proper subset of num_base")
    a2 = base - a1
    m = m1.model
    r2 = m.relations["R2"]
    f = m.funcs["F"]
    b1 = frozenset(f[(n1, n2)] for n1 in a1 for n2 in a2 if (n1, n2) in r2)
    b2 = frozenset(f[(n1, n2)] for n1 in a1 for n2 in a2 if (n2, n1) in r2)
    return Lemma3FiniteReport(a1, a2, b1, b2)


@dataclass(frozen=True)
class Lemma3SymbolicReport:
    a1: EPSet
    a2: EPSet
    b1_in_f12: Kleene
    b2_in_f12: Kleene
    b2_in_f21: Kleene
    b1_in_f21: Kleene

    @property
    def expected(self) -> bool:
        return (self.b1_in_f12, self.b2_in_f12, self.b2_in_f21, self.b1_in_f21) == (
            Kleene.TRUE, Kleene.FALSE, Kleene.TRUE, Kleene.FALSE)

    @property
    def extensions_differ(self) -> bool:
        """``F(D1,D2) != F(D2,D1)`` for every pair drawn from the two classes."""
        return ({self.b1_in_f12, self.b1_in_f21} == {Kleene.TRUE, Kleene.FALSE}
                or {self.b2_in_f12, self.b2_in_f21} == {Kleene.TRUE, Kleene.FALSE})

    def as_dict(self) -> dict:
        return {
            "A1": str(self.a1), "A2": str(self.a2),
            "B1 in F(D1,D2)": str(self.b1_in_f12),
            "B2 in F(D1,D2)": str(self.b2_in_f12),
            "B2 in F(D2,D1)": str(self.b2_in_f21),
            "B1 in F(D2,D1)": str(self.b1_in_f21),
            "extensions differ": self.extensions_differ,
        }


def lemma3_symbolic(a1: EPSet, pairing: PairingCode | None = None) -> Lemma3SymbolicReport:
    a2 = a1.complement()
    if a1.is_finite() or a2.is_finite():
        raise SuiteError("both A1 and its complement must be infinite")
    d1, d2 = FrechetOn(a1), FrechetOn(a2)
    return Lemma3SymbolicReport(
        a1, a2,
        pair_image_membership(a1, a2, FIRST_LESS, d1, d2, pairing),
        pair_image_membership(a1, a2, SECOND_LESS, d1, d2, pairing),
        pair_image_membership(a1, a2, SECOND_LESS, d2, d1, pairing),
        pair_image_membership(a1, a2, FIRST_LESS, d2, d1, pairing),
    )


@dataclass(frozen=True)
class TruncationReport:
    limit: int
    order: str
    mismatches: int

    @property
    def passed(self) -> bool:
        return self.mismatches == 0


def _truncation_kernel():
    from numba import njit

    @njit(cache=True)
    def kernel(limit, offset, first_less, in_a1, in_a2, case_of, bases, constraint):
        # B = {pairing(x1, x2) : x1 in A1, x2 in A2, ordered}, filled in code order
        b = np.zeros(limit * (limit + 1) // 2 + offset, np.uint8)
        # the smaller element of a pair comes from A1 under first-less, from A2 otherwise
        small, large = (in_a1, in_a2) if first_less else (in_a2, in_a1)
        for hi in range(limit):
            base = hi * (hi + 1) // 2 + offset
            for lo in range(hi):
                b[base + lo] = small[lo] & large[hi]

        n_cases = bases.shape[0]
        # sel[k, n] says n1 = n is in case k and its family admits n2 > n1
        sel = np.zeros((n_cases, limit), np.uint8)
        below_ok = np.zeros(limit, np.uint8)
        for n in range(limit):
            c = case_of[n]
            sel[c, n] = constraint[c] != -1
            below_ok[n] = constraint[c] != 1
        acc = np.zeros(limit, np.uint8)
        bad = 0
        # each unordered pair {lo < hi} is read once and checked in both orientations
        for hi in range(limit):
            base = hi * (hi + 1) // 2 + offset
            c_hi = case_of[hi]
            low = below_ok[hi]
            row = bases[c_hi]
            for lo in range(hi):
                acc[lo] = 0
            for k in range(n_cases):
                if bases[k, hi]:
                    for lo in range(hi):
                        acc[lo] |= sel[k, lo]
            for lo in range(hi):
                brute = b[base + lo]
                bad += (brute != (row[lo] & low)) + (brute != acc[lo])
            # n1 = n2 lies in no family with a strict cut
            want = row[hi] & low & sel[c_hi, hi]
            bad += b[base + hi] != want
        return bad

    return kernel


_KERNEL = None


def truncation_check(a1: EPSet, a2: EPSet, order: str, limit: int,
                     pairing: PairingCode | None = None) -> TruncationReport:
    """Compare predicted inner sets with brute force on ``[0, limit)``.

    For every ``n1 < limit`` the set ``{n2 < limit : pairing(n1, n2) in B}``
    is computed from an explicit enumeration of ``B`` (pairs below
    ``limit``) and checked against the family that
    :func:`ufx.symbolic.pair_image_cases` assigns to ``n1``.
    """
    global _KERNEL
    pairing = pairing or CantorPairing()
    cases = pair_image_cases(a1, a2, order)
    case_of = np.full(limit, -1, dtype=np.int64)
    for i, (region, _) in enumerate(cases):
        sel = region.mask(limit)
        if np.any(case_of[sel] != -1):
            raise SuiteError("case regions overlap")
        case_of[sel] = i
    if np.any(case_of == -1):
        raise SuiteError("case regions do not cover the range")
    bases = np.stack([fam.base.mask(limit) for _, fam in cases]).astype(np.uint8)
    constraint = np.array([{None: 0, ">": 1, "<": -1}[fam.constraint] for _, fam in cases], dtype=np.int64)
    in_a1, in_a2 = a1.mask(limit).astype(np.uint8), a2.mask(limit).astype(np.uint8)

    if isinstance(pairing, CantorPairing):
        if _KERNEL is None:
            _KERNEL = _truncation_kernel()
        bad = _KERNEL(limit, pairing.offset, order == FIRST_LESS, in_a1, in_a2, case_of, bases, constraint)
        return TruncationReport(limit, order, int(bad))

    less = (lambda x1, x2: x1 < x2) if order == FIRST_LESS else (lambda x1, x2: x2 < x1)
    b = {pairing(x1, x2) for x1 in range(limit) if in_a1[x1] for x2 in range(limit) if in_a2[x2] and less(x1, x2)}
    bad = 0
    for n1 in range(limit):
        fam = cases[case_of[n1]][1]
        predicted = fam.at(n1)
        for n2 in range(limit):
            if (pairing(n1, n2) in b) != (n2 in predicted):
                bad += 1
    return TruncationReport(limit, order, bad)


# --- cuts -------------------------------------------------------------------------------

@dataclass(frozen=True)
class CutPair:
    initial: frozenset[int]
    final: frozenset[int]


def _check_linear(n: int, less: set[tuple[int, int]]) -> None:
    for a in range(n):
        if (a, a) in less:
            raise SuiteError(f"order is not irreflexive at {a}")
        for b in range(n):
            if a != b and ((a, b) in less) == ((b, a) in less):
                raise SuiteError(f"order does not compare {a} and {b} exactly one way")
    for a, b in less:
        if not (0 <= a < n and 0 <= b < n):
            raise SuiteError(f"pair {(a, b)} is outside the universe")
        for c in range(n):
            if (b, c) in less and (a, c) not in less:
                raise SuiteError(f"order is not transitive at {a} < {b} < {c}")


def linear_order(sequence) -> set[tuple[int, int]]:
    """Strict order relation listing ``sequence`` from least to greatest."""
    seq = list(sequence)
    return {(seq[i], seq[j]) for i in range(len(seq)) for j in range(i + 1, len(seq))}


def cut_segments(order, d: FiniteUltrafilter) -> CutPair:
    """Intersections of the initial and of the final segments that belong to ``d``.

    ``order`` is a strict linear order on ``{0..d.size-1}`` given as a set
    of ``(smaller, larger)`` pairs.
    """
    n = d.size
    less = set(map(tuple, order))
    _check_linear(n, less)
    ranked = sorted(range(n), key=lambda a: sum((b, a) in less for b in range(n)))
    full = frozenset(range(n))
    initial, final = full, full
    for cut in range(n + 1):
        head = frozenset(ranked[:cut])
        tail = frozenset(ranked[cut:])
        if _mask(head) in d:
            initial &= head
        if _mask(tail) in d:
            final &= tail
    return CutPair(initial, final)


# --- suite ---------------------------------------------------------------------------

SCHEMA_VERSION = 1


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class SuiteReport:
    k: int
    seed: int
    checks: list[Check]
    deviations: tuple[str, ...]
    observations: dict
    mutant: str | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "k": self.k,
            "seed": self.seed,
            "mutant": self.mutant,
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
            "deviations": list(self.deviations),
            "observations": self.observations,
        }

    def to_text(self) -> str:
        lines = [f"paper suite  k={self.k}  seed={self.seed}" + (f"  mutant={self.mutant}" if self.mutant else "")]
        for c in self.checks:
            lines.append(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}" + (f": {c.detail}" if c.detail else ""))
        lines.append("deviations of the truncated model:")
        for i, d in enumerate(self.deviations, 1):
            lines.append(f"  {i}. {d}")
        lines.append("observations:")
        for key in sorted(self.observations):
            lines.append(f"  {key}: {self.observations[key]}")
        passed = sum(c.passed for c in self.checks)
        lines.append(f"{passed}/{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"


def m1_structure_problems(m1: TruncatedM1) -> list[str]:
    """Sort and relation invariants of the truncation (``F`` is left to the lemma checks)."""
    m = m1.model
    out = [str(v) for v in validate_model(m)]
    p1 = {a for (a,) in m.relations["P1"]}
    p2 = {a for (a,) in m.relations["P2"]}
    if p1 & p2:
        out.append("P1 and P2 overlap")
    if p1 | p2 != set(range(m.size)):
        out.append("P1 and P2 do not cover the universe")
    for n in m1.num_base:
        for y in m1.set_sort:
            if ((n, y) in m.relations["R1"]) != (n in m1.subset_of(y)):
                out.append(f"R1({n},{y}) disagrees with membership")
    for sort in (m1.num_sort, m1.set_sort):
        try:
            _check_linear_on(sort, m.relations["R2"])
        except SuiteError as e:
            out.append(f"R2 on a sort: {e}")
    for a, b in itertools.product(m1.num_base, repeat=2):
        if ((a, b) in m.relations["R2"]) != (a < b):
            out.append(f"R2({a},{b}) is not the usual order")
    return out


def _check_linear_on(points, rel) -> None:
    index = {p: i for i, p in enumerate(points)}
    less = {(index[a], index[b]) for a, b in rel if a in index and b in index}
    _check_linear(len(points), less)


def phi_characterization_problems(m1: TruncatedM1, i: int) -> list[str]:
    """In the extension, ``phi_i(D)`` must hold exactly at ``j(a)`` for ``a`` of sort ``P_i``."""
    bm = beta_extend(m1.model)
    emb = natural_embedding(m1.model, bm)
    sort = {emb(a) for (a,) in m1.model.relations[f"P{i}"]}
    phi = formula_phi(i)
    out = []
    for idx in range(bm.model.size):
        holds = evaluate(bm.model, phi, Assignment({"x": idx}))
        if holds != (idx in sort):
            out.append(f"phi_{i} is {holds} at u{idx}")
    return out


def lemma1_shadow_problems(m1: TruncatedM1) -> list[str]:
    bm = beta_extend(m1.model)
    out = []
    for i in (1, 2):
        sort_mask = _mask(a for (a,) in m1.model.relations[f"P{i}"])
        for idx, d in enumerate(bm.universe):
            if sort_mask not in d and evaluate(bm.model, formula_phi(i), Assignment({"x": idx})):
                out.append(f"phi_{i} holds at u{idx}, which is not concentrated on P{i}")
    return out


def lemma2_shadow_problems(m1: TruncatedM1) -> list[str]:
    bm = beta_extend(m1.model)
    f = bm.model.funcs["F"]
    out = []
    for i in (1, 2):
        sort_mask = _mask(a for (a,) in m1.model.relations[f"P{i}"])
        sort_points = [idx for idx, d in enumerate(bm.universe) if sort_mask in d]
        for a in (a for (a,) in m1.model.relations[f"P{i}"]):
            ja = bm.index(FiniteUltrafilter(m1.model.size, a))
            for d1 in sort_points:
                if f[(d1, ja)] != f[(ja, d1)]:
                    out.append(f"F(u{d1}, j({a})) != F(j({a}), u{d1})")
    return out


def _run(name: str, fn) -> Check:
    try:
        problems = fn()
    except Exception as e:  # a crashing check is a failing check
        return Check(name, False, f"error: {type(e).__name__}: {e}")
    if isinstance(problems, tuple):
        problems, detail = problems
    else:
        detail = ""
    if problems:
        shown = "; ".join(problems[:3]) + (f" (+{len(problems) - 3} more)" if len(problems) > 3 else "")
        return Check(name, False, shown)
    return Check(name, True, detail)


def random_partition(rng: random.Random) -> EPSet:
    """Random eventually periodic set that is infinite and co-infinite."""
    while True:
        period = rng.randint(2, 6)
        residues = frozenset(r for r in range(period) if rng.random() < 0.5)
        threshold = rng.randint(0, 8)
        prefix = frozenset(x for x in range(threshold) if rng.random() < 0.5)
        s = EPSet(threshold, prefix, period, residues)
        if s.is_infinite() and s.complement().is_infinite():
            return s


def random_linear_order(rng: random.Random, n: int) -> set[tuple[int, int]]:
    seq = list(range(n))
    rng.shuffle(seq)
    return linear_order(seq)


def run_suite(k: int = 4, seed: int = 0, mutant: str | None = None,
              partitions: int = 12, limits=(2 ** 7, 2 ** 10, 2 ** 13), samples: int = 60) -> SuiteReport:
    """Run every check at truncation size ``k`` with seeded sampling.

    ``mutant="asymmetric-F"`` swaps in :func:`asymmetric_f_mutant` to
    confirm the checks notice a broken pairing function.
    """
    from . import sampling
    from .formula import FORALL, EXISTS, UfQuant

    if mutant not in (None, "asymmetric-F"):
        raise SuiteError(f"unknown mutant {mutant!r}")
    rng = random.Random(seed)
    m1 = build_m1(k)
    if mutant:
        m1 = asymmetric_f_mutant(m1)
    m = m1.model
    checks: list[Check] = []
    observations: dict = {}

    checks.append(_run("m1.structure", lambda: m1_structure_problems(m1)))

    for i in (1, 2):
        checks.append(_run(f"phi_characterization.phi{i}", lambda i=i: phi_characterization_problems(m1, i)))
    checks.append(_run("phi_characterization.lemma1_shadow", lambda: lemma1_shadow_problems(m1)))
    checks.append(_run("phi_characterization.lemma2_shadow", lambda: lemma2_shadow_problems(m1)))

    def phi2_on_sort():
        return [f"phi_2 is {not (b in m1.set_sort)} at {b}" for b in range(m.size)
                if evaluate(m, formula_phi(2), Assignment({"x": b})) != (b in m1.set_sort)]
    checks.append(_run("phi2.exactly_set_sort", phi2_on_sort))

    psi = formula_psi()
    psi_base = evaluate(m, psi)
    psi_beta = evaluate(beta_extend(m).model, psi)
    observations["psi in truncated M1"] = psi_base
    observations["psi in its extension"] = psi_beta
    checks.append(_run("psi.truncated_m1", lambda: [] if psi_base else ["psi is false"]))
    checks.append(_run("psi.extension", lambda: [] if psi_beta else ["psi is false"]))

    def g_checks():
        out = []
        r1 = m.relations["R1"]
        images = {}
        for (a,) in sorted(m.relations["P1"]):
            got = compute_G(m, FiniteUltrafilter(m.size, a))
            want = frozenset(b for (b,) in m.relations["P2"] if (a, b) in r1)
            if got != want:
                out.append(f"G(j({a})) differs from the R1-row of {a}")
            images[a] = got
        for a, b in itertools.combinations(m1.num_base, 2):
            if images[a] == images[b]:
                out.append(f"G(j({a})) == G(j({b}))")
        return out
    checks.append(_run("G.principal", g_checks))

    def lemma3_exhaustive():
        out = []
        base = m1.num_base
        count = 0
        for r in range(1, len(base)):
            for a1 in itertools.combinations(base, r):
                count += 1
                rep = lemma3_finite(k, a1, m1)
                if not rep.disjoint:
                    out.append(f"A1={sorted(a1)}: B1 and B2 share {sorted(rep.b1 & rep.b2)}")
        return out, f"{count} partitions"
    checks.append(_run("lemma3_finite.exhaustive", lemma3_exhaustive))

    parts = [EPSet.residue_class(2, 0), EPSet.residue_class(3, 0)]
    parts += [random_partition(rng) for _ in range(max(0, partitions - len(parts)))]

    def lemma3_sym():
        out = []
        for a1 in parts:
            rep = lemma3_symbolic(a1)
            if not (rep.expected and rep.extensions_differ):
                out.append(f"A1={a1}: verdicts {rep.as_dict()}")
            for order in (FIRST_LESS, SECOND_LESS):
                for limit in limits:
                    tr = truncation_check(a1, rep.a2, order, limit)
                    if not tr.passed:
                        out.append(f"A1={a1} {order} limit {limit}: {tr.mismatches} mismatches")
        return out, f"{len(parts)} partitions, limits {list(limits)}"
    checks.append(_run("lemma3_symbolic.verdicts", lemma3_sym))

    def lemma4_cuts():
        out = []
        for n in range(1, 7):
            order = random_linear_order(rng, n)
            ranked = sorted(range(n), key=lambda a: sum((b, a) in order for b in range(n)))
            for d in enumerate_ultrafilters(n):
                cp = cut_segments(order, d)
                if cp.initial & cp.final != {d.point}:
                    out.append(f"n={n} at {d.point}: I & J = {sorted(cp.initial & cp.final)}")
                pos = ranked.index(d.point)
                if cp.initial != frozenset(ranked[:pos + 1]) or cp.final != frozenset(ranked[pos:]):
                    out.append(f"n={n} at {d.point}: segments are not the principal cut")
        return out
    checks.append(_run("lemma4.principal_cuts", lemma4_cuts))

    sub_seed = rng.randrange(2 ** 31)

    def embedding():
        out = []
        for i, mm in enumerate(sampling.sample_models(sub_seed, samples, 5)):
            if classify_map(natural_embedding(mm)) != ISOMORPHISM:
                out.append(f"sample {i}: natural embedding is not an isomorphism")
            if validate_model(beta_extend(mm).model):
                out.append(f"sample {i}: extension is not a valid model")
        return out, f"{samples} models"
    checks.append(_run("beta.embedding", embedding))

    def modes():
        out = []
        for i, mm in enumerate(sampling.sample_models(sub_seed + 1, samples, 4)):
            if beta_extend(mm, "literal") != beta_extend(mm, "fast"):
                out.append(f"sample {i}: literal and fast extensions differ")
        return out, f"{samples} models"
    checks.append(_run("beta.mode_agreement", modes))

    def lifts():
        out = []
        for i, w in enumerate(sampling.sample_homomorphisms(sub_seed + 2, samples, 4)):
            rep = beta_mod.lift_check(w, "literal")
            if not rep.passed:
                out.append(f"sample {i}: {rep.source_classification} lifted to {rep.lifted_classification}")
        return out, f"{samples} maps"
    checks.append(_run("beta.first_extension", lifts))

    def quantifier_laws():
        out = []
        qrng = random.Random(sub_seed + 3)
        for i in range(samples):
            vocab = sampling.random_vocabulary(qrng)
            mm = sampling.random_model(qrng, vocab, qrng.randint(1, 4))
            body = sampling.random_formula(qrng, vocab, ["x"], ["e"], 2)
            a = qrng.randrange(mm.size)
            ufs = {"u": FiniteUltrafilter(mm.size, a), "e": FiniteUltrafilter(mm.size, qrng.randrange(mm.size))}
            univ = evaluate(mm, UfQuant(FORALL, "u", "x", body), Assignment({}, ufs))
            exist = evaluate(mm, UfQuant(EXISTS, "u", "x", body), Assignment({}, ufs))
            direct = evaluate(mm, body, Assignment({"x": a}, ufs))
            if univ != direct:
                out.append(f"sample {i}: principal reduction fails")
            if univ != exist:
                out.append(f"sample {i}: self-duality fails")
        return out, f"{samples} formulas"
    checks.append(_run("formula.quantifier_laws", quantifier_laws))

    observations["universe size"] = m.size
    observations["set_base size"] = len(m1.set_base)
    return SuiteReport(k, seed, checks, m1.deviations, observations, mutant)
