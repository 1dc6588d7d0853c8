"""Ultrafilter extensions of finite models.

On a finite universe every ultrafilter is principal, so ``beta_extend``
returns a copy of the base model up to the natural embedding. The
``literal`` mode nevertheless builds the extension straight from the
ultrafilter-quantifier definitions, querying ultrafilters only through
set membership; the ``fast`` mode uses the principal witnesses. The two
must agree exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .formula import FORALL, Assignment, Pred, UfQuant, App, Var, evaluate
from .model import NOT_HOMOMORPHISM, MapWitness, Model, classify_map, properties_of, validate_model

LITERAL_MAX_SIZE = 12


class BetaConstructionError(RuntimeError):
    """The function clause did not single out exactly one ultrafilter."""


def _as_mask(subset, n: int) -> int:
    if isinstance(subset, int):
        return subset
    mask = 0
    for i in subset:
        if not 0 <= i < n:
            raise ValueError(f"{i} is not a point of a universe of size {n}")
        mask |= 1 << i
    return mask


@dataclass(frozen=True, order=True)
class FiniteUltrafilter:
    """The principal ultrafilter at ``point`` on ``{0, ..., size-1}``.

    Subsets may be given as an iterable of points or as an ``int`` bitmask
    (bit ``i`` set means ``i`` is in the subset).
    """

    size: int
    point: int

    def __post_init__(self):
        if not 0 <= self.point < self.size:
            raise ValueError(f"point {self.point} outside universe of size {self.size}")

    def __contains__(self, subset) -> bool:
        return bool(_as_mask(subset, self.size) >> self.point & 1)

    def __str__(self):
        return f"principal:{self.point}"


def principal(size: int, point: int) -> FiniteUltrafilter:
    return FiniteUltrafilter(size, point)


def enumerate_ultrafilters(n: int) -> list[FiniteUltrafilter]:
    if n < 1:
        raise ValueError("a universe needs at least one point")
    return [FiniteUltrafilter(n, p) for p in range(n)]


def subsets(n: int) -> range:
    """All subsets of ``{0..n-1}`` as bitmasks, in increasing order."""
    return range(1 << n)


@dataclass(frozen=True)
class BetaModel:
    """``model`` is the extension; its point ``i`` is the ultrafilter ``universe[i]``."""

    base: Model
    universe: tuple[FiniteUltrafilter, ...]
    model: Model

    def index(self, d: FiniteUltrafilter) -> int:
        """Position of ``d`` in the universe, found by membership of singletons."""
        for i, e in enumerate(self.universe):
            if same_ultrafilter(d, e):
                return i
        raise KeyError(d)

    def point_names(self) -> list[str]:
        return [f"u{i}" for i in range(len(self.universe))]


def same_ultrafilter(d: FiniteUltrafilter, e: FiniteUltrafilter) -> bool:
    """Extensional equality. Two ultrafilters agree iff they agree on singletons."""
    if d.size != e.size:
        return False
    return all(((1 << i) in d) == ((1 << i) in e) for i in range(d.size))


def _nested_quantifier(symbol_formula, arity: int) -> tuple:
    params = [f"d{i}" for i in range(1, arity + 1)]
    xs = [f"x{i}" for i in range(1, arity + 1)]
    body = symbol_formula(tuple(Var(x) for x in xs))
    for param, x in reversed(list(zip(params, xs))):
        body = UfQuant(FORALL, param, x, body)
    return body, params


def _literal(m: Model) -> BetaModel:
    n = m.size
    if n > LITERAL_MAX_SIZE:
        raise ValueError(f"literal mode is limited to {LITERAL_MAX_SIZE} points, model has {n}")
    points = enumerate_ultrafilters(n)
    relations = {}
    for name, arity in m.vocab.predicates:
        phi, params = _nested_quantifier(lambda xs, name=name: Pred(name, xs), arity)
        rel = set()
        for idx in itertools.product(range(n), repeat=arity):
            ufs = {p: points[i] for p, i in zip(params, idx)}
            if evaluate(m, phi, Assignment({}, ufs)):
                rel.add(idx)
        relations[name] = rel

    # F(x1..xk) in A, read through a fresh unary predicate interpreted as A
    in_a = "_in_A"
    while m.vocab.predicate_arity(in_a) is not None or m.vocab.function_arity(in_a) is not None:
        in_a += "_"
    vocab_a = m.vocab.extend(predicates=[(in_a, 1)])
    base_rels = dict(m.relations)
    probes = [Model(vocab_a, n, {**base_rels, in_a: {(i,) for i in range(n) if mask >> i & 1}}, m.funcs)
              for mask in subsets(n)]

    funcs = {}
    for name, arity in m.vocab.functions:
        phi, params = _nested_quantifier(
            lambda xs, name=name: Pred(in_a, (App(name, xs),)), arity)
        table = {}
        for idx in itertools.product(range(n), repeat=arity):
            ufs = {p: points[i] for p, i in zip(params, idx)}
            verdicts = [evaluate(probe, phi, Assignment({}, ufs)) for probe in probes]
            matches = [j for j, d in enumerate(points)
                       if all((mask in d) == verdicts[mask] for mask in subsets(n))]
            if len(matches) != 1:
                raise BetaConstructionError(
                    f"{name}{idx}: {len(matches)} ultrafilters satisfy the defining biconditional")
            table[idx] = matches[0]
        funcs[name] = table
    return BetaModel(m, tuple(points), Model(m.vocab, n, relations, funcs))


def _fast(m: Model) -> BetaModel:
    n = m.size
    points = enumerate_ultrafilters(n)
    # point i of the extension is j(i); the structure is carried over verbatim
    relations = {name: set(m.relations[name]) for name, _ in m.vocab.predicates}
    funcs = {name: dict(m.funcs[name]) for name, _ in m.vocab.functions}
    return BetaModel(m, tuple(points), Model(m.vocab, n, relations, funcs))


def beta_extend(m: Model, mode: str = "fast") -> BetaModel:
    """Ultrafilter extension of ``m``; ``mode`` is ``"literal"`` or ``"fast"``."""
    problems = validate_model(m)
    if problems:
        raise ValueError(f"invalid model: {problems[0]}")
    if mode == "literal":
        return _literal(m)
    if mode == "fast":
        return _fast(m)
    raise ValueError(f"unknown mode {mode!r}")


def natural_embedding(m: Model, beta: BetaModel | None = None) -> MapWitness:
    """The map sending each point ``a`` to the principal ultrafilter at ``a``."""
    beta = beta or beta_extend(m)
    return MapWitness(m, beta.model, tuple(beta.index(FiniteUltrafilter(m.size, a)) for a in range(m.size)))


def preimage(h: Sequence[int], subset_mask: int) -> int:
    mask = 0
    for i, v in enumerate(h):
        if subset_mask >> v & 1:
            mask |= 1 << i
    return mask


def pushforward(h: MapWitness, d: FiniteUltrafilter) -> FiniteUltrafilter:
    """Image ultrafilter: ``A`` is a member iff ``h^-1(A)`` is a member of ``d``.

    The result is located by asking ``d`` about preimages of singletons,
    never by reading ``d.point``.
    """
    if d.size != h.source.size:
        raise ValueError("ultrafilter does not live on the source universe")
    hits = [q for q in range(h.target.size) if preimage(h.map, 1 << q) in d]
    if len(hits) != 1:
        raise BetaConstructionError(f"preimages of singletons hit {len(hits)} points")
    return FiniteUltrafilter(h.target.size, hits[0])


def lift(h: MapWitness, source_beta: BetaModel, target_beta: BetaModel) -> MapWitness:
    """The continuous extension of ``h`` as a map between the extensions."""
    image = tuple(target_beta.index(pushforward(h, d)) for d in source_beta.universe)
    return MapWitness(source_beta.model, target_beta.model, image)


@dataclass(frozen=True)
class LiftReport:
    source_classification: str
    lifted_classification: str
    passed: bool
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "source_classification": self.source_classification,
            "lifted_classification": self.lifted_classification,
            "pass": self.passed,
            "note": self.note,
        }


def lift_check(w: MapWitness, mode: str = "fast") -> LiftReport:
    """Check that the lifted map keeps every property ``w`` has."""
    source_class = classify_map(w)
    sb = beta_extend(w.source, mode)
    tb = beta_extend(w.target, mode)
    lifted_class = classify_map(lift(w, sb, tb))
    if source_class == NOT_HOMOMORPHISM:
        return LiftReport(source_class, lifted_class, True, "precondition unmet: source map is not a homomorphism")
    passed = properties_of(source_class) <= properties_of(lifted_class)
    return LiftReport(source_class, lifted_class, passed)


def is_ultrafilter_family(family: Iterable[int], n: int) -> bool:
    """Brute-force test that a set of bitmasks is an ultrafilter on ``{0..n-1}``."""
    fam = set(family)
    full = (1 << n) - 1
    if 0 in fam or full not in fam:
        return False
    for a in range(1 << n):
        if (a in fam) == ((full ^ a) in fam):
            return False
    for a in fam:
        for b in fam:
            if a & b not in fam:
                return False
    for a in fam:
        for b in range(1 << n):
            if a & b == a and b not in fam:
                return False
    return True

