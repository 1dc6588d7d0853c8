"""Seeded generators for small models, formulas and structure-preserving maps."""

from __future__ import annotations

import itertools
import random

from .formula import (
    EXISTS, FORALL, And, App, Eq, Exists, Forall, Formula, Implies, Not, Or, Pred, Term,
    UfQuant, Var,
)
from .model import MapWitness, Model, Vocabulary


def random_vocabulary(rng: random.Random, max_arity: int = 2, max_symbols: int = 3) -> Vocabulary:
    n_preds = rng.randint(0, max_symbols)
    n_funcs = rng.randint(0, max(0, max_symbols - n_preds))
    preds = tuple((f"P{i}", rng.randint(1, max_arity)) for i in range(n_preds))
    funcs = tuple((f"F{i}", rng.randint(1, max_arity)) for i in range(n_funcs))
    return Vocabulary(preds, funcs)


def random_model(rng: random.Random, vocab: Vocabulary, size: int, density: float | None = None) -> Model:
    relations = {}
    for name, arity in vocab.predicates:
        p = rng.random() if density is None else density
        relations[name] = {t for t in itertools.product(range(size), repeat=arity) if rng.random() < p}
    funcs = {}
    for name, arity in vocab.functions:
        funcs[name] = {t: rng.randrange(size) for t in itertools.product(range(size), repeat=arity)}
    return Model(vocab, size, relations, funcs)


def sample_models(seed: int, count: int, max_size: int, max_arity: int = 2) -> list[Model]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        vocab = random_vocabulary(rng, max_arity)
        out.append(random_model(rng, vocab, rng.randint(1, max_size)))
    return out


def _closure(m: Model, seeds: set[int]) -> set[int]:
    closed = set(seeds)
    changed = True
    while changed:
        changed = False
        for name, arity in m.vocab.functions:
            for args in itertools.product(sorted(closed), repeat=arity):
                v = m.funcs[name][args]
                if v not in closed:
                    closed.add(v)
                    changed = True
    return closed


def random_homomorphism(rng: random.Random, vocab: Vocabulary, target_size: int, source_size: int,
                        strong: bool | None = None) -> MapWitness:
    """A homomorphism into a random target.

    The map is onto a function-closed subset of the target; source
    relations are a random part (or, with ``strong``, all) of the pulled
    back target relations and source function values are chosen among
    preimages, which keeps every function commuting with the map.
    """
    target = random_model(rng, vocab, target_size)
    image = sorted(_closure(target, {rng.randrange(target_size)
                                     for _ in range(rng.randint(1, target_size))}))
    source_size = max(source_size, len(image))
    h = image + [rng.choice(image) for _ in range(source_size - len(image))]
    rng.shuffle(h)
    strong = rng.random() < 0.5 if strong is None else strong
    relations = {}
    for name, arity in vocab.predicates:
        pulled = {t for t in itertools.product(range(source_size), repeat=arity)
                  if tuple(h[c] for c in t) in target.relations[name]}
        relations[name] = pulled if strong else {t for t in pulled if rng.random() < 0.7}
    preimages = {v: [i for i in range(source_size) if h[i] == v] for v in image}
    funcs = {}
    for name, arity in vocab.functions:
        funcs[name] = {args: rng.choice(preimages[target.funcs[name][tuple(h[c] for c in args)]])
                       for args in itertools.product(range(source_size), repeat=arity)}
    source = Model(vocab, source_size, relations, funcs)
    return MapWitness(source, target, tuple(h))


def sample_homomorphisms(seed: int, count: int, max_size: int) -> list[MapWitness]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        vocab = random_vocabulary(rng)
        target_size = rng.randint(1, max_size)
        out.append(random_homomorphism(rng, vocab, target_size, rng.randint(1, max_size)))
    return out


def random_term(rng: random.Random, vocab: Vocabulary, variables: list[str], depth: int = 1) -> Term:
    if depth > 0 and vocab.functions and rng.random() < 0.4:
        name, arity = rng.choice(vocab.functions)
        return App(name, tuple(random_term(rng, vocab, variables, depth - 1) for _ in range(arity)))
    return Var(rng.choice(variables))


def random_formula(rng: random.Random, vocab: Vocabulary, variables: list[str], params: list[str],
                   depth: int, fresh: list[str] | None = None, size: int = 6) -> Formula:
    """Random formula over ``variables`` with quantifier depth at most ``depth``.

    Quantifiers bind names taken from ``fresh`` so no variable is bound
    twice; ``size`` bounds the number of connectives and quantifiers.
    """
    fresh = list(fresh) if fresh is not None else [f"v{i}" for i in range(depth)]
    roll = rng.random()
    if size > 0 and depth > 0 and fresh and roll < 0.4:
        var = fresh[0]
        body = random_formula(rng, vocab, variables + [var], params, depth - 1, fresh[1:], size - 1)
        kind = rng.randrange(3) if params else rng.randrange(2)
        if kind == 0:
            return Forall(var, body)
        if kind == 1:
            return Exists(var, body)
        return UfQuant(rng.choice([FORALL, EXISTS]), rng.choice(params), var, body)
    if size > 1 and roll < 0.7:
        op = rng.choice([And, Or, Implies])
        left = rng.randint(0, size - 1)
        return op(random_formula(rng, vocab, variables, params, depth, fresh, left),
                  random_formula(rng, vocab, variables, params, depth, fresh, size - 1 - left))
    if size > 0 and roll < 0.8:
        return Not(random_formula(rng, vocab, variables, params, depth, fresh, size - 1))
    if vocab.predicates and rng.random() < 0.6:
        name, arity = rng.choice(vocab.predicates)
        return Pred(name, tuple(random_term(rng, vocab, variables) for _ in range(arity)))
    return Eq(random_term(rng, vocab, variables), random_term(rng, vocab, variables))
