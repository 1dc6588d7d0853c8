"""Vocabularies, finite models, map classification and the model text format."""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

SCHEMA_VERSION = 1


class VocabularyError(ValueError):
    pass


class VocabularyMismatch(ValueError):
    pass


class ModelSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ModelSemanticError(ValueError):
    pass


_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Vocabulary:
    """Predicate and function symbols with their arities.

    Equality is built in and is never declared.
    """

    predicates: tuple[tuple[str, int], ...] = ()
    functions: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        preds = tuple((str(n), int(a)) for n, a in self.predicates)
        funcs = tuple((str(n), int(a)) for n, a in self.functions)
        object.__setattr__(self, "predicates", preds)
        object.__setattr__(self, "functions", funcs)
        seen = set()
        for name, arity in preds + funcs:
            if not _NAME.match(name):
                raise VocabularyError(f"bad symbol name {name!r}")
            if name in seen:
                raise VocabularyError(f"symbol {name!r} declared twice")
            if arity < 1:
                raise VocabularyError(f"symbol {name!r} has arity {arity}, must be >= 1")
            seen.add(name)

    def predicate_arity(self, name: str) -> int | None:
        return dict(self.predicates).get(name)

    def function_arity(self, name: str) -> int | None:
        return dict(self.functions).get(name)

    def extend(self, predicates=(), functions=()) -> Vocabulary:
        return Vocabulary(self.predicates + tuple(predicates), self.functions + tuple(functions))


def _freeze_relations(relations):
    return MappingProxyType({name: frozenset(tuple(t) for t in tuples)
                             for name, tuples in relations.items()})


def _freeze_funcs(funcs):
    return MappingProxyType({name: MappingProxyType({tuple(k): v for k, v in table.items()})
                             for name, table in funcs.items()})


@dataclass(frozen=True, eq=False)
class Model:
    """A finite structure whose universe is ``0..size-1``.

    ``relations`` maps each predicate name to a set of index tuples and
    ``funcs`` maps each function name to a table from argument tuples to
    values. The constructor does not validate; see :func:`validate_model`.
    Predicates missing from ``relations`` are read as empty.
    """

    vocab: Vocabulary
    size: int
    relations: Mapping[str, frozenset] = field(default_factory=dict)
    funcs: Mapping[str, Mapping[tuple, int]] = field(default_factory=dict)

    def __post_init__(self):
        rels = dict(self.relations)
        for name, _ in self.vocab.predicates:
            rels.setdefault(name, ())
        object.__setattr__(self, "relations", _freeze_relations(rels))
        object.__setattr__(self, "funcs", _freeze_funcs(dict(self.funcs)))

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return (self.vocab == other.vocab and self.size == other.size
                and dict(self.relations) == dict(other.relations)
                and {k: dict(v) for k, v in self.funcs.items()}
                == {k: dict(v) for k, v in other.funcs.items()})

    def __hash__(self):
        return hash((self.vocab, self.size))

    def holds(self, pred: str, args: Sequence[int]) -> bool:
        return tuple(args) in self.relations[pred]

    def apply(self, func: str, args: Sequence[int]) -> int:
        return self.funcs[func][tuple(args)]

    def universe(self) -> range:
        return range(self.size)


@dataclass(frozen=True)
class Violation:
    kind: str
    symbol: str | None
    tuple: tuple | None
    message: str

    def __str__(self):
        return self.message


def validate_model(m: Model) -> list[Violation]:
    """Return every broken model invariant; empty when the model is valid."""
    out: list[Violation] = []
    n = m.size
    if not isinstance(n, int) or n < 1:
        out.append(Violation("size", None, None, f"universe size {n!r} must be a positive integer"))
        return out
    preds = dict(m.vocab.predicates)
    funcs = dict(m.vocab.functions)

    for name in sorted(m.relations):
        if name not in preds:
            out.append(Violation("unknown-symbol", name, None, f"relation {name!r} is not a declared predicate"))
            continue
        arity = preds[name]
        for t in sorted(m.relations[name]):
            if len(t) != arity:
                out.append(Violation("arity", name, t, f"{name}{t}: expected {arity} components"))
            elif not all(isinstance(c, int) and 0 <= c < n for c in t):
                out.append(Violation("range", name, t, f"{name}{t}: component out of range 0..{n - 1}"))

    for name in sorted(m.funcs):
        if name not in funcs:
            out.append(Violation("unknown-symbol", name, None, f"function table {name!r} is not a declared function"))
    for name, arity in m.vocab.functions:
        table = m.funcs.get(name, {})
        for args in sorted(table):
            val = table[args]
            if len(args) != arity:
                out.append(Violation("arity", name, args, f"{name}{args}: expected {arity} arguments"))
            elif not all(isinstance(c, int) and 0 <= c < n for c in args):
                out.append(Violation("range", name, args, f"{name}{args}: argument out of range 0..{n - 1}"))
            elif not (isinstance(val, int) and 0 <= val < n):
                out.append(Violation("range", name, args, f"{name}{args} -> {val}: value out of range 0..{n - 1}"))
        for args in itertools.product(range(n), repeat=arity):
            if args not in table:
                out.append(Violation("totality", name, args, f"{name}{args}: no value (function not total)"))
    return out


@dataclass(frozen=True)
class MapWitness:
    source: Model
    target: Model
    map: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "map", tuple(self.map))
        if len(self.map) != self.source.size:
            raise ValueError(f"map has length {len(self.map)}, source has {self.source.size} points")
        for i, v in enumerate(self.map):
            if not 0 <= v < self.target.size:
                raise ValueError(f"map sends {i} to {v}, outside target universe")

    def __call__(self, a: int) -> int:
        return self.map[a]


NOT_HOMOMORPHISM = "not-homomorphism"
HOMOMORPHISM = "homomorphism"
EPIMORPHISM = "epimorphism"
EMBEDDING = "isomorphic-embedding"
ISOMORPHISM = "isomorphism"

CLASSIFICATIONS = (NOT_HOMOMORPHISM, HOMOMORPHISM, EPIMORPHISM, EMBEDDING, ISOMORPHISM)


def properties_of(label: str) -> frozenset[str]:
    """Expand a classification label into the notions it implies."""
    return {
        NOT_HOMOMORPHISM: frozenset(),
        HOMOMORPHISM: frozenset({HOMOMORPHISM}),
        EPIMORPHISM: frozenset({HOMOMORPHISM, EPIMORPHISM}),
        EMBEDDING: frozenset({HOMOMORPHISM, EMBEDDING}),
        ISOMORPHISM: frozenset({HOMOMORPHISM, EPIMORPHISM, EMBEDDING}),
    }[label]


def classify_map(w: MapWitness) -> str:
    """Strongest of the labels in ``CLASSIFICATIONS`` that ``w`` satisfies."""
    src, dst, h = w.source, w.target, w.map
    if src.vocab != dst.vocab:
        raise VocabularyMismatch("source and target have different vocabularies")

    for name, _ in src.vocab.predicates:
        target_rel = dst.relations[name]
        for t in src.relations[name]:
            if tuple(h[c] for c in t) not in target_rel:
                return NOT_HOMOMORPHISM
    for name, _ in src.vocab.functions:
        stab, dtab = src.funcs[name], dst.funcs[name]
        for args, val in stab.items():
            if dtab[tuple(h[c] for c in args)] != h[val]:
                return NOT_HOMOMORPHISM

    surjective = len(set(h)) == dst.size
    embedding = len(set(h)) == len(h)
    if embedding:
        for name, arity in src.vocab.predicates:
            src_rel, dst_rel = src.relations[name], dst.relations[name]
            for t in itertools.product(range(src.size), repeat=arity):
                if t not in src_rel and tuple(h[c] for c in t) in dst_rel:
                    embedding = False
                    break
            if not embedding:
                break

    if surjective and embedding:
        return ISOMORPHISM
    if embedding:
        return EMBEDDING
    if surjective:
        return EPIMORPHISM
    return HOMOMORPHISM


def identity_map(m: Model) -> MapWitness:
    return MapWitness(m, m, tuple(range(m.size)))


def compose(g: MapWitness, h: MapWitness) -> MapWitness:
    """``g`` after ``h``."""
    if h.target != g.source:
        raise ValueError("maps are not composable")
    return MapWitness(h.source, g.target, tuple(g.map[h.map[i]] for i in range(h.source.size)))


# --- text format -----------------------------------------------------------

def serialize_model(m: Model, point_names: Sequence[str] | None = None) -> str:
    """Render ``m`` in the line-oriented model format.

    ``point_names`` only adds comment lines naming universe elements.
    """
    lines = ["vocab"]
    for name, arity in m.vocab.predicates:
        lines.append(f"  pred {name} {arity}")
    for name, arity in m.vocab.functions:
        lines.append(f"  func {name} {arity}")
    lines.append("end")
    lines.append(f"universe {m.size}")
    if point_names is not None:
        for i, label in enumerate(point_names):
            lines.append(f"# {label} = {i}")
    for name, _ in m.vocab.predicates:
        tuples = sorted(m.relations[name])
        body = " ".join(",".join(str(c) for c in t) for t in tuples)
        lines.append(f"rel {name}:" + (f" {body}" if body else ""))
    for name, _ in m.vocab.functions:
        table = m.funcs.get(name, {})
        # one line per first argument keeps large tables readable
        for _, rows in itertools.groupby(sorted(table), key=lambda args: args[0]):
            body = " ".join(f"({','.join(str(c) for c in args)})->{table[args]}" for args in rows)
            lines.append(f"fun {name}: {body}")
    return "\n".join(lines) + "\n"


_INT_GROUP = re.compile(r"\d+(,\d+)*\Z")
_FUN_ROW = re.compile(r"\s*\(\s*(\d+(?:\s*,\s*\d+)*)\s*\)\s*->\s*(\d+)")


def parse_model(text: str, strict: bool = True) -> Model:
    """Parse the text format (or its JSON mirror when ``text`` starts with ``{``).

    With ``strict`` any violation reported by :func:`validate_model` is
    raised as :class:`ModelSemanticError`; otherwise the raw model is
    returned for diagnosis.
    """
    if text.lstrip().startswith("{"):
        m = model_from_dict(json.loads(text))
    else:
        m = _parse_text(text)
    if strict:
        problems = validate_model(m)
        if problems:
            raise ModelSemanticError("; ".join(str(p) for p in problems[:5])
                                     + (f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""))
    return m


def _parse_text(text: str) -> Model:
    preds: list[tuple[str, int]] = []
    funcs: list[tuple[str, int]] = []
    size = None
    relations: dict[str, set] = {}
    tables: dict[str, dict] = {}
    state = "start"

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        col = raw.index(line[0]) + 1
        if state == "start":
            if line != "vocab":
                raise ModelSyntaxError("expected 'vocab'", lineno, col)
            state = "vocab"
            continue
        if state == "vocab":
            if line == "end":
                state = "body"
                vocab = _make_vocab(preds, funcs, lineno)
                continue
            parts = line.split()
            if len(parts) != 3 or parts[0] not in ("pred", "func") or not parts[2].isdigit():
                raise ModelSyntaxError("expected 'pred NAME ARITY', 'func NAME ARITY' or 'end'", lineno, col)
            (preds if parts[0] == "pred" else funcs).append((parts[1], int(parts[2])))
            continue

        keyword, _, rest = line.partition(" ")
        if keyword == "universe":
            if size is not None:
                raise ModelSyntaxError("universe declared twice", lineno, col)
            if not rest.strip().isdigit():
                raise ModelSyntaxError("expected 'universe N'", lineno, col)
            size = int(rest)
        elif keyword in ("rel", "fun"):
            name, colon, body = rest.partition(":")
            name = name.strip()
            if not colon or not _NAME.match(name):
                raise ModelSyntaxError(f"expected '{keyword} NAME: ...'", lineno, col)
            body_col = raw.find(body.strip()) + 1 if body.strip() else col
            if keyword == "rel":
                arity = vocab.predicate_arity(name)
                if arity is None:
                    raise ModelSemanticError(f"line {lineno}: unknown predicate {name!r}")
                bucket = relations.setdefault(name, set())
                for group in body.split():
                    if not _INT_GROUP.match(group):
                        raise ModelSyntaxError(f"bad tuple {group!r}", lineno, raw.find(group) + 1)
                    t = tuple(int(c) for c in group.split(","))
                    if len(t) != arity:
                        raise ModelSemanticError(
                            f"line {lineno}: arity mismatch for {name}: tuple {group} has {len(t)} components, expected {arity}")
                    bucket.add(t)
            else:
                arity = vocab.function_arity(name)
                if arity is None:
                    raise ModelSemanticError(f"line {lineno}: unknown function {name!r}")
                table = tables.setdefault(name, {})
                pos = 0
                if not body.strip():
                    raise ModelSyntaxError("expected '(a1,...,ak)->v'", lineno, body_col)
                offset = len(raw) - len(raw.lstrip()) + len(keyword) + 1 + len(rest) - len(body)
                while body[pos:].strip():
                    match = _FUN_ROW.match(body, pos)
                    if not match or (match.end() < len(body) and not body[match.end()].isspace()):
                        bad_col = offset + pos + (len(body[pos:]) - len(body[pos:].lstrip())) + 1
                        raise ModelSyntaxError("expected '(a1,...,ak)->v'", lineno, bad_col)
                    pos = match.end()
                    args = tuple(int(c) for c in match.group(1).replace(" ", "").split(","))
                    if len(args) != arity:
                        raise ModelSemanticError(
                            f"line {lineno}: arity mismatch for {name}: {len(args)} arguments, expected {arity}")
                    if args in table:
                        raise ModelSemanticError(f"line {lineno}: {name}{args} defined twice")
                    table[args] = int(match.group(2))
        else:
            raise ModelSyntaxError(f"unexpected {keyword!r}", lineno, col)

    if state != "body":
        raise ModelSyntaxError("missing vocab block", max(1, len(text.splitlines())))
    if size is None:
        raise ModelSyntaxError("missing 'universe N'", max(1, len(text.splitlines())))
    return Model(vocab, size, relations, tables)


def _make_vocab(preds, funcs, lineno) -> Vocabulary:
    try:
        return Vocabulary(tuple(preds), tuple(funcs))
    except VocabularyError as e:
        raise ModelSemanticError(f"line {lineno}: {e}") from None


def model_to_dict(m: Model) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "vocab": {
            "predicates": [[n, a] for n, a in m.vocab.predicates],
            "functions": [[n, a] for n, a in m.vocab.functions],
        },
        "universe": m.size,
        "relations": {name: [list(t) for t in sorted(m.relations[name])] for name, _ in m.vocab.predicates},
        "functions": {name: [list(args) + [m.funcs[name][args]] for args in sorted(m.funcs.get(name, {}))]
                      for name, _ in m.vocab.functions},
    }


def model_from_dict(data: dict) -> Model:
    try:
        vocab = Vocabulary(tuple((n, a) for n, a in data["vocab"].get("predicates", [])),
                           tuple((n, a) for n, a in data["vocab"].get("functions", [])))
        relations = {name: {tuple(t) for t in tuples} for name, tuples in data.get("relations", {}).items()}
        funcs = {name: {tuple(row[:-1]): row[-1] for row in rows} for name, rows in data.get("functions", {}).items()}
        return Model(vocab, data["universe"], relations, funcs)
    except (KeyError, TypeError, VocabularyError) as e:
        raise ModelSemanticError(f"malformed structured model: {e}") from None


def make_model(vocab: Vocabulary, size: int,
               relations: Mapping[str, Iterable] | None = None,
               funcs: Mapping[str, object] | None = None) -> Model:
    """Convenience constructor; function entries may be callables over argument tuples."""
    tables = {}
    for name, spec in (funcs or {}).items():
        if callable(spec):
            arity = vocab.function_arity(name)
            tables[name] = {args: spec(*args) for args in itertools.product(range(size), repeat=arity)}
        else:
            tables[name] = dict(spec)
    return Model(vocab, size, dict(relations or {}), tables)
