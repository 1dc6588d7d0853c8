"""First-order formulas with ultrafilter quantifiers.

Concrete syntax (see ``docs/formula_grammar.md``)::

    P1(x) & forall y (P1(y) -> F(x,y) = F(y,x))
    Uforall[d] x (P1(x))

Ultrafilter parameters such as ``d`` are names bound from outside through
an :class:`Assignment`. ``Uforall[d] x phi`` holds when the set of points
satisfying ``phi`` belongs to the ultrafilter bound to ``d``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Union

from .model import Model, Vocabulary


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, pos: int, text: str = ""):
        super().__init__(f"column {pos + 1}: {message}")
        self.pos = pos
        self.text = text


class FormulaError(ValueError):
    """Unknown symbol, arity mismatch or rebound variable."""


class EvaluationError(ValueError):
    pass


# --- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class App:
    func: str
    args: tuple[Term, ...]


Term = Union[Var, App]


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Pred:
    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Not:
    body: Formula


@dataclass(frozen=True)
class And:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Forall:
    var: str
    body: Formula


@dataclass(frozen=True)
class Exists:
    var: str
    body: Formula


FORALL = "forall"
EXISTS = "exists"


@dataclass(frozen=True)
class UfQuant:
    mode: str  # FORALL or EXISTS
    param: str
    var: str
    body: Formula

    def __post_init__(self):
        if self.mode not in (FORALL, EXISTS):
            raise ValueError(f"bad ultrafilter quantifier mode {self.mode!r}")


Formula = Union[Eq, Pred, Not, And, Or, Implies, Forall, Exists, UfQuant]


def conj(*parts: Formula) -> Formula:
    """Left-nested conjunction, matching how ``a & b & c`` parses."""
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def term_vars(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset({t.name})
    out: frozenset[str] = frozenset()
    for a in t.args:
        out |= term_vars(a)
    return out


def free_variables(f: Formula) -> frozenset[str]:
    if isinstance(f, Eq):
        return term_vars(f.left) | term_vars(f.right)
    if isinstance(f, Pred):
        out: frozenset[str] = frozenset()
        for a in f.args:
            out |= term_vars(a)
        return out
    if isinstance(f, Not):
        return free_variables(f.body)
    if isinstance(f, (And, Or, Implies)):
        return free_variables(f.left) | free_variables(f.right)
    if isinstance(f, (Forall, Exists, UfQuant)):
        return free_variables(f.body) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def free_parameters(f: Formula) -> frozenset[str]:
    if isinstance(f, (Eq, Pred)):
        return frozenset()
    if isinstance(f, Not):
        return free_parameters(f.body)
    if isinstance(f, (And, Or, Implies)):
        return free_parameters(f.left) | free_parameters(f.right)
    if isinstance(f, (Forall, Exists)):
        return free_parameters(f.body)
    if isinstance(f, UfQuant):
        return free_parameters(f.body) | {f.param}
    raise TypeError(f"not a formula: {f!r}")


def quantifier_depth(f: Formula) -> int:
    if isinstance(f, (Eq, Pred)):
        return 0
    if isinstance(f, Not):
        return quantifier_depth(f.body)
    if isinstance(f, (And, Or, Implies)):
        return max(quantifier_depth(f.left), quantifier_depth(f.right))
    return 1 + quantifier_depth(f.body)


def substitute(f: Formula, var: str, point: int, fresh: str = "_pt") -> tuple[Formula, str]:
    """Replace free ``var`` by a new variable name to be bound to ``point``.

    Returns the rewritten formula and the new variable name; callers put the
    point into the assignment under that name. Terms carry no constants, so
    this renaming is how ``phi[x:=a]`` is expressed.
    """
    name = fresh
    while name in _all_names(f):
        name += "_"
    return _rename(f, var, name), name


def _all_names(f) -> set[str]:
    out: set[str] = set()
    if isinstance(f, (Eq,)):
        return set(term_vars(f.left) | term_vars(f.right))
    if isinstance(f, Pred):
        for a in f.args:
            out |= term_vars(a)
        return out
    if isinstance(f, Not):
        return _all_names(f.body)
    if isinstance(f, (And, Or, Implies)):
        return _all_names(f.left) | _all_names(f.right)
    return _all_names(f.body) | {f.var}


def _rename_term(t: Term, old: str, new: str) -> Term:
    if isinstance(t, Var):
        return Var(new) if t.name == old else t
    return App(t.func, tuple(_rename_term(a, old, new) for a in t.args))


def _rename(f: Formula, old: str, new: str) -> Formula:
    if isinstance(f, Eq):
        return Eq(_rename_term(f.left, old, new), _rename_term(f.right, old, new))
    if isinstance(f, Pred):
        return Pred(f.name, tuple(_rename_term(a, old, new) for a in f.args))
    if isinstance(f, Not):
        return Not(_rename(f.body, old, new))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(_rename(f.left, old, new), _rename(f.right, old, new))
    if f.var == old:
        return f
    if isinstance(f, UfQuant):
        return UfQuant(f.mode, f.param, f.var, _rename(f.body, old, new))
    return type(f)(f.var, _rename(f.body, old, new))


def check_formula(f: Formula, vocab: Vocabulary) -> None:
    """Raise :class:`FormulaError` on unknown symbols, bad arities or rebinding."""

    def term(t: Term):
        if isinstance(t, Var):
            return
        arity = vocab.function_arity(t.func)
        if arity is None:
            raise FormulaError(f"unknown function symbol {t.func!r}")
        if arity != len(t.args):
            raise FormulaError(f"{t.func} takes {arity} arguments, got {len(t.args)}")
        for a in t.args:
            term(a)

    def walk(g: Formula, bound: frozenset[str]):
        if isinstance(g, Eq):
            term(g.left)
            term(g.right)
        elif isinstance(g, Pred):
            arity = vocab.predicate_arity(g.name)
            if arity is None:
                raise FormulaError(f"unknown predicate symbol {g.name!r}")
            if arity != len(g.args):
                raise FormulaError(f"{g.name} takes {arity} arguments, got {len(g.args)}")
            for a in g.args:
                term(a)
        elif isinstance(g, Not):
            walk(g.body, bound)
        elif isinstance(g, (And, Or, Implies)):
            walk(g.left, bound)
            walk(g.right, bound)
        else:
            if g.var in bound:
                raise FormulaError(f"variable {g.var!r} is bound twice on one path")
            walk(g.body, bound | {g.var})

    walk(f, frozenset())


# --- printing ----------------------------------------------------------------

def term_to_text(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    return f"{t.func}({','.join(term_to_text(a) for a in t.args)})"


def to_text(f: Formula) -> str:
    """Render ``f`` in concrete syntax; ``parse_formula(to_text(f))`` returns ``f``."""
    if isinstance(f, Eq):
        return f"{term_to_text(f.left)} = {term_to_text(f.right)}"
    if isinstance(f, Pred):
        return f"{f.name}({','.join(term_to_text(a) for a in f.args)})"
    if isinstance(f, Not):
        return f"~{_wrap(f.body)}"
    if isinstance(f, And):
        return f"{_wrap(f.left, And)} & {_wrap(f.right)}"
    if isinstance(f, Or):
        return f"{_wrap(f.left, Or)} | {_wrap(f.right)}"
    if isinstance(f, Implies):
        return f"{_wrap(f.left)} -> {_wrap(f.right, Implies)}"
    if isinstance(f, UfQuant):
        kw = "Uforall" if f.mode == FORALL else "Uexists"
        return f"{kw}[{f.param}] {f.var} ({to_text(f.body)})"
    kw = "forall" if isinstance(f, Forall) else "exists"
    return f"{kw} {f.var} ({to_text(f.body)})"


def _wrap(f: Formula, same=None) -> str:
    # left operands of & and | keep their own kind unparenthesised (left associativity);
    # the right operand of -> likewise (right associativity)
    if isinstance(f, (Eq, Pred, Not)) or (same is not None and isinstance(f, same)):
        return to_text(f)
    return f"({to_text(f)})"


# --- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(->)|(!=)|([A-Za-z_][A-Za-z0-9_]*)|(.))")
_KEYWORDS = {"forall", "exists", "Uforall", "Uexists"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        start = m.start(m.lastindex)
        arrow, neq, ident, other = m.groups()
        if arrow:
            out.append(("op", "->", start))
        elif neq:
            out.append(("op", "!=", start))
        elif ident:
            out.append(("kw" if ident in _KEYWORDS else "id", ident, start))
        elif other.strip():
            if other not in "()[],&|~=":
                raise FormulaSyntaxError(f"unexpected character {other!r}", start, text)
            out.append(("op", other, start))
        pos = m.end()
    out.append(("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, vocab: Vocabulary):
        self.text = text
        self.vocab = vocab
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        tok = self.next()
        if tok[1] != value or tok[0] == "eof":
            self.fail(f"expected {value!r}", tok)
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        found = "end of input" if tok[0] == "eof" else repr(tok[1])
        raise FormulaSyntaxError(f"{msg}, found {found}", tok[2], self.text)

    def formula(self) -> Formula:
        left = self.disjunction()
        if self.peek()[1] == "->" and self.peek()[0] == "op":
            self.next()
            return Implies(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.peek()[:2] == ("op", "|"):
            self.next()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.unary()
        while self.peek()[:2] == ("op", "&"):
            self.next()
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        kind, value, _ = self.peek()
        if (kind, value) == ("op", "~"):
            self.next()
            return Not(self.unary())
        if kind == "kw":
            self.next()
            param = None
            if value in ("Uforall", "Uexists"):
                self.expect("[")
                tok = self.next()
                if tok[0] != "id":
                    self.fail("expected ultrafilter parameter name", tok)
                param = tok[1]
                self.expect("]")
            tok = self.next()
            if tok[0] != "id":
                self.fail("expected variable name", tok)
            body = self.formula()
            if value == "forall":
                return Forall(tok[1], body)
            if value == "exists":
                return Exists(tok[1], body)
            return UfQuant(FORALL if value == "Uforall" else EXISTS, param, tok[1], body)
        if (kind, value) == ("op", "("):
            self.next()
            inner = self.formula()
            self.expect(")")
            return inner
        if kind == "id" and self.vocab.predicate_arity(value) is not None \
                and self.toks[self.i + 1][1] == "(":
            self.next()
            args = self.arguments()
            return Pred(value, args)
        if kind in ("id",):
            left = self.term()
            tok = self.next()
            if tok[:2] == ("op", "="):
                return Eq(left, self.term())
            if tok[:2] == ("op", "!="):
                return Not(Eq(left, self.term()))
            self.fail("expected '=' after term", tok)
        self.fail("expected a formula")

    def arguments(self) -> tuple[Term, ...]:
        self.expect("(")
        args = [self.term()]
        while self.peek()[:2] == ("op", ","):
            self.next()
            args.append(self.term())
        self.expect(")")
        return tuple(args)

    def term(self) -> Term:
        tok = self.next()
        if tok[0] != "id":
            self.fail("expected a term", tok)
        if self.peek()[:2] == ("op", "("):
            if self.vocab.function_arity(tok[1]) is None:
                if self.vocab.predicate_arity(tok[1]) is not None:
                    raise FormulaError(f"predicate {tok[1]!r} used as a term")
                raise FormulaError(f"unknown symbol {tok[1]!r}")
            return App(tok[1], self.arguments())
        return Var(tok[1])


def parse_formula(text: str, vocab: Vocabulary) -> Formula:
    """Parse ``text`` against ``vocab``.

    Precedence is ``~`` over ``&`` over ``|`` over ``->`` (right
    associative); quantifier bodies extend as far right as possible.
    Use :func:`free_variables` and :func:`free_parameters` on the result
    to see what an assignment must cover.
    """
    p = _Parser(text, vocab)
    f = p.formula()
    if p.peek()[0] != "eof":
        p.fail("unexpected trailing input")
    check_formula(f, vocab)
    return f


# --- evaluation --------------------------------------------------------------

class UltrafilterLike(Protocol):
    size: int

    def __contains__(self, subset) -> bool: ...


@dataclass(frozen=True)
class Assignment:
    vars: Mapping[str, int] = field(default_factory=dict)
    ufs: Mapping[str, UltrafilterLike] = field(default_factory=dict)

    def bind(self, **points: int) -> Assignment:
        return Assignment({**self.vars, **points}, self.ufs)


class _Evaluator:
    def __init__(self, m: Model, ufs: Mapping[str, UltrafilterLike]):
        self.m = m
        self.ufs = ufs
        self.fv: dict[int, tuple[str, ...]] = {}
        self.memo: dict[tuple, int] = {}

    def term(self, t: Term, env: dict[str, int]) -> int:
        if isinstance(t, Var):
            try:
                return env[t.name]
            except KeyError:
                raise EvaluationError(f"variable {t.name!r} is not assigned") from None
        return self.m.funcs[t.func][tuple(self.term(a, env) for a in t.args)]

    def definable_set(self, f: UfQuant, env: dict[str, int]) -> int:
        """Bitmask of points ``i`` with ``f.body`` true at ``f.var := i``; memoised per node."""
        key_vars = self.fv.get(id(f))
        if key_vars is None:
            key_vars = tuple(sorted(free_variables(f)))
            self.fv[id(f)] = key_vars
        key = (id(f),) + tuple(env.get(v) for v in key_vars)
        mask = self.memo.get(key)
        if mask is None:
            mask = 0
            inner = dict(env)
            for i in range(self.m.size):
                inner[f.var] = i
                if self.eval(f.body, inner):
                    mask |= 1 << i
            self.memo[key] = mask
        return mask

    def eval(self, f: Formula, env: dict[str, int]) -> bool:
        if isinstance(f, Pred):
            return tuple(self.term(a, env) for a in f.args) in self.m.relations[f.name]
        if isinstance(f, Eq):
            return self.term(f.left, env) == self.term(f.right, env)
        if isinstance(f, Not):
            return not self.eval(f.body, env)
        if isinstance(f, And):
            return self.eval(f.left, env) and self.eval(f.right, env)
        if isinstance(f, Or):
            return self.eval(f.left, env) or self.eval(f.right, env)
        if isinstance(f, Implies):
            return (not self.eval(f.left, env)) or self.eval(f.right, env)
        if isinstance(f, (Forall, Exists)):
            inner = dict(env)
            want = isinstance(f, Exists)
            for i in range(self.m.size):
                inner[f.var] = i
                if self.eval(f.body, inner) == want:
                    return want
            return not want
        if isinstance(f, UfQuant):
            uf = self.ufs.get(f.param)
            if uf is None:
                raise EvaluationError(f"ultrafilter parameter {f.param!r} is not assigned")
            if uf.size != self.m.size:
                raise EvaluationError(
                    f"ultrafilter {f.param!r} lives on a universe of size {uf.size}, model has {self.m.size}")
            mask = self.definable_set(f, env)
            if f.mode == FORALL:
                return mask in uf
            # Uexists is read as ~Uforall~
            full = (1 << self.m.size) - 1
            return not ((full & ~mask) in uf)
        raise TypeError(f"not a formula: {f!r}")


def evaluate(m: Model, f: Formula, a: Assignment | None = None) -> bool:
    """Truth value of ``f`` in ``m`` under ``a``."""
    a = a or Assignment()
    missing = free_variables(f) - set(a.vars)
    if missing:
        raise EvaluationError(f"unassigned free variables: {', '.join(sorted(missing))}")
    missing = free_parameters(f) - set(a.ufs)
    if missing:
        raise EvaluationError(f"unassigned ultrafilter parameters: {', '.join(sorted(missing))}")
    for name, v in a.vars.items():
        if not 0 <= v < m.size:
            raise EvaluationError(f"variable {name!r} assigned {v}, outside the universe")
    return _Evaluator(m, a.ufs).eval(f, dict(a.vars))


def definable_set(m: Model, f: Formula, var: str, a: Assignment | None = None) -> frozenset[int]:
    """``{i : f holds with var := i}``."""
    a = a or Assignment()
    ev = _Evaluator(m, a.ufs)
    env = dict(a.vars)
    out = set()
    for i in range(m.size):
        env[var] = i
        if ev.eval(f, env):
            out.add(i)
    return frozenset(out)
