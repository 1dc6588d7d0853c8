"""Ultrafilter classes on the naturals, decided over eventually periodic sets.

A non-principal ultrafilter cannot be written down, so this module works
with *classes* of them: ``FrechetOn(A)`` stands for every non-principal
ultrafilter containing ``A``. A set gets measure ``TRUE`` (or ``FALSE``)
only when every member of the class agrees; otherwise ``UNKNOWN``.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Union

import numpy as np


# --- eventually periodic sets -------------------------------------------------

def _divisors(p: int) -> list[int]:
    return [d for d in range(1, p + 1) if p % d == 0]


@dataclass(frozen=True)
class EPSet:
    """``{x < threshold : x in prefix} | {x >= threshold : x % period in residues}``.

    Instances are normalised on construction (minimal period first, then
    minimal threshold), so ``==`` is set equality.
    """

    threshold: int
    prefix: frozenset[int]
    period: int
    residues: frozenset[int]

    def __post_init__(self):
        n, p = int(self.threshold), int(self.period)
        prefix, residues = frozenset(self.prefix), frozenset(self.residues)
        if n < 0 or p < 1:
            raise ValueError("threshold must be >= 0 and period >= 1")
        if any(not 0 <= x < n for x in prefix):
            raise ValueError(f"prefix elements must lie in [0, {n})")
        if any(not 0 <= r < p for r in residues):
            raise ValueError(f"residues must lie in [0, {p})")

        for d in _divisors(p):
            if all((r in residues) == ((r + d) % p in residues) for r in range(p)):
                residues = frozenset(r for r in range(d) if r in residues)
                p = d
                break
        prefix = set(prefix)
        while n > 0 and ((n - 1) in prefix) == ((n - 1) % p in residues):
            n -= 1
            prefix.discard(n)
        object.__setattr__(self, "threshold", n)
        object.__setattr__(self, "prefix", frozenset(prefix))
        object.__setattr__(self, "period", p)
        object.__setattr__(self, "residues", residues)

    def __contains__(self, x: int) -> bool:
        if x < 0:
            return False
        if x < self.threshold:
            return x in self.prefix
        return x % self.period in self.residues

    # constructors

    @classmethod
    def empty(cls) -> EPSet:
        return cls(0, frozenset(), 1, frozenset())

    @classmethod
    def naturals(cls) -> EPSet:
        return cls(0, frozenset(), 1, frozenset({0}))

    @classmethod
    def finite(cls, elements: Iterable[int]) -> EPSet:
        elements = frozenset(elements)
        return cls(max(elements, default=-1) + 1, elements, 1, frozenset())

    @classmethod
    def residue_class(cls, period: int, *residues: int) -> EPSet:
        return cls(0, frozenset(), period, frozenset(r % period for r in residues))

    @classmethod
    def from_predicate(cls, threshold: int, period: int, pred: Callable[[int], bool]) -> EPSet:
        """Set agreeing with ``pred`` on ``[0, threshold + period)``, then periodic."""
        prefix = {x for x in range(threshold) if pred(x)}
        residues = {x % period for x in range(threshold, threshold + period) if pred(x)}
        return cls(threshold, frozenset(prefix), period, frozenset(residues))

    # queries

    def is_finite(self) -> bool:
        return not self.residues

    def is_infinite(self) -> bool:
        return bool(self.residues)

    def is_empty(self) -> bool:
        return not self.residues and not self.prefix

    def issubset(self, other: EPSet) -> bool:
        return self.minus(other).is_empty()

    def members(self, limit: int) -> list[int]:
        """Elements below ``limit``."""
        return [x for x in range(limit) if x in self]

    def mask(self, limit: int) -> np.ndarray:
        """Boolean membership vector on ``[0, limit)``."""
        xs = np.arange(limit)
        out = np.isin(xs % self.period, sorted(self.residues))
        head = min(self.threshold, limit)
        out[:head] = False
        if self.prefix:
            idx = np.array(sorted(x for x in self.prefix if x < limit), dtype=np.int64)
            out[idx] = True
        return out

    # algebra

    def _combine(self, other: EPSet | None, fn: Callable[[bool, bool], bool]) -> EPSet:
        other = other or self
        n = max(self.threshold, other.threshold)
        p = self.period * other.period // math.gcd(self.period, other.period)
        prefix = frozenset(x for x in range(n) if fn(x in self, x in other))
        # representative of residue r at or above n
        residues = frozenset(r for r in range(p) if fn((rep := n + (r - n) % p) in self, rep in other))
        return EPSet(n, prefix, p, residues)

    def union(self, other: EPSet) -> EPSet:
        return self._combine(other, lambda a, b: a or b)

    def intersect(self, other: EPSet) -> EPSet:
        return self._combine(other, lambda a, b: a and b)

    def minus(self, other: EPSet) -> EPSet:
        return self._combine(other, lambda a, b: a and not b)

    def complement(self) -> EPSet:
        return self._combine(None, lambda a, _: not a)

    __or__ = union
    __and__ = intersect
    __sub__ = minus

    def __invert__(self) -> EPSet:
        return self.complement()

    def above(self, n: int) -> EPSet:
        """Elements strictly greater than ``n``."""
        return self.intersect(EPSet(max(n + 1, 0), frozenset(), 1, frozenset({0})))

    def below(self, n: int) -> EPSet:
        """Elements strictly less than ``n``."""
        n = max(n, 0)
        return self.intersect(EPSet(n, frozenset(range(n)), 1, frozenset()))

    def __str__(self):
        prefix = ",".join(str(x) for x in sorted(self.prefix))
        residues = ",".join(str(r) for r in sorted(self.residues))
        return f"ep({self.threshold}; {prefix}; {self.period}; {residues})"


def epset_algebra(op: str, *args: EPSet) -> EPSet:
    if op == "complement":
        (a,) = args
        return a.complement()
    a, b = args
    if op == "union":
        return a.union(b)
    if op == "intersect":
        return a.intersect(b)
    if op == "minus":
        return a.minus(b)
    raise ValueError(f"unknown set operation {op!r}")


def epset_cut(a: EPSet, bound: str) -> EPSet:
    """``bound`` is ``">n"`` or ``"<n"``."""
    m = re.fullmatch(r"\s*([<>])\s*(\d+)\s*", bound)
    if not m:
        raise ValueError(f"bad bound {bound!r}; expected '>n' or '<n'")
    n = int(m.group(2))
    return a.above(n) if m.group(1) == ">" else a.below(n)


_EP = re.compile(r"\s*ep\(\s*(\d+)\s*;([\d,\s]*);\s*(\d+)\s*;([\d,\s]*)\)\s*\Z")


def _int_list(text: str) -> frozenset[int]:
    items = [t.strip() for t in text.split(",")]
    if items == [""]:
        return frozenset()
    if any(not t.isdigit() for t in items):
        raise ValueError(f"bad integer list {text!r}")
    return frozenset(int(t) for t in items)


def parse_epset(text: str) -> EPSet:
    """Parse ``ep(N; prefix; p; residues)``, e.g. ``ep(0; ; 2; 0)`` for the evens."""
    m = _EP.match(text)
    if not m:
        raise ValueError(f"bad set literal {text!r}; expected ep(N; prefix; p; residues)")
    return EPSet(int(m.group(1)), _int_list(m.group(2)), int(m.group(3)), _int_list(m.group(4)))


EVENS = EPSet.residue_class(2, 0)
ODDS = EPSet.residue_class(2, 1)


# --- three-valued truth -------------------------------------------------------

class Kleene(enum.Enum):
    FALSE = 0
    TRUE = 1
    UNKNOWN = 2

    @classmethod
    def of(cls, value: bool) -> Kleene:
        return cls.TRUE if value else cls.FALSE

    def __and__(self, other: Kleene) -> Kleene:
        if Kleene.FALSE in (self, other):
            return Kleene.FALSE
        if Kleene.UNKNOWN in (self, other):
            return Kleene.UNKNOWN
        return Kleene.TRUE

    def __or__(self, other: Kleene) -> Kleene:
        if Kleene.TRUE in (self, other):
            return Kleene.TRUE
        if Kleene.UNKNOWN in (self, other):
            return Kleene.UNKNOWN
        return Kleene.FALSE

    def __invert__(self) -> Kleene:
        return {Kleene.TRUE: Kleene.FALSE, Kleene.FALSE: Kleene.TRUE}.get(self, Kleene.UNKNOWN)

    def __bool__(self):
        raise TypeError("Kleene values have no implicit truth value; compare with Kleene.TRUE")

    def __str__(self):
        return self.name.lower()


# --- ultrafilter classes --------------------------------------------------------

@dataclass(frozen=True)
class Principal:
    point: int

    def __post_init__(self):
        if self.point < 0:
            raise ValueError("principal point must be a natural number")

    def __str__(self):
        return f"principal:{self.point}"


@dataclass(frozen=True)
class FrechetOn:
    """All non-principal ultrafilters containing ``support``."""

    support: EPSet

    def __post_init__(self):
        if self.support.is_finite():
            raise ValueError("a non-principal ultrafilter cannot contain a finite set")

    def __str__(self):
        return f"frechet:{self.support}"


SymbolicUF = Union[Principal, FrechetOn]


def parse_symbolic_uf(text: str) -> SymbolicUF:
    """``principal:N`` or ``frechet:ep(...)``."""
    kind, sep, rest = text.strip().partition(":")
    if sep and kind == "principal" and rest.strip().isdigit():
        return Principal(int(rest))
    if sep and kind == "frechet":
        return FrechetOn(parse_epset(rest))
    raise ValueError(f"bad ultrafilter {text!r}; expected principal:N or frechet:ep(...)")


def measure(d: SymbolicUF, s: EPSet) -> Kleene:
    """Whether ``s`` belongs to every (``TRUE``) or no (``FALSE``) ultrafilter of the class."""
    if isinstance(d, Principal):
        return Kleene.of(d.point in s)
    if d.support.minus(s).is_finite():
        return Kleene.TRUE
    if d.support.intersect(s).is_finite():
        return Kleene.FALSE
    return Kleene.UNKNOWN


@dataclass(frozen=True)
class ParamFamily:
    """The set ``base``, optionally cut above or below an outer variable ``t``.

    ``constraint`` is ``None``, ``">"`` (keep ``x > t``) or ``"<"`` (keep ``x < t``).
    """

    base: EPSet
    constraint: str | None = None

    def __post_init__(self):
        if self.constraint not in (None, ">", "<"):
            raise ValueError(f"bad constraint {self.constraint!r}")

    def at(self, t: int) -> EPSet:
        if self.constraint == ">":
            return self.base.above(t)
        if self.constraint == "<":
            return self.base.below(t)
        return self.base


def inner_regions(d2: SymbolicUF, fam: ParamFamily, domain: EPSet) -> tuple[EPSet, EPSet]:
    """Split ``domain`` by the verdict of ``measure(d2, fam.at(t))``.

    Returns ``(true_region, unknown_region)``; the rest of ``domain`` is
    where the inner verdict is ``FALSE``. The regions come from closed
    forms, never from sampling ``t``:

    * no cut: the verdict does not depend on ``t``;
    * ``x > t``: for a principal class at ``m`` it is true exactly for
      ``t < m`` (when ``m`` is in the base); for a Frechet class on ``A``
      the removed part ``A & base & [0, t]`` is finite, so the verdict
      equals ``measure(d2, base)`` for every ``t``;
    * ``x < t``: principal at ``m`` is true exactly for ``t > m``; a
      Frechet class sees a finite set, hence ``FALSE`` for every ``t``.
    """
    empty = EPSet.empty()

    def constant(v: Kleene):
        if v is Kleene.TRUE:
            return domain, empty
        if v is Kleene.UNKNOWN:
            return empty, domain
        return empty, empty

    if fam.constraint is None:
        return constant(measure(d2, fam.base))
    if isinstance(d2, Principal):
        m = d2.point
        if m not in fam.base:
            return empty, empty
        if fam.constraint == ">":
            return domain.below(m), empty
        return domain.above(m), empty
    if fam.constraint == ">":
        return constant(measure(d2, fam.base))
    return empty, empty


def decide(d1: SymbolicUF, true_region: EPSet, unknown_region: EPSet) -> Kleene:
    """Outer quantifier over a region split; sound for every member of the class."""
    if measure(d1, true_region) is Kleene.TRUE:
        return Kleene.TRUE
    if measure(d1, true_region.union(unknown_region)) is Kleene.FALSE:
        return Kleene.FALSE
    return Kleene.UNKNOWN


def eval_two_level(d1: SymbolicUF, d2: SymbolicUF, fam: ParamFamily, outer_domain: EPSet) -> Kleene:
    """Decide ``{t in outer_domain : fam.at(t) in D2} in D1`` for all D1, D2 in the classes."""
    true_region, unknown_region = inner_regions(d2, fam, outer_domain)
    return decide(d1, true_region, unknown_region)


# --- pairing and pair images --------------------------------------------------

@dataclass(frozen=True)
class CantorPairing:
    """Unordered Cantor code ``max*(max+1)/2 + min``, shifted by ``offset``.

    Injective on unordered pairs: ``code(a, b) == code(c, d)`` iff ``{a, b} == {c, d}``.
    """

    offset: int = 0

    def __call__(self, a: int, b: int) -> int:
        hi, lo = (a, b) if a >= b else (b, a)
        return hi * (hi + 1) // 2 + lo + self.offset

    def vectorized(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        hi = np.maximum(a, b).astype(np.int64)
        lo = np.minimum(a, b).astype(np.int64)
        return hi * (hi + 1) // 2 + lo + self.offset


PairingCode = Callable[[int, int], int]

FIRST_LESS = "first-less"
SECOND_LESS = "second-less"


def check_unordered_injective(pairing: PairingCode, limit: int = 48) -> None:
    """Spot check on ``[0, limit)``; raises ``ValueError`` on a collision."""
    seen: dict[int, tuple[int, int]] = {}
    for b in range(limit):
        for a in range(b + 1):
            if pairing(a, b) != pairing(b, a):
                raise ValueError(f"pairing is not symmetric at ({a}, {b})")
            code = pairing(a, b)
            if code in seen:
                raise ValueError(f"pairing collides: {seen[code]} and {(a, b)} both map to {code}")
            seen[code] = (a, b)


def pair_image_cases(a1: EPSet, a2: EPSet, order: str) -> list[tuple[EPSet, ParamFamily]]:
    """Inner sets ``{n2 : pairing(n1, n2) in B}`` as families over regions of ``n1``.

    ``B`` is the set of codes of pairs ``(x1, x2)`` with ``x1`` in ``a1``,
    ``x2`` in ``a2`` and ``x1 < x2`` (``first-less``) or ``x2 < x1``
    (``second-less``). Because the pairing is injective on unordered pairs
    and the sets are disjoint, ``pairing(n1, n2)`` lands in ``B`` only when
    ``{n1, n2}`` is itself such a pair, which pins the inner set down.
    """
    if order == FIRST_LESS:
        from_a1, from_a2 = ">", "<"
    elif order == SECOND_LESS:
        from_a1, from_a2 = "<", ">"
    else:
        raise ValueError(f"bad order {order!r}")
    rest = a1.union(a2).complement()
    return [
        (a1, ParamFamily(a2, from_a1)),
        (a2, ParamFamily(a1, from_a2)),
        (rest, ParamFamily(EPSet.empty(), None)),
    ]


def pair_image_membership(a1: EPSet, a2: EPSet, order: str, d1: SymbolicUF, d2: SymbolicUF,
                          pairing: PairingCode | None = None) -> Kleene:
    """Decide whether ``B`` belongs to ``F(D1, D2)`` for the pairing function ``F``.

    ``B`` is as in :func:`pair_image_cases`. The per-region verdict
    splits are merged before ``D1`` is applied, so a union that is large
    for ``D1`` is recognised even when no single piece is.
    """
    if not a1.intersect(a2).is_empty():
        raise ValueError("the two sets must be disjoint")
    check_unordered_injective(pairing or CantorPairing())
    true_region, unknown_region = EPSet.empty(), EPSet.empty()
    for region, fam in pair_image_cases(a1, a2, order):
        t, u = inner_regions(d2, fam, region)
        true_region = true_region.union(t)
        unknown_region = unknown_region.union(u)
    return decide(d1, true_region, unknown_region)
