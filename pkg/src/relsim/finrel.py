"""Finite sets, total functions, and binary relations.

Relations between finite carriers are stored as dense boolean matrices
indexed by carrier position; carriers keep an ordered tuple of opaque,
hashable atoms.  On top of the basic algebra (composition, converse,
lattice operations) this module provides the categorical constructions
used by the relation-lifting machinery: tabulations, pushouts of spans,
pullbacks of cospans, weak-pullback tests, image factorizations, and
the difunctional closure.

All values are immutable after construction and all operations are pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np


class CarrierMismatch(ValueError):
    """Raised when an operation is applied to values over incompatible carriers."""


class NonCommutingSquare(ValueError):
    """Raised when a span/cospan pair that should commute does not."""


@dataclass(frozen=True)
class FinSet:
    """An ordered finite set of distinct, hashable atoms.

    The order is part of the identity: two carriers are equal only if they
    enumerate the same atoms in the same order.  This keeps every derived
    enumeration (subsets, function spaces, tabulations) reproducible.
    """

    elements: tuple
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        index = {}
        for i, x in enumerate(self.elements):
            if x in index:
                raise ValueError(f"duplicate element {x!r} in carrier")
            index[x] = i
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.elements)

    def index(self, x) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise CarrierMismatch(f"{x!r} is not an element of {self}") from None

    def __contains__(self, x) -> bool:
        return x in self._index

    def __iter__(self) -> Iterator:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __repr__(self) -> str:
        inner = ",".join(map(repr, self.elements))
        return f"FinSet({{{inner}}})"


def finset(*elements) -> FinSet:
    """Convenience constructor: ``finset('a', 'b')``."""
    return FinSet(tuple(elements))


def named_carrier(prefix: str, n: int) -> FinSet:
    """Canonical carrier ``{prefix0, ..., prefix(n-1)}`` used by exhaustive checkers."""
    return FinSet(tuple(f"{prefix}{i}" for i in range(n)))


@dataclass(frozen=True)
class FinFun:
    """A total function between finite carriers, stored as a table of codomain indices."""

    dom: FinSet
    cod: FinSet
    table: tuple

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(self.table))
        if len(self.table) != self.dom.size:
            raise ValueError("function table length does not match domain size")
        for j in self.table:
            if not (0 <= j < self.cod.size):
                raise ValueError(f"codomain index {j} out of range")

    @staticmethod
    def from_callable(dom: FinSet, cod: FinSet, f: Callable) -> "FinFun":
        return FinFun(dom, cod, tuple(cod.index(f(x)) for x in dom))

    @staticmethod
    def from_pairs(dom: FinSet, cod: FinSet, mapping: dict) -> "FinFun":
        return FinFun(dom, cod, tuple(cod.index(mapping[x]) for x in dom))

    @staticmethod
    def identity(carrier: FinSet) -> "FinFun":
        return FinFun(carrier, carrier, tuple(range(carrier.size)))

    def __call__(self, x):
        return self.cod.elements[self.table[self.dom.index(x)]]

    def then(self, g: "FinFun") -> "FinFun":
        """Diagrammatic composition: ``self`` first, then ``g``."""
        if g.dom != self.cod:
            raise CarrierMismatch("codomain/domain mismatch in function composition")
        return FinFun(self.dom, g.cod, tuple(g.table[j] for j in self.table))

    def graph(self) -> "FinRel":
        m = np.zeros((self.dom.size, self.cod.size), dtype=bool)
        for i, j in enumerate(self.table):
            m[i, j] = True
        return FinRel(self.dom, self.cod, m)

    def is_injective(self) -> bool:
        return len(set(self.table)) == len(self.table)

    def is_surjective(self) -> bool:
        return len(set(self.table)) == self.cod.size


class FinRel:
    """A relation between finite carriers, stored as a dense boolean matrix.

    ``matrix[i, j]`` holds iff the i-th domain atom is related to the j-th
    codomain atom.  Instances are immutable and hashable.
    """

    __slots__ = ("dom", "cod", "matrix", "_hash")

    def __init__(self, dom: FinSet, cod: FinSet, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=bool)
        if matrix.shape != (dom.size, cod.size):
            raise ValueError(
                f"matrix shape {matrix.shape} does not match carriers "
                f"({dom.size}, {cod.size})"
            )
        matrix = matrix.copy()
        matrix.setflags(write=False)
        object.__setattr__(self, "dom", dom)
        object.__setattr__(self, "cod", cod)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("FinRel is immutable")

    @staticmethod
    def from_pairs(dom: FinSet, cod: FinSet, pairs: Iterable) -> "FinRel":
        m = np.zeros((dom.size, cod.size), dtype=bool)
        for x, y in pairs:
            m[dom.index(x), cod.index(y)] = True
        return FinRel(dom, cod, m)

    def pairs(self) -> list:
        xs, ys = np.nonzero(self.matrix)
        return [(self.dom.elements[i], self.cod.elements[j]) for i, j in zip(xs, ys)]

    def contains(self, x, y) -> bool:
        return bool(self.matrix[self.dom.index(x), self.cod.index(y)])

    def count(self) -> int:
        return int(self.matrix.sum())

    def is_empty(self) -> bool:
        return not self.matrix.any()

    def __eq__(self, other) -> bool:
        if not isinstance(other, FinRel):
            return NotImplemented
        return (
            self.dom == other.dom
            and self.cod == other.cod
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self) -> int:
        if self._hash is None:
            h = hash((self.dom, self.cod, self.matrix.tobytes()))
            object.__setattr__(self, "_hash", h)
        return self._hash

    def __repr__(self) -> str:
        return f"FinRel({self.pairs()!r})"


@dataclass(frozen=True)
class Span:
    """A span ``X <- apex -> Y``; composing right leg after converse of left leg yields a relation."""

    apex: FinSet
    left: FinFun
    right: FinFun

    def __post_init__(self):
        if self.left.dom != self.apex or self.right.dom != self.apex:
            raise CarrierMismatch("span legs must share the apex as domain")

    def composite(self) -> FinRel:
        """The relation tabulated by the span: pairs ``(left(p), right(p))``."""
        return compose(converse(self.left.graph()), self.right.graph())


@dataclass(frozen=True)
class Cospan:
    """A cospan ``X -> apex <- Y``."""

    apex: FinSet
    left: FinFun
    right: FinFun

    def __post_init__(self):
        if self.left.cod != self.apex or self.right.cod != self.apex:
            raise CarrierMismatch("cospan legs must share the apex as codomain")

    def composite(self) -> FinRel:
        """The relation cotabulated by the cospan: ``x ~ y`` iff ``left(x) = right(y)``."""
        return compose(self.left.graph(), converse(self.right.graph()))


# ---------------------------------------------------------------------------
# basic relation algebra


def identity_rel(carrier: FinSet) -> FinRel:
    return FinRel(carrier, carrier, np.eye(carrier.size, dtype=bool))


def full_rel(dom: FinSet, cod: FinSet) -> FinRel:
    return FinRel(dom, cod, np.ones((dom.size, cod.size), dtype=bool))


def empty_rel(dom: FinSet, cod: FinSet) -> FinRel:
    return FinRel(dom, cod, np.zeros((dom.size, cod.size), dtype=bool))


def compose(r: FinRel, s: FinRel) -> FinRel:
    """Relational composition in applicative order: first ``r``, then ``s``."""
    if r.cod != s.dom:
        raise CarrierMismatch("cannot compose: middle carriers differ")
    m = (r.matrix[:, :, None] & s.matrix[None, :, :]).any(axis=1)
    return FinRel(r.dom, s.cod, m)


def converse(r: FinRel) -> FinRel:
    return FinRel(r.cod, r.dom, r.matrix.T)


def union(r: FinRel, s: FinRel) -> FinRel:
    _require_parallel(r, s)
    return FinRel(r.dom, r.cod, r.matrix | s.matrix)


def intersection(r: FinRel, s: FinRel) -> FinRel:
    _require_parallel(r, s)
    return FinRel(r.dom, r.cod, r.matrix & s.matrix)


def leq(r: FinRel, s: FinRel) -> bool:
    """Inclusion of parallel relations."""
    _require_parallel(r, s)
    return bool((~r.matrix | s.matrix).all())


def _require_parallel(r: FinRel, s: FinRel):
    if r.dom != s.dom or r.cod != s.cod:
        raise CarrierMismatch("relations are not parallel")


def rel_domain(r: FinRel) -> tuple:
    """Atoms of the domain carrier related to at least one codomain atom."""
    hit = r.matrix.any(axis=1)
    return tuple(x for i, x in enumerate(r.dom.elements) if hit[i])


def rel_image(r: FinRel) -> tuple:
    hit = r.matrix.any(axis=0)
    return tuple(y for j, y in enumerate(r.cod.elements) if hit[j])


def subidentity_from_subset(carrier: FinSet, subset: Iterable) -> FinRel:
    """The subidentity relation containing exactly the diagonal pairs over ``subset``."""
    m = np.zeros((carrier.size, carrier.size), dtype=bool)
    for x in subset:
        i = carrier.index(x)
        m[i, i] = True
    return FinRel(carrier, carrier, m)


# ---------------------------------------------------------------------------
# difunctionality


def is_difunctional(r: FinRel) -> bool:
    """A relation is difunctional iff zig-zag steps stay inside it: r;r~;r <= r."""
    return leq(compose(compose(r, converse(r)), r), r)


def difunctional_closure(r: FinRel) -> FinRel:
    """Least difunctional relation containing ``r``.

    Iterates ``t := t ∪ t;(t~;t)`` to the fixpoint; the finite relation
    lattice guarantees termination, and each iterate stays below any
    difunctional relation containing ``r``.
    """
    t = r
    while True:
        step = union(t, compose(t, compose(converse(t), t)))
        if step == t:
            return t
        t = step


# ---------------------------------------------------------------------------
# spans, cospans, and their universal constructions


def tabulation(r: FinRel) -> Span:
    """Canonical span presenting ``r``: the apex is the set of related pairs.

    Pairs are enumerated in row-major order (domain atom first), so every
    downstream construction on the apex is deterministic.
    """
    pairs = r.pairs()
    apex = FinSet(tuple(pairs))
    left = FinFun(apex, r.dom, tuple(r.dom.index(x) for x, _ in pairs))
    right = FinFun(apex, r.cod, tuple(r.cod.index(y) for _, y in pairs))
    return Span(apex, left, right)


def pushout(s: Span) -> Cospan:
    """Pushout of a span in finite sets.

    The apex is the disjoint union of the feet quotiented by the equivalence
    generated by ``left(p) ~ right(p)``, computed with union-find over the
    combined index space; each class is represented by its least index, which
    makes the resulting cospan canonical.
    """
    nx, ny = s.left.cod.size, s.right.cod.size
    parent = list(range(nx + ny))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def merge(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            # keep the least index as representative
            if ri < rj:
                parent[rj] = ri
            else:
                parent[ri] = rj

    for p in range(s.apex.size):
        merge(s.left.table[p], nx + s.right.table[p])

    reps = sorted({find(i) for i in range(nx + ny)})
    rep_to_class = {rep: k for k, rep in enumerate(reps)}
    apex = FinSet(tuple(f"o{k}" for k in range(len(reps))))
    left = FinFun(s.left.cod, apex, tuple(rep_to_class[find(i)] for i in range(nx)))
    right = FinFun(s.right.cod, apex, tuple(rep_to_class[find(nx + j)] for j in range(ny)))
    return Cospan(apex, left, right)


def pullback(c: Cospan) -> Span:
    """Pullback of a cospan: pairs with equal images, with the two projections."""
    pairs = [
        (x, y)
        for x in c.left.dom.elements
        for y in c.right.dom.elements
        if c.left(x) == c.right(y)
    ]
    apex = FinSet(tuple(pairs))
    left = FinFun(apex, c.left.dom, tuple(c.left.dom.index(x) for x, _ in pairs))
    right = FinFun(apex, c.right.dom, tuple(c.right.dom.index(y) for _, y in pairs))
    return Span(apex, left, right)


def is_weak_pullback(c: Cospan, s: Span) -> bool:
    """Whether the commuting square made of ``c`` and ``s`` is a weak pullback.

    True iff every pair with equal images under the cospan legs is hit by some
    apex element of the span.  Raises if the square does not commute.
    """
    if s.left.then(c.left) != s.right.then(c.right):
        raise NonCommutingSquare("span and cospan do not form a commuting square")
    hit = {(s.left(p), s.right(p)) for p in s.apex.elements}
    for x in c.left.dom.elements:
        for y in c.right.dom.elements:
            if c.left(x) == c.right(y) and (x, y) not in hit:
                return False
    return True


def image_factorization(f: FinFun) -> tuple:
    """Factor ``f`` as a surjection onto its image followed by an inclusion.

    The image carrier keeps the codomain's element order.
    """
    hit = sorted(set(f.table))
    image = FinSet(tuple(f.cod.elements[j] for j in hit))
    reindex = {j: k for k, j in enumerate(hit)}
    epi = FinFun(f.dom, image, tuple(reindex[j] for j in f.table))
    mono = FinFun(image, f.cod, tuple(hit))
    return epi, mono


# ---------------------------------------------------------------------------
# serialization


def rel_to_json(r: FinRel) -> dict:
    return {
        "dom": list(r.dom.elements),
        "cod": list(r.cod.elements),
        "pairs": [[x, y] for x, y in r.pairs()],
    }


def rel_from_json(doc: dict) -> FinRel:
    dom = FinSet(tuple(doc["dom"]))
    cod = FinSet(tuple(doc["cod"]))
    return FinRel.from_pairs(dom, cod, [(x, y) for x, y in doc["pairs"]])


def rel_to_text(r: FinRel) -> str:
    """Line-based form: carrier headers followed by one ``x -> y`` line per pair.

    Only string atoms without whitespace are supported; use JSON otherwise.
    """
    for x in list(r.dom.elements) + list(r.cod.elements):
        if not isinstance(x, str) or any(ch.isspace() for ch in x) or x == "":
            raise ValueError("text form requires non-empty string atoms without whitespace")
    lines = [
        "dom: " + " ".join(r.dom.elements),
        "cod: " + " ".join(r.cod.elements),
    ]
    lines += [f"{x} -> {y}" for x, y in r.pairs()]
    return "\n".join(lines) + "\n"


def rel_from_text(text: str) -> FinRel:
    dom = cod = None
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("dom:"):
            dom = FinSet(tuple(line[len("dom:"):].split()))
        elif line.startswith("cod:"):
            cod = FinSet(tuple(line[len("cod:"):].split()))
        else:
            parts = line.split("->")
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'x -> y', got {raw!r}")
            pairs.append((parts[0].strip(), parts[1].strip()))
    if dom is None or cod is None:
        raise ValueError("missing 'dom:' or 'cod:' header")
    return FinRel.from_pairs(dom, cod, pairs)


def rel_dumps(r: FinRel) -> str:
    return json.dumps(rel_to_json(r), indent=2)


def rel_loads(text: str) -> FinRel:
    return rel_from_json(json.loads(text))
