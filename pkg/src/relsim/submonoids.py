"""Upward-closed submonoids of endorelations and the extension lattice.

Endorelations on a label set A classify the normal relation liftings of the
exponential functor (-)^A: each upward-closed, composition-closed set of
endorelations containing the identity induces one lifting, and the lifting
is normal exactly when every member relation is normal (its difunctional
closure is reflexive).  This module builds and validates such submonoids,
enumerates the lattice of all-normal ones for small A, extracts the induced
set of endorelations back out of an arbitrary lifting, and computes joins.

Endorelations are handled as bitmasks over the |A| x |A| grid internally;
the public surface speaks ``FinRel``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .finrel import (
    FinRel,
    FinSet,
    compose,
    converse,
    difunctional_closure,
    identity_rel,
    leq,
    named_carrier,
)


def rel_to_mask(rel: FinRel) -> int:
    n = rel.dom.size
    mask = 0
    flat = rel.matrix.reshape(-1)
    for k in range(n * n):
        if flat[k]:
            mask |= 1 << k
    return mask


def mask_to_rel(labels: FinSet, mask: int) -> FinRel:
    n = labels.size
    m = np.zeros((n, n), dtype=bool)
    for k in range(n * n):
        if mask >> k & 1:
            m[k // n, k % n] = True
    return FinRel(labels, labels, m)


def _compose_masks(labels: FinSet, a: int, b: int) -> int:
    """Mask of the composite 'first a, then b'."""
    return rel_to_mask(compose(mask_to_rel(labels, a), mask_to_rel(labels, b)))


def _all_masks(labels: FinSet) -> range:
    return range(1 << (labels.size * labels.size))


def is_normal_endorelation(rel: FinRel) -> bool:
    """An endorelation is normal iff its difunctional closure is reflexive."""
    if rel.dom != rel.cod:
        raise ValueError("normality is defined for endorelations only")
    return leq(identity_rel(rel.dom), difunctional_closure(rel))


def normal_via_cospans(rel: FinRel, max_target: Optional[int] = None) -> bool:
    """Cospan criterion for normality: whenever the relation sits below the
    kernel-style relation of two functions into a common target, the two
    functions are equal.

    Checks all function pairs into targets of size up to ``max_target``
    (default 2 * |A|, floored at 1).  Agrees with the definitional check.
    """
    if rel.dom != rel.cod:
        raise ValueError("normality is defined for endorelations only")
    a = rel.dom
    if max_target is None:
        max_target = max(1, 2 * a.size)
    if max_target < a.size:
        raise ValueError("max_target must be at least |A|")
    for xn in range(1, max_target + 1):
        xs = named_carrier("t", xn)
        for f_table in itertools.product(range(xn), repeat=a.size):
            for g_table in itertools.product(range(xn), repeat=a.size):
                if f_table == g_table:
                    continue
                # rel <= g~ ; f  means every related (i, j) has f(i) = g(j)
                if all(
                    f_table[i] == g_table[j]
                    for (i, j) in zip(*np.nonzero(rel.matrix))
                ):
                    return False
    return True


@dataclass(frozen=True)
class UCSubmonoid:
    """An upward-closed, composition-closed set of endorelations containing the identity."""

    labels: FinSet
    members: frozenset  # bitmasks

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))
        unit = rel_to_mask(identity_rel(self.labels))
        if unit not in self.members:
            raise ValueError("submonoid must contain the identity relation")
        for m in self.members:
            for s in _all_masks(self.labels):
                if s & m == m and s not in self.members:
                    raise ValueError("set is not upward closed")
        for m1 in self.members:
            for m2 in self.members:
                if _compose_masks(self.labels, m1, m2) not in self.members:
                    raise ValueError("set is not closed under composition")

    def contains(self, rel: FinRel) -> bool:
        if rel.dom != self.labels or rel.cod != self.labels:
            raise ValueError("relation is not an endorelation on the label set")
        return rel_to_mask(rel) in self.members

    def contains_mask(self, mask: int) -> bool:
        return mask in self.members

    def relations(self) -> list:
        return [mask_to_rel(self.labels, m) for m in sorted(self.members)]

    def minimal_members(self) -> list:
        """Members with no strictly smaller member below them, in mask order."""
        out = []
        for m in sorted(self.members):
            if not any(o != m and o & m == o for o in self.members):
                out.append(mask_to_rel(self.labels, m))
        return out

    def generators(self) -> list:
        """Minimal members apart from the identity; ``generate`` rebuilds the submonoid from them."""
        unit = rel_to_mask(identity_rel(self.labels))
        return [r for r in self.minimal_members() if rel_to_mask(r) != unit]

    def all_members_normal(self) -> bool:
        return all(is_normal_endorelation(r) for r in self.minimal_members())

    def __le__(self, other: "UCSubmonoid") -> bool:
        return self.members <= other.members

    def __lt__(self, other: "UCSubmonoid") -> bool:
        return self.members < other.members

    def __len__(self) -> int:
        return len(self.members)


def _upward_close(labels: FinSet, base: set) -> set:
    return {s for s in _all_masks(labels) if any(s & m == m for m in base)}


def _composition_close(labels: FinSet, base: set) -> set:
    out = set(base)
    frontier = set(base)
    while frontier:
        fresh = set()
        for a in frontier:
            for b in out:
                for c in (_compose_masks(labels, a, b), _compose_masks(labels, b, a)):
                    if c not in out and c not in fresh:
                        fresh.add(c)
        out |= fresh
        frontier = fresh
    return out


def generate(labels: FinSet, generators: Iterable[FinRel]) -> UCSubmonoid:
    """Least upward-closed submonoid containing the given endorelations.

    Alternates composition closure and upward closure until both are stable.
    """
    base = {rel_to_mask(identity_rel(labels))}
    for g in generators:
        if g.dom != labels or g.cod != labels:
            raise ValueError("generators must be endorelations on the label set")
        base.add(rel_to_mask(g))
    while True:
        closed = _upward_close(labels, _composition_close(labels, base))
        if closed == base:
            return UCSubmonoid(labels, frozenset(closed))
        base = closed


def composition_closure_is_upward_closed(labels: FinSet, generators: Iterable[FinRel]) -> bool:
    """Diagnostic: whether composition closure alone (of the upward-closed
    generators) already yields an upward-closed set.  Observed, never assumed."""
    base = _upward_close(
        labels,
        {rel_to_mask(identity_rel(labels))} | {rel_to_mask(g) for g in generators},
    )
    closed = _composition_close(labels, base)
    return closed == _upward_close(labels, closed)


def join(submonoids: Iterable[UCSubmonoid]) -> UCSubmonoid:
    """Least upward-closed submonoid containing every argument."""
    submonoids = list(submonoids)
    if not submonoids:
        raise ValueError("join needs at least one submonoid")
    labels = submonoids[0].labels
    for s in submonoids:
        if s.labels != labels:
            raise ValueError("submonoids live over different label sets")
    gens = [r for s in submonoids for r in s.minimal_members()]
    return generate(labels, gens)


# ---------------------------------------------------------------------------
# lattice enumeration


@dataclass(frozen=True)
class NLELattice:
    """The inclusion lattice of all-normal upward-closed submonoids over A.

    ``exhaustive`` is False for the generator-driven mode where the node list
    is only guaranteed to be a lower bound on the true lattice.
    """

    labels: FinSet
    nodes: tuple
    hasse_edges: tuple  # (lower_index, upper_index)
    exhaustive: bool

    @property
    def bottom(self) -> UCSubmonoid:
        return min(self.nodes, key=lambda s: len(s.members))

    @property
    def top(self) -> UCSubmonoid:
        return max(self.nodes, key=lambda s: len(s.members))

    def to_dot(self) -> str:
        lines = ["digraph lattice {", "  rankdir=BT;"]
        for i, node in enumerate(self.nodes):
            gens = ", ".join(
                "{" + ",".join(f"({x},{y})" for x, y in g.pairs()) + "}"
                for g in node.generators()
            )
            label = gens if gens else "{}"
            lines.append(f'  n{i} [label="{label}"];')
        for lo, hi in self.hasse_edges:
            lines.append(f"  n{lo} -> n{hi};")
        lines.append("}")
        return "\n".join(lines)


def _hasse(nodes: list) -> tuple:
    edges = []
    for i, a in enumerate(nodes):
        for j, b in enumerate(nodes):
            if not (a < b):
                continue
            if any(a < c < b for c in nodes):
                continue
            edges.append((i, j))
    return tuple(edges)


def all_uc_submonoids(labels: FinSet) -> list:
    """Every upward-closed submonoid over A, by exhaustive search (|A| <= 2)."""
    if labels.size > 2:
        raise ValueError("exhaustive submonoid search is limited to |A| <= 2")
    n2 = labels.size * labels.size
    all_rels = list(range(1 << n2))
    unit = rel_to_mask(identity_rel(labels))
    sup_mask = []  # for each relation, the set of its supersets as a subset-bitmap
    comp = [[_compose_masks(labels, a, b) for b in all_rels] for a in all_rels]
    for m in all_rels:
        bits = 0
        for s in all_rels:
            if s & m == m:
                bits |= 1 << s
        sup_mask.append(bits)

    found = []
    for subset in range(1 << len(all_rels)):
        if not subset >> unit & 1:
            continue
        members = [m for m in all_rels if subset >> m & 1]
        ok = True
        for m in members:
            if sup_mask[m] & ~subset:
                ok = False
                break
        if not ok:
            continue
        for a in members:
            for b in members:
                if not subset >> comp[a][b] & 1:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            found.append(UCSubmonoid(labels, frozenset(members)))
    found.sort(key=lambda s: (len(s.members), tuple(sorted(s.members))))
    return found


def enumerate_nle(labels: FinSet, allow_generator_mode: bool = True) -> NLELattice:
    """The lattice of all-normal upward-closed submonoids over A.

    Exhaustive for |A| <= 2.  For |A| = 3 a generator-driven mode is used:
    closures of single normal generators plus their pairwise joins, marked
    non-exhaustive (a lower bound on the lattice).  Larger label sets are
    refused.
    """
    if labels.size <= 2:
        nodes = [s for s in all_uc_submonoids(labels) if s.all_members_normal()]
        return NLELattice(labels, tuple(nodes), _hasse(nodes), exhaustive=True)
    if labels.size == 3 and allow_generator_mode:
        singles = _single_generator_nodes(labels)
        seen = {s.members: s for s in singles}
        for a, b in itertools.combinations(list(seen.values()), 2):
            j = join([a, b])
            if j.all_members_normal():
                seen.setdefault(j.members, j)
        nodes = sorted(seen.values(), key=lambda s: (len(s.members), tuple(sorted(s.members))))
        return NLELattice(labels, tuple(nodes), _hasse(nodes), exhaustive=False)
    raise ValueError(f"lattice enumeration refused for |A| = {labels.size}")


def _single_generator_nodes(labels: FinSet) -> list:
    nodes = {}
    bottom = generate(labels, [])
    nodes[bottom.members] = bottom
    for mask in _all_masks(labels):
        rel = mask_to_rel(labels, mask)
        if not is_normal_endorelation(rel):
            continue
        sub = generate(labels, [rel])
        if sub.all_members_normal():
            nodes.setdefault(sub.members, sub)
    return sorted(nodes.values(), key=lambda s: (len(s.members), tuple(sorted(s.members))))


def greatest_nle(labels: FinSet, max_labels: int = 3) -> UCSubmonoid:
    """Join of all single-generator all-normal submonoids over A.

    The result is verified to be all-normal and to contain every enumerated
    all-normal node; a failure of either check is a hard error, since it
    would contradict the classification this construction is based on.
    """
    if labels.size > max_labels:
        raise ValueError(f"greatest extension computation refused for |A| = {labels.size}")
    singles = _single_generator_nodes(labels)
    top = join(singles) if singles else generate(labels, [])
    if not top.all_members_normal():
        raise AssertionError(
            "join of all-normal submonoids is not all-normal; this contradicts "
            "the classification and indicates an implementation bug"
        )
    if labels.size <= 2:
        lattice = enumerate_nle(labels)
        for node in lattice.nodes:
            if not node <= top:
                raise AssertionError("greatest extension misses an enumerated node")
    return top


def s_of_relator(spec, max_size: int = 3) -> frozenset:
    """The set of endorelations a lifting of an exponential functor induces.

    An endorelation belongs to the set iff the lifting of it relates the
    identity function to itself.  For liftings induced by an upward-closed
    submonoid this recovers exactly that submonoid.  Returns a frozenset of
    ``FinRel`` values.
    """
    from .functors import Exp
    from .relators import functor_of, lift

    functor = functor_of(spec)
    if not isinstance(functor, Exp):
        raise ValueError("induced endorelation sets are defined for exponential functors")
    labels = functor.labels
    if labels.size > max_size:
        raise ValueError(f"label set of size {labels.size} exceeds the bound {max_size}")
    identity_fun = tuple(labels.elements)  # the identity as a value of labels^labels
    out = []
    for mask in _all_masks(labels):
        rel = mask_to_rel(labels, mask)
        if lift(spec, rel).contains(identity_fun, identity_fun):
            out.append(rel)
    return frozenset(out)


def s_of_relator_masks(spec, max_size: int = 3) -> frozenset:
    return frozenset(rel_to_mask(r) for r in s_of_relator(spec, max_size))


# ---------------------------------------------------------------------------
# serialization


def submonoid_to_json(sub: UCSubmonoid, include_members: bool = False) -> dict:
    doc = {
        "labels": list(sub.labels.elements),
        "generators": [[[x, y] for x, y in g.pairs()] for g in sub.generators()],
    }
    if include_members:
        doc["members"] = [[[x, y] for x, y in r.pairs()] for r in sub.relations()]
    return doc


def submonoid_from_json(doc: dict) -> UCSubmonoid:
    labels = FinSet(tuple(doc["labels"]))
    gens = [
        FinRel.from_pairs(labels, labels, [(x, y) for x, y in g])
        for g in doc["generators"]
    ]
    sub = generate(labels, gens)
    if "members" in doc:
        expected = frozenset(
            rel_to_mask(FinRel.from_pairs(labels, labels, [(x, y) for x, y in r]))
            for r in doc["members"]
        )
        if expected != sub.members:
            raise ValueError("stored member list disagrees with generated submonoid")
    return sub
