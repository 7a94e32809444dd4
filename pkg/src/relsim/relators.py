"""Relation liftings along a functor, as first-class specification values.

A relator sends each relation ``X -/-> Y`` to a relation ``F X -/-> F Y``.
The constructions here:

* ``Barr(F)``       -- apply F to the canonical tabulation span of the
                       relation (Egli-Milner lifting in the powerset case);
* ``CoBarr(F)``     -- apply F to the pushout cotabulation of the
                       difunctional closure; only for functors preserving
                       pullbacks with an iso projection;
* ``SubmonoidExp``  -- liftings of an exponential functor induced by an
                       upward-closed submonoid of endorelations on the labels;
* ``EgliMilnerHalf``-- the one-sided powerset liftings (forall-exists in one
                       direction only);
* combinators       -- sums, products, composition, up-to difunctional
                       closure, pointwise suprema and infima.

Liftings are evaluated lazily through point queries, so carriers of the
lifted relation are never enumerated unless a whole lifted relation is
requested.  Exhaustive small-carrier checkers decide the usual axioms
(normality, lax extension, relational connector, converse preservation,
difunctional functoriality) and always return concrete, replayable
counterexamples.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import functors
from .finrel import (
    CarrierMismatch,
    FinFun,
    FinRel,
    FinSet,
    Span,
    compose,
    converse,
    difunctional_closure,
    identity_rel,
    leq,
    named_carrier,
    pushout,
    tabulation,
)
from .functors import (
    Comp,
    Const,
    Exp,
    FunctorExpr,
    Id,
    MVal,
    Pow,
    Prod,
    Sum,
    DEFAULT_MAX_SIZE,
    preservation_profile,
)
from .submonoids import UCSubmonoid


class RelatorConstructionError(ValueError):
    """The requested lifting is not well-defined for the given functor."""


@lru_cache(maxsize=4096)
def _obj(expr: FunctorExpr, carrier: FinSet, max_size: int) -> FinSet:
    return functors.apply_obj(expr, carrier, max_size)


def _mapper(expr: FunctorExpr, f: FinFun, max_size: int) -> Callable:
    """Value-level action of F on f with inner tables built once."""
    if isinstance(expr, Comp):
        inner = functors.apply_map(expr.inner, f, max_size)
        return _mapper(expr.outer, inner, max_size)
    if isinstance(expr, (Sum, Prod)):
        parts = [_mapper(p, f, max_size) for p in expr.parts]
        if isinstance(expr, Sum):
            return lambda v: (v[0], parts[v[0]](v[1]))
        return lambda v: tuple(m(x) for m, x in zip(parts, v))
    return lambda v: functors.map_value(expr, f, v)


# ---------------------------------------------------------------------------
# specification values


@dataclass(frozen=True)
class Barr:
    functor: FunctorExpr


@dataclass(frozen=True)
class CoBarr:
    functor: FunctorExpr

    def __post_init__(self):
        if not preservation_profile(self.functor).quarter_iso_pullbacks:
            raise RelatorConstructionError(
                "cotabulation lifting needs preservation of pullbacks with an "
                "iso projection; the functor's profile lacks it"
            )


@dataclass(frozen=True)
class SubmonoidExp:
    labels: FinSet
    submonoid: UCSubmonoid

    def __post_init__(self):
        if self.submonoid.labels != self.labels:
            raise RelatorConstructionError("submonoid lives over a different label set")


@dataclass(frozen=True)
class EgliMilnerHalf:
    """One-sided powerset lifting: 'upper' relates S to T iff every element of
    S has a related element in T; 'lower' is the converse-side condition."""

    functor: FunctorExpr
    direction: str

    def __post_init__(self):
        if not isinstance(self.functor, Pow):
            raise RelatorConstructionError("one-sided lifting is defined for the powerset functor")
        if self.direction not in ("upper", "lower"):
            raise RelatorConstructionError("direction must be 'upper' or 'lower'")


@dataclass(frozen=True)
class SumOf:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise RelatorConstructionError("sum of liftings needs at least one part")


@dataclass(frozen=True)
class ProdOf:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise RelatorConstructionError("product of liftings needs at least one part")


@dataclass(frozen=True)
class CompOf:
    outer: "RelatorSpec"
    inner: "RelatorSpec"


@dataclass(frozen=True)
class UpToDifunctional:
    """Lift the difunctional closure of the relation with the base lifting."""

    base: "RelatorSpec"


@dataclass(frozen=True)
class PointwiseSup:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise RelatorConstructionError("supremum needs at least one part")
        fs = {functor_of(p) for p in self.parts}
        if len(fs) != 1:
            raise RelatorConstructionError("supremum parts must share a functor")


@dataclass(frozen=True)
class PointwiseInf:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise RelatorConstructionError("infimum needs at least one part")
        fs = {functor_of(p) for p in self.parts}
        if len(fs) != 1:
            raise RelatorConstructionError("infimum parts must share a functor")


RelatorSpec = object  # union of the dataclasses above


def functor_of(spec) -> FunctorExpr:
    """The functor a lifting specification lifts along."""
    if isinstance(spec, (Barr, CoBarr, EgliMilnerHalf)):
        return spec.functor
    if isinstance(spec, SubmonoidExp):
        return Exp(spec.labels)
    if isinstance(spec, SumOf):
        return Sum(tuple(functor_of(p) for p in spec.parts))
    if isinstance(spec, ProdOf):
        return Prod(tuple(functor_of(p) for p in spec.parts))
    if isinstance(spec, CompOf):
        return Comp(functor_of(spec.outer), functor_of(spec.inner))
    if isinstance(spec, UpToDifunctional):
        return functor_of(spec.base)
    if isinstance(spec, (PointwiseSup, PointwiseInf)):
        return functor_of(spec.parts[0])
    raise TypeError(f"not a relator specification: {spec!r}")


# ---------------------------------------------------------------------------
# lazy evaluation: oracles and point queries


class RelOracle:
    """A relation given by carriers plus a memoized membership predicate."""

    __slots__ = ("dom", "cod", "_fn", "_memo", "_rel")

    def __init__(self, dom: FinSet, cod: FinSet, fn: Callable, rel: Optional[FinRel] = None):
        self.dom = dom
        self.cod = cod
        self._fn = fn
        self._memo = {}
        self._rel = rel

    @staticmethod
    def from_finrel(r: FinRel) -> "RelOracle":
        return RelOracle(r.dom, r.cod, r.contains, rel=r)

    def __call__(self, x, y) -> bool:
        key = (x, y)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._fn(x, y)
            self._memo[key] = hit
        return hit

    def materialize(self) -> FinRel:
        if self._rel is None:
            m = np.zeros((self.dom.size, self.cod.size), dtype=bool)
            for i, x in enumerate(self.dom.elements):
                for j, y in enumerate(self.cod.elements):
                    m[i, j] = self(x, y)
            self._rel = FinRel(self.dom, self.cod, m)
        return self._rel


def lift_oracle(spec, base: RelOracle, max_size: int = DEFAULT_MAX_SIZE) -> RelOracle:
    """The lifted relation as a lazy oracle over materialized lifted carriers."""
    f = functor_of(spec)
    dom = _obj(f, base.dom, max_size)
    cod = _obj(f, base.cod, max_size)
    return RelOracle(dom, cod, _query(spec, base, max_size))


def _query(spec, base: RelOracle, max_size: int) -> Callable:
    if isinstance(spec, Barr):
        return _barr_query(spec.functor, base, max_size)
    if isinstance(spec, CoBarr):
        return _cobarr_query(spec.functor, base, max_size)
    if isinstance(spec, SubmonoidExp):
        members = spec.submonoid.members
        n = spec.labels.size

        def query(u, v):
            mask = 0
            for i in range(n):
                for j in range(n):
                    if base(u[i], v[j]):
                        mask |= 1 << (i * n + j)
            return mask in members

        return query
    if isinstance(spec, EgliMilnerHalf):
        if spec.direction == "upper":
            return lambda u, v: all(any(base(x, y) for y in v) for x in u)
        return lambda u, v: all(any(base(x, y) for x in u) for y in v)
    if isinstance(spec, SumOf):
        parts = [_query(p, base, max_size) for p in spec.parts]
        return lambda u, v: u[0] == v[0] and parts[u[0]](u[1], v[1])
    if isinstance(spec, ProdOf):
        parts = [_query(p, base, max_size) for p in spec.parts]
        return lambda u, v: all(q(x, y) for q, x, y in zip(parts, u, v))
    if isinstance(spec, CompOf):
        inner = lift_oracle(spec.inner, base, max_size)
        return _query(spec.outer, inner, max_size)
    if isinstance(spec, UpToDifunctional):
        closed = RelOracle.from_finrel(difunctional_closure(base.materialize()))
        return _query(spec.base, closed, max_size)
    if isinstance(spec, PointwiseSup):
        parts = [_query(p, base, max_size) for p in spec.parts]
        return lambda u, v: any(q(u, v) for q in parts)
    if isinstance(spec, PointwiseInf):
        parts = [_query(p, base, max_size) for p in spec.parts]
        return lambda u, v: all(q(u, v) for q in parts)
    raise TypeError(f"not a relator specification: {spec!r}")


def _barr_query(f: FunctorExpr, base: RelOracle, max_size: int) -> Callable:
    """Point query for the tabulation lifting, structural where exact.

    The structural cases evaluate the canonical-span lifting directly; the
    composition case reassociates through the inner lifting, which matches the
    span construction whenever the outer functor weakly preserves pullbacks.
    Everything else falls back to enumerating F of the tabulation apex.
    """
    if isinstance(f, Const):
        return lambda u, v: u == v
    if isinstance(f, Id):
        return base
    if isinstance(f, Pow):
        return lambda u, v: (
            all(any(base(x, y) for y in v) for x in u)
            and all(any(base(x, y) for x in u) for y in v)
        )
    if isinstance(f, Exp):
        return lambda u, v: all(base(x, y) for x, y in zip(u, v))
    if isinstance(f, Sum):
        parts = [_barr_query(p, base, max_size) for p in f.parts]
        return lambda u, v: u[0] == v[0] and parts[u[0]](u[1], v[1])
    if isinstance(f, Prod):
        parts = [_barr_query(p, base, max_size) for p in f.parts]
        return lambda u, v: all(q(x, y) for q, x, y in zip(parts, u, v))
    if isinstance(f, Comp) and preservation_profile(f.outer).weak_pullbacks:
        inner = RelOracle(
            _obj(f.inner, base.dom, max_size),
            _obj(f.inner, base.cod, max_size),
            _barr_query(f.inner, base, max_size),
        )
        return _barr_query(f.outer, inner, max_size)
    return _span_image_query(f, tabulation(base.materialize()), max_size)


def _span_image_query(f: FunctorExpr, span: Span, max_size: int) -> Callable:
    f_apex = _obj(f, span.apex, max_size)
    m1 = _mapper(f, span.left, max_size)
    m2 = _mapper(f, span.right, max_size)
    pairs = {(m1(p), m2(p)) for p in f_apex.elements}
    return lambda u, v: (u, v) in pairs


def _cobarr_query(f: FunctorExpr, base: RelOracle, max_size: int) -> Callable:
    closed = difunctional_closure(base.materialize())
    cospan = pushout(tabulation(closed))
    m1 = _mapper(f, cospan.left, max_size)
    m2 = _mapper(f, cospan.right, max_size)
    left_memo: dict = {}
    right_memo: dict = {}

    def query(u, v):
        a = left_memo.get(u)
        if a is None:
            a = left_memo[u] = m1(u)
        b = right_memo.get(v)
        if b is None:
            b = right_memo[v] = m2(v)
        return a == b

    return query


# ---------------------------------------------------------------------------
# materialized lifting


def lift(spec, r: FinRel, max_size: int = DEFAULT_MAX_SIZE) -> FinRel:
    """The whole lifted relation over materialized carriers F X and F Y."""
    oracle = lift_oracle(spec, RelOracle.from_finrel(r), max_size)
    return oracle.materialize()


def lift_barr_via_span(f: FunctorExpr, span: Span, max_size: int = DEFAULT_MAX_SIZE) -> FinRel:
    """Tabulation-style lifting computed from an arbitrary presenting span.

    For functors that weakly preserve pullbacks this is independent of the
    span; otherwise it may differ from the canonical construction.
    """
    query = _span_image_query(f, span, max_size)
    dom = _obj(f, span.left.cod, max_size)
    cod = _obj(f, span.right.cod, max_size)
    return RelOracle(dom, cod, query).materialize()


@dataclass(frozen=True)
class LiftedRelation:
    """A lifted relation bundled with its provenance."""

    spec: object
    base: FinRel
    result: FinRel


def lifted(spec, r: FinRel, max_size: int = DEFAULT_MAX_SIZE) -> LiftedRelation:
    return LiftedRelation(spec, r, lift(spec, r, max_size))


# ---------------------------------------------------------------------------
# law checkers


@dataclass
class CheckOutcome:
    """Result of an exhaustive small-carrier law check.

    ``counterexample`` is a dict of fully concrete values that re-triggers the
    failure; ``empty_composite_only`` marks composition-law failures confined
    to empty composites (the laws are often stated with non-emptiness
    provisos, so such failures are reported but distinguished).
    """

    law: str
    ok: bool
    checked: int
    counterexample: Optional[dict] = None
    empty_composite_only: bool = False

    def __bool__(self) -> bool:
        return self.ok


def _carriers(max_size: int, prefix: str) -> list:
    return [named_carrier(prefix, n) for n in range(max_size + 1)]


def _all_relations(x: FinSet, y: FinSet, budget: int, rng: random.Random) -> list:
    total = 1 << (x.size * y.size)
    if total <= budget:
        masks = range(total)
    else:
        masks = sorted(rng.sample(range(total), budget))
    out = []
    for mask in masks:
        m = np.zeros((x.size, y.size), dtype=bool)
        for k in range(x.size * y.size):
            if mask >> k & 1:
                m[k // y.size, k % y.size] = True
        out.append(FinRel(x, y, m))
    return out


def _all_functions(x: FinSet, y: FinSet) -> list:
    return [FinFun(x, y, table) for table in itertools.product(range(y.size), repeat=x.size)]


def is_normal(spec, max_size: int = 3, lift_bound: int = DEFAULT_MAX_SIZE) -> CheckOutcome:
    """Whether the lifting maps identity relations to identity relations."""
    checked = 0
    for x in _carriers(max_size, "x"):
        lifted_id = lift(spec, identity_rel(x), lift_bound)
        checked += 1
        expected = identity_rel(lifted_id.dom)
        if lifted_id != expected:
            bad = np.argwhere(lifted_id.matrix != expected.matrix)[0]
            u = lifted_id.dom.elements[bad[0]]
            v = lifted_id.cod.elements[bad[1]]
            return CheckOutcome(
                "normality", False, checked,
                {"carrier": x, "u": u, "v": v, "related": bool(lifted_id.matrix[bad[0], bad[1]])},
            )
    return CheckOutcome("normality", True, checked)


def is_lax_extension(
    spec,
    max_size: int = 2,
    rel_budget: int = 64,
    seed: int = 0,
    lift_bound: int = DEFAULT_MAX_SIZE,
) -> CheckOutcome:
    """Function extension, converse extension, and lax composition, exhaustively.

    Relations are exhausted when the count fits the budget, otherwise sampled
    with the seeded generator (sampling is recorded in ``checked`` only).
    """
    rng = random.Random(seed)
    checked = 0
    for x in _carriers(max_size, "x"):
        for y in _carriers(max_size, "y"):
            for f in _all_functions(x, y):
                graph = f.graph()
                ff = functors.apply_map(functor_of(spec), f, lift_bound)
                if not leq(ff.graph(), lift(spec, graph, lift_bound)):
                    return CheckOutcome(
                        "function extension", False, checked,
                        {"f": f, "detail": "F f is not below the lifted graph"},
                    )
                if not leq(converse(ff.graph()), lift(spec, converse(graph), lift_bound)):
                    return CheckOutcome(
                        "converse extension", False, checked,
                        {"f": f, "detail": "(F f)~ is not below the lifted converse"},
                    )
                checked += 1

    empty_failure = None
    for x in _carriers(max_size, "x"):
        for y in _carriers(max_size, "y"):
            for z in _carriers(max_size, "z"):
                for r in _all_relations(x, y, rel_budget, rng):
                    lr = lift(spec, r, lift_bound)
                    for s in _all_relations(y, z, rel_budget, rng):
                        sr = compose(r, s)
                        composed = compose(lr, lift(spec, s, lift_bound))
                        checked += 1
                        if leq(composed, lift(spec, sr, lift_bound)):
                            continue
                        failure = {"r": r, "s": s, "composite": sr}
                        if sr.is_empty():
                            empty_failure = empty_failure or failure
                        else:
                            return CheckOutcome("lax composition", False, checked, failure)
    if empty_failure is not None:
        return CheckOutcome(
            "lax composition", False, checked, empty_failure, empty_composite_only=True
        )
    return CheckOutcome("lax extension", True, checked)


def is_relational_connector(
    spec,
    max_size: int = 2,
    rel_budget: int = 64,
    seed: int = 0,
    lift_bound: int = DEFAULT_MAX_SIZE,
) -> CheckOutcome:
    """Unit law plus naturality: lifting commutes with restriction along functions."""
    rng = random.Random(seed)
    f_expr = functor_of(spec)
    checked = 0
    for x in _carriers(max_size, "x"):
        lifted_id = lift(spec, identity_rel(x), lift_bound)
        checked += 1
        if not leq(identity_rel(lifted_id.dom), lifted_id):
            return CheckOutcome("connector unit", False, checked, {"carrier": x})
    for x in _carriers(max_size, "x"):
        for y in _carriers(max_size, "y"):
            rels = _all_relations(x, y, rel_budget, rng)
            for a in _carriers(max_size, "a"):
                for b in _carriers(max_size, "b"):
                    for f in _all_functions(a, x):
                        ff = functors.apply_map(f_expr, f, lift_bound).graph()
                        for g in _all_functions(b, y):
                            fg = functors.apply_map(f_expr, g, lift_bound).graph()
                            for r in rels:
                                restricted = compose(compose(f.graph(), r), converse(g.graph()))
                                lhs = lift(spec, restricted, lift_bound)
                                rhs = compose(compose(ff, lift(spec, r, lift_bound)), converse(fg))
                                checked += 1
                                if lhs != rhs:
                                    return CheckOutcome(
                                        "naturality", False, checked,
                                        {"r": r, "f": f, "g": g, "lhs": lhs, "rhs": rhs},
                                    )
    return CheckOutcome("relational connector", True, checked)


def preserves_converses(
    spec,
    max_size: int = 2,
    rel_budget: int = 64,
    seed: int = 0,
    lift_bound: int = DEFAULT_MAX_SIZE,
) -> CheckOutcome:
    """Whether lifting the converse equals the converse of the lifting."""
    rng = random.Random(seed)
    checked = 0
    for x in _carriers(max_size, "x"):
        for y in _carriers(max_size, "y"):
            for r in _all_relations(x, y, rel_budget, rng):
                lhs = lift(spec, converse(r), lift_bound)
                rhs = converse(lift(spec, r, lift_bound))
                checked += 1
                if lhs != rhs:
                    diff = np.argwhere(lhs.matrix != rhs.matrix)[0]
                    return CheckOutcome(
                        "converse preservation", False, checked,
                        {
                            "r": r,
                            "u": lhs.dom.elements[diff[0]],
                            "v": lhs.cod.elements[diff[1]],
                        },
                    )
    return CheckOutcome("converse preservation", True, checked)


def difunctional_functoriality(
    spec,
    max_size: int = 2,
    lift_bound: int = DEFAULT_MAX_SIZE,
) -> CheckOutcome:
    """Whether the lifting of a cospan-induced relation equals the cospan of images."""
    f_expr = functor_of(spec)
    checked = 0
    for x in _carriers(max_size, "x"):
        for y in _carriers(max_size, "y"):
            for a in _carriers(max_size, "a"):
                for f in _all_functions(x, a):
                    ff = functors.apply_map(f_expr, f, lift_bound).graph()
                    for g in _all_functions(y, a):
                        fg = functors.apply_map(f_expr, g, lift_bound).graph()
                        rel = compose(f.graph(), converse(g.graph()))
                        lhs = lift(spec, rel, lift_bound)
                        rhs = compose(ff, converse(fg))
                        checked += 1
                        if lhs != rhs:
                            return CheckOutcome(
                                "difunctional functoriality", False, checked,
                                {"f": f, "g": g, "lhs": lhs, "rhs": rhs},
                            )
    return CheckOutcome("difunctional functoriality", True, checked)


def cobarr_equals_barr_of_closure(
    functor: FunctorExpr,
    max_size: int = 3,
    rel_budget: int = 64,
    seed: int = 0,
    lift_bound: int = DEFAULT_MAX_SIZE,
) -> CheckOutcome:
    """For weak-pullback preserving functors, the cotabulation lifting equals
    the tabulation lifting of the difunctional closure."""
    if not preservation_profile(functor).weak_pullbacks:
        raise RelatorConstructionError(
            "equality with the closure lifting is only guaranteed under weak "
            "pullback preservation"
        )
    rng = random.Random(seed)
    cobarr = CoBarr(functor)
    barr = Barr(functor)
    checked = 0
    for x in _carriers(max_size, "x"):
        for y in _carriers(max_size, "y"):
            for r in _all_relations(x, y, rel_budget, rng):
                checked += 1
                if lift(cobarr, r, lift_bound) != lift(
                    barr, difunctional_closure(r), lift_bound
                ):
                    return CheckOutcome(
                        "cotabulation vs closure", False, checked, {"r": r}
                    )
    return CheckOutcome("cotabulation vs closure", True, checked)
