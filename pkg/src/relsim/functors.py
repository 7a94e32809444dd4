"""A grammar of set functors with evaluation on finite carriers and maps.

Grammar nodes: constant, identity, covariant powerset, exponential by a
finite label set, finite sums and products, composition, and commutative
monoid-valued functors.  ``apply_obj`` materializes the action on a finite
carrier with a canonical, reproducible enumeration; ``apply_map`` and
``map_value`` give the action on functions (table-level and value-level).

Preservation properties of pullback-shaped limits (weak pullbacks, inverse
images, pullbacks with an iso projection, empty intersections) are assigned
by a structural rule table and can be cross-checked empirically on small
carriers with ``check_pullback_preservation``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .finrel import CarrierMismatch, FinFun, FinSet, named_carrier

DEFAULT_MAX_SIZE = 10**6


class SizeBoundExceeded(RuntimeError):
    """The materialized carrier would exceed the configured cardinality bound."""

    def __init__(self, cardinality, bound):
        super().__init__(f"carrier of size {cardinality} exceeds bound {bound}")
        self.cardinality = cardinality
        self.bound = bound


@dataclass(frozen=True)
class MonoidTable:
    """A finite commutative monoid given by an explicit addition table.

    ``table[i][j]`` is the carrier index of ``elements[i] + elements[j]``.
    Unit, associativity, and commutativity are checked exhaustively at
    construction time.
    """

    carrier: FinSet
    unit: object
    table: tuple

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(tuple(row) for row in self.table))
        n = self.carrier.size
        if len(self.table) != n or any(len(row) != n for row in self.table):
            raise ValueError("addition table shape does not match carrier")
        u = self.carrier.index(self.unit)
        for i in range(n):
            if self.table[u][i] != i or self.table[i][u] != i:
                raise ValueError("unit law fails")
            for j in range(n):
                if self.table[i][j] != self.table[j][i]:
                    raise ValueError("monoid is not commutative")
                for k in range(n):
                    if self.table[self.table[i][j]][k] != self.table[i][self.table[j][k]]:
                        raise ValueError("monoid is not associative")

    def add_index(self, i: int, j: int) -> int:
        return self.table[i][j]

    def add(self, x, y):
        return self.carrier.elements[self.table[self.carrier.index(x)][self.carrier.index(y)]]

    def sum_indices(self, indices) -> int:
        acc = self.carrier.index(self.unit)
        for i in indices:
            acc = self.table[acc][i]
        return acc


def is_positive(monoid: MonoidTable) -> bool:
    """Whether ``m + n = 0`` forces ``m = n = 0``; checked over the whole table."""
    u = monoid.carrier.index(monoid.unit)
    n = monoid.carrier.size
    for i in range(n):
        for j in range(n):
            if monoid.table[i][j] == u and (i != u or j != u):
                return False
    return True


def is_refinable(monoid: MonoidTable) -> bool:
    """Row/column refinement: every pair of 2-part sums of a common value admits a common 2x2 refinement."""
    n = monoid.carrier.size
    add = monoid.table
    for a1, a2, b1, b2 in itertools.product(range(n), repeat=4):
        if add[a1][a2] != add[b1][b2]:
            continue
        if not any(
            add[c11][c12] == a1
            and add[c21][c22] == a2
            and add[c11][c21] == b1
            and add[c12][c22] == b2
            for c11, c12, c21, c22 in itertools.product(range(n), repeat=4)
        ):
            return False
    return True


# ---------------------------------------------------------------------------
# grammar


@dataclass(frozen=True)
class Const:
    value: FinSet


@dataclass(frozen=True)
class Id:
    pass


@dataclass(frozen=True)
class Pow:
    pass


@dataclass(frozen=True)
class Exp:
    labels: FinSet


@dataclass(frozen=True)
class Sum:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("sum needs at least one summand")


@dataclass(frozen=True)
class Prod:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("product needs at least one factor")


@dataclass(frozen=True)
class Comp:
    outer: "FunctorExpr"
    inner: "FunctorExpr"


@dataclass(frozen=True)
class MVal:
    monoid: MonoidTable


FunctorExpr = Union[Const, Id, Pow, Exp, Sum, Prod, Comp, MVal]

ID = Id()
POW = Pow()


def cardinality(expr: FunctorExpr, n: int) -> int:
    """|F X| as a function of |X| = n, computed without materialization."""
    if isinstance(expr, Const):
        return expr.value.size
    if isinstance(expr, Id):
        return n
    if isinstance(expr, Pow):
        return 2**n
    if isinstance(expr, Exp):
        if expr.labels.size == 0:
            return 1
        return n**expr.labels.size
    if isinstance(expr, Sum):
        return sum(cardinality(p, n) for p in expr.parts)
    if isinstance(expr, Prod):
        out = 1
        for p in expr.parts:
            out *= cardinality(p, n)
        return out
    if isinstance(expr, Comp):
        return cardinality(expr.outer, cardinality(expr.inner, n))
    if isinstance(expr, MVal):
        return expr.monoid.carrier.size**n
    raise TypeError(f"not a functor expression: {expr!r}")


def apply_obj(expr: FunctorExpr, carrier: FinSet, max_size: int = DEFAULT_MAX_SIZE) -> FinSet:
    """Materialize F X with its canonical enumeration.

    Subsets are enumerated in binary-counter order (bit i = i-th atom),
    function spaces in base-|X| counter order with the first label as the
    least significant digit, sums as tagged unions in summand order, and
    products row-major with the last factor varying fastest.
    """
    card = cardinality(expr, carrier.size)
    if card > max_size:
        raise SizeBoundExceeded(card, max_size)
    return FinSet(tuple(_enumerate_values(expr, carrier)))


def _enumerate_values(expr: FunctorExpr, carrier: FinSet):
    if isinstance(expr, Const):
        yield from expr.value.elements
    elif isinstance(expr, Id):
        yield from carrier.elements
    elif isinstance(expr, Pow):
        xs = carrier.elements
        for k in range(2 ** len(xs)):
            yield tuple(x for i, x in enumerate(xs) if k >> i & 1)
    elif isinstance(expr, Exp):
        yield from _counter_tuples(carrier.elements, expr.labels.size)
    elif isinstance(expr, Sum):
        for tag, part in enumerate(expr.parts):
            for v in _enumerate_values(part, carrier):
                yield (tag, v)
    elif isinstance(expr, Prod):
        yield from itertools.product(*(_enumerate_values(p, carrier) for p in expr.parts))
    elif isinstance(expr, Comp):
        inner = FinSet(tuple(_enumerate_values(expr.inner, carrier)))
        yield from _enumerate_values(expr.outer, inner)
    elif isinstance(expr, MVal):
        yield from _counter_tuples(expr.monoid.carrier.elements, carrier.size)
    else:
        raise TypeError(f"not a functor expression: {expr!r}")


def _counter_tuples(values: tuple, length: int):
    """Tuples over ``values`` of the given length, first position least significant."""
    if length == 0:
        yield ()
        return
    if not values:
        return
    base = len(values)
    for k in range(base**length):
        digits = []
        for _ in range(length):
            digits.append(values[k % base])
            k //= base
        yield tuple(digits)


def map_value(expr: FunctorExpr, f: FinFun, value):
    """Apply F f to a single value of F(dom f), without enumerating carriers."""
    if isinstance(expr, Const):
        return value
    if isinstance(expr, Id):
        return f(value)
    if isinstance(expr, Pow):
        # direct image, reordered by codomain position
        image = {f(x) for x in value}
        return tuple(y for y in f.cod.elements if y in image)
    if isinstance(expr, Exp):
        return tuple(f(x) for x in value)
    if isinstance(expr, Sum):
        tag, inner = value
        return (tag, map_value(expr.parts[tag], f, inner))
    if isinstance(expr, Prod):
        return tuple(map_value(p, f, v) for p, v in zip(expr.parts, value))
    if isinstance(expr, Comp):
        inner_fun = apply_map(expr.inner, f)
        return map_value(expr.outer, inner_fun, value)
    if isinstance(expr, MVal):
        monoid = expr.monoid
        out = []
        for y in f.cod.elements:
            out.append(
                monoid.carrier.elements[
                    monoid.sum_indices(
                        monoid.carrier.index(m) for x, m in zip(f.dom.elements, value) if f(x) == y
                    )
                ]
            )
        return tuple(out)
    raise TypeError(f"not a functor expression: {expr!r}")


def apply_map(expr: FunctorExpr, f: FinFun, max_size: int = DEFAULT_MAX_SIZE) -> FinFun:
    """The action of F on a function, as a table between materialized carriers."""
    fx = apply_obj(expr, f.dom, max_size)
    fy = apply_obj(expr, f.cod, max_size)
    return FinFun(fx, fy, tuple(fy.index(map_value(expr, f, v)) for v in fx.elements))


def value_support(expr: FunctorExpr, value, carrier: Optional[FinSet] = None) -> frozenset:
    """The base-carrier atoms a value of F X actually mentions.

    The carrier is only needed for monoid-valued functors, whose values are
    weight tuples aligned with the carrier order.
    """
    if isinstance(expr, Const):
        return frozenset()
    if isinstance(expr, Id):
        return frozenset((value,))
    if isinstance(expr, Pow):
        return frozenset(value)
    if isinstance(expr, Exp):
        return frozenset(value)
    if isinstance(expr, Sum):
        tag, inner = value
        return value_support(expr.parts[tag], inner, carrier)
    if isinstance(expr, Prod):
        out = frozenset()
        for p, v in zip(expr.parts, value):
            out |= value_support(p, v, carrier)
        return out
    if isinstance(expr, Comp):
        inner_carrier = None
        if carrier is not None and _mentions_mval(expr.outer):
            inner_carrier = apply_obj(expr.inner, carrier)
        out = frozenset()
        for inner_value in value_support(expr.outer, value, inner_carrier):
            out |= value_support(expr.inner, inner_value, carrier)
        return out
    if isinstance(expr, MVal):
        if carrier is None:
            raise ValueError("support of a weight function needs the base carrier")
        unit = expr.monoid.unit
        return frozenset(x for x, m in zip(carrier.elements, value) if m != unit)
    raise TypeError(f"not a functor expression: {expr!r}")


def _mentions_mval(expr: FunctorExpr) -> bool:
    if isinstance(expr, MVal):
        return True
    if isinstance(expr, (Sum, Prod)):
        return any(_mentions_mval(p) for p in expr.parts)
    if isinstance(expr, Comp):
        return _mentions_mval(expr.outer) or _mentions_mval(expr.inner)
    return False


@dataclass(frozen=True)
class FunctorValue:
    """A value of F(base), identified by its index in the canonical enumeration."""

    functor: FunctorExpr
    base: FinSet
    index: int

    def atom(self, max_size: int = DEFAULT_MAX_SIZE):
        return apply_obj(self.functor, self.base, max_size).elements[self.index]

    @staticmethod
    def from_atom(functor: FunctorExpr, base: FinSet, atom, max_size: int = DEFAULT_MAX_SIZE):
        return FunctorValue(functor, base, apply_obj(functor, base, max_size).index(atom))


# ---------------------------------------------------------------------------
# value literals (JSON encoding of F-values)


def value_to_doc(expr: FunctorExpr, value, base_encoder: Callable = lambda x: x):
    """Encode a value of F X as a JSON-ready document.

    Subsets and tuples become arrays, functions become objects keyed by label,
    tagged sums become ``{"tag": i, "value": ...}``, and weight functions
    become objects mapping atoms to monoid elements (units omitted).
    """
    if isinstance(expr, Const):
        return value
    if isinstance(expr, Id):
        return base_encoder(value)
    if isinstance(expr, Pow):
        return [base_encoder(x) for x in value]
    if isinstance(expr, Exp):
        return {str(a): base_encoder(v) for a, v in zip(expr.labels.elements, value)}
    if isinstance(expr, Sum):
        tag, inner = value
        return {"tag": tag, "value": value_to_doc(expr.parts[tag], inner, base_encoder)}
    if isinstance(expr, Prod):
        return [value_to_doc(p, v, base_encoder) for p, v in zip(expr.parts, value)]
    if isinstance(expr, Comp):
        inner_encoder = lambda v: value_to_doc(expr.inner, v, base_encoder)  # noqa: E731
        return value_to_doc(expr.outer, value, inner_encoder)
    if isinstance(expr, MVal):
        raise ValueError("monoid-valued literals need the base carrier; use value_to_doc_over")
    raise TypeError(f"not a functor expression: {expr!r}")


def value_to_doc_over(expr: FunctorExpr, base: FinSet, value):
    """Like ``value_to_doc`` for the common case where base atoms are labels."""
    if isinstance(expr, MVal):
        return {
            str(x): m
            for x, m in zip(base.elements, value)
            if m != expr.monoid.unit
        }
    if isinstance(expr, Comp):
        inner_encoder = lambda v: value_to_doc_over(expr.inner, base, v)  # noqa: E731
        return value_to_doc(expr.outer, value, inner_encoder)
    return value_to_doc(expr, value, lambda x: x)


def value_from_doc(expr: FunctorExpr, base: FinSet, doc):
    """Decode a JSON document into a canonical value of F(base)."""
    return _decode(expr, doc, base, lambda d: _lookup_atom(base, d))


def _lookup_atom(base: FinSet, doc):
    if doc in base:
        return doc
    raise ValueError(f"{doc!r} is not an atom of the carrier")


def _decode(expr: FunctorExpr, doc, base: FinSet, base_decoder: Callable):
    if isinstance(expr, Const):
        return _lookup_atom(expr.value, doc)
    if isinstance(expr, Id):
        return base_decoder(doc)
    if isinstance(expr, Pow):
        members = {base_decoder(d) for d in doc}
        return tuple(x for x in base.elements if x in members)
    if isinstance(expr, Exp):
        out = []
        for a in expr.labels.elements:
            key = str(a)
            if key not in doc:
                raise ValueError(f"function literal missing label {key!r}")
            out.append(base_decoder(doc[key]))
        return tuple(out)
    if isinstance(expr, Sum):
        tag = doc["tag"]
        if not (0 <= tag < len(expr.parts)):
            raise ValueError(f"sum tag {tag} out of range")
        return (tag, _decode(expr.parts[tag], doc["value"], base, base_decoder))
    if isinstance(expr, Prod):
        if len(doc) != len(expr.parts):
            raise ValueError("tuple literal arity mismatch")
        return tuple(_decode(p, d, base, base_decoder) for p, d in zip(expr.parts, doc))
    if isinstance(expr, Comp):
        inner_values = FinSet(tuple(_enumerate_values(expr.inner, base)))
        inner_decoder = lambda d: _decode(expr.inner, d, base, base_decoder)  # noqa: E731
        return _decode(expr.outer, doc, inner_values, inner_decoder)
    if isinstance(expr, MVal):
        weights = {}
        for key, m in doc.items():
            x = base_decoder(key)
            weights[x] = _lookup_atom(expr.monoid.carrier, m)
        return tuple(weights.get(x, expr.monoid.unit) for x in base.elements)
    raise TypeError(f"not a functor expression: {expr!r}")


# ---------------------------------------------------------------------------
# preservation properties


@dataclass(frozen=True)
class PreservationProfile:
    weak_pullbacks: bool
    inverse_images: bool
    quarter_iso_pullbacks: bool
    empty_intersections: bool


def preservation_profile(expr: FunctorExpr) -> PreservationProfile:
    """Structural rule table for pullback-shaped preservation properties.

    Constant, identity, powerset, exponential, product, and sum nodes preserve
    weak pullbacks (and hence the restricted shapes); composition preserves
    whatever both components preserve.  For monoid-valued functors, inverse
    images and iso-projection pullbacks hold iff the monoid is positive, and
    weak pullbacks additionally need the refinement property.  The empirical
    checker below guards this table on small carriers.
    """
    if isinstance(expr, (Const, Id, Pow, Exp)):
        return PreservationProfile(True, True, True, True)
    if isinstance(expr, (Sum, Prod)):
        profiles = [preservation_profile(p) for p in expr.parts]
        return PreservationProfile(
            all(p.weak_pullbacks for p in profiles),
            all(p.inverse_images for p in profiles),
            all(p.quarter_iso_pullbacks for p in profiles),
            all(p.empty_intersections for p in profiles),
        )
    if isinstance(expr, Comp):
        po = preservation_profile(expr.outer)
        pi = preservation_profile(expr.inner)
        return PreservationProfile(
            po.weak_pullbacks and pi.weak_pullbacks,
            po.inverse_images and pi.inverse_images,
            po.quarter_iso_pullbacks and pi.quarter_iso_pullbacks,
            po.empty_intersections and pi.empty_intersections,
        )
    if isinstance(expr, MVal):
        positive = is_positive(expr.monoid)
        return PreservationProfile(
            positive and is_refinable(expr.monoid),
            positive,
            positive,
            True,
        )
    raise TypeError(f"not a functor expression: {expr!r}")


@dataclass(frozen=True)
class SquareCounterexample:
    """A concrete pullback square F fails to preserve, with the offending pair."""

    property: str
    x: FinSet
    b: FinSet
    y: FinSet
    into_y_from_x: FinFun
    into_y_from_b: FinFun
    u: object
    w: object

    def describe(self) -> str:
        return (
            f"{self.property}: square over X={list(self.x)}, B={list(self.b)}, "
            f"Y={list(self.y)} with h={self.into_y_from_x.table}, "
            f"g={self.into_y_from_b.table}; compatible pair u={self.u!r}, "
            f"w={self.w!r} is not hit by the lifted apex"
        )


PROPERTY_NAMES = ("weak_pullbacks", "inverse_images", "quarter_iso_pullbacks", "empty_intersections")


def check_pullback_preservation(
    expr: FunctorExpr,
    max_size: int = 3,
    properties: tuple = PROPERTY_NAMES,
    carrier_bound: int = DEFAULT_MAX_SIZE,
) -> dict:
    """Exhaustively test preservation of small pullback squares.

    Enumerates all cospans ``h : X -> Y <- g : B`` with carriers of size up to
    ``max_size``, forms the canonical pullback, applies the functor, and
    checks the lifted square.  Returns a dict mapping each requested property
    name to ``None`` (no counterexample found) or a ``SquareCounterexample``.
    """
    if max_size > 4:
        raise ValueError("max_size is capped at 4")
    results: dict = {name: None for name in properties}
    pending = set(properties)

    for xn, bn, yn in itertools.product(range(max_size + 1), repeat=3):
        if not pending:
            break
        xs = named_carrier("x", xn)
        bs = named_carrier("b", bn)
        ys = named_carrier("y", yn)
        for h_table in itertools.product(range(yn), repeat=xn):
            h = FinFun(xs, ys, h_table)
            for g_table in itertools.product(range(yn), repeat=bn):
                g = FinFun(bs, ys, g_table)
                relevant = _square_modes(h, g) & pending
                if not relevant:
                    continue
                cex = _test_square(expr, h, g, relevant, carrier_bound)
                for name, found in cex.items():
                    if results[name] is None and found is not None:
                        results[name] = found
                        pending.discard(name)
    return results


def _square_modes(h: FinFun, g: FinFun) -> set:
    """Which preservation properties a given cospan square is a test case for."""
    modes = {"weak_pullbacks"}
    if g.is_injective():
        modes.add("inverse_images")
        if h.is_injective() and not (set(h.table) & set(g.table)):
            modes.add("empty_intersections")
    # iso projection onto X: every x matched by exactly one b
    counts = [sum(1 for j in g.table if j == hx) for hx in h.table]
    if all(c == 1 for c in counts):
        modes.add("quarter_iso_pullbacks")
    return modes


def _test_square(
    expr: FunctorExpr, h: FinFun, g: FinFun, modes: set, carrier_bound: int
) -> dict:
    xs, bs, ys = h.dom, g.dom, h.cod
    pairs = [(x, b) for x in xs.elements for b in bs.elements if h(x) == g(b)]
    apex = FinSet(tuple(pairs))
    p1 = FinFun(apex, xs, tuple(xs.index(x) for x, _ in pairs))
    p2 = FinFun(apex, bs, tuple(bs.index(b) for _, b in pairs))

    try:
        f_apex = apply_obj(expr, apex, carrier_bound)
        f_xs = apply_obj(expr, xs, carrier_bound)
        f_bs = apply_obj(expr, bs, carrier_bound)
    except SizeBoundExceeded:
        return {name: None for name in modes}

    fp1 = apply_map(expr, p1, carrier_bound)
    fp2 = apply_map(expr, p2, carrier_bound)
    fh = apply_map(expr, h, carrier_bound)
    fg = apply_map(expr, g, carrier_bound)

    lifted = {(fp1(v), fp2(v)) for v in f_apex.elements}
    strong_needed = modes & {"inverse_images", "empty_intersections", "quarter_iso_pullbacks"}
    injective_ok = len(lifted) == f_apex.size if strong_needed else True

    out = {name: None for name in modes}
    for u in f_xs.elements:
        for w in f_bs.elements:
            if fh(u) != fg(w) or (u, w) in lifted:
                continue
            for name in modes:
                if out[name] is None:
                    out[name] = SquareCounterexample(name, xs, bs, ys, h, g, u, w)
            return out
    if not injective_ok:
        # lifted square covers all compatible pairs but the mediating map is
        # not injective, so the strong shapes are not preserved on the nose
        for name in strong_needed:
            out[name] = SquareCounterexample(name, xs, bs, ys, h, g, None, None)
    return out
