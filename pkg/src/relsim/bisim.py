"""Coalgebras, simulations, similarity, and the behavioural-equivalence oracle.

A coalgebra is a finite state set with a transition map into the functor
applied to the states.  A relation is a simulation when every related pair of
states has lifted-related successor structures; similarity is the greatest
such relation, computed by descending fixpoint iteration.  Behavioural
equivalence (identification under some cospan of coalgebra morphisms) is
computed by final-sequence partition refinement and, on very small carriers,
cross-checked by exhaustive search over quotient cospans.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import functors
from .finrel import CarrierMismatch, FinFun, FinRel, FinSet, full_rel, named_carrier
from .functors import DEFAULT_MAX_SIZE, FunctorExpr
from .relators import RelOracle, functor_of, lift_oracle


@dataclass(frozen=True)
class Coalgebra:
    """A finite coalgebra: states plus a transition map into F(states)."""

    functor: FunctorExpr
    states: FinSet
    transition: FinFun

    def __post_init__(self):
        if self.transition.dom != self.states:
            raise CarrierMismatch("transition domain differs from the state set")
        expected = functors.apply_obj(self.functor, self.states)
        if self.transition.cod != expected:
            raise CarrierMismatch("transition codomain is not F(states)")

    def value(self, x):
        """The successor structure of a state, as an atom of F(states)."""
        return self.transition(x)


def coalgebra_from_values(
    functor: FunctorExpr,
    states: FinSet,
    values: dict,
    max_size: int = DEFAULT_MAX_SIZE,
) -> Coalgebra:
    carrier = functors.apply_obj(functor, states, max_size)
    table = tuple(carrier.index(values[x]) for x in states.elements)
    return Coalgebra(functor, states, FinFun(states, carrier, table))


def random_coalgebra(
    functor: FunctorExpr,
    states: FinSet,
    rng: random.Random,
    max_size: int = DEFAULT_MAX_SIZE,
) -> Coalgebra:
    carrier = functors.apply_obj(functor, states, max_size)
    if states.size > 0 and carrier.size == 0:
        raise ValueError("no transition structure exists on a nonempty state set")
    table = tuple(rng.randrange(carrier.size) for _ in states.elements)
    return Coalgebra(functor, states, FinFun(states, carrier, table))


# ---------------------------------------------------------------------------
# simulations


@dataclass(frozen=True)
class SimulationCheck:
    ok: bool
    failing_pair: Optional[tuple] = None

    def __bool__(self) -> bool:
        return self.ok


def _require_compatible(spec, a: Coalgebra, b: Coalgebra):
    f = functor_of(spec)
    if a.functor != f or b.functor != f:
        raise CarrierMismatch("coalgebras and lifting are over different functors")


def is_simulation(
    spec, rel: FinRel, a: Coalgebra, b: Coalgebra, max_size: int = DEFAULT_MAX_SIZE
) -> SimulationCheck:
    """Whether every related pair has lifted-related successor structures."""
    _require_compatible(spec, a, b)
    if rel.dom != a.states or rel.cod != b.states:
        raise CarrierMismatch("relation carriers differ from the coalgebra state sets")
    lifted = lift_oracle(spec, RelOracle.from_finrel(rel), max_size)
    for x, y in rel.pairs():
        if not lifted(a.value(x), b.value(y)):
            return SimulationCheck(False, (x, y))
    return SimulationCheck(True)


def similarity(
    spec, a: Coalgebra, b: Coalgebra, max_size: int = DEFAULT_MAX_SIZE
) -> FinRel:
    """Greatest simulation, by descending fixpoint iteration from the full relation.

    Each round removes every pair whose successor structures are not related
    by the lifting of the current relation; rounds are repeated to stability.
    """
    _require_compatible(spec, a, b)
    current = full_rel(a.states, b.states)
    while True:
        lifted = lift_oracle(spec, RelOracle.from_finrel(current), max_size)
        m = current.matrix.copy()
        changed = False
        for i, x in enumerate(a.states.elements):
            for j, y in enumerate(b.states.elements):
                if m[i, j] and not lifted(a.value(x), b.value(y)):
                    m[i, j] = False
                    changed = True
        if not changed:
            return current
        current = FinRel(a.states, b.states, m)


def greatest_simulation_within(
    spec, start: FinRel, a: Coalgebra, b: Coalgebra, max_size: int = DEFAULT_MAX_SIZE
) -> FinRel:
    """Greatest simulation contained in ``start`` (possibly empty)."""
    _require_compatible(spec, a, b)
    current = start
    while True:
        lifted = lift_oracle(spec, RelOracle.from_finrel(current), max_size)
        m = current.matrix.copy()
        changed = False
        for i, x in enumerate(a.states.elements):
            for j, y in enumerate(b.states.elements):
                if m[i, j] and not lifted(a.value(x), b.value(y)):
                    m[i, j] = False
                    changed = True
        if not changed:
            return current
        current = FinRel(a.states, b.states, m)


# ---------------------------------------------------------------------------
# behavioural equivalence


def _block_carrier(n: int) -> FinSet:
    return named_carrier("q", n)


def behavioural_equivalence(a: Coalgebra, b: Coalgebra) -> FinRel:
    """States identified under some cospan of coalgebra morphisms.

    Computed by final-sequence partition refinement on the disjoint union of
    the state sets: starting from the single-block partition, each round maps
    every state's successor structure through the current block assignment and
    regroups; blocks are renumbered by least contained state index so the
    iteration is canonical.  Stabilizes within ``|X| + |Y|`` rounds.
    """
    if a.functor != b.functor:
        raise CarrierMismatch("coalgebras are over different functors")
    xs = a.states.elements
    ys = b.states.elements
    total = len(xs) + len(ys)
    if total == 0:
        return FinRel(a.states, b.states, np.zeros((0, 0), dtype=bool))
    blocks = [0] * total
    while True:
        n_blocks = max(blocks) + 1 if blocks else 0
        carrier = _block_carrier(n_blocks)
        qa = FinFun(a.states, carrier, tuple(blocks[: len(xs)]))
        qb = FinFun(b.states, carrier, tuple(blocks[len(xs):]))
        mapper_a = _value_mapper(a.functor, qa)
        mapper_b = _value_mapper(b.functor, qb)
        signatures = [mapper_a(a.value(x)) for x in xs] + [mapper_b(b.value(y)) for y in ys]
        renumber: dict = {}
        fresh = []
        for sig in signatures:
            if sig not in renumber:
                renumber[sig] = len(renumber)
            fresh.append(renumber[sig])
        if fresh == blocks:
            break
        blocks = fresh
    m = np.zeros((len(xs), len(ys)), dtype=bool)
    for i in range(len(xs)):
        for j in range(len(ys)):
            m[i, j] = blocks[i] == blocks[len(xs) + j]
    return FinRel(a.states, b.states, m)


def _value_mapper(expr: FunctorExpr, f: FinFun):
    if isinstance(expr, functors.Comp):
        inner = functors.apply_map(expr.inner, f)
        return _value_mapper(expr.outer, inner)
    return lambda v: functors.map_value(expr, f, v)


def behavioural_equivalence_by_cospan_search(a: Coalgebra, b: Coalgebra) -> FinRel:
    """Oracle: exhaustive search over quotient cospans of coalgebra morphisms.

    Every cospan identifying two states factors through a compatible quotient
    of the disjoint union, so enumerating set partitions of the combined state
    set and keeping the coalgebra-compatible ones decides the relation.  Only
    usable for very small carriers.
    """
    if a.functor != b.functor:
        raise CarrierMismatch("coalgebras are over different functors")
    xs = a.states.elements
    ys = b.states.elements
    total = len(xs) + len(ys)
    if total > 8:
        raise ValueError("cospan-search oracle is limited to 8 combined states")
    m = np.zeros((len(xs), len(ys)), dtype=bool)
    for assignment in _set_partitions(total):
        n_blocks = max(assignment) + 1 if assignment else 0
        carrier = _block_carrier(n_blocks)
        qa = FinFun(a.states, carrier, tuple(assignment[: len(xs)]))
        qb = FinFun(b.states, carrier, tuple(assignment[len(xs):]))
        mapper_a = _value_mapper(a.functor, qa)
        mapper_b = _value_mapper(b.functor, qb)
        images = [mapper_a(a.value(x)) for x in xs] + [mapper_b(b.value(y)) for y in ys]
        compatible = True
        for i in range(total):
            for j in range(i + 1, total):
                if assignment[i] == assignment[j] and images[i] != images[j]:
                    compatible = False
                    break
            if not compatible:
                break
        if not compatible:
            continue
        for i in range(len(xs)):
            for j in range(len(ys)):
                if assignment[i] == assignment[len(xs) + j]:
                    m[i, j] = True
    return FinRel(a.states, b.states, m)


def _set_partitions(n: int):
    """Canonical block assignments: restricted growth strings of length n."""
    if n == 0:
        yield []
        return

    def rec(prefix, used):
        if len(prefix) == n:
            yield list(prefix)
            return
        for blk in range(used + 1):
            prefix.append(blk)
            yield from rec(prefix, max(used, blk + 1))
            prefix.pop()

    yield from rec([], 0)


# ---------------------------------------------------------------------------
# report harnesses


@dataclass
class OracleComparison:
    """Similarity vs behavioural equivalence over a batch of coalgebra pairs."""

    label: str
    seed: Optional[int]
    pairs_checked: int = 0
    soundness_failures: list = field(default_factory=list)
    completeness_failures: list = field(default_factory=list)

    @property
    def sound(self) -> bool:
        return not self.soundness_failures

    @property
    def complete(self) -> bool:
        return not self.completeness_failures

    def note(self) -> str:
        verdicts = []
        verdicts.append("sound" if self.sound else f"{len(self.soundness_failures)} soundness failures")
        verdicts.append(
            "complete" if self.complete else f"{len(self.completeness_failures)} completeness failures"
        )
        return (
            f"{self.label}: {', '.join(verdicts)} on {self.pairs_checked} sampled pairs "
            "(no counterexample found is evidence at the sampled sizes, not proof)"
        )


def soundness_completeness_report(
    spec,
    sample: Iterable[tuple],
    label: str = "lifting",
    seed: Optional[int] = None,
    max_size: int = DEFAULT_MAX_SIZE,
) -> OracleComparison:
    """Compare similarity with behavioural equivalence over coalgebra pairs."""
    report = OracleComparison(label, seed)
    for a, b in sample:
        sim = similarity(spec, a, b, max_size)
        beq = behavioural_equivalence(a, b)
        report.pairs_checked += 1
        for x, y in sim.pairs():
            if not beq.contains(x, y):
                report.soundness_failures.append((a, b, (x, y)))
                break
        for x, y in beq.pairs():
            if not sim.contains(x, y):
                report.completeness_failures.append((a, b, (x, y)))
                break
    return report


@dataclass
class CompositionClosureReport:
    label: str
    seed: Optional[int]
    composites_checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def closed(self) -> bool:
        return not self.failures


def composition_closure_report(
    spec,
    triples: Iterable[tuple],
    seed: int = 0,
    attempts_per_triple: int = 4,
    label: str = "lifting",
    max_size: int = DEFAULT_MAX_SIZE,
) -> CompositionClosureReport:
    """Sample simulation pairs and test whether their composites are simulations.

    For each coalgebra triple (a, b, c), simulations are obtained as greatest
    simulations inside seeded random relations; every composite found is then
    checked directly.
    """
    rng = random.Random(seed)
    report = CompositionClosureReport(label, seed)
    for a, b, c in triples:
        for _ in range(attempts_per_triple):
            r0 = _random_relation(a.states, b.states, rng)
            s0 = _random_relation(b.states, c.states, rng)
            r = greatest_simulation_within(spec, r0, a, b, max_size)
            s = greatest_simulation_within(spec, s0, b, c, max_size)
            composite = _compose_rel(r, s)
            report.composites_checked += 1
            verdict = is_simulation(spec, composite, a, c, max_size)
            if not verdict:
                report.failures.append(
                    {"r": r, "s": s, "composite": composite, "pair": verdict.failing_pair,
                     "a": a, "b": b, "c": c}
                )
    return report


def check_composite_of_simulations(
    spec, r: FinRel, s: FinRel, a: Coalgebra, b: Coalgebra, c: Coalgebra,
    max_size: int = DEFAULT_MAX_SIZE,
) -> dict:
    """Check a specific (r, s) pair: both must be simulations; reports whether
    the composite is one too."""
    ra = is_simulation(spec, r, a, b, max_size)
    sb = is_simulation(spec, s, b, c, max_size)
    if not ra or not sb:
        raise ValueError("inputs are not simulations")
    composite = _compose_rel(r, s)
    verdict = is_simulation(spec, composite, a, c, max_size)
    return {"composite": composite, "closed": bool(verdict), "pair": verdict.failing_pair}


def _compose_rel(r: FinRel, s: FinRel) -> FinRel:
    from .finrel import compose

    return compose(r, s)


def _random_relation(x: FinSet, y: FinSet, rng: random.Random) -> FinRel:
    m = np.zeros((x.size, y.size), dtype=bool)
    for i in range(x.size):
        for j in range(y.size):
            m[i, j] = rng.random() < 0.5
    return FinRel(x, y, m)


# ---------------------------------------------------------------------------
# minimal witnesses


def minimal_witness(
    spec,
    a: Coalgebra,
    b: Coalgebra,
    seed_pair: tuple,
    max_size: int = DEFAULT_MAX_SIZE,
) -> Optional[FinRel]:
    """A minimum-cardinality simulation containing the seed pair, or None.

    Candidates are restricted to similarity pairs reachable from the seed
    through successor supports; the search deepens iteratively over the
    witness cardinality, patching one unsatisfied pair at a time with minimal
    sets of candidate successor pairs.  Tie-breaking is deterministic; the
    guaranteed contract is the returned cardinality, not the witness identity.
    """
    _require_compatible(spec, a, b)
    x0, y0 = seed_pair
    sim = similarity(spec, a, b, max_size)
    if not sim.contains(x0, y0):
        return None

    f = a.functor
    succ_univ: dict = {}

    def successors(pair):
        if pair not in succ_univ:
            x, y = pair
            sx = sorted(
                functors.value_support(f, a.value(x), a.states),
                key=a.states.index,
            )
            sy = sorted(
                functors.value_support(f, b.value(y), b.states),
                key=b.states.index,
            )
            succ_univ[pair] = tuple(
                (p, q) for p in sx for q in sy if sim.contains(p, q)
            )
        return succ_univ[pair]

    candidates = {(x0, y0)}
    frontier = [(x0, y0)]
    while frontier:
        fresh = []
        for pair in frontier:
            for nxt in successors(pair):
                if nxt not in candidates:
                    candidates.add(nxt)
                    fresh.append(nxt)
        frontier = fresh
    ordered = sorted(candidates, key=lambda p: (a.states.index(p[0]), b.states.index(p[1])))

    def satisfied(pairs: frozenset, pair) -> bool:
        rel = FinRel.from_pairs(a.states, b.states, pairs)
        lifted = lift_oracle(spec, RelOracle.from_finrel(rel), max_size)
        return lifted(a.value(pair[0]), b.value(pair[1]))

    def first_unsatisfied(pairs: frozenset):
        for pair in ordered:
            if pair in pairs and not satisfied(pairs, pair):
                return pair
        return None

    def minimal_patches(pairs: frozenset, pair):
        # all inclusion-minimal candidate sets that satisfy the pair; branching
        # over every minimal patch keeps the search complete
        allowed = [p for p in successors(pair) if p not in pairs]
        found = []
        for size in range(1, len(allowed) + 1):
            for combo in itertools.combinations(allowed, size):
                if any(set(t) <= set(combo) for t in found):
                    continue
                if satisfied(pairs | frozenset(combo), pair):
                    found.append(combo)
        return found

    def search(pairs: frozenset, bound: int, visited: set):
        if pairs in visited:
            return None
        visited.add(pairs)
        pair = first_unsatisfied(pairs)
        if pair is None:
            return pairs
        if len(pairs) >= bound:
            return None
        for patch in minimal_patches(pairs, pair):
            grown = pairs | frozenset(patch)
            if len(grown) > bound:
                continue
            hit = search(grown, bound, visited)
            if hit is not None:
                return hit
        return None

    seed_set = frozenset({(x0, y0)})
    for bound in range(1, len(candidates) + 1):
        hit = search(seed_set, bound, set())
        if hit is not None:
            return FinRel.from_pairs(a.states, b.states, hit)
    return None


# ---------------------------------------------------------------------------
# serialization


def coalgebra_to_json(c: Coalgebra, functor_text: Optional[str] = None) -> dict:
    from .syntax import functor_to_text

    doc = {
        "functor": functor_text if functor_text is not None else functor_to_text(c.functor),
        "states": list(c.states.elements),
        "transition": {
            str(x): functors.value_to_doc_over(c.functor, c.states, c.value(x))
            for x in c.states.elements
        },
    }
    return doc


def coalgebra_from_json(doc: dict, max_size: int = DEFAULT_MAX_SIZE) -> Coalgebra:
    from .syntax import parse_functor

    functor = parse_functor(doc["functor"])
    states = FinSet(tuple(doc["states"]))
    values = {}
    for x in states.elements:
        key = str(x)
        if key not in doc["transition"]:
            raise ValueError(f"transition missing for state {key!r}")
        values[x] = functors.value_from_doc(functor, states, doc["transition"][key])
    return coalgebra_from_values(functor, states, values, max_size)
