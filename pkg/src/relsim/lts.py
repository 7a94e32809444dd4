"""Labelled transition systems and twisted bisimulation.

An A-labelled transition system is a coalgebra for the functor
``Exp(A) . Pow``: each state maps every label to its set of successors.
Composing a submonoid-induced lifting of the exponential with the
Egli-Milner lifting of the powerset yields "twisted" notions of
bisimulation that may relate states through mismatched labels while
remaining sound (and complete) for ordinary bisimilarity whenever every
endorelation in the submonoid is normal.

For a two-letter alphabet the twisted conditions unfold into three clause
families (plain matching, and two label-mismatch variants); the clause-level
checker below implements them literally and is cross-checked against the
lifting-based definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bisim import Coalgebra, coalgebra_from_values
from .finrel import FinRel, FinSet
from .functors import Comp, DEFAULT_MAX_SIZE, Exp, Pow
from .relators import Barr, CompOf, SubmonoidExp
from .submonoids import UCSubmonoid, generate


@dataclass(frozen=True)
class LTS:
    """A finite labelled transition system."""

    states: FinSet
    labels: FinSet
    transitions: frozenset  # triples (source, label, target)

    def __post_init__(self):
        object.__setattr__(self, "transitions", frozenset(self.transitions))
        for s, l, t in self.transitions:
            if s not in self.states or t not in self.states or l not in self.labels:
                raise ValueError(f"transition {(s, l, t)!r} mentions unknown atoms")

    def successors(self, state, label) -> tuple:
        hits = {t for s, l, t in self.transitions if s == state and l == label}
        return tuple(t for t in self.states.elements if t in hits)


def lts_functor(labels: FinSet) -> Comp:
    return Comp(Exp(labels), Pow())


def to_coalgebra(system: LTS, max_size: int = DEFAULT_MAX_SIZE) -> Coalgebra:
    """The coalgebra presentation: state -> (label -> successor set)."""
    functor = lts_functor(system.labels)
    values = {
        x: tuple(system.successors(x, l) for l in system.labels.elements)
        for x in system.states.elements
    }
    return coalgebra_from_values(functor, system.states, values, max_size)


@dataclass(frozen=True)
class TwistedSpec:
    """A twisted-bisimulation notion: a label set plus a submonoid of endorelations.

    Construction refuses submonoids with non-normal members by default, since
    those induce unsound notions; pass ``allow_non_normal=True`` to experiment
    anyway.
    """

    labels: FinSet
    submonoid: UCSubmonoid
    allow_non_normal: bool = False

    def __post_init__(self):
        if self.submonoid.labels != self.labels:
            raise ValueError("submonoid lives over a different label set")
        if not self.allow_non_normal and not self.submonoid.all_members_normal():
            raise ValueError(
                "submonoid contains a non-normal endorelation; the induced "
                "notion would be unsound (override with allow_non_normal=True)"
            )

    def relator(self) -> CompOf:
        return twisted_relator(self)


def twisted_relator(spec: TwistedSpec) -> CompOf:
    """Submonoid lifting of the exponential composed with the Egli-Milner lifting."""
    return CompOf(SubmonoidExp(spec.labels, spec.submonoid), Barr(Pow()))


def standard_relator(labels: FinSet) -> Barr:
    """Ordinary strong bisimulation: the tabulation lifting of the whole functor."""
    return Barr(lts_functor(labels))


# canonical two-letter submonoids; label order (a, b) is taken from the carrier


def _two_letter_generators(labels: FinSet) -> tuple:
    if labels.size != 2:
        raise ValueError("the canonical generators are defined for two labels")
    a, b = labels.elements
    phi_a = FinRel.from_pairs(labels, labels, [(a, b), (a, a), (b, a)])
    phi_b = FinRel.from_pairs(labels, labels, [(a, b), (b, b), (b, a)])
    return phi_a, phi_b


def submonoid_bottom(labels: FinSet) -> UCSubmonoid:
    return generate(labels, [])


def submonoid_letter_a(labels: FinSet) -> UCSubmonoid:
    phi_a, _ = _two_letter_generators(labels)
    return generate(labels, [phi_a])


def submonoid_letter_b(labels: FinSet) -> UCSubmonoid:
    _, phi_b = _two_letter_generators(labels)
    return generate(labels, [phi_b])


def submonoid_top(labels: FinSet) -> UCSubmonoid:
    return generate(labels, list(_two_letter_generators(labels)))


# ---------------------------------------------------------------------------
# clause-level checker (two labels only)


@dataclass(frozen=True)
class ClausalCheck:
    ok: bool
    failing_pair: Optional[tuple] = None

    def __bool__(self) -> bool:
        return self.ok


def is_twisted_bisimulation_clausal(rel: FinRel, lts1: LTS, lts2: LTS) -> ClausalCheck:
    """Clause-level twisted-bisimulation check for a two-letter alphabet.

    A related pair must satisfy one of three clause families: matching labels
    in both directions; the mismatch family over (a,b), (b,a), (b,b); or the
    mismatch family over (a,b), (b,a), (a,a).  Agrees with the lifting-based
    simulation check for the top submonoid.
    """
    if lts1.labels != lts2.labels or lts1.labels.size != 2:
        raise ValueError("the clause-level checker needs a shared two-letter alphabet")
    if rel.dom != lts1.states or rel.cod != lts2.states:
        raise ValueError("relation carriers differ from the transition systems")
    a, b = lts1.labels.elements
    families = (
        ((a, a), (b, b)),
        ((a, b), (b, a), (b, b)),
        ((a, b), (b, a), (a, a)),
    )

    def transfer(x, y, u, v) -> bool:
        xs = lts1.successors(x, u)
        ys = lts2.successors(y, v)
        forth = all(any(rel.contains(x2, y2) for y2 in ys) for x2 in xs)
        back = all(any(rel.contains(x2, y2) for x2 in xs) for y2 in ys)
        return forth and back

    for x, y in rel.pairs():
        if not any(all(transfer(x, y, u, v) for u, v in family) for family in families):
            return ClausalCheck(False, (x, y))
    return ClausalCheck(True)


# ---------------------------------------------------------------------------
# the cycle family and its linear witness


def minimization_family(n: int, m: int) -> LTS:
    """Two coupled cycles over the alphabet {a, b}.

    States ``s0..s(n-1)`` and ``t0..t(m-1)`` with a-steps advancing each cycle
    and b-steps jumping to the opposite cycle's start; n and m must be coprime.
    All states are bisimilar, yet an ordinary bisimulation relating a cross
    pair must contain every cross pair, while a twisted one stays linear.
    """
    if n < 1 or m < 1:
        raise ValueError("cycle lengths must be positive")
    if math.gcd(n, m) != 1:
        raise ValueError("cycle lengths must be coprime")
    states = FinSet(tuple(f"s{i}" for i in range(n)) + tuple(f"t{j}" for j in range(m)))
    labels = FinSet(("a", "b"))
    transitions = set()
    for i in range(n):
        transitions.add((f"s{i}", "a", f"s{(i + 1) % n}"))
        transitions.add((f"s{i}", "b", "t0"))
    for j in range(m):
        transitions.add((f"t{j}", "a", f"t{(j + 1) % m}"))
        transitions.add((f"t{j}", "b", "s0"))
    return LTS(states, labels, frozenset(transitions))


def linear_witness(n: int, m: int) -> FinRel:
    """The linear-size twisted bisimulation for the cycle family:
    everything related to both cycle starts, and both starts related to everything."""
    system = minimization_family(n, m)
    states = system.states
    anchors = ("s0", "t0")
    pairs = set()
    for x in states.elements:
        for y in anchors:
            pairs.add((x, y))
    for x in anchors:
        for y in states.elements:
            pairs.add((x, y))
    rel = FinRel.from_pairs(states, states, pairs)
    verdict = is_twisted_bisimulation_clausal(rel, system, system)
    if not verdict:
        raise AssertionError(
            f"linear witness fails the twisted check at {verdict.failing_pair}"
        )
    return rel


def minimization_automaton(n: int, m: int, max_size: int = DEFAULT_MAX_SIZE) -> Coalgebra:
    """The same family as a deterministic automaton with every state accepting:
    a coalgebra for ``C{1} * Exp{a,b}`` (output bit times next-state function)."""
    from .functors import Const, Prod

    system = minimization_family(n, m)
    labels = system.labels
    outputs = FinSet(("1",))
    functor = Prod((Const(outputs), Exp(labels)))
    values = {}
    for x in system.states.elements:
        nexts = tuple(system.successors(x, l)[0] for l in labels.elements)
        values[x] = ("1", nexts)
    return coalgebra_from_values(functor, system.states, values, max_size)


def final_example_lts() -> LTS:
    """The four-state system whose smallest ordinary witness for (p, q) has five
    pairs while a twisted witness needs only four."""
    states = FinSet(("x", "y", "p", "q"))
    labels = FinSet(("a", "b"))
    transitions = frozenset(
        {
            ("x", "a", "x"),
            ("x", "b", "y"),
            ("y", "a", "y"),
            ("y", "b", "x"),
            ("p", "a", "x"),
            ("p", "b", "x"),
            ("q", "a", "x"),
            ("q", "b", "y"),
        }
    )
    return LTS(states, labels, transitions)


# ---------------------------------------------------------------------------
# serialization


def lts_to_json(system: LTS) -> dict:
    return {
        "states": list(system.states.elements),
        "labels": list(system.labels.elements),
        "trans": sorted([s, l, t] for s, l, t in system.transitions),
    }


def lts_from_json(doc: dict) -> LTS:
    states = FinSet(tuple(doc["states"]))
    labels = FinSet(tuple(doc["labels"]))
    return LTS(states, labels, frozenset((s, l, t) for s, l, t in doc["trans"]))


def lts_to_text(system: LTS) -> str:
    lines = [
        "states: " + " ".join(str(s) for s in system.states.elements),
        "labels: " + " ".join(str(l) for l in system.labels.elements),
    ]
    lines += sorted(f"{s} -{l}-> {t}" for s, l, t in system.transitions)
    return "\n".join(lines) + "\n"


def lts_from_text(text: str) -> LTS:
    states = labels = None
    transitions = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("states:"):
            states = FinSet(tuple(line[len("states:"):].split()))
        elif line.startswith("labels:"):
            labels = FinSet(tuple(line[len("labels:"):].split()))
        else:
            src, rest = line.split("-", 1)
            label, dst = rest.split("->", 1)
            transitions.add((src.strip(), label.strip().strip("-"), dst.strip()))
    if states is None or labels is None:
        raise ValueError("missing 'states:' or 'labels:' header")
    return LTS(states, labels, frozenset(transitions))


def lts_to_dot(system: LTS, witness: Optional[FinRel] = None) -> str:
    """DOT rendering; a witness relation, if given, appears as dashed edges."""
    lines = ["digraph lts {", "  rankdir=LR;"]
    for s in system.states.elements:
        lines.append(f'  "{s}";')
    for s, l, t in sorted(system.transitions):
        lines.append(f'  "{s}" -> "{t}" [label="{l}"];')
    if witness is not None:
        for x, y in witness.pairs():
            lines.append(f'  "{x}" -> "{y}" [style=dashed, arrowhead=none, color=gray];')
    lines.append("}")
    return "\n".join(lines)
