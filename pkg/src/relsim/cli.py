"""Command-line surface.

Subcommands:

    similarity      greatest simulation between two loaded systems
    check           verify a witness relation against a lifting
    lattice         enumerate the normal liftings of an exponential functor
    twisted         twisted-bisimulation tooling for labelled transition systems
    oracle-compare  similarity vs behavioural equivalence on random systems
    properties      run the lifting law checkers
    examples        run the built-in fixture suite

Exit codes: 0 success / property holds, 1 property fails (a concrete
certificate is printed), 2 usage or parse error, 3 resource bound exceeded.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

import numpy as np

from . import bisim, functors, lts, relators, submonoids, syntax
from .finrel import FinRel, FinSet, finset, leq, named_carrier, rel_from_json, rel_from_text, rel_to_json
from .functors import SizeBoundExceeded
from .syntax import ParseError


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except SizeBoundExceeded as exc:
        print(f"resource bound exceeded: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relsim",
        description="relation liftings and coalgebraic (bi)simulation on finite systems",
    )
    sub = parser.add_subparsers(required=True)

    def common(p):
        p.add_argument("--max-size", type=int, default=10**6,
                       help="cardinality bound for materialized carriers")
        p.add_argument("--seed", type=int, default=0, help="seed recorded in outputs")
        p.add_argument("--format", choices=("text", "json", "dot"), default="text")

    p = sub.add_parser("similarity", help="greatest simulation between systems")
    p.add_argument("system", help="coalgebra or LTS file")
    p.add_argument("other", nargs="?", help="second system (defaults to the first)")
    p.add_argument("--relator", required=True, help="lifting expression, e.g. 'barr(Pow)'")
    p.add_argument("--no-oracle", action="store_true",
                   help="skip the behavioural-equivalence comparison")
    common(p)
    p.set_defaults(handler=cmd_similarity)

    p = sub.add_parser("check", help="check a witness relation")
    p.add_argument("system")
    p.add_argument("other", nargs="?")
    p.add_argument("--relator", help="lifting expression")
    p.add_argument("--witness", required=True, help="relation file (JSON or text)")
    p.add_argument("--clausal", action="store_true",
                   help="use the two-label clause checker (LTS inputs only)")
    common(p)
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("lattice", help="normal liftings of Exp over a label set")
    p.add_argument("--labels", required=True, help="comma-separated labels, e.g. a,b")
    common(p)
    p.set_defaults(handler=cmd_lattice)

    p = sub.add_parser("twisted", help="twisted bisimulation on labelled transition systems")
    p.add_argument("system")
    p.add_argument("other", nargs="?")
    p.add_argument("--submonoid", default="top", choices=("top", "bot", "a", "b"),
                   help="canonical two-label submonoid")
    p.add_argument("--witness", help="relation file to check instead of computing similarity")
    common(p)
    p.set_defaults(handler=cmd_twisted)

    p = sub.add_parser("oracle-compare", help="similarity vs behavioural equivalence")
    p.add_argument("--functor", required=True)
    p.add_argument("--relator", action="append", required=True,
                   help="lifting to test (repeatable)")
    p.add_argument("--pairs", type=int, default=50)
    p.add_argument("--max-states", type=int, default=3)
    common(p)
    p.set_defaults(handler=cmd_oracle_compare)

    p = sub.add_parser("properties", help="run the lifting law checkers")
    p.add_argument("--relator", required=True)
    p.add_argument("--size", type=int, default=2, help="carrier size bound for the checkers")
    common(p)
    p.set_defaults(handler=cmd_properties)

    p = sub.add_parser("examples", help="run the built-in fixture suite")
    p.add_argument("--json", action="store_true", dest="as_json")
    p.set_defaults(handler=cmd_examples)

    return parser


# ---------------------------------------------------------------------------
# input loading


def load_system(path: str, max_size: int):
    """A coalgebra from a coalgebra-JSON, LTS-JSON, or LTS-text file.

    Returns (coalgebra, lts_or_none).
    """
    with open(path) as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        if "functor" in doc:
            return bisim.coalgebra_from_json(doc, max_size), None
        if "trans" in doc:
            system = lts.lts_from_json(doc)
            return lts.to_coalgebra(system, max_size), system
        raise ValueError(f"{path}: unrecognized JSON schema (no 'functor' or 'trans' key)")
    if stripped.startswith("states:"):
        system = lts.lts_from_text(text)
        return lts.to_coalgebra(system, max_size), system
    raise ValueError(f"{path}: unrecognized format")


def load_relation(path: str) -> FinRel:
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return rel_from_json(json.loads(text))
    return rel_from_text(text)


def _config_header(args, relator_text=None) -> str:
    rel = f" relator={relator_text}" if relator_text else ""
    return f"# seed={args.seed} max-size={args.max_size}{rel}"


def _config_doc(args, relator_text=None) -> dict:
    doc = {"seed": args.seed, "max_size": args.max_size}
    if relator_text:
        doc["relator"] = relator_text
    return doc


# ---------------------------------------------------------------------------
# handlers


def cmd_similarity(args) -> int:
    spec = syntax.parse_relator(args.relator)
    a, system_a = load_system(args.system, args.max_size)
    if args.other:
        b, _ = load_system(args.other, args.max_size)
    else:
        b = a
    sim = bisim.similarity(spec, a, b, args.max_size)

    oracle_verdict = None
    if not args.no_oracle:
        try:
            beq = bisim.behavioural_equivalence(a, b)
            oracle_verdict = sim == beq
        except SizeBoundExceeded:
            oracle_verdict = None

    if args.format == "json":
        doc = {
            "config": _config_doc(args, args.relator),
            "similarity": rel_to_json(sim),
            "matches_behavioural_equivalence": oracle_verdict,
        }
        print(json.dumps(doc, indent=2))
    elif args.format == "dot" and system_a is not None and not args.other:
        print(lts.lts_to_dot(system_a, witness=sim))
    else:
        print(_config_header(args, args.relator))
        classes = _equivalence_classes(sim) if not args.other or args.other == args.system else None
        if classes is not None:
            print(f"similarity is an equivalence with {len(classes)} classes:")
            for cls in classes:
                print("  {" + ", ".join(str(x) for x in cls) + "}")
        else:
            for x, y in sim.pairs():
                print(f"{x} ~ {y}")
        if oracle_verdict is not None:
            print(
                "matches behavioural equivalence"
                if oracle_verdict
                else "DIFFERS from behavioural equivalence"
            )
    return 0


def _equivalence_classes(rel: FinRel):
    """Partition of the carrier when the relation is an equivalence, else None."""
    if rel.dom != rel.cod:
        return None
    m = rel.matrix
    n = rel.dom.size
    if not all(m[i, i] for i in range(n)):
        return None
    if not np.array_equal(m, m.T):
        return None
    if ((m.astype(np.uint8) @ m.astype(np.uint8) > 0) & ~m).any():
        return None
    seen = set()
    classes = []
    for i in range(n):
        if i in seen:
            continue
        block = [j for j in range(n) if m[i, j]]
        seen.update(block)
        classes.append([rel.dom.elements[j] for j in block])
    return classes


def cmd_check(args) -> int:
    witness = load_relation(args.witness)
    a, system_a = load_system(args.system, args.max_size)
    if args.other:
        b, system_b = load_system(args.other, args.max_size)
    else:
        b, system_b = a, system_a

    if args.clausal:
        if system_a is None or system_b is None:
            raise ValueError("--clausal needs LTS inputs")
        verdict = lts.is_twisted_bisimulation_clausal(witness, system_a, system_b)
    else:
        if not args.relator:
            raise ValueError("provide --relator or --clausal")
        spec = syntax.parse_relator(args.relator)
        verdict = bisim.is_simulation(spec, witness, a, b, args.max_size)

    if args.format == "json":
        doc = {
            "config": _config_doc(args, getattr(args, "relator", None)),
            "holds": bool(verdict),
            "failing_pair": list(verdict.failing_pair) if verdict.failing_pair else None,
        }
        print(json.dumps(doc, indent=2))
    else:
        print(_config_header(args, getattr(args, "relator", None)))
        if verdict:
            print("witness holds")
        else:
            x, y = verdict.failing_pair
            print(f"witness FAILS at pair ({x}, {y})")
    return 0 if verdict else 1


def cmd_lattice(args) -> int:
    labels = finset(*[s.strip() for s in args.labels.split(",") if s.strip() != ""])
    lattice = submonoids.enumerate_nle(labels)
    if args.format == "dot":
        print(lattice.to_dot())
        return 0
    nodes_doc = [
        {
            "size": len(node),
            "generators": [[[x, y] for x, y in g.pairs()] for g in node.generators()],
        }
        for node in lattice.nodes
    ]
    if args.format == "json":
        doc = {
            "config": _config_doc(args),
            "labels": list(labels.elements),
            "exhaustive": lattice.exhaustive,
            "nodes": nodes_doc,
            "hasse": [list(e) for e in lattice.hasse_edges],
        }
        print(json.dumps(doc, indent=2))
    else:
        print(_config_header(args))
        kind = "exhaustive" if lattice.exhaustive else "generator-driven (lower bound)"
        print(f"{len(lattice.nodes)} normal liftings over {list(labels.elements)} ({kind})")
        for i, node in enumerate(nodes_doc):
            gens = node["generators"]
            text = "; ".join("{" + ", ".join(f"({x},{y})" for x, y in g) + "}" for g in gens)
            print(f"  node {i}: {node['size']} members, generators: {text if gens else '(none)'}")
        for lo, hi in lattice.hasse_edges:
            print(f"  edge: {lo} -> {hi}")
    return 0


def cmd_twisted(args) -> int:
    a, system_a = load_system(args.system, args.max_size)
    if system_a is None:
        raise ValueError("twisted needs LTS inputs")
    if args.other:
        b, system_b = load_system(args.other, args.max_size)
        if system_b is None:
            raise ValueError("twisted needs LTS inputs")
    else:
        b, system_b = a, system_a
    labels = system_a.labels
    chooser = {
        "top": lts.submonoid_top,
        "bot": lts.submonoid_bottom,
        "a": lts.submonoid_letter_a,
        "b": lts.submonoid_letter_b,
    }
    sub = chooser[args.submonoid](labels)
    spec = lts.twisted_relator(lts.TwistedSpec(labels, sub))

    if args.witness:
        witness = load_relation(args.witness)
        relator_verdict = bisim.is_simulation(spec, witness, a, b, args.max_size)
        clausal_verdict = None
        if labels.size == 2 and args.submonoid == "top":
            clausal_verdict = lts.is_twisted_bisimulation_clausal(witness, system_a, system_b)
            if bool(clausal_verdict) != bool(relator_verdict):
                raise AssertionError("clause checker disagrees with the lifting checker")
        verdict = relator_verdict
        if args.format == "json":
            print(json.dumps({
                "config": _config_doc(args),
                "submonoid": args.submonoid,
                "holds": bool(verdict),
                "failing_pair": list(verdict.failing_pair) if verdict.failing_pair else None,
            }, indent=2))
        else:
            print(_config_header(args))
            print("witness holds" if verdict else f"witness FAILS at {verdict.failing_pair}")
        return 0 if verdict else 1

    sim = bisim.similarity(spec, a, b, args.max_size)
    if args.format == "json":
        print(json.dumps({
            "config": _config_doc(args),
            "submonoid": args.submonoid,
            "similarity": rel_to_json(sim),
        }, indent=2))
    elif args.format == "dot":
        print(lts.lts_to_dot(system_a, witness=sim if not args.other else None))
    else:
        print(_config_header(args))
        for x, y in sim.pairs():
            print(f"{x} ~ {y}")
    return 0


def cmd_oracle_compare(args) -> int:
    functor = syntax.parse_functor(args.functor)
    rng = random.Random(args.seed)
    pairs = []
    for _ in range(args.pairs):
        nx = rng.randint(1, args.max_states)
        ny = rng.randint(1, args.max_states)
        pairs.append(
            (
                bisim.random_coalgebra(functor, named_carrier("x", nx), rng, args.max_size),
                bisim.random_coalgebra(functor, named_carrier("y", ny), rng, args.max_size),
            )
        )
    reports = []
    for text in args.relator:
        spec = syntax.parse_relator(text)
        reports.append(
            bisim.soundness_completeness_report(
                spec, pairs, label=text, seed=args.seed, max_size=args.max_size
            )
        )
    ok = all(r.sound and r.complete for r in reports)
    if args.format == "json":
        print(json.dumps({
            "config": _config_doc(args),
            "functor": args.functor,
            "reports": [
                {
                    "relator": r.label,
                    "pairs": r.pairs_checked,
                    "sound": r.sound,
                    "complete": r.complete,
                }
                for r in reports
            ],
        }, indent=2))
    else:
        print(_config_header(args))
        for r in reports:
            print(r.note())
    return 0 if ok else 1


def cmd_properties(args) -> int:
    spec = syntax.parse_relator(args.relator)
    size = args.size
    checks = [
        relators.is_normal(spec, max_size=min(size + 1, 3), lift_bound=args.max_size),
        relators.is_lax_extension(spec, max_size=size, seed=args.seed, lift_bound=args.max_size),
        relators.is_relational_connector(spec, max_size=size, seed=args.seed, lift_bound=args.max_size),
        relators.preserves_converses(spec, max_size=size, seed=args.seed, lift_bound=args.max_size),
        relators.difunctional_functoriality(spec, max_size=size, lift_bound=args.max_size),
    ]
    if args.format == "json":
        print(json.dumps({
            "config": _config_doc(args, args.relator),
            "results": [
                {
                    "law": c.law,
                    "holds": c.ok,
                    "checked": c.checked,
                    "empty_composite_only": c.empty_composite_only,
                }
                for c in checks
            ],
        }, indent=2))
    else:
        print(_config_header(args, args.relator))
        for c in checks:
            mark = "holds" if c.ok else "FAILS"
            extra = " (only on empty composites)" if c.empty_composite_only else ""
            print(f"{c.law}: {mark}{extra} [{c.checked} cases]")
            if not c.ok and c.counterexample is not None:
                print(f"  counterexample: {_show_counterexample(c.counterexample)}")
    return 0 if all(c.ok for c in checks) else 1


def _show_counterexample(cex: dict) -> str:
    parts = []
    for key, value in cex.items():
        if isinstance(value, FinRel):
            parts.append(f"{key}={sorted(value.pairs())}")
        else:
            parts.append(f"{key}={value!r}")
    return ", ".join(parts)


# ---------------------------------------------------------------------------
# fixture suite


def _fx_powerset_egli_milner():
    from .relators import Barr, lift

    dom = finset("x", "y")
    cod = finset("1")
    r = FinRel.from_pairs(dom, cod, [("x", "1")])
    lifted = lift(Barr(functors.Pow()), r)
    ok = lifted.contains(("x",), ("1",)) and not lifted.contains(("x", "y"), ("1",))
    return ok, "singleton related, superset not"


def _fx_identity_cotabulation():
    from .finrel import compose
    from .relators import CoBarr, lift

    one, two = finset("*"), finset("a", "b")
    z = FinRel.from_pairs(two, two, [("a", "a"), ("b", "a"), ("b", "b")])
    a_graph = FinRel.from_pairs(one, two, [("*", "a")])
    spec = CoBarr(functors.Id())
    lhs = lift(spec, compose(a_graph, z))
    rhs = compose(lift(spec, a_graph), lift(spec, z))
    ok = (
        lhs == a_graph
        and rhs == FinRel.from_pairs(one, two, [("*", "a"), ("*", "b")])
        and not leq(rhs, lhs)
    )
    return ok, "lax composition fails on the two-point endorelation"


def _fx_exp2_twisted_generator():
    from .relators import Barr, SubmonoidExp, lift

    two = finset("a", "b")
    phi_b = FinRel.from_pairs(two, two, [("a", "b"), ("b", "b"), ("b", "a")])
    spec = SubmonoidExp(two, lts.submonoid_letter_b(two))
    ident = ("a", "b")
    ok = lift(spec, phi_b).contains(ident, ident) and not lift(
        Barr(functors.Exp(two)), phi_b
    ).contains(ident, ident)
    return ok, "generator relates the identity, the plain lifting does not"


def _fx_exp3_nonsymmetric():
    from .finrel import converse
    from .relators import SubmonoidExp, lift
    from .submonoids import generate

    three = finset("a", "b", "c")
    pairs = [(x, y) for x in three for y in three if (x, y) not in (("a", "a"), ("b", "c"))]
    phi = FinRel.from_pairs(three, three, pairs)
    spec = SubmonoidExp(three, generate(three, [phi]))
    ident = ("a", "b", "c")
    ok = (
        lift(spec, phi).contains(ident, ident)
        and not lift(spec, converse(phi)).contains(ident, ident)
        and relators.is_normal(spec, max_size=3).ok
    )
    return ok, "normal but not converse-preserving"


def _fx_lattice_diamond():
    two = finset("a", "b")
    lattice = submonoids.enumerate_nle(two)
    phi_a = frozenset([("a", "a"), ("a", "b"), ("b", "a")])
    phi_b = frozenset([("a", "b"), ("b", "b"), ("b", "a")])
    gens = [frozenset(frozenset(g.pairs()) for g in node.generators()) for node in lattice.nodes]
    ok = (
        len(lattice.nodes) == 4
        and gens == [frozenset(), frozenset([phi_a]), frozenset([phi_b]), frozenset([phi_a, phi_b])]
        and set(lattice.hasse_edges) == {(0, 1), (0, 2), (1, 3), (2, 3)}
    )
    return ok, "four liftings in a diamond"


def _fx_cycle_family():
    system = lts.minimization_family(2, 3)
    witness = lts.linear_witness(2, 3)
    coalg = lts.to_coalgebra(system)
    std = lts.standard_relator(system.labels)
    minimal = bisim.minimal_witness(std, coalg, coalg, ("s0", "t0"))
    cross = {(x, y) for x, y in minimal.pairs() if x.startswith("s") and y.startswith("t")}
    ok = witness.count() == 16 and len(cross) == 6
    return ok, "linear twisted witness vs quadratic cross block"


def _fx_four_state():
    system = lts.final_example_lts()
    coalg = lts.to_coalgebra(system)
    std = lts.standard_relator(system.labels)
    tw = lts.twisted_relator(lts.TwistedSpec(system.labels, lts.submonoid_top(system.labels)))
    w_std = bisim.minimal_witness(std, coalg, coalg, ("p", "q"))
    w_tw = bisim.minimal_witness(tw, coalg, coalg, ("p", "q"))
    expected = {("p", "q"), ("x", "x"), ("x", "y"), ("y", "y"), ("y", "x")}
    four = FinRel.from_pairs(
        system.states, system.states, [("p", "q"), ("x", "x"), ("x", "y"), ("y", "y")]
    )
    ok = (
        set(w_std.pairs()) == expected
        and w_tw.count() == 4
        and bool(lts.is_twisted_bisimulation_clausal(four, system, system))
    )
    return ok, "five-pair plain witness, four-pair twisted witness"


FIXTURES = {
    "powerset-egli-milner": _fx_powerset_egli_milner,
    "identity-cotabulation-composition": _fx_identity_cotabulation,
    "exp2-twisted-generator": _fx_exp2_twisted_generator,
    "exp3-nonsymmetric": _fx_exp3_nonsymmetric,
    "lattice-diamond": _fx_lattice_diamond,
    "cycle-family": _fx_cycle_family,
    "four-state-twisted": _fx_four_state,
}


def cmd_examples(args) -> int:
    results = []
    for name, fixture in FIXTURES.items():
        try:
            ok, detail = fixture()
        except Exception as exc:  # a broken fixture is a failure, not a crash
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append({"name": name, "ok": bool(ok), "detail": detail})
    if getattr(args, "as_json", False):
        print(json.dumps({"fixtures": results}, indent=2))
    else:
        for r in results:
            mark = "PASS" if r["ok"] else "FAIL"
            print(f"{mark} {r['name']}: {r['detail']}")
    return 0 if all(r["ok"] for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
