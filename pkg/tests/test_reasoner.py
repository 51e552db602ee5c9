import random

import pytest

from obdm import vocab
from obdm.rdf import Graph, Iri, Triple
from obdm.reasoner import (
    ClassAtom,
    EdgeAtom,
    MalformedPattern,
    NotEntailed,
    Pattern,
    explain,
    index_graph,
    match,
    materialize,
    parse_pattern,
)

from conftest import EX, FIXTURES

BFO = EX + "bfo/"
AFO = EX + "afo/"
CHEBI = EX + "chebi/"
NN = EX + "NN/"
REL = EX + "rel/"


def iri(local):
    return Iri(EX + local)


def sub(a, b):
    return Triple(a, vocab.RDFS_SUBCLASSOF, b)


def equiv(a, b):
    return Triple(a, vocab.OWL_EQUIVALENT_CLASS, b)


def graph_of(triples):
    return Graph.of(triples, {"ex": EX})


# ---------------------------------------------------------------------------
# closure on the two fixtures, checked by hand


def test_toy_closure(toy_graph):
    ig = materialize(toy_graph)
    # R1: A sub B, B sub C gives A sub C
    assert ig.has_sub(iri("A"), iri("C"))
    # R4 then R1: A2 equiv A gives A2 sub B and A2 sub C
    assert ig.has_sub(iri("A2"), iri("B"))
    assert ig.has_sub(iri("A2"), iri("C"))
    # R2: equivalence is symmetric
    assert iri("A") in ig.equiv_closure[iri("A2")]
    assert iri("A2") in ig.equiv_closure[iri("A")]
    # nothing says C is below anything
    assert ig.sub_closure.get(iri("C"), set()) == set()


def test_lab_derived_role_edge(lab_graph):
    ig = materialize(lab_graph)
    # CompoundY equiv CompoundClassQ, Q has_role AntiObesityAgent (restriction)
    assert ig.has_rel(Iri(CHEBI + "CompoundClassQ"), Iri(REL + "has_role"), Iri(CHEBI + "AntiObesityAgent"))
    assert ig.has_rel(Iri(NN + "CompoundY"), Iri(REL + "has_role"), Iri(CHEBI + "AntiObesityAgent"))
    # R6: involves follows the object-side equivalence
    assert ig.has_rel(Iri(NN + "ExperimentX"), Iri(REL + "involves"), Iri(CHEBI + "CompoundClassQ"))
    # sub closure reaches the upper level
    assert ig.has_sub(Iri(NN + "ExperimentX"), Iri(BFO + "Process"))
    assert ig.has_sub(Iri(NN + "CompoundY"), Iri(BFO + "MaterialEntity"))


def test_materialize_is_fixpoint(lab_graph):
    once = materialize(lab_graph)
    again = materialize(once.all_triples())
    assert again.derived == frozenset()
    assert again.sub_closure == once.sub_closure
    assert again.rel_edges == once.rel_edges


def test_monotonicity(toy_graph):
    ig = materialize(toy_graph)
    extra = Triple(iri("C"), vocab.RDFS_SUBCLASSOF, iri("D"))
    bigger = materialize(Graph.of(toy_graph.triples | {extra}, toy_graph.prefix_map))
    for node, supers in ig.sub_closure.items():
        assert supers <= bigger.sub_closure[node]
    assert bigger.has_sub(iri("A"), iri("D"))


def test_cyclic_subclass_closure():
    a, b, c = iri("A"), iri("B"), iri("C")
    ig = materialize(graph_of([sub(a, b), sub(b, a), sub(b, c)]))
    # every cycle member reaches every member, including itself
    assert ig.sub_closure[a] == {a, b, c}
    assert ig.sub_closure[b] == {a, b, c}


# ---------------------------------------------------------------------------
# independent reachability oracle over random graphs


def naive_closure(nodes, edges):
    reach = {n: set() for n in nodes}
    for a, b in edges:
        reach[a].add(b)
    changed = True
    while changed:
        changed = False
        for n in nodes:
            extra = set()
            for m in reach[n]:
                extra |= reach[m]
            if not extra <= reach[n]:
                reach[n] |= extra
                changed = True
    return reach


def test_random_graphs_against_naive_oracle():
    rng = random.Random(4242)
    for case in range(100):
        n = rng.randint(2, 100)
        nodes = [iri(f"N{i}") for i in range(n)]
        edges = set()
        for _ in range(rng.randint(0, 2 * n)):
            a, b = rng.choice(nodes), rng.choice(nodes)
            edges.add((a, b))
        ig = materialize(graph_of([sub(a, b) for a, b in edges]))
        expected = naive_closure(nodes, edges)
        for node in nodes:
            assert ig.sub_closure.get(node, set()) == expected[node], f"case {case}"


def test_random_equivalence_against_naive_oracle():
    rng = random.Random(777)
    for _ in range(50):
        nodes = [iri(f"E{i}") for i in range(rng.randint(2, 20))]
        pairs = set()
        for _ in range(rng.randint(0, 15)):
            a, b = rng.sample(nodes, 2)
            pairs.add((a, b))
        ig = materialize(graph_of([equiv(a, b) for a, b in pairs]))
        # oracle: undirected connected components
        adj = {n: set() for n in nodes}
        for a, b in pairs:
            adj[a].add(b)
            adj[b].add(a)
        for a, b in pairs:
            comp, stack = {a}, [a]
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y not in comp:
                        comp.add(y)
                        stack.append(y)
            assert ig.equiv_closure[a] == comp - {a}


# ---------------------------------------------------------------------------
# explanation trees


def test_explain_base_triple(toy_graph):
    ig = materialize(toy_graph)
    d = explain(ig, sub(iri("A"), iri("B")))
    assert d.rule == "base"
    assert d.premises == ()


def test_explain_transitive_sub(toy_graph):
    ig = materialize(toy_graph)
    d = explain(ig, sub(iri("A"), iri("C")))
    assert d.rule == "R1"
    assert d.rules_used() == {"R1"}
    leaves = [p for p in d.premises]
    assert all(leaf.rule == "base" for leaf in leaves)


def test_explain_equiv_sub_uses_r4(toy_graph):
    ig = materialize(toy_graph)
    d = explain(ig, sub(iri("A2"), iri("C")))
    assert "R4" in d.rules_used()
    assert "R1" in d.rules_used()


def test_explain_symmetric_equiv(toy_graph):
    ig = materialize(toy_graph)
    base_dirs = {t for t in toy_graph.triples if t.predicate == vocab.OWL_EQUIVALENT_CLASS}
    (base,) = base_dirs
    d = explain(ig, equiv(base.object, base.subject))
    assert d.rule == "R2"
    assert d.premises[0].rule == "base"


def test_explain_derived_role_edge(lab_graph):
    ig = materialize(lab_graph)
    t = Triple(Iri(NN + "CompoundY"), Iri(REL + "has_role"), Iri(CHEBI + "AntiObesityAgent"))
    d = explain(ig, t)
    assert "R5" in d.rules_used()
    assert d.conclusion == t


def test_explain_r6_edge(lab_graph):
    ig = materialize(lab_graph)
    t = Triple(Iri(NN + "ExperimentX"), Iri(REL + "involves"), Iri(CHEBI + "CompoundClassQ"))
    d = explain(ig, t)
    assert d.rule == "R6"


def test_explain_not_entailed(toy_graph):
    ig = materialize(toy_graph)
    with pytest.raises(NotEntailed):
        explain(ig, sub(iri("C"), iri("A")))


def test_explain_as_dict_shape(toy_graph):
    ig = materialize(toy_graph)
    d = explain(ig, sub(iri("A"), iri("C"))).as_dict()
    assert set(d) == {"rule", "conclusion", "premises"}
    assert isinstance(d["premises"], list)


# ---------------------------------------------------------------------------
# patterns


def test_parse_pattern_file(lab_graph):
    text = (FIXTURES / "lab.pattern").read_text()
    p = parse_pattern(text, lab_graph.prefix_map)
    assert len(p.atoms) == 5
    assert p.variables() == ["e", "c", "r"]


def test_parse_pattern_errors():
    with pytest.raises(MalformedPattern):
        parse_pattern("")
    with pytest.raises(MalformedPattern):
        parse_pattern("class x <http://example.org/A>")
    with pytest.raises(MalformedPattern):
        parse_pattern("edge ?a ex:p ?b", {})
    with pytest.raises(MalformedPattern):
        parse_pattern("wibble ?a ?b")
    # disconnected class atom
    with pytest.raises(MalformedPattern):
        parse_pattern(
            "class ?a <http://example.org/A>\nedge ?b <http://example.org/p> ?c"
        )


def test_match_single_class_atom(toy_graph):
    ig = materialize(toy_graph)
    p = Pattern((ClassAtom("x", iri("C")),))
    got = match(ig, p)
    # A, A2 and B are below C; dedup keeps one of the equivalent pair
    values = {b["x"] for b in got}
    assert iri("B") in values
    assert iri("C") in values
    assert len({iri("A"), iri("A2")} & values) == 1


def test_match_lab_pattern_single_binding(lab_graph):
    ig = materialize(lab_graph)
    p = parse_pattern((FIXTURES / "lab.pattern").read_text(), lab_graph.prefix_map)
    got = match(ig, p)
    assert len(got) == 1
    binding = got[0]
    assert binding["e"] == Iri(NN + "ExperimentX")
    assert binding["c"] == Iri(NN + "CompoundY")
    assert binding["r"] == Iri(CHEBI + "AntiObesityAgent")


def test_match_without_materialization_misses_derived(lab_graph):
    ig = index_graph(lab_graph)
    p = parse_pattern((FIXTURES / "lab.pattern").read_text(), lab_graph.prefix_map)
    # CompoundY has no has_role edge before the rules run
    assert match(ig, p) == []


def test_match_results_sorted(toy_graph):
    ig = materialize(toy_graph)
    ex_p = iri("p")
    g = graph_of(
        [
            Triple(iri("S2"), ex_p, iri("O")),
            Triple(iri("S1"), ex_p, iri("O")),
        ]
    )
    got = match(materialize(g), Pattern((EdgeAtom("s", ex_p, "o"),)))
    assert [b["s"] for b in got] == [iri("S1"), iri("S2")]


def test_match_join_respects_bindings():
    ex_p, ex_q = iri("p"), iri("q")
    g = graph_of(
        [
            Triple(iri("X"), ex_p, iri("Y")),
            Triple(iri("Y"), ex_q, iri("Z")),
            Triple(iri("X"), ex_p, iri("W")),
        ]
    )
    got = match(
        materialize(g),
        Pattern((EdgeAtom("a", ex_p, "b"), EdgeAtom("b", ex_q, "c"))),
    )
    assert got == [{"a": iri("X"), "b": iri("Y"), "c": iri("Z")}]
