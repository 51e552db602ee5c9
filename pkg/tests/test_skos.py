import pytest

from obdm import skos
from obdm.owl import OntologyModel
from obdm.rdf import Iri, parse_turtle, serialize_turtle
from obdm.sssom import emit_sssom

from conftest import EX, TAX_NS


def iri(local):
    return Iri(EX + local)


def mint(local):
    return Iri(TAX_NS + local)


def test_mint_iri_basic(mint_config):
    out = skos.mint_iri(Iri("http://purl.obolibrary.org/obo/CHEBI_24431"), mint_config)
    assert out == Iri(TAX_NS + "CHEBI_24431")


def test_mint_iri_collision_gets_hash_suffix(mint_config):
    taken = {}
    first = skos.mint_iri(Iri("http://one.example/X"), mint_config, taken)
    taken[first] = Iri("http://one.example/X")
    second = skos.mint_iri(Iri("http://two.example/X"), mint_config, taken)
    assert first != second
    assert second.value.startswith(TAX_NS + "X-")
    assert len(second.value.split("-")[-1]) == 8


def test_mint_iri_stable(mint_config):
    src = Iri("http://one.example/Thing")
    assert skos.mint_iri(src, mint_config) == skos.mint_iri(src, mint_config)


def test_toy_conversion_shape(toy_conversion):
    taxonomy, mappings, report = toy_conversion
    assert len(taxonomy.concepts) == 3
    assert mint("A") in taxonomy.concepts  # A+A2 merged under smallest source
    assert taxonomy.concepts[mint("A")].broader == {mint("B")}
    assert taxonomy.concepts[mint("B")].broader == {mint("C")}
    assert taxonomy.concepts[mint("A")].pref_label == "alpha"
    assert taxonomy.concepts[mint("A")].sources == {iri("A"), iri("A2")}
    rows = {(r.subject_id, r.predicate_id, r.object_id) for r in mappings.records}
    assert rows == {
        ("tax:A", "skos:exactMatch", "ex:A"),
        ("tax:A", "skos:exactMatch", "ex:A2"),
        ("tax:B", "skos:exactMatch", "ex:B"),
        ("tax:C", "skos:exactMatch", "ex:C"),
    }
    assert report.concept_count == 3
    assert report.merged_groups == [[EX + "A", EX + "A2"]]


def test_empty_model(mint_config):
    taxonomy, mappings, report = skos.convert(OntologyModel(), mint_config)
    assert taxonomy.concepts == {}
    assert mappings.records == []
    assert report.as_dict()["concept_count"] == 0


def test_cycle_raises(mint_config):
    m = OntologyModel()
    m.classes = {iri("A"), iri("B")}
    m.subclass_edges = {(iri("A"), iri("B")), (iri("B"), iri("A"))}
    with pytest.raises(skos.CycleError) as exc_info:
        skos.convert(m, mint_config)
    assert len(exc_info.value.cycle) == 3  # A -> B -> A


def test_deprecated_excluded(mint_config):
    m = OntologyModel()
    m.classes = {iri("A"), iri("Old")}
    m.deprecated = {iri("Old")}
    taxonomy, mappings, report = skos.convert(m, mint_config)
    assert set(taxonomy.concepts) == {mint("A")}
    assert report.excluded_deprecated == [EX + "Old"]


def test_label_fallback_reported(mint_config):
    m = OntologyModel()
    m.classes = {iri("NoLabel")}
    taxonomy, _, report = skos.convert(m, mint_config)
    assert taxonomy.concepts[mint("NoLabel")].pref_label == "NoLabel"
    assert report.label_fallbacks == [EX + "NoLabel"]


def test_mapping_count_matches_retained_classes(toy_model, mint_config):
    taxonomy, mappings, _ = skos.convert(toy_model, mint_config)
    assert len(mappings.records) == len(toy_model.classes) - len(toy_model.deprecated)


def test_conversion_deterministic(toy_model, toy_graph, mint_config):
    runs = [
        skos.convert(toy_model, mint_config, prefixes=toy_graph.prefix_map)
        for _ in range(2)
    ]
    ttl = [serialize_turtle(skos.taxonomy_to_graph(t)) for t, _, _ in runs]
    tsv = [emit_sssom(m) for _, m, _ in runs]
    assert ttl[0] == ttl[1]
    assert tsv[0] == tsv[1]


def test_broader_is_acyclic(toy_conversion):
    taxonomy, _, _ = toy_conversion
    # Kahn topological sort must consume every concept
    remaining = {c: set(rec.broader) for c, rec in taxonomy.concepts.items()}
    done = set()
    while remaining:
        ready = [c for c, deps in remaining.items() if deps <= done]
        assert ready, "cycle detected"
        for c in ready:
            done.add(c)
            del remaining[c]


def test_equivalence_merge_collapses_subclass_self_loop(mint_config):
    # A equiv B plus A subclassOf B must not create a broader self-loop
    m = OntologyModel()
    m.classes = {iri("A"), iri("B")}
    m.equivalence_pairs = {frozenset({iri("A"), iri("B")})}
    m.subclass_edges = {(iri("A"), iri("B"))}
    taxonomy, _, _ = skos.convert(m, mint_config)
    assert set(taxonomy.concepts) == {mint("A")}
    assert taxonomy.concepts[mint("A")].broader == set()


def test_taxonomy_graph_round_trip(toy_conversion):
    taxonomy, mappings, _ = toy_conversion
    g = skos.taxonomy_to_graph(taxonomy)
    back = skos.graph_to_taxonomy(parse_turtle(serialize_turtle(g)), mappings)
    assert set(back.concepts) == set(taxonomy.concepts)
    for c in taxonomy.concepts:
        assert back.concepts[c].pref_label == taxonomy.concepts[c].pref_label
        assert back.concepts[c].broader == taxonomy.concepts[c].broader
        assert back.concepts[c].sources == taxonomy.concepts[c].sources
