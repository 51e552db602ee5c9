import json

import pytest

from obdm import store
from obdm.rdf import Iri

from conftest import ENRICH_NS, TAX_NS


def mint(local):
    return Iri(TAX_NS + local)


@pytest.fixture
def toy_taxonomy(toy_conversion):
    taxonomy, _, _ = toy_conversion
    return taxonomy


@pytest.fixture
def toy_mappings(toy_conversion):
    _, mappings, _ = toy_conversion
    return mappings


def test_add_enrichment_happy_path(toy_taxonomy, mint_config):
    out, iri = store.add_enrichment(
        toy_taxonomy, mint("B"), "alpha-variant", "a variant", mint_config
    )
    assert iri.value.startswith(ENRICH_NS + "alpha-variant-")
    rec = out.concepts[iri]
    assert rec.status == "proposed"
    assert rec.broader == {mint("B")}
    assert rec.sources == set()
    # input unchanged
    assert iri not in toy_taxonomy.concepts


def test_add_enrichment_unknown_parent(toy_taxonomy, mint_config):
    with pytest.raises(store.UnknownParent):
        store.add_enrichment(toy_taxonomy, mint("nope"), "x", None, mint_config)


def test_add_enrichment_duplicate_label(toy_taxonomy, mint_config):
    out, _ = store.add_enrichment(toy_taxonomy, mint("B"), "dup", None, mint_config)
    with pytest.raises(store.DuplicateLabelUnderParent):
        store.add_enrichment(out, mint("B"), "dup", None, mint_config)


def test_enrichment_chain_allowed_and_rooted(toy_taxonomy, mint_config):
    out, first = store.add_enrichment(toy_taxonomy, mint("B"), "level one", None, mint_config)
    out, second = store.add_enrichment(out, first, "level two", None, mint_config)
    assert out.concepts[second].broader == {first}


def test_approve_and_reject(toy_taxonomy, mint_config):
    out, iri = store.add_enrichment(toy_taxonomy, mint("B"), "x", None, mint_config)
    approved = store.approve_enrichment(out, iri)
    assert approved.concepts[iri].status == "approved"
    with pytest.raises(store.NotProposed):
        store.approve_enrichment(approved, iri)
    with pytest.raises(store.NotProposed):
        store.reject_enrichment(approved, iri)
    rejected = store.reject_enrichment(out, iri)
    assert iri not in rejected.concepts


def test_reject_with_children_fails(toy_taxonomy, mint_config):
    out, first = store.add_enrichment(toy_taxonomy, mint("B"), "parent", None, mint_config)
    out, _ = store.add_enrichment(out, first, "child", None, mint_config)
    with pytest.raises(store.HasChildren):
        store.reject_enrichment(out, first)


def test_rebase_identity_carries_everything(toy_taxonomy, mint_config):
    old, iri = store.add_enrichment(toy_taxonomy, mint("B"), "keep me", None, mint_config)
    fresh = toy_taxonomy.copy()
    result, report = store.rebase(old, fresh)
    assert report.carried == {iri}
    assert report.orphaned == set()
    assert iri in result.concepts


def test_rebase_orphans_when_parent_vanishes(toy_taxonomy, mint_config):
    old, iri = store.add_enrichment(toy_taxonomy, mint("B"), "orphan me", None, mint_config)
    fresh = toy_taxonomy.copy()
    del fresh.concepts[mint("B")]
    fresh.concepts[mint("A")].broader = set()
    result, report = store.rebase(old, fresh)
    assert report.carried == set()
    assert report.orphaned == {(iri, mint("B"))}
    assert iri not in result.concepts


def test_rebase_reports_relabels(toy_taxonomy):
    fresh = toy_taxonomy.copy()
    fresh.concepts[mint("A")].pref_label = "alfa"
    _, report = store.rebase(toy_taxonomy, fresh)
    assert report.relabeled == {(mint("A"), "alpha", "alfa")}


def test_rebase_conservation(toy_taxonomy, mint_config):
    old = toy_taxonomy
    iris = []
    for i, parent in enumerate([mint("B"), mint("C"), mint("A")]):
        old, iri = store.add_enrichment(old, parent, f"enrichment {i}", None, mint_config)
        iris.append(iri)
    fresh = toy_taxonomy.copy()
    del fresh.concepts[mint("C")]
    fresh.concepts[mint("B")].broader = set()
    result, report = store.rebase(old, fresh)
    assert len(report.carried) + len(report.orphaned) == 3


def test_save_load_round_trip(tmp_path, toy_taxonomy, toy_mappings, mint_config):
    t, iri = store.add_enrichment(toy_taxonomy, mint("B"), "persisted", "def", mint_config)
    t = store.approve_enrichment(t, iri)
    events = [
        store.EnrichmentEvent("add", iri.value, parent=mint("B").value, label="persisted", definition="def", timestamp=1, actor="tester"),
        store.EnrichmentEvent("approve", iri.value, timestamp=2, actor="tester"),
    ]
    store.save_store(t, toy_mappings, events, tmp_path)
    loaded_t, loaded_m, loaded_e = store.load_store(tmp_path)
    assert set(loaded_t.concepts) == set(t.concepts)
    assert loaded_t.concepts[iri].status == "approved"
    assert loaded_t.concepts[mint("A")].sources == t.concepts[mint("A")].sources
    assert loaded_m.same_mappings(toy_mappings)
    assert loaded_e == events


def test_save_is_byte_deterministic(tmp_path, toy_taxonomy, toy_mappings):
    d1, d2 = tmp_path / "one", tmp_path / "two"
    store.save_store(toy_taxonomy, toy_mappings, [], d1)
    loaded = store.load_store(d1)
    store.save_store(*loaded, d2)
    for name in (store.TAXONOMY_FILE, store.MAPPINGS_FILE, store.EVENTS_FILE):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


def test_load_missing_directory_is_io_error(tmp_path):
    with pytest.raises(store.StoreIoError):
        store.load_store(tmp_path / "nothing")


def test_load_with_bad_event_parent_is_corrupt(tmp_path, toy_taxonomy, toy_mappings):
    store.save_store(toy_taxonomy, toy_mappings, [], tmp_path)
    bad = store.EnrichmentEvent(
        "add", ENRICH_NS + "x", parent=TAX_NS + "missing", label="x", timestamp=1, actor="t"
    )
    (tmp_path / store.EVENTS_FILE).write_text(bad.to_json() + "\n")
    with pytest.raises(store.CorruptStore):
        store.load_store(tmp_path)


def test_event_journal_field_names(tmp_path, toy_taxonomy, toy_mappings, mint_config):
    t, iri = store.add_enrichment(toy_taxonomy, mint("B"), "journal", None, mint_config)
    events = [
        store.EnrichmentEvent("add", iri.value, parent=mint("B").value, label="journal", timestamp=5, actor="a")
    ]
    store.save_store(t, toy_mappings, events, tmp_path)
    line = (tmp_path / store.EVENTS_FILE).read_text().splitlines()[0]
    assert list(json.loads(line)) == [
        "kind", "concept", "parent", "label", "definition", "timestamp", "actor",
    ]


def test_lock_blocks_second_writer(tmp_path, toy_taxonomy, toy_mappings):
    (tmp_path).mkdir(exist_ok=True)
    (tmp_path / store.LOCK_FILE).write_text("123")
    with pytest.raises(store.StoreIoError):
        store.save_store(toy_taxonomy, toy_mappings, [], tmp_path)


def test_enrichment_rooting_invariant(toy_taxonomy, mint_config):
    t = toy_taxonomy
    t, first = store.add_enrichment(t, mint("C"), "one", None, mint_config)
    t, second = store.add_enrichment(t, first, "two", None, mint_config)
    t = store.approve_enrichment(t, first)
    for iri, rec in t.concepts.items():
        if rec.is_enrichment:
            assert store._rooted(t, iri)
