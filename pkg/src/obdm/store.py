"""Taxonomy persistence, the enrichment lifecycle, and version rebasing.

A store directory holds the published taxonomy (canonical Turtle), its
SSSOM mapping file, and an append-only JSONL journal of enrichment events.
Loading replays the journal over the published taxonomy, so enrichment
state never needs its own serialization format.
"""

from __future__ import annotations

import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .rdf import Iri, parse_turtle, serialize_turtle
from .skos import (
    ConceptRecord,
    MintConfig,
    SkosTaxonomy,
    mint_enrichment_iri,
    taxonomy_to_graph,
)
from .sssom import MappingSet, emit_sssom, parse_sssom
from . import skos

TAXONOMY_FILE = "taxonomy.ttl"
MAPPINGS_FILE = "mappings.sssom.tsv"
EVENTS_FILE = "enrichments.jsonl"
LOCK_FILE = "store.lock"


class StoreError(Exception):
    pass


class UnknownParent(StoreError):
    pass


class UnrootedParent(StoreError):
    pass


class DuplicateLabelUnderParent(StoreError):
    pass


class NotProposed(StoreError):
    pass


class HasChildren(StoreError):
    pass


class CorruptStore(StoreError):
    pass


class StoreIoError(StoreError):
    pass


@dataclass(frozen=True)
class EnrichmentEvent:
    kind: str  # add | approve | reject
    concept: str
    parent: Optional[str] = None
    label: Optional[str] = None
    definition: Optional[str] = None
    timestamp: int = 0
    actor: str = "system"

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "concept": self.concept,
                "parent": self.parent,
                "label": self.label,
                "definition": self.definition,
                "timestamp": self.timestamp,
                "actor": self.actor,
            }
        )

    @staticmethod
    def from_json(line: str) -> "EnrichmentEvent":
        data = json.loads(line)
        return EnrichmentEvent(
            kind=data["kind"],
            concept=data["concept"],
            parent=data.get("parent"),
            label=data.get("label"),
            definition=data.get("definition"),
            timestamp=data.get("timestamp", 0),
            actor=data.get("actor", "system"),
        )


@dataclass
class UpdateReport:
    carried: set[Iri] = field(default_factory=set)
    orphaned: set[tuple[Iri, Iri]] = field(default_factory=set)
    relabeled: set[tuple[Iri, str, str]] = field(default_factory=set)

    def as_dict(self) -> dict:
        return {
            "carried": sorted(c.value for c in self.carried),
            "orphaned": sorted([c.value, p.value] for c, p in self.orphaned),
            "relabeled": sorted([c.value, old, new] for c, old, new in self.relabeled),
        }


def _rooted(t: SkosTaxonomy, concept: Iri) -> bool:
    # ancestor chain (including the node itself) must hit a mapped concept
    seen: set[Iri] = set()
    stack = [concept]
    while stack:
        node = stack.pop()
        if node in seen or node not in t.concepts:
            continue
        seen.add(node)
        rec = t.concepts[node]
        if rec.sources:
            return True
        stack.extend(rec.broader)
    return False


def add_enrichment(
    t: SkosTaxonomy,
    parent: Iri,
    label: str,
    definition: Optional[str],
    cfg: MintConfig,
) -> tuple[SkosTaxonomy, Iri]:
    if not label:
        raise StoreError("enrichment label must be non-empty")
    if parent not in t.concepts:
        raise UnknownParent(f"parent not in taxonomy: {parent}")
    if not _rooted(t, parent):
        raise UnrootedParent(f"parent has no source-mapped ancestor: {parent}")
    for child in t.narrower(parent):
        if t.concepts[child].pref_label == label:
            raise DuplicateLabelUnderParent(
                f"label {label!r} already exists under {parent}"
            )
    iri = mint_enrichment_iri(label, parent, cfg)
    out = t.copy()
    out.concepts[iri] = ConceptRecord(
        pref_label=label,
        definition=definition,
        broader={parent},
        status="proposed",
        sources=set(),
    )
    return out, iri


def approve_enrichment(t: SkosTaxonomy, concept: Iri) -> SkosTaxonomy:
    rec = t.concepts.get(concept)
    if rec is None or rec.status != "proposed":
        raise NotProposed(f"concept is not a proposed enrichment: {concept}")
    out = t.copy()
    out.concepts[concept].status = "approved"
    return out


def reject_enrichment(t: SkosTaxonomy, concept: Iri) -> SkosTaxonomy:
    rec = t.concepts.get(concept)
    if rec is None or rec.status != "proposed":
        raise NotProposed(f"concept is not a proposed enrichment: {concept}")
    if t.narrower(concept):
        raise HasChildren(f"cannot reject enrichment with children: {concept}")
    out = t.copy()
    del out.concepts[concept]
    return out


def rebase(old: SkosTaxonomy, fresh: SkosTaxonomy) -> tuple[SkosTaxonomy, UpdateReport]:
    report = UpdateReport()
    result = fresh.copy()

    for iri, rec in old.concepts.items():
        if rec.is_enrichment:
            continue
        fresh_rec = fresh.concepts.get(iri)
        if fresh_rec is not None and fresh_rec.pref_label != rec.pref_label:
            report.relabeled.add((iri, rec.pref_label, fresh_rec.pref_label))

    enrichments = {iri: rec for iri, rec in old.concepts.items() if rec.is_enrichment}
    # process in dependency order so enrichment chains carry over together
    pending = dict(enrichments)
    progressed = True
    while pending and progressed:
        progressed = False
        for iri in sorted(pending, key=lambda c: c.value):
            rec = pending[iri]
            parents = rec.broader
            if any(p in pending for p in parents):
                continue
            progressed = True
            del pending[iri]
            missing = [p for p in parents if p not in result.concepts]
            if missing:
                report.orphaned.add((iri, sorted(missing, key=lambda c: c.value)[0]))
            else:
                result.concepts[iri] = rec.copy()
                report.carried.add(iri)
    for iri, rec in pending.items():  # broader cycles among enrichments
        report.orphaned.add((iri, sorted(rec.broader, key=lambda c: c.value)[0]))
    return result, report


# ---------------------------------------------------------------------------
# Persistence


@contextmanager
def _store_lock(directory: Path):
    lock_path = directory / LOCK_FILE
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise StoreIoError(f"store is locked: {lock_path}")
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        try:
            lock_path.unlink()
        except FileNotFoundError:
            pass


def save_store(
    t: SkosTaxonomy,
    mappings: MappingSet,
    events: list[EnrichmentEvent],
    directory: str | Path,
) -> None:
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        with _store_lock(directory):
            published = t.published_part()
            (directory / TAXONOMY_FILE).write_text(
                serialize_turtle(taxonomy_to_graph(published)), encoding="utf-8"
            )
            (directory / MAPPINGS_FILE).write_text(emit_sssom(mappings), encoding="utf-8")
            with open(directory / EVENTS_FILE, "w", encoding="utf-8") as fh:
                for event in events:
                    fh.write(event.to_json() + "\n")
    except OSError as exc:
        raise StoreIoError(str(exc)) from exc


def replay_events(
    taxonomy: SkosTaxonomy, events: list[EnrichmentEvent]
) -> SkosTaxonomy:
    t = taxonomy.copy()
    for event in events:
        concept = Iri(event.concept)
        if event.kind == "add":
            if event.parent is None or event.label is None:
                raise CorruptStore(f"add event missing parent/label: {event.concept}")
            parent = Iri(event.parent)
            if parent not in t.concepts:
                raise CorruptStore(f"add event references unknown parent: {event.parent}")
            t.concepts[concept] = ConceptRecord(
                pref_label=event.label,
                definition=event.definition,
                broader={parent},
                status="proposed",
                sources=set(),
            )
        elif event.kind == "approve":
            if concept not in t.concepts:
                raise CorruptStore(f"approve event references unknown concept: {event.concept}")
            t.concepts[concept].status = "approved"
        elif event.kind == "reject":
            if concept not in t.concepts:
                raise CorruptStore(f"reject event references unknown concept: {event.concept}")
            del t.concepts[concept]
        else:
            raise CorruptStore(f"unknown event kind: {event.kind!r}")
    return t


def load_store(
    directory: str | Path,
) -> tuple[SkosTaxonomy, MappingSet, list[EnrichmentEvent]]:
    directory = Path(directory)
    tax_path = directory / TAXONOMY_FILE
    map_path = directory / MAPPINGS_FILE
    if not tax_path.exists() or not map_path.exists():
        raise StoreIoError(f"not a store directory: {directory}")
    try:
        graph = parse_turtle(tax_path.read_text(encoding="utf-8"))
        mappings = parse_sssom(map_path.read_text(encoding="utf-8"))
        events: list[EnrichmentEvent] = []
        events_path = directory / EVENTS_FILE
        if events_path.exists():
            for line in events_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    events.append(EnrichmentEvent.from_json(line))
    except OSError as exc:
        raise StoreIoError(str(exc)) from exc
    except (json.JSONDecodeError, KeyError) as exc:
        raise CorruptStore(f"bad event journal: {exc}") from exc
    published = skos.graph_to_taxonomy(graph, mappings)
    taxonomy = replay_events(published, events)
    return taxonomy, mappings, events


def store_content_hash(directory: str | Path) -> str:
    """Hash over the on-disk store content; changes iff the store changes."""
    import hashlib

    directory = Path(directory)
    h = hashlib.sha256()
    for name in (TAXONOMY_FILE, MAPPINGS_FILE, EVENTS_FILE):
        path = directory / name
        h.update(name.encode())
        h.update(path.read_bytes() if path.exists() else b"")
    return h.hexdigest()
