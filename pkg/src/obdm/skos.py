"""OWL-to-SKOS conversion with URI minting and exactMatch mapping output.

Equivalence groups are collapsed into single concepts (union-find over the
model's equivalence pairs); every group member keeps a skos:exactMatch
mapping back to its public IRI, so interoperability survives the merge.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field, replace
from typing import Optional

from . import vocab
from .owl import OntologyModel
from .rdf import Graph, Iri, Literal, Triple, compress_iri
from .sssom import MappingRecord, MappingSet

DEFAULT_JUSTIFICATION = "semapv:UnspecifiedMatching"


class CycleError(Exception):
    def __init__(self, cycle: list[Iri]):
        names = " -> ".join(c.value for c in cycle)
        super().__init__(f"broader hierarchy contains a cycle: {names}")
        self.cycle = cycle


@dataclass(frozen=True)
class MintConfig:
    namespace: str
    enrichment_namespace: str
    namespace_prefix: str = "tax"
    enrichment_prefix: str = "taxe"
    scheme_iri: Optional[str] = None
    justification: str = DEFAULT_JUSTIFICATION

    def __post_init__(self):
        for ns in (self.namespace, self.enrichment_namespace):
            if not ns.endswith(("/", "#")):
                raise ValueError(f"namespace must end with '/' or '#': {ns}")
        if self.namespace == self.enrichment_namespace:
            raise ValueError("minting and enrichment namespaces must differ")

    @property
    def scheme(self) -> Iri:
        return Iri(self.scheme_iri or self.namespace + "scheme")


@dataclass
class ConceptRecord:
    pref_label: str
    definition: Optional[str] = None
    alt_labels: list[str] = field(default_factory=list)
    broader: set[Iri] = field(default_factory=set)
    status: str = "published"
    sources: set[Iri] = field(default_factory=set)

    def copy(self) -> "ConceptRecord":
        return ConceptRecord(
            pref_label=self.pref_label,
            definition=self.definition,
            alt_labels=list(self.alt_labels),
            broader=set(self.broader),
            status=self.status,
            sources=set(self.sources),
        )

    @property
    def is_enrichment(self) -> bool:
        return not self.sources


@dataclass
class SkosTaxonomy:
    concepts: dict[Iri, ConceptRecord] = field(default_factory=dict)
    scheme_iri: Iri = Iri("urn:obdm:scheme")
    version: str = "1"

    def copy(self) -> "SkosTaxonomy":
        return SkosTaxonomy(
            concepts={iri: rec.copy() for iri, rec in self.concepts.items()},
            scheme_iri=self.scheme_iri,
            version=self.version,
        )

    def narrower(self, iri: Iri) -> list[Iri]:
        return sorted(
            (c for c, rec in self.concepts.items() if iri in rec.broader),
            key=lambda c: c.value,
        )

    def descendants(self, root: Iri, include_root: bool = False) -> set[Iri]:
        out: set[Iri] = {root} if include_root else set()
        stack = [root]
        seen = {root}
        while stack:
            node = stack.pop()
            for child in self.narrower(node):
                if child not in seen:
                    seen.add(child)
                    out.add(child)
                    stack.append(child)
        return out

    def published_part(self) -> "SkosTaxonomy":
        t = self.copy()
        t.concepts = {iri: rec for iri, rec in t.concepts.items() if not rec.is_enrichment}
        return t


@dataclass
class ConversionReport:
    concept_count: int = 0
    broader_count: int = 0
    mapping_count: int = 0
    merged_groups: list[list[str]] = field(default_factory=list)
    excluded_deprecated: list[str] = field(default_factory=list)
    label_fallbacks: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "concept_count": self.concept_count,
            "broader_count": self.broader_count,
            "mapping_count": self.mapping_count,
            "merged_groups": self.merged_groups,
            "excluded_deprecated": self.excluded_deprecated,
            "label_fallbacks": self.label_fallbacks,
            "warnings": self.warnings,
        }


def _content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:8]


def mint_iri(source: Iri, cfg: MintConfig, taken: Optional[dict[Iri, Iri]] = None) -> Iri:
    """Deterministic minted IRI: namespace + local name, hash suffix on clash.

    ``taken`` maps already-minted IRIs to the source they were minted for;
    a different source hitting the same local name gets the hash suffix.
    """
    local = source.local_name().replace(":", "_")
    candidate = Iri(cfg.namespace + local)
    if taken is not None and candidate in taken and taken[candidate] != source:
        candidate = Iri(f"{cfg.namespace}{local}-{_content_hash(source.value)}")
    return candidate


_SLUG_RE = re.compile(r"[^a-z0-9]+")


def slugify(label: str) -> str:
    slug = _SLUG_RE.sub("-", label.lower()).strip("-")
    return slug or "term"


def mint_enrichment_iri(label: str, parent: Iri, cfg: MintConfig) -> Iri:
    suffix = _content_hash(f"{label}|{parent.value}")
    return Iri(f"{cfg.enrichment_namespace}{slugify(label)}-{suffix}")


class _UnionFind:
    def __init__(self):
        self.parent: dict[Iri, Iri] = {}

    def find(self, x: Iri) -> Iri:
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: Iri, b: Iri) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic: smaller IRI becomes the root
            if rb.value < ra.value:
                ra, rb = rb, ra
            self.parent[rb] = ra


def _find_cycle(edges: dict[Iri, set[Iri]]) -> Optional[list[Iri]]:
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n: WHITE for n in edges}
    stack_path: list[Iri] = []

    def dfs(node: Iri) -> Optional[list[Iri]]:
        color[node] = GRAY
        stack_path.append(node)
        for nxt in sorted(edges.get(node, ()), key=lambda c: c.value):
            if color.get(nxt, WHITE) == GRAY:
                idx = stack_path.index(nxt)
                return stack_path[idx:] + [nxt]
            if color.get(nxt, WHITE) == WHITE:
                found = dfs(nxt)
                if found:
                    return found
        stack_path.pop()
        color[node] = BLACK
        return None

    for node in sorted(edges, key=lambda c: c.value):
        if color[node] == WHITE:
            found = dfs(node)
            if found:
                return found
    return None


def convert(
    m: OntologyModel,
    cfg: MintConfig,
    prefixes: Optional[dict[str, str]] = None,
    version: str = "1",
) -> tuple[SkosTaxonomy, MappingSet, ConversionReport]:
    report = ConversionReport()
    retained = sorted(m.classes - m.deprecated, key=lambda c: c.value)
    report.excluded_deprecated = sorted(c.value for c in m.deprecated)

    uf = _UnionFind()
    for pair in m.equivalence_pairs:
        members = sorted(pair, key=lambda c: c.value)
        if all(mem in set(retained) for mem in members):
            uf.union(members[0], members[1])

    groups: dict[Iri, list[Iri]] = {}
    for cls in retained:
        groups.setdefault(uf.find(cls), []).append(cls)
    for canonical, members in sorted(groups.items(), key=lambda kv: kv[0].value):
        members.sort(key=lambda c: c.value)
        if len(members) > 1:
            report.merged_groups.append([c.value for c in members])

    # canonical source is the lexicographically smallest member (the root)
    minted: dict[Iri, Iri] = {}  # minted IRI -> canonical source
    mint_of: dict[Iri, Iri] = {}  # canonical source -> minted IRI
    for canonical in sorted(groups, key=lambda c: c.value):
        iri = mint_iri(canonical, cfg, taken=minted)
        minted[iri] = canonical
        mint_of[canonical] = iri

    taxonomy = SkosTaxonomy(scheme_iri=cfg.scheme, version=version)
    for canonical, members in sorted(groups.items(), key=lambda kv: kv[0].value):
        ann = m.annotation(canonical)
        label = ann.label
        if not label:
            # fall back to other group members' labels before the local name
            for mem in members:
                if m.annotation(mem).label:
                    label = m.annotation(mem).label
                    break
        if not label:
            label = canonical.local_name().replace(":", "_")
            report.label_fallbacks.append(canonical.value)
        definition = ann.definition
        alt: list[str] = []
        for mem in members:
            mann = m.annotation(mem)
            if definition is None and mann.definition:
                definition = mann.definition
            for syn in mann.synonyms:
                if syn not in alt and syn != label:
                    alt.append(syn)
        taxonomy.concepts[mint_of[canonical]] = ConceptRecord(
            pref_label=label,
            definition=definition,
            alt_labels=sorted(alt),
            status="published",
            sources=set(members),
        )

    retained_set = set(retained)
    broader_edges: dict[Iri, set[Iri]] = {iri: set() for iri in taxonomy.concepts}
    for sub, sup in m.subclass_edges:
        if sub not in retained_set or sup not in retained_set:
            continue
        msub, msup = mint_of[uf.find(sub)], mint_of[uf.find(sup)]
        if msub != msup:
            broader_edges[msub].add(msup)
    cycle = _find_cycle(broader_edges)
    if cycle:
        raise CycleError([minted[c] if c in minted else c for c in cycle])
    for iri, sups in broader_edges.items():
        taxonomy.concepts[iri].broader = sups

    mappings = _build_mapping_set(taxonomy, cfg, prefixes)
    report.concept_count = len(taxonomy.concepts)
    report.broader_count = sum(len(r.broader) for r in taxonomy.concepts.values())
    report.mapping_count = len(mappings.records)
    return taxonomy, mappings, report


def build_curie_map(
    cfg: MintConfig,
    source_iris: set[Iri],
    prefixes: Optional[dict[str, str]] = None,
) -> dict[str, str]:
    """CURIE map covering minted and public IRIs; auto-assigns ns prefixes."""
    curie_map: dict[str, str] = {
        "skos": vocab.SKOS,
        "semapv": vocab.SEMAPV,
        cfg.namespace_prefix: cfg.namespace,
        cfg.enrichment_prefix: cfg.enrichment_namespace,
    }
    for prefix, ns in sorted((prefixes or {}).items()):
        curie_map.setdefault(prefix, ns)
    auto = 1
    for iri in sorted(source_iris, key=lambda c: c.value):
        if isinstance(compress_iri(iri, curie_map), Iri):
            local = iri.local_name()
            ns = iri.value[: len(iri.value) - len(local)]
            if ns and ns != iri.value:
                while f"ns{auto}" in curie_map:
                    auto += 1
                curie_map[f"ns{auto}"] = ns
    return curie_map


def _build_mapping_set(
    taxonomy: SkosTaxonomy, cfg: MintConfig, prefixes: Optional[dict[str, str]]
) -> MappingSet:
    sources = {src for rec in taxonomy.concepts.values() for src in rec.sources}
    curie_map = build_curie_map(cfg, sources, prefixes)
    records = []
    for iri, rec in sorted(taxonomy.concepts.items(), key=lambda kv: kv[0].value):
        subject = compress_iri(iri, curie_map)
        if isinstance(subject, Iri):
            raise ValueError(f"minted IRI not compressible: {iri}")
        for src in sorted(rec.sources, key=lambda c: c.value):
            obj = compress_iri(src, curie_map)
            if isinstance(obj, Iri):
                raise ValueError(f"source IRI not compressible: {src}")
            records.append(
                MappingRecord(
                    subject_id=subject,
                    subject_label=rec.pref_label,
                    predicate_id="skos:exactMatch",
                    object_id=obj,
                    object_label=None,
                    mapping_justification=cfg.justification,
                )
            )
    return MappingSet(
        mapping_set_id=Iri(cfg.namespace + "mappings"),
        license=Iri("https://creativecommons.org/licenses/by/4.0/"),
        curie_map=curie_map,
        records=records,
    )


# ---------------------------------------------------------------------------
# Taxonomy <-> RDF graph


def taxonomy_to_graph(t: SkosTaxonomy, prefixes: Optional[dict[str, str]] = None) -> Graph:
    triples: list[Triple] = [
        Triple(t.scheme_iri, vocab.RDF_TYPE, vocab.SKOS_CONCEPT_SCHEME),
        Triple(t.scheme_iri, vocab.OWL_VERSION_INFO, Literal(t.version)),
    ]
    for iri, rec in t.concepts.items():
        triples.append(Triple(iri, vocab.RDF_TYPE, vocab.SKOS_CONCEPT))
        triples.append(Triple(iri, vocab.SKOS_IN_SCHEME, t.scheme_iri))
        triples.append(Triple(iri, vocab.SKOS_PREF_LABEL, Literal(rec.pref_label)))
        if rec.definition:
            triples.append(Triple(iri, vocab.SKOS_DEFINITION, Literal(rec.definition)))
        for alt in rec.alt_labels:
            triples.append(Triple(iri, vocab.SKOS_ALT_LABEL, Literal(alt)))
        for sup in rec.broader:
            triples.append(Triple(iri, vocab.SKOS_BROADER, sup))
    pfx = {"skos": vocab.SKOS, "owl": "http://www.w3.org/2002/07/owl#"}
    pfx.update(prefixes or {})
    return Graph.of(triples, pfx)


def graph_to_taxonomy(g: Graph, mappings: Optional[MappingSet] = None) -> SkosTaxonomy:
    """Rebuild a published taxonomy from its SKOS rendering.

    Sources come from the mapping set (subjects resolved through its CURIE
    map); every concept reconstructed this way has status ``published``.
    """
    scheme_iri = None
    version = "1"
    concepts: dict[Iri, ConceptRecord] = {}
    for tr in g.triples:
        if tr.predicate == vocab.RDF_TYPE and tr.object == vocab.SKOS_CONCEPT_SCHEME:
            scheme_iri = tr.subject
    if scheme_iri is not None:
        for tr in g.triples:
            if tr.subject == scheme_iri and tr.predicate == vocab.OWL_VERSION_INFO:
                if isinstance(tr.object, Literal):
                    version = tr.object.lexical
    for tr in g.triples:
        if tr.predicate == vocab.RDF_TYPE and tr.object == vocab.SKOS_CONCEPT and isinstance(tr.subject, Iri):
            concepts[tr.subject] = ConceptRecord(pref_label="")
    for tr in g.triples:
        if not isinstance(tr.subject, Iri) or tr.subject not in concepts:
            continue
        rec = concepts[tr.subject]
        if tr.predicate == vocab.SKOS_PREF_LABEL and isinstance(tr.object, Literal):
            rec.pref_label = tr.object.lexical
        elif tr.predicate == vocab.SKOS_DEFINITION and isinstance(tr.object, Literal):
            rec.definition = tr.object.lexical
        elif tr.predicate == vocab.SKOS_ALT_LABEL and isinstance(tr.object, Literal):
            if tr.object.lexical not in rec.alt_labels:
                rec.alt_labels.append(tr.object.lexical)
        elif tr.predicate == vocab.SKOS_BROADER and isinstance(tr.object, Iri):
            rec.broader.add(tr.object)
    for rec in concepts.values():
        rec.alt_labels.sort()
    if mappings is not None:
        for record in mappings.records:
            subject = mappings.expand(record.subject_id)
            obj = mappings.expand(record.object_id)
            if subject in concepts:
                concepts[subject].sources.add(obj)
    taxonomy = SkosTaxonomy(
        concepts=concepts,
        scheme_iri=scheme_iri or Iri("urn:obdm:scheme"),
        version=version,
    )
    return taxonomy
