"""Locality-based module extraction and application-ontology assembly.

The extractor implements the bottom-locality fixpoint over the three axiom
forms the OWL view supports: named subclass edges, existential-restriction
subclass axioms, and named equivalences.  An axiom enters the module when
it is not bottom-local against the running signature, and its own names
are folded into that signature until nothing changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from . import vocab
from .owl import AnnotationRecord, OntologyModel, Restriction, extract_model
from .rdf import BlankNode, Graph, Iri, Literal, Triple, expand_curie, looks_like_iri, parse_turtle
from .skos import SkosTaxonomy
from .sssom import MappingSet, parse_sssom
from .store import load_store


class AssemblyError(Exception):
    pass


class UnknownSubject(AssemblyError):
    pass


class BuildIoError(AssemblyError):
    pass


class SignatureError(AssemblyError):
    def __init__(self, message: str, path: str, line: int):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class Signature:
    classes: frozenset[Iri] = frozenset()
    properties: frozenset[Iri] = frozenset()

    def __post_init__(self):
        if self.classes & self.properties:
            raise ValueError("signature class and property sets must be disjoint")


# Axiom forms: ("sub", A, B) | ("sub_restr", A, p, C) | ("equiv", A, B)
Axiom = tuple


def model_axioms(m: OntologyModel) -> set[Axiom]:
    axioms: set[Axiom] = set()
    for sub, sup in m.subclass_edges:
        axioms.add(("sub", sub, sup))
    for r in m.restrictions:
        axioms.add(("sub_restr", r.subject, r.property, r.filler))
    for pair in m.equivalence_pairs:
        a, b = sorted(pair, key=lambda c: c.value)
        axioms.add(("equiv", a, b))
    return axioms


def is_bot_local(axiom: Axiom, sig_classes: set[Iri]) -> bool:
    """Bottom-locality for the supported axiom forms.

    With every non-signature name read as owl:Nothing, a subclass axiom is
    vacuous unless its subject is in the signature, and an equivalence is
    vacuous unless either side is.
    """
    if axiom[0] == "sub" or axiom[0] == "sub_restr":
        return axiom[1] not in sig_classes
    if axiom[0] == "equiv":
        return axiom[1] not in sig_classes and axiom[2] not in sig_classes
    raise ValueError(f"unknown axiom form: {axiom[0]}")


def axiom_signature(axiom: Axiom) -> tuple[set[Iri], set[Iri]]:
    """(class names, property names) occurring in the axiom."""
    if axiom[0] == "sub":
        return {axiom[1], axiom[2]}, set()
    if axiom[0] == "sub_restr":
        return {axiom[1], axiom[3]}, {axiom[2]}
    return {axiom[1], axiom[2]}, set()


def extract_bot_module(
    m: OntologyModel, sig: Signature
) -> tuple[OntologyModel, list[str]]:
    warnings: list[str] = []
    known = m.classes | {r.property for r in m.restrictions}
    for term in sorted(sig.classes | sig.properties, key=lambda c: c.value):
        if term not in known:
            warnings.append(f"signature term not in ontology, ignored: {term}")

    axioms = model_axioms(m)
    module: set[Axiom] = set()
    sig_classes = set(sig.classes & m.classes)
    sig_props = set(sig.properties)
    changed = True
    while changed:
        changed = False
        for axiom in sorted(axioms - module):
            if not is_bot_local(axiom, sig_classes):
                module.add(axiom)
                cls, props = axiom_signature(axiom)
                if not cls <= sig_classes or not props <= sig_props:
                    sig_classes |= cls
                    sig_props |= props
                    changed = True
                changed = True

    out = OntologyModel()
    out.classes = set(sig.classes & m.classes)
    for axiom in module:
        if axiom[0] == "sub":
            out.subclass_edges.add((axiom[1], axiom[2]))
            out.classes |= {axiom[1], axiom[2]}
        elif axiom[0] == "sub_restr":
            out.restrictions.add(Restriction(axiom[1], axiom[2], axiom[3]))
            out.classes |= {axiom[1], axiom[3]}
        else:
            out.equivalence_pairs.add(frozenset((axiom[1], axiom[2])))
            out.classes |= {axiom[1], axiom[2]}
    for cls in out.classes:
        ann = m.annotations.get(cls)
        if ann is not None:
            out.annotations[cls] = AnnotationRecord(
                label=ann.label, definition=ann.definition, synonyms=list(ann.synonyms)
            )
    out.deprecated = m.deprecated & out.classes
    return out, warnings


def module_final_signature(m: OntologyModel, sig: Signature) -> Signature:
    module, _ = extract_bot_module(m, sig)
    classes = set(sig.classes & m.classes)
    props = set(sig.properties)
    for axiom in model_axioms(module):
        cls, p = axiom_signature(axiom)
        classes |= cls
        props |= p
    return Signature(frozenset(classes), frozenset(props - classes))


def model_to_graph(m: OntologyModel, prefixes: Optional[dict[str, str]] = None) -> Graph:
    triples: list[Triple] = []
    for cls in m.classes:
        triples.append(Triple(cls, vocab.RDF_TYPE, vocab.OWL_CLASS))
    for sub, sup in m.subclass_edges:
        triples.append(Triple(sub, vocab.RDFS_SUBCLASSOF, sup))
    for i, r in enumerate(sorted(m.restrictions, key=lambda r: (r.subject.value, r.property.value, r.filler.value))):
        node = BlankNode(f"r{i}")
        triples.append(Triple(r.subject, vocab.RDFS_SUBCLASSOF, node))
        triples.append(Triple(node, vocab.RDF_TYPE, vocab.OWL_RESTRICTION))
        triples.append(Triple(node, vocab.OWL_ON_PROPERTY, r.property))
        triples.append(Triple(node, vocab.OWL_SOME_VALUES_FROM, r.filler))
    for pair in m.equivalence_pairs:
        a, b = sorted(pair, key=lambda c: c.value)
        triples.append(Triple(a, vocab.OWL_EQUIVALENT_CLASS, b))
    for cls, ann in m.annotations.items():
        if ann.label:
            triples.append(Triple(cls, vocab.RDFS_LABEL, Literal(ann.label)))
        if ann.definition:
            triples.append(Triple(cls, vocab.IAO_DEFINITION, Literal(ann.definition)))
        for syn in ann.synonyms:
            triples.append(Triple(cls, vocab.OBO_EXACT_SYNONYM, Literal(syn)))
    for cls in m.deprecated:
        triples.append(
            Triple(cls, vocab.OWL_DEPRECATED, Literal("true", datatype=vocab.XSD_BOOLEAN))
        )
    pfx = dict(vocab.WELL_KNOWN_PREFIXES)
    pfx.update(prefixes or {})
    return Graph.of(triples, pfx)


def bridge_equivalences(
    taxonomy: SkosTaxonomy, mappings: MappingSet
) -> tuple[Graph, list[str]]:
    warnings: list[str] = []
    triples: list[Triple] = []
    for record in mappings.records:
        subject = mappings.expand(record.subject_id)
        if subject not in taxonomy.concepts:
            raise UnknownSubject(f"mapping subject not in taxonomy: {record.subject_id}")
        if record.predicate_id != "skos:exactMatch":
            warnings.append(
                f"non-exactMatch mapping skipped: {record.subject_id} {record.predicate_id} {record.object_id}"
            )
            continue
        triples.append(Triple(subject, vocab.OWL_EQUIVALENT_CLASS, mappings.expand(record.object_id)))
    return Graph.of(triples, mappings.curie_map), warnings


# ---------------------------------------------------------------------------
# Application ontology assembly


@dataclass
class SourceSpec:
    label: str
    ontology: str
    signature: str


@dataclass
class AppoConfig:
    sources: list[SourceSpec] = field(default_factory=list)
    upper: Optional[str] = None
    anchor_map: dict[str, str] = field(default_factory=dict)
    mappings: list[str] = field(default_factory=list)
    internal_taxonomy: Optional[str] = None

    @staticmethod
    def from_yaml(path: str | Path) -> "AppoConfig":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except OSError as exc:
            raise BuildIoError(f"cannot read config: {path}") from exc
        base = path.parent

        def resolve(p: Optional[str]) -> Optional[str]:
            if p is None:
                return None
            candidate = Path(p)
            return str(candidate if candidate.is_absolute() else base / candidate)

        sources = []
        labels = set()
        for entry in data.get("sources", []) or []:
            label = entry["label"]
            if label in labels:
                raise AssemblyError(f"duplicate source label: {label!r}")
            labels.add(label)
            sources.append(
                SourceSpec(label=label, ontology=resolve(entry["ontology"]), signature=resolve(entry["signature"]))
            )
        return AppoConfig(
            sources=sources,
            upper=resolve(data.get("upper")),
            anchor_map=dict(data.get("anchor_map", {}) or {}),
            mappings=[resolve(p) for p in data.get("mappings", []) or []],
            internal_taxonomy=resolve(data.get("internal_taxonomy")),
        )


@dataclass
class BuildReport:
    warnings: list[str] = field(default_factory=list)
    source_axiom_counts: dict[str, int] = field(default_factory=dict)
    anchored_roots: list[str] = field(default_factory=list)
    triple_count: int = 0

    def as_dict(self) -> dict:
        return {
            "warnings": self.warnings,
            "source_axiom_counts": self.source_axiom_counts,
            "anchored_roots": self.anchored_roots,
            "triple_count": self.triple_count,
        }


def parse_signature_file(path: str | Path, prefixes: dict[str, str]) -> Signature:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise BuildIoError(f"cannot read signature file: {path}") from exc
    classes: set[Iri] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if " " in line or "\t" in line:
            raise SignatureError("expected one term per line", str(path), line_no)
        if line.startswith("<") and line.endswith(">"):
            classes.add(Iri(line[1:-1]))
        elif looks_like_iri(line):
            classes.add(Iri(line))
        else:
            try:
                classes.add(expand_curie(line, prefixes))
            except Exception:
                raise SignatureError(f"cannot resolve term {line!r}", str(path), line_no)
    return Signature(classes=frozenset(classes))


def _read_graph(path: str) -> Graph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise BuildIoError(f"cannot read ontology: {path}") from exc
    return parse_turtle(text)


def _module_roots(module: OntologyModel) -> list[Iri]:
    with_super = {sub for sub, _ in module.subclass_edges}
    return sorted((c for c in module.classes if c not in with_super), key=lambda c: c.value)


def build_application_ontology(cfg: AppoConfig) -> tuple[Graph, BuildReport]:
    report = BuildReport()
    triples: set[Triple] = set()
    prefixes: dict[str, str] = dict(vocab.WELL_KNOWN_PREFIXES)

    upper_classes: set[Iri] = set()
    if cfg.upper:
        upper_graph = _read_graph(cfg.upper)
        upper_model, _ = extract_model(upper_graph)
        upper_classes = set(upper_model.classes)
        triples |= upper_graph.triples
        prefixes.update(upper_graph.prefix_map)

    anchor_map = {Iri(k): Iri(v) for k, v in cfg.anchor_map.items()}
    for target in anchor_map.values():
        if upper_classes and target not in upper_classes:
            raise AssemblyError(f"anchor target not in upper ontology: {target}")

    bnode_offset = 0
    for source in cfg.sources:
        graph = _read_graph(source.ontology)
        prefixes.update(graph.prefix_map)
        model, _ = extract_model(graph)
        sig = parse_signature_file(source.signature, graph.prefix_map)
        module, warns = extract_bot_module(model, sig)
        report.warnings.extend(f"{source.label}: {w}" for w in warns)
        report.source_axiom_counts[source.label] = len(model_axioms(module))
        module_graph = model_to_graph(module)
        # keep blank node labels unique across sources
        renamed = set()
        for t in module_graph.triples:
            s = BlankNode(f"m{bnode_offset}{t.subject.label}") if isinstance(t.subject, BlankNode) else t.subject
            o = BlankNode(f"m{bnode_offset}{t.object.label}") if isinstance(t.object, BlankNode) else t.object
            renamed.add(Triple(s, t.predicate, o))
        bnode_offset += 1
        triples |= renamed

        for root in _module_roots(module):
            if root in upper_classes:
                continue
            if root in anchor_map:
                triples.add(Triple(root, vocab.RDFS_SUBCLASSOF, anchor_map[root]))
                report.anchored_roots.append(root.value)
            else:
                report.warnings.append(
                    f"{source.label}: module root has no anchor entry: {root}"
                )

    if cfg.internal_taxonomy:
        try:
            taxonomy, _, _ = load_store(cfg.internal_taxonomy)
        except Exception as exc:
            raise BuildIoError(f"cannot load taxonomy store: {cfg.internal_taxonomy}: {exc}") from exc
        for path in cfg.mappings:
            try:
                mapping_set = parse_sssom(Path(path).read_text(encoding="utf-8"))
            except OSError as exc:
                raise BuildIoError(f"cannot read mapping file: {path}") from exc
            bridge, warns = bridge_equivalences(taxonomy, mapping_set)
            report.warnings.extend(warns)
            triples |= bridge.triples
            prefixes.update(bridge.prefix_map)
        for iri, rec in taxonomy.concepts.items():
            for sup in rec.broader:
                triples.add(Triple(iri, vocab.RDFS_SUBCLASSOF, sup))

    graph = Graph.of(triples, prefixes)
    report.triple_count = len(graph)
    return graph, report
