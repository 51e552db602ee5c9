"""Project an RDF graph into the OWL class-hierarchy view.

Only the constructs the downstream pipeline needs are recognized: named
classes, named subclass edges, existential restrictions attached via
subclass axioms, named equivalences, the standard annotation triples, and
deprecation flags.  Everything else is skipped with a warning rather than
an error; public OBO exports are messy and robustness wins here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import vocab
from .rdf import BlankNode, Graph, Iri, Literal, Triple


@dataclass
class AnnotationRecord:
    label: Optional[str] = None
    definition: Optional[str] = None
    synonyms: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class Restriction:
    subject: Iri
    property: Iri
    filler: Iri
    kind: str = "someValuesFrom"


@dataclass
class OntologyModel:
    classes: set[Iri] = field(default_factory=set)
    subclass_edges: set[tuple[Iri, Iri]] = field(default_factory=set)
    equivalence_pairs: set[frozenset[Iri]] = field(default_factory=set)
    restrictions: set[Restriction] = field(default_factory=set)
    annotations: dict[Iri, AnnotationRecord] = field(default_factory=dict)
    deprecated: set[Iri] = field(default_factory=set)

    def annotation(self, cls: Iri) -> AnnotationRecord:
        return self.annotations.get(cls, AnnotationRecord())

    def __eq__(self, other) -> bool:
        if not isinstance(other, OntologyModel):
            return NotImplemented
        return (
            self.classes == other.classes
            and self.subclass_edges == other.subclass_edges
            and self.equivalence_pairs == other.equivalence_pairs
            and self.restrictions == other.restrictions
            and {c: (a.label, a.definition, sorted(a.synonyms)) for c, a in self.annotations.items()}
            == {c: (a.label, a.definition, sorted(a.synonyms)) for c, a in other.annotations.items()}
            and self.deprecated == other.deprecated
        )


@dataclass
class ModelStats:
    classes: int
    subclass: int
    equiv: int
    restrictions: int
    deprecated: int
    annotated: int

    def as_dict(self) -> dict[str, int]:
        return {
            "classes": self.classes,
            "subclass": self.subclass,
            "equiv": self.equiv,
            "restrictions": self.restrictions,
            "deprecated": self.deprecated,
            "annotated": self.annotated,
        }


def _is_true(term) -> bool:
    return isinstance(term, Literal) and term.lexical in ("true", "1")


def extract_model(g: Graph) -> tuple[OntologyModel, list[str]]:
    model = OntologyModel()
    warnings: list[str] = []

    bnode_props: dict[BlankNode, list[Triple]] = {}
    for t in g.triples:
        if isinstance(t.subject, BlankNode):
            bnode_props.setdefault(t.subject, []).append(t)

    def restriction_of(node: BlankNode) -> Optional[tuple[Iri, Iri]]:
        is_restriction = False
        prop = filler = None
        other_kind = False
        for t in bnode_props.get(node, []):
            if t.predicate == vocab.RDF_TYPE and t.object == vocab.OWL_RESTRICTION:
                is_restriction = True
            elif t.predicate == vocab.OWL_ON_PROPERTY and isinstance(t.object, Iri):
                prop = t.object
            elif t.predicate == vocab.OWL_SOME_VALUES_FROM and isinstance(t.object, Iri):
                filler = t.object
            elif t.predicate != vocab.RDF_TYPE:
                other_kind = True
        if is_restriction and prop is not None and filler is not None and not other_kind:
            return prop, filler
        return None

    implicit: set[Iri] = set()

    def touch(cls: Iri) -> None:
        if cls not in model.classes:
            model.classes.add(cls)
            implicit.add(cls)

    ordered = sorted(g.triples, key=lambda t: (str(t.subject), t.predicate.value, str(t.object)))

    # Pass 1: class declarations and logical axioms.  Edge endpoints missing
    # an explicit declaration are accepted as implicit classes.
    for t in ordered:
        s, p, o = t.subject, t.predicate, t.object
        if p == vocab.RDF_TYPE and o == vocab.OWL_CLASS and isinstance(s, Iri):
            model.classes.add(s)
        elif p == vocab.RDFS_SUBCLASSOF and isinstance(s, Iri):
            if isinstance(o, Iri):
                if s == o:
                    warnings.append(f"self subclass edge dropped: {s}")
                else:
                    touch(s)
                    touch(o)
                    model.subclass_edges.add((s, o))
            elif isinstance(o, BlankNode):
                r = restriction_of(o)
                if r is None:
                    warnings.append(f"unsupported subclass expression skipped for {s}")
                else:
                    prop, filler = r
                    touch(s)
                    touch(filler)
                    model.restrictions.add(Restriction(s, prop, filler))
            else:
                warnings.append(f"literal subclass object skipped for {s}")
        elif p == vocab.OWL_EQUIVALENT_CLASS and isinstance(s, Iri):
            if isinstance(o, Iri):
                if s != o:
                    touch(s)
                    touch(o)
                    model.equivalence_pairs.add(frozenset((s, o)))
            else:
                warnings.append(f"complex equivalence skipped for {s}")

    implicit -= {c for c in implicit if c not in model.classes}
    implicit &= model.classes
    # touch() may have run before an explicit declaration was seen
    for t in ordered:
        if t.predicate == vocab.RDF_TYPE and t.object == vocab.OWL_CLASS and isinstance(t.subject, Iri):
            implicit.discard(t.subject)

    # Pass 2: annotations and deprecation, attached only to known classes.
    for t in ordered:
        s, p, o = t.subject, t.predicate, t.object
        if not isinstance(s, Iri) or s not in model.classes:
            continue
        if p == vocab.RDFS_LABEL and isinstance(o, Literal):
            model.annotations.setdefault(s, AnnotationRecord()).label = o.lexical
        elif p == vocab.IAO_DEFINITION and isinstance(o, Literal):
            model.annotations.setdefault(s, AnnotationRecord()).definition = o.lexical
        elif p == vocab.OBO_EXACT_SYNONYM and isinstance(o, Literal):
            rec = model.annotations.setdefault(s, AnnotationRecord())
            if o.lexical not in rec.synonyms:
                rec.synonyms.append(o.lexical)
                rec.synonyms.sort()
        elif p == vocab.OWL_DEPRECATED and _is_true(o):
            model.deprecated.add(s)

    for cls in sorted(implicit, key=lambda c: c.value):
        warnings.append(f"class implicitly declared: {cls}")
    return model, warnings


def model_stats(m: OntologyModel) -> ModelStats:
    return ModelStats(
        classes=len(m.classes),
        subclass=len(m.subclass_edges),
        equiv=len(m.equivalence_pairs),
        restrictions=len(m.restrictions),
        deprecated=len(m.deprecated),
        annotated=len(m.annotations),
    )
