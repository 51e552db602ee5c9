"""Well-known vocabulary IRIs used across the toolkit."""

from .rdf import Iri

RDF_TYPE = Iri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type")

RDFS_SUBCLASSOF = Iri("http://www.w3.org/2000/01/rdf-schema#subClassOf")
RDFS_LABEL = Iri("http://www.w3.org/2000/01/rdf-schema#label")

OWL_CLASS = Iri("http://www.w3.org/2002/07/owl#Class")
OWL_RESTRICTION = Iri("http://www.w3.org/2002/07/owl#Restriction")
OWL_ON_PROPERTY = Iri("http://www.w3.org/2002/07/owl#onProperty")
OWL_SOME_VALUES_FROM = Iri("http://www.w3.org/2002/07/owl#someValuesFrom")
OWL_EQUIVALENT_CLASS = Iri("http://www.w3.org/2002/07/owl#equivalentClass")
OWL_DEPRECATED = Iri("http://www.w3.org/2002/07/owl#deprecated")
OWL_VERSION_INFO = Iri("http://www.w3.org/2002/07/owl#versionInfo")

IAO_DEFINITION = Iri("http://purl.obolibrary.org/obo/IAO_0000115")
OBO_EXACT_SYNONYM = Iri("http://www.geneontology.org/formats/oboInOwl#hasExactSynonym")

SKOS = "http://www.w3.org/2004/02/skos/core#"
SKOS_CONCEPT = Iri(SKOS + "Concept")
SKOS_CONCEPT_SCHEME = Iri(SKOS + "ConceptScheme")
SKOS_BROADER = Iri(SKOS + "broader")
SKOS_PREF_LABEL = Iri(SKOS + "prefLabel")
SKOS_ALT_LABEL = Iri(SKOS + "altLabel")
SKOS_DEFINITION = Iri(SKOS + "definition")
SKOS_IN_SCHEME = Iri(SKOS + "inScheme")
SKOS_EXACT_MATCH = Iri(SKOS + "exactMatch")

XSD_BOOLEAN = Iri("http://www.w3.org/2001/XMLSchema#boolean")

SEMAPV = "https://w3id.org/semapv/vocab/"

WELL_KNOWN_PREFIXES = {
    "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "owl": "http://www.w3.org/2002/07/owl#",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
    "skos": SKOS,
    "semapv": SEMAPV,
}
