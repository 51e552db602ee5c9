import pytest
from pathlib import Path

from obdm import skos
from obdm.owl import extract_model
from obdm.rdf import parse_turtle

FIXTURES = Path(__file__).parent / "fixtures"

EX = "http://example.org/"
TAX_NS = "https://nn.example/tax/"
ENRICH_NS = "https://nn.example/tax-enrichment/"


@pytest.fixture
def toy_graph():
    return parse_turtle((FIXTURES / "toy.ttl").read_text())


@pytest.fixture
def lab_graph():
    return parse_turtle((FIXTURES / "lab.ttl").read_text())


@pytest.fixture
def toy_model(toy_graph):
    model, _ = extract_model(toy_graph)
    return model


@pytest.fixture
def mint_config():
    return skos.MintConfig(namespace=TAX_NS, enrichment_namespace=ENRICH_NS)


@pytest.fixture
def toy_conversion(toy_model, toy_graph, mint_config):
    return skos.convert(toy_model, mint_config, prefixes=toy_graph.prefix_map)
