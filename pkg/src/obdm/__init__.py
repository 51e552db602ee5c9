"""Ontology-based data management toolkit."""

__version__ = "0.1.0"
