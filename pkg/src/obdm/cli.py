"""Command-line entry point wiring the pipeline modules together.

Exit codes: 0 success, 1 runtime error (I/O, parse failures), 2 validation
failure (hierarchy cycles, checksum mismatches, strict-mode findings).
"""

from __future__ import annotations

import hashlib
import json
import sys
import urllib.request
from pathlib import Path

import click

from . import modules as kg
from . import reasoner, skos, sssom, store as store_mod
from .rdf import Graph, Iri, parse_turtle, serialize_turtle
from .owl import extract_model
from .service import ServiceConfig, create_app

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2

STORE_CONFIG_FILE = "config.json"


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(str(exc), EXIT_RUNTIME)


def _parse_graph(path: str) -> Graph:
    try:
        return parse_turtle(_read_text(path))
    except Exception as exc:
        _fail(f"{path}: {exc}", EXIT_RUNTIME)


def _merge_graphs(paths: tuple[str, ...]) -> Graph:
    triples = set()
    prefixes: dict[str, str] = {}
    for path in paths:
        g = _parse_graph(path)
        triples |= g.triples
        prefixes.update(g.prefix_map)
    return Graph.of(triples, prefixes)


def _write_json(path: str | None, data: dict) -> None:
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _load_store_or_fail(directory: str):
    try:
        return store_mod.load_store(directory)
    except store_mod.StoreError as exc:
        _fail(str(exc), EXIT_RUNTIME)


def _store_mint_config(directory: str, enrichment_namespace: str | None) -> skos.MintConfig:
    cfg_path = Path(directory) / STORE_CONFIG_FILE
    data = {}
    if cfg_path.exists():
        data = json.loads(cfg_path.read_text(encoding="utf-8"))
    namespace = data.get("namespace", "urn:obdm:tax/")
    enrichment = enrichment_namespace or data.get("enrichment_namespace")
    if not enrichment:
        _fail(
            "no enrichment namespace: pass --enrichment-namespace or store config.json",
            EXIT_RUNTIME,
        )
    if enrichment == namespace:
        namespace = namespace.rstrip("/#") + "-base/"
    return skos.MintConfig(namespace=namespace, enrichment_namespace=enrichment)


@click.group()
def main():
    """Ontology-based data management pipeline."""


@main.command()
@click.option("--input", "inputs", multiple=True, required=True, type=str)
@click.option("--namespace", required=True)
@click.option("--enrichment-namespace", default=None)
@click.option("--out-taxonomy", required=True)
@click.option("--out-sssom", required=True)
@click.option("--out-store", default=None, type=str)
@click.option("--report", "report_path", default=None)
def convert(inputs, namespace, enrichment_namespace, out_taxonomy, out_sssom, out_store, report_path):
    """Convert OWL documents into a SKOS taxonomy plus SSSOM mappings."""
    graph = _merge_graphs(inputs)
    model, warnings = extract_model(graph)
    enrichment_namespace = enrichment_namespace or namespace.rstrip("/#") + "-enrichment/"
    try:
        cfg = skos.MintConfig(namespace=namespace, enrichment_namespace=enrichment_namespace)
    except ValueError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    try:
        taxonomy, mappings, report = skos.convert(model, cfg, prefixes=graph.prefix_map)
    except skos.CycleError as exc:
        click.echo(f"validation failed: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    report.warnings.extend(warnings)
    Path(out_taxonomy).write_text(
        serialize_turtle(skos.taxonomy_to_graph(taxonomy)), encoding="utf-8"
    )
    Path(out_sssom).write_text(sssom.emit_sssom(mappings), encoding="utf-8")
    if out_store:
        store_mod.save_store(taxonomy, mappings, [], out_store)
        (Path(out_store) / STORE_CONFIG_FILE).write_text(
            json.dumps(
                {"namespace": namespace, "enrichment_namespace": enrichment_namespace},
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
    if report_path:
        _write_json(report_path, report.as_dict())
    click.echo(
        f"converted: {report.concept_count} concepts, "
        f"{report.broader_count} broader edges, {report.mapping_count} mappings"
    )


@main.group()
def enrich():
    """Manage taxonomy enrichments (propose / approve / reject)."""


def _save_with_events(directory, taxonomy, mappings, events):
    try:
        store_mod.save_store(taxonomy, mappings, events, directory)
    except store_mod.StoreError as exc:
        _fail(str(exc), EXIT_RUNTIME)


@enrich.command("add")
@click.option("--store", "directory", required=True)
@click.option("--parent", required=True)
@click.option("--label", required=True)
@click.option("--definition", default=None)
@click.option("--enrichment-namespace", default=None)
@click.option("--actor", default="cli")
def enrich_add(directory, parent, label, definition, enrichment_namespace, actor):
    taxonomy, mappings, events = _load_store_or_fail(directory)
    cfg = _store_mint_config(directory, enrichment_namespace)
    import time

    try:
        taxonomy, iri = store_mod.add_enrichment(taxonomy, Iri(parent), label, definition, cfg)
    except store_mod.StoreError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    events = events + [
        store_mod.EnrichmentEvent(
            kind="add",
            concept=iri.value,
            parent=parent,
            label=label,
            definition=definition,
            timestamp=int(time.time()),
            actor=actor,
        )
    ]
    _save_with_events(directory, taxonomy, mappings, events)
    click.echo(iri.value)


def _review(directory, concept, actor, kind):
    taxonomy, mappings, events = _load_store_or_fail(directory)
    import time

    op = store_mod.approve_enrichment if kind == "approve" else store_mod.reject_enrichment
    try:
        taxonomy = op(taxonomy, Iri(concept))
    except store_mod.StoreError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    events = events + [
        store_mod.EnrichmentEvent(
            kind=kind, concept=concept, timestamp=int(time.time()), actor=actor
        )
    ]
    _save_with_events(directory, taxonomy, mappings, events)
    click.echo(f"{kind}d: {concept}")


@enrich.command("approve")
@click.option("--store", "directory", required=True)
@click.option("--concept", required=True)
@click.option("--actor", default="cli")
def enrich_approve(directory, concept, actor):
    _review(directory, concept, actor, "approve")


@enrich.command("reject")
@click.option("--store", "directory", required=True)
@click.option("--concept", required=True)
@click.option("--actor", default="cli")
def enrich_reject(directory, concept, actor):
    _review(directory, concept, actor, "reject")


def _events_from_taxonomy(taxonomy, old_events):
    """Synthesize a replayable journal for the enrichments in a taxonomy."""
    meta = {}
    for event in old_events:
        if event.kind == "add":
            meta[event.concept] = (event.timestamp, event.actor)
    enrichments = {
        iri: rec for iri, rec in taxonomy.concepts.items() if rec.is_enrichment
    }
    events = []
    emitted: set = set()
    pending = dict(sorted(enrichments.items(), key=lambda kv: kv[0].value))
    while pending:
        progressed = False
        for iri in sorted(pending, key=lambda c: c.value):
            rec = pending[iri]
            if any(p in pending for p in rec.broader):
                continue
            del pending[iri]
            progressed = True
            parent = sorted(rec.broader, key=lambda c: c.value)[0]
            ts, actor = meta.get(iri.value, (0, "rebase"))
            events.append(
                store_mod.EnrichmentEvent(
                    kind="add",
                    concept=iri.value,
                    parent=parent.value,
                    label=rec.pref_label,
                    definition=rec.definition,
                    timestamp=ts,
                    actor=actor,
                )
            )
            if rec.status == "approved":
                events.append(
                    store_mod.EnrichmentEvent(
                        kind="approve", concept=iri.value, timestamp=ts, actor=actor
                    )
                )
            emitted.add(iri)
        if not progressed:
            break
    return events


@main.command()
@click.option("--store", "directory", required=True)
@click.option("--fresh", required=True, help="Directory holding the fresh taxonomy.ttl + mappings.sssom.tsv")
@click.option("--strict", is_flag=True, default=False)
@click.option("--report", "report_path", default=None)
def rebase(directory, fresh, strict, report_path):
    """Rebase enrichments onto a freshly converted taxonomy version."""
    old_taxonomy, _, events = _load_store_or_fail(directory)
    fresh_dir = Path(fresh)
    tax_path = fresh_dir / store_mod.TAXONOMY_FILE
    map_path = fresh_dir / store_mod.MAPPINGS_FILE
    if not tax_path.exists() or not map_path.exists():
        _fail(f"not a conversion output directory: {fresh}", EXIT_RUNTIME)
    try:
        fresh_mappings = sssom.parse_sssom(map_path.read_text(encoding="utf-8"))
        fresh_taxonomy = skos.graph_to_taxonomy(
            parse_turtle(tax_path.read_text(encoding="utf-8")), fresh_mappings
        )
    except Exception as exc:
        _fail(f"cannot load fresh taxonomy: {exc}", EXIT_RUNTIME)
    result, report = store_mod.rebase(old_taxonomy, fresh_taxonomy)
    new_events = _events_from_taxonomy(result, events)
    _save_with_events(directory, result, fresh_mappings, new_events)
    _write_json(report_path, report.as_dict())
    if strict and report.orphaned:
        click.echo("validation failed: orphaned enrichments present", err=True)
        sys.exit(EXIT_VALIDATION)


@main.command()
@click.option("--input", "input_path", required=True)
@click.option("--terms", "terms_path", required=True)
@click.option("--out", "out_path", required=True)
def extract(input_path, terms_path, out_path):
    """Extract a locality-based module for a signature of terms."""
    graph = _parse_graph(input_path)
    model, _ = extract_model(graph)
    try:
        sig = kg.parse_signature_file(terms_path, graph.prefix_map)
    except kg.AssemblyError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    module, warnings = kg.extract_bot_module(model, sig)
    for w in warnings:
        click.echo(f"warning: {w}", err=True)
    Path(out_path).write_text(
        serialize_turtle(kg.model_to_graph(module, graph.prefix_map)), encoding="utf-8"
    )
    click.echo(f"module: {len(kg.model_axioms(module))} logical axioms")


@main.command("build-appo")
@click.option("--config", "config_path", required=True)
@click.option("--out", "out_path", required=True)
@click.option("--report", "report_path", default=None)
def build_appo(config_path, out_path, report_path):
    """Assemble the application ontology from modules, bridges, and taxonomy."""
    try:
        cfg = kg.AppoConfig.from_yaml(config_path)
        graph, report = kg.build_application_ontology(cfg)
    except kg.AssemblyError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    Path(out_path).write_text(serialize_turtle(graph), encoding="utf-8")
    if report_path:
        _write_json(report_path, report.as_dict())
    for w in report.warnings:
        click.echo(f"warning: {w}", err=True)
    click.echo(f"application ontology: {report.triple_count} triples")


@main.command("materialize")
@click.option("--input", "input_path", required=True)
@click.option("--out", "out_path", required=True)
@click.option("--include-inferred", is_flag=True, default=False)
def materialize_cmd(input_path, out_path, include_inferred):
    """Compute the inference closure of a graph."""
    graph = _parse_graph(input_path)
    ig = reasoner.materialize(graph)
    out_graph = ig.all_triples() if include_inferred else ig.base
    Path(out_path).write_text(serialize_turtle(out_graph), encoding="utf-8")
    click.echo(f"derived {len(ig.derived)} triples")


@main.command()
@click.option("--graph", "graph_path", required=True)
@click.option("--pattern", "pattern_path", required=True)
@click.option("--materialize", "do_materialize", is_flag=True, default=False)
def query(graph_path, pattern_path, do_materialize):
    """Run a conjunctive pattern over a graph; bindings as JSON."""
    graph = _parse_graph(graph_path)
    try:
        pattern = reasoner.parse_pattern(_read_text(pattern_path), graph.prefix_map)
    except reasoner.MalformedPattern as exc:
        _fail(str(exc), EXIT_RUNTIME)
    if do_materialize:
        ig = reasoner.materialize(graph)
    else:
        ig = reasoner.index_graph(graph)
    bindings = reasoner.match(ig, pattern)
    click.echo(json.dumps([{k: v.value for k, v in b.items()} for b in bindings], indent=2))


@main.command()
@click.option("--config", "config_path", required=True)
@click.option("--port", default=8080, type=int)
def serve(config_path, port):
    """Serve controlled vocabularies over HTTP."""
    import uvicorn

    try:
        config = ServiceConfig.from_yaml(config_path)
        app = create_app(config)
    except Exception as exc:
        _fail(str(exc), EXIT_RUNTIME)
    uvicorn.run(app, host="127.0.0.1", port=port)


@main.command()
@click.option("--url", required=True)
@click.option("--out", "out_path", required=True)
@click.option("--sha256", "checksum", default=None)
def fetch(url, out_path, checksum):
    """Download a public ontology document, optionally verifying a checksum."""
    try:
        with urllib.request.urlopen(url) as response:
            data = response.read()
    except Exception as exc:
        _fail(f"fetch failed: {exc}", EXIT_RUNTIME)
    if checksum:
        actual = hashlib.sha256(data).hexdigest()
        if actual != checksum.lower():
            _fail(f"checksum mismatch: expected {checksum}, got {actual}", EXIT_VALIDATION)
    Path(out_path).write_bytes(data)
    click.echo(f"fetched {len(data)} bytes")


if __name__ == "__main__":
    main()
