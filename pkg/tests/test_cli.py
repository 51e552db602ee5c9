import hashlib
import json
import shutil

import pytest
from click.testing import CliRunner

from obdm.cli import main
from obdm.rdf import parse_turtle

from conftest import EX, FIXTURES, TAX_NS


@pytest.fixture
def runner():
    return CliRunner()


def run_convert(runner, tmp_path, with_store=True):
    args = [
        "convert",
        "--input", str(FIXTURES / "toy.ttl"),
        "--namespace", TAX_NS,
        "--out-taxonomy", str(tmp_path / "taxonomy.ttl"),
        "--out-sssom", str(tmp_path / "mappings.sssom.tsv"),
        "--report", str(tmp_path / "report.json"),
    ]
    if with_store:
        args += ["--out-store", str(tmp_path / "store")]
    return runner.invoke(main, args)


def test_convert_writes_outputs(runner, tmp_path):
    result = run_convert(runner, tmp_path)
    assert result.exit_code == 0, result.output
    assert "3 concepts" in result.output
    graph = parse_turtle((tmp_path / "taxonomy.ttl").read_text())
    assert len(graph) > 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["concept_count"] == 3
    assert (tmp_path / "store" / "enrichments.jsonl").exists()
    cfg = json.loads((tmp_path / "store" / "config.json").read_text())
    assert cfg["namespace"] == TAX_NS


def test_convert_deterministic(runner, tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    run_convert(runner, tmp_path / "a")
    run_convert(runner, tmp_path / "b")
    for name in ("taxonomy.ttl", "mappings.sssom.tsv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_convert_cycle_exits_2(runner, tmp_path):
    cyclic = tmp_path / "cyclic.ttl"
    cyclic.write_text(
        "@prefix ex: <http://example.org/> .\n"
        "@prefix owl: <http://www.w3.org/2002/07/owl#> .\n"
        "@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n"
        "ex:A a owl:Class ; rdfs:subClassOf ex:B .\n"
        "ex:B a owl:Class ; rdfs:subClassOf ex:A .\n"
    )
    result = runner.invoke(
        main,
        [
            "convert",
            "--input", str(cyclic),
            "--namespace", TAX_NS,
            "--out-taxonomy", str(tmp_path / "t.ttl"),
            "--out-sssom", str(tmp_path / "m.tsv"),
        ],
    )
    assert result.exit_code == 2


def test_convert_missing_input_exits_1(runner, tmp_path):
    result = runner.invoke(
        main,
        [
            "convert",
            "--input", str(tmp_path / "missing.ttl"),
            "--namespace", TAX_NS,
            "--out-taxonomy", str(tmp_path / "t.ttl"),
            "--out-sssom", str(tmp_path / "m.tsv"),
        ],
    )
    assert result.exit_code == 1


def test_enrich_lifecycle(runner, tmp_path):
    run_convert(runner, tmp_path)
    store_dir = str(tmp_path / "store")
    added = runner.invoke(
        main,
        [
            "enrich", "add",
            "--store", store_dir,
            "--parent", TAX_NS + "B",
            "--label", "new thing",
            "--definition", "a proposed term",
        ],
    )
    assert added.exit_code == 0, added.output
    concept = added.output.strip()
    assert concept.startswith(TAX_NS.rstrip("/").rsplit("/", 1)[0]) or concept

    approved = runner.invoke(
        main, ["enrich", "approve", "--store", store_dir, "--concept", concept]
    )
    assert approved.exit_code == 0, approved.output

    again = runner.invoke(
        main, ["enrich", "approve", "--store", store_dir, "--concept", concept]
    )
    assert again.exit_code == 2


def test_enrich_add_bad_parent_exits_2(runner, tmp_path):
    run_convert(runner, tmp_path)
    result = runner.invoke(
        main,
        [
            "enrich", "add",
            "--store", str(tmp_path / "store"),
            "--parent", TAX_NS + "Nope",
            "--label", "x",
        ],
    )
    assert result.exit_code == 2


def test_rebase_carries_enrichment(runner, tmp_path):
    run_convert(runner, tmp_path)
    store_dir = str(tmp_path / "store")
    added = runner.invoke(
        main,
        [
            "enrich", "add",
            "--store", store_dir,
            "--parent", TAX_NS + "B",
            "--label", "carried term",
        ],
    )
    concept = added.output.strip()
    fresh_dir = tmp_path / "fresh"
    fresh_dir.mkdir()
    shutil.copy(tmp_path / "taxonomy.ttl", fresh_dir / "taxonomy.ttl")
    shutil.copy(tmp_path / "mappings.sssom.tsv", fresh_dir / "mappings.sssom.tsv")
    result = runner.invoke(
        main,
        [
            "rebase",
            "--store", store_dir,
            "--fresh", str(fresh_dir),
            "--report", str(tmp_path / "rebase.json"),
        ],
    )
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "rebase.json").read_text())
    assert concept in report["carried"]
    assert report["orphaned"] == []


def test_rebase_strict_orphan_exits_2(runner, tmp_path):
    run_convert(runner, tmp_path)
    store_dir = str(tmp_path / "store")
    runner.invoke(
        main,
        [
            "enrich", "add",
            "--store", store_dir,
            "--parent", TAX_NS + "A",
            "--label", "doomed",
        ],
    )
    # fresh taxonomy without concept A: convert a reduced source
    reduced = tmp_path / "reduced.ttl"
    reduced.write_text(
        "@prefix ex: <http://example.org/> .\n"
        "@prefix owl: <http://www.w3.org/2002/07/owl#> .\n"
        "@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n"
        "ex:B a owl:Class ; rdfs:subClassOf ex:C .\n"
        "ex:C a owl:Class .\n"
    )
    fresh_dir = tmp_path / "fresh"
    fresh_dir.mkdir()
    runner.invoke(
        main,
        [
            "convert",
            "--input", str(reduced),
            "--namespace", TAX_NS,
            "--out-taxonomy", str(fresh_dir / "_t.ttl"),
            "--out-sssom", str(fresh_dir / "_m.tsv"),
            "--out-store", str(fresh_dir),
        ],
    )
    result = runner.invoke(
        main,
        ["rebase", "--store", store_dir, "--fresh", str(fresh_dir), "--strict"],
    )
    assert result.exit_code == 2


def test_extract_command(runner, tmp_path):
    sig = tmp_path / "sig.txt"
    sig.write_text("ex:A\n")
    out = tmp_path / "module.ttl"
    result = runner.invoke(
        main,
        [
            "extract",
            "--input", str(FIXTURES / "toy.ttl"),
            "--terms", str(sig),
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "3 logical axioms" in result.output
    assert "rdfs:subClassOf" in out.read_text()


def test_materialize_command(runner, tmp_path):
    out = tmp_path / "closure.ttl"
    result = runner.invoke(
        main,
        [
            "materialize",
            "--input", str(FIXTURES / "lab.ttl"),
            "--out", str(out),
            "--include-inferred",
        ],
    )
    assert result.exit_code == 0, result.output
    text = out.read_text()
    assert "nn:CompoundY rel:has_role chebi:AntiObesityAgent" in text.replace("\n    ", " ").replace(" ;", " ;")


def test_query_command(runner):
    result = runner.invoke(
        main,
        [
            "query",
            "--graph", str(FIXTURES / "lab.ttl"),
            "--pattern", str(FIXTURES / "lab.pattern"),
            "--materialize",
        ],
    )
    assert result.exit_code == 0, result.output
    bindings = json.loads(result.output)
    assert len(bindings) == 1
    assert bindings[0]["e"] == EX + "NN/ExperimentX"


def test_query_without_materialize_is_empty(runner):
    result = runner.invoke(
        main,
        [
            "query",
            "--graph", str(FIXTURES / "lab.ttl"),
            "--pattern", str(FIXTURES / "lab.pattern"),
        ],
    )
    assert result.exit_code == 0
    assert json.loads(result.output) == []


def test_query_bad_pattern_exits_1(runner, tmp_path):
    bad = tmp_path / "bad.pattern"
    bad.write_text("frobnicate ?x\n")
    result = runner.invoke(
        main,
        ["query", "--graph", str(FIXTURES / "toy.ttl"), "--pattern", str(bad)],
    )
    assert result.exit_code == 1


def test_build_appo_command(runner, tmp_path):
    (tmp_path / "upper.ttl").write_text(
        "@prefix up: <http://example.org/up/> .\n"
        "@prefix owl: <http://www.w3.org/2002/07/owl#> .\n"
        "up:Thing a owl:Class .\n"
    )
    (tmp_path / "sig.txt").write_text("ex:A\n")
    shutil.copy(FIXTURES / "toy.ttl", tmp_path / "src.ttl")
    (tmp_path / "build.yaml").write_text(
        "upper: upper.ttl\n"
        "sources:\n"
        "  - label: toy\n"
        "    ontology: src.ttl\n"
        "    signature: sig.txt\n"
        'anchor_map:\n  "http://example.org/C": "http://example.org/up/Thing"\n'
    )
    out = tmp_path / "appo.ttl"
    result = runner.invoke(
        main,
        [
            "build-appo",
            "--config", str(tmp_path / "build.yaml"),
            "--out", str(out),
            "--report", str(tmp_path / "appo.json"),
        ],
    )
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "appo.json").read_text())
    assert report["anchored_roots"] == ["http://example.org/C"]
    assert "up:Thing" in out.read_text()


def test_fetch_file_url(runner, tmp_path):
    src = FIXTURES / "toy.ttl"
    data = src.read_bytes()
    out = tmp_path / "fetched.ttl"
    result = runner.invoke(
        main,
        [
            "fetch",
            "--url", src.as_uri(),
            "--out", str(out),
            "--sha256", hashlib.sha256(data).hexdigest(),
        ],
    )
    assert result.exit_code == 0, result.output
    assert out.read_bytes() == data


def test_fetch_checksum_mismatch_exits_2(runner, tmp_path):
    src = FIXTURES / "toy.ttl"
    result = runner.invoke(
        main,
        [
            "fetch",
            "--url", src.as_uri(),
            "--out", str(tmp_path / "x.ttl"),
            "--sha256", "0" * 64,
        ],
    )
    assert result.exit_code == 2


def test_fetch_bad_url_exits_1(runner, tmp_path):
    result = runner.invoke(
        main,
        [
            "fetch",
            "--url", (tmp_path / "absent.ttl").as_uri(),
            "--out", str(tmp_path / "x.ttl"),
        ],
    )
    assert result.exit_code == 1
