"""Read-only controlled-vocabulary HTTP service.

Serves dropdown vocabularies and concept lookups from a taxonomy store.
The loaded store is an immutable snapshot; POST /v1/reload (token-guarded)
swaps in a fresh snapshot atomically, so readers never see partial state.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .rdf import Iri, compress_iri
from .skos import SkosTaxonomy
from .sssom import MappingSet
from .store import load_store, store_content_hash

ADMIN_TOKEN_ENV = "OBDM_ADMIN_TOKEN"
DEFAULT_STATUSES = frozenset({"published", "approved"})


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class VocabularyDef:
    id: str
    label: str
    terms: Optional[tuple[str, ...]] = None  # explicit minted IRI list
    descendants_of: Optional[str] = None
    include_root: bool = False
    statuses: frozenset[str] = DEFAULT_STATUSES


@dataclass
class ServiceConfig:
    store: str
    curie_map: dict[str, str] = field(default_factory=dict)
    vocabularies: list[VocabularyDef] = field(default_factory=list)

    @staticmethod
    def from_yaml(path: str | Path) -> "ServiceConfig":
        path = Path(path)
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        if "store" not in data:
            raise ConfigError("config missing 'store'")
        store = data["store"]
        if not Path(store).is_absolute():
            store = str(path.parent / store)
        vocabularies = []
        seen_ids = set()
        for entry in data.get("vocabularies", []) or []:
            vid = entry["id"]
            if vid in seen_ids:
                raise ConfigError(f"duplicate vocabulary id: {vid!r}")
            if not all(c.islower() or c.isdigit() or c == "-" for c in vid) or not vid:
                raise ConfigError(f"invalid vocabulary id: {vid!r}")
            seen_ids.add(vid)
            selector = entry.get("selector", {})
            vocabularies.append(
                VocabularyDef(
                    id=vid,
                    label=entry.get("label", vid),
                    terms=tuple(selector["terms"]) if "terms" in selector else None,
                    descendants_of=selector.get("descendants_of"),
                    include_root=bool(selector.get("include_root", False)),
                    statuses=frozenset(entry.get("statuses", DEFAULT_STATUSES)),
                )
            )
        return ServiceConfig(
            store=store,
            curie_map=dict(data.get("curie_map", {}) or {}),
            vocabularies=vocabularies,
        )


@dataclass
class Snapshot:
    taxonomy: SkosTaxonomy
    mappings: MappingSet
    version: str  # content hash of the store at load time

    def term_iris(self, vocab_def: VocabularyDef) -> list[Iri]:
        if vocab_def.terms is not None:
            selected = {Iri(t) for t in vocab_def.terms}
        else:
            selected = self.taxonomy.descendants(
                Iri(vocab_def.descendants_of), include_root=vocab_def.include_root
            )
        out = [
            iri
            for iri in selected
            if iri in self.taxonomy.concepts
            and self.taxonomy.concepts[iri].status in vocab_def.statuses
        ]
        return out


def _load_snapshot(config: ServiceConfig) -> Snapshot:
    taxonomy, mappings, _ = load_store(config.store)
    for vocab_def in config.vocabularies:
        if vocab_def.terms is not None:
            missing = [t for t in vocab_def.terms if Iri(t) not in taxonomy.concepts]
        elif vocab_def.descendants_of is not None:
            missing = (
                [] if Iri(vocab_def.descendants_of) in taxonomy.concepts else [vocab_def.descendants_of]
            )
        else:
            raise ConfigError(f"vocabulary {vocab_def.id!r} has no selector")
        if missing:
            raise ConfigError(
                f"vocabulary {vocab_def.id!r} selector targets missing from taxonomy: {missing}"
            )
    return Snapshot(
        taxonomy=taxonomy,
        mappings=mappings,
        version=store_content_hash(config.store),
    )


def create_app(config: ServiceConfig, defer_load: bool = False) -> FastAPI:
    app = FastAPI(title="obdm vocabulary service")
    state = {"snapshot": None}
    lock = threading.Lock()

    if not defer_load:
        state["snapshot"] = _load_snapshot(config)

    def snapshot() -> Optional[Snapshot]:
        return state["snapshot"]

    def not_loaded() -> JSONResponse:
        return JSONResponse({"error": "store_not_loaded"}, status_code=503)

    def term_view(snap: Snapshot, iri: Iri) -> dict:
        rec = snap.taxonomy.concepts[iri]
        curie = compress_iri(iri, config.curie_map)
        return {
            "iri": iri.value,
            "curie": curie if isinstance(curie, str) else iri.value,
            "prefLabel": rec.pref_label,
            "definition": rec.definition,
        }

    def sorted_terms(snap: Snapshot, vocab_def: VocabularyDef) -> list[dict]:
        views = [term_view(snap, iri) for iri in snap.term_iris(vocab_def)]
        views.sort(key=lambda v: (v["prefLabel"].lower(), v["iri"]))
        return views

    @app.get("/v1/health")
    def health():
        snap = snapshot()
        if snap is None:
            return not_loaded()
        return {"status": "ok", "taxonomy_version": snap.version}

    @app.get("/v1/vocabularies")
    def list_vocabularies():
        snap = snapshot()
        if snap is None:
            return not_loaded()
        body = [
            {
                "id": v.id,
                "label": v.label,
                "term_count": len(snap.term_iris(v)),
            }
            for v in sorted(config.vocabularies, key=lambda v: v.id)
        ]
        return JSONResponse(body, headers={"ETag": f'"{snap.version}"'})

    @app.get("/v1/vocabularies/{vocab_id}/terms")
    def vocabulary_terms(vocab_id: str, request: Request):
        snap = snapshot()
        if snap is None:
            return not_loaded()
        vocab_def = next((v for v in config.vocabularies if v.id == vocab_id), None)
        if vocab_def is None:
            return JSONResponse({"error": "unknown_vocabulary"}, status_code=404)
        etag = f'"{snap.version}"'
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304, headers={"ETag": etag})
        return JSONResponse(sorted_terms(snap, vocab_def), headers={"ETag": etag})

    @app.get("/v1/concepts/{curie}")
    def concept(curie: str):
        snap = snapshot()
        if snap is None:
            return not_loaded()
        prefix, sep, local = curie.partition(":")
        if not sep or prefix not in config.curie_map:
            return JSONResponse({"error": "bad_curie"}, status_code=400)
        iri = Iri(config.curie_map[prefix] + local)
        rec = snap.taxonomy.concepts.get(iri)
        if rec is None:
            return JSONResponse({"error": "unknown_concept"}, status_code=404)

        def as_curie(i: Iri) -> str:
            c = compress_iri(i, config.curie_map)
            return c if isinstance(c, str) else i.value

        return {
            "iri": iri.value,
            "prefLabel": rec.pref_label,
            "definition": rec.definition,
            "broader": sorted(b.value for b in rec.broader),
            "narrower": sorted(n.value for n in snap.taxonomy.narrower(iri)),
            "exact_matches": sorted(as_curie(s) for s in rec.sources),
        }

    @app.post("/v1/reload")
    def reload(request: Request):
        expected = os.environ.get(ADMIN_TOKEN_ENV)
        supplied = request.headers.get("x-admin-token")
        if not expected or supplied != expected:
            return JSONResponse({"error": "unauthorized"}, status_code=401)
        try:
            fresh = _load_snapshot(config)
        except Exception as exc:
            # the previous snapshot stays live
            return JSONResponse(
                {"error": "reload_failed", "detail": str(exc)}, status_code=500
            )
        with lock:
            state["snapshot"] = fresh
        return {"reloaded": True, "version": fresh.version}

    return app
