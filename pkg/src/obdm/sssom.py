"""SSSOM mapping sets: the TSV-with-metadata-header profile.

Only the six core columns are emitted (subject_id, subject_label,
predicate_id, object_id, object_label, mapping_justification); extra
columns on input are tolerated and reported as warnings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .rdf import Iri, validate_prefix

COLUMNS = [
    "subject_id",
    "subject_label",
    "predicate_id",
    "object_id",
    "object_label",
    "mapping_justification",
]

_REQUIRED = ["subject_id", "predicate_id", "object_id", "mapping_justification"]


class FormatError(Exception):
    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class CurieError(Exception):
    def __init__(self, curie: str):
        super().__init__(f"CURIE not resolvable: {curie!r}")
        self.curie = curie


@dataclass(frozen=True)
class MappingRecord:
    subject_id: str
    predicate_id: str
    object_id: str
    mapping_justification: str
    subject_label: Optional[str] = None
    object_label: Optional[str] = None

    def key(self) -> tuple[str, str, str]:
        return (self.subject_id, self.predicate_id, self.object_id)


@dataclass
class MappingSet:
    mapping_set_id: Iri
    license: Iri
    curie_map: dict[str, str] = field(default_factory=dict)
    records: list[MappingRecord] = field(default_factory=list)

    def expand(self, curie: str) -> Iri:
        prefix, sep, local = curie.partition(":")
        if not sep or prefix not in self.curie_map:
            raise CurieError(curie)
        return Iri(self.curie_map[prefix] + local)

    def sorted_records(self) -> list[MappingRecord]:
        return sorted(self.records, key=lambda r: (r.subject_id, r.object_id, r.predicate_id))

    def same_mappings(self, other: "MappingSet") -> bool:
        return (
            self.mapping_set_id == other.mapping_set_id
            and self.license == other.license
            and self.curie_map == other.curie_map
            and self.sorted_records() == other.sorted_records()
        )


@dataclass(frozen=True)
class Violation:
    record: MappingRecord
    message: str


def _check_curie(curie: str, curie_map: dict[str, str]) -> None:
    prefix, sep, _ = curie.partition(":")
    if not sep or prefix not in curie_map:
        raise CurieError(curie)


def emit_sssom(s: MappingSet) -> str:
    lines = ["# curie_map:"]
    for prefix, ns in sorted(s.curie_map.items()):
        lines.append(f'#   {prefix}: "{ns}"')
    lines.append(f"# mapping_set_id: {s.mapping_set_id.value}")
    lines.append(f"# license: {s.license.value}")
    lines.append("\t".join(COLUMNS))
    for r in sorted(s.records, key=lambda r: (r.subject_id, r.object_id)):
        lines.append(
            "\t".join(
                [
                    r.subject_id,
                    r.subject_label or "",
                    r.predicate_id,
                    r.object_id,
                    r.object_label or "",
                    r.mapping_justification,
                ]
            )
        )
    return "\n".join(lines) + "\n"


def parse_sssom(text: str) -> MappingSet:
    return parse_sssom_with_warnings(text)[0]


def parse_sssom_with_warnings(text: str) -> tuple[MappingSet, list[str]]:
    warnings: list[str] = []
    curie_map: dict[str, str] = {}
    mapping_set_id: Optional[str] = None
    license_iri: Optional[str] = None

    lines = text.splitlines()
    idx = 0
    in_curie_map = False
    while idx < len(lines) and lines[idx].startswith("#"):
        line = lines[idx]
        body = line[1:].rstrip()
        stripped = body.strip()
        if stripped == "curie_map:":
            in_curie_map = True
        elif in_curie_map and body.startswith("  ") and ":" in stripped:
            prefix, _, value = stripped.partition(":")
            prefix = prefix.strip()
            value = value.strip().strip('"')
            try:
                validate_prefix(prefix)
            except Exception:
                raise FormatError(f"invalid prefix {prefix!r}", line=idx + 1)
            curie_map[prefix] = value
        else:
            in_curie_map = False
            key, sep, value = stripped.partition(":")
            if not sep:
                warnings.append(f"unparseable metadata line ignored (line {idx + 1})")
            elif key.strip() == "mapping_set_id":
                mapping_set_id = value.strip()
            elif key.strip() == "license":
                license_iri = value.strip()
            elif stripped:
                warnings.append(f"unknown metadata key ignored: {key.strip()!r}")
        idx += 1

    if idx >= len(lines):
        raise FormatError("missing TSV header row", line=len(lines) or 1)
    header = lines[idx].split("\t")
    header_line = idx + 1
    for col in _REQUIRED:
        if col not in header:
            raise FormatError(f"missing required column: {col!r}", line=header_line)
    extra = [c for c in header if c not in COLUMNS]
    if extra:
        warnings.append(f"unknown columns ignored: {', '.join(extra)}")
    col_idx = {c: header.index(c) for c in header if c in COLUMNS}
    idx += 1

    records: list[MappingRecord] = []
    seen: set[tuple[str, str, str]] = set()
    for line_no, line in enumerate(lines[idx:], start=idx + 1):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) != len(header):
            raise FormatError(
                f"row has {len(cells)} cells, expected {len(header)}", line=line_no
            )

        def cell(name: str) -> Optional[str]:
            if name not in col_idx:
                return None
            value = cells[col_idx[name]]
            return value if value else None

        record = MappingRecord(
            subject_id=cell("subject_id") or "",
            subject_label=cell("subject_label"),
            predicate_id=cell("predicate_id") or "",
            object_id=cell("object_id") or "",
            object_label=cell("object_label"),
            mapping_justification=cell("mapping_justification") or "",
        )
        for curie in (record.subject_id, record.predicate_id, record.object_id, record.mapping_justification):
            if not curie:
                raise FormatError("empty required cell", line=line_no)
            _check_curie(curie, curie_map)
        if record.key() in seen:
            raise FormatError(f"duplicate mapping row: {record.key()}", line=line_no)
        seen.add(record.key())
        records.append(record)

    if mapping_set_id is None:
        raise FormatError("missing mapping_set_id metadata")
    if license_iri is None:
        raise FormatError("missing license metadata")
    return (
        MappingSet(
            mapping_set_id=Iri(mapping_set_id),
            license=Iri(license_iri),
            curie_map=curie_map,
            records=records,
        ),
        warnings,
    )


def validate_predicates(s: MappingSet, allowed: set[str]) -> list[Violation]:
    return [
        Violation(r, f"predicate {r.predicate_id!r} not in allowed set")
        for r in s.records
        if r.predicate_id not in allowed
    ]
