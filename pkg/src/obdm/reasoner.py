"""Forward-chaining materialization and conjunctive pattern matching.

Rules closed over (classes as nodes):
  R1 subclass transitivity
  R2 equivalence symmetry
  R3 equivalence transitivity
  R4 equivalence implies subclass
  R5 relations inherited down the subclass hierarchy
  R6 relations follow object-side equivalence

Existential restrictions in the input graph are normalized into plain
relation edges before the rules run, so modeled "has_role" links
behave like explicit triples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import vocab
from .rdf import BlankNode, Graph, Iri, Triple, expand_curie, looks_like_iri

_NON_REL = {
    vocab.RDF_TYPE,
    vocab.RDFS_SUBCLASSOF,
    vocab.OWL_EQUIVALENT_CLASS,
    vocab.RDFS_LABEL,
    vocab.IAO_DEFINITION,
    vocab.OBO_EXACT_SYNONYM,
    vocab.OWL_DEPRECATED,
    vocab.OWL_ON_PROPERTY,
    vocab.OWL_SOME_VALUES_FROM,
    vocab.OWL_VERSION_INFO,
    vocab.SKOS_PREF_LABEL,
    vocab.SKOS_ALT_LABEL,
    vocab.SKOS_DEFINITION,
    vocab.SKOS_IN_SCHEME,
    vocab.SKOS_BROADER,
    vocab.SKOS_EXACT_MATCH,
}


class ReasonerError(Exception):
    pass


class MalformedPattern(ReasonerError):
    pass


class NotEntailed(ReasonerError):
    pass


@dataclass(frozen=True)
class Derivation:
    """One rule application: conclusion from premise triples."""

    rule: str  # "base" | "R1".."R6"
    conclusion: Triple
    premises: tuple["Derivation", ...] = ()

    def as_dict(self) -> dict:
        return {
            "rule": self.rule,
            "conclusion": _triple_text(self.conclusion),
            "premises": [p.as_dict() for p in self.premises],
        }

    def rules_used(self) -> set[str]:
        out = {self.rule} if self.rule != "base" else set()
        for p in self.premises:
            out |= p.rules_used()
        return out


def _triple_text(t: Triple) -> str:
    return f"{t.subject} {t.predicate} {t.object}"


def _sub_triple(a: Iri, b: Iri) -> Triple:
    return Triple(a, vocab.RDFS_SUBCLASSOF, b)


def _equiv_triple(a: Iri, b: Iri) -> Triple:
    return Triple(a, vocab.OWL_EQUIVALENT_CLASS, b)


@dataclass
class InferredGraph:
    base: Graph
    derived: frozenset[Triple]
    # closure indexes over named classes
    sub_closure: dict[Iri, set[Iri]] = field(default_factory=dict)  # node -> strict superclasses
    equiv_closure: dict[Iri, set[Iri]] = field(default_factory=dict)  # node -> other group members
    rel_edges: dict[Iri, set[tuple[Iri, Iri]]] = field(default_factory=dict)  # prop -> {(s, o)}
    _base_sub: set[tuple[Iri, Iri]] = field(default_factory=set)
    _base_equiv: set[tuple[Iri, Iri]] = field(default_factory=set)
    _base_rel: set[tuple[Iri, Iri, Iri]] = field(default_factory=set)  # (s, p, o)
    _rel_provenance: dict[tuple[Iri, Iri, Iri], tuple[str, tuple] | None] = field(default_factory=dict)

    def has_sub(self, a: Iri, b: Iri) -> bool:
        return b in self.sub_closure.get(a, ())

    def has_rel(self, s: Iri, p: Iri, o: Iri) -> bool:
        return (s, o) in self.rel_edges.get(p, ())

    def all_triples(self) -> Graph:
        return Graph.of(self.base.triples | self.derived, self.base.prefix_map)


def _normalize(g: Graph) -> tuple[set[tuple[Iri, Iri]], set[tuple[Iri, Iri]], set[tuple[Iri, Iri, Iri]]]:
    """Base sub / equiv / rel edges, with restriction bnodes folded to rels."""
    restr: dict[BlankNode, dict[str, Iri]] = {}
    for t in g.triples:
        if isinstance(t.subject, BlankNode):
            slot = restr.setdefault(t.subject, {})
            if t.predicate == vocab.OWL_ON_PROPERTY and isinstance(t.object, Iri):
                slot["property"] = t.object
            elif t.predicate == vocab.OWL_SOME_VALUES_FROM and isinstance(t.object, Iri):
                slot["filler"] = t.object
            elif t.predicate == vocab.RDF_TYPE and t.object == vocab.OWL_RESTRICTION:
                slot["is_restriction"] = t.object

    sub: set[tuple[Iri, Iri]] = set()
    equiv: set[tuple[Iri, Iri]] = set()
    rel: set[tuple[Iri, Iri, Iri]] = set()
    for t in g.triples:
        s, p, o = t.subject, t.predicate, t.object
        if not isinstance(s, Iri):
            continue
        if p == vocab.RDFS_SUBCLASSOF:
            if isinstance(o, Iri):
                sub.add((s, o))
            elif isinstance(o, BlankNode):
                slot = restr.get(o, {})
                if "is_restriction" in slot and "property" in slot and "filler" in slot:
                    rel.add((s, slot["property"], slot["filler"]))
        elif p == vocab.OWL_EQUIVALENT_CLASS and isinstance(o, Iri):
            equiv.add((s, o))
        elif p not in _NON_REL and isinstance(o, Iri):
            rel.add((s, p, o))
    return sub, equiv, rel


def _equivalence_groups(pairs: set[tuple[Iri, Iri]]) -> dict[Iri, set[Iri]]:
    adjacency: dict[Iri, set[Iri]] = {}
    for a, b in pairs:
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    groups: dict[Iri, set[Iri]] = {}
    seen: set[Iri] = set()
    for start in adjacency:
        if start in seen:
            continue
        component = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            for nxt in adjacency[node]:
                if nxt not in component:
                    component.add(nxt)
                    stack.append(nxt)
        seen |= component
        for node in component:
            groups[node] = component - {node}
    return groups


def _transitive_closure(edges: set[tuple[Iri, Iri]]) -> dict[Iri, set[Iri]]:
    """Strict reachability via SCC condensation + DAG memoization."""
    succ: dict[Iri, set[Iri]] = {}
    nodes: set[Iri] = set()
    for a, b in edges:
        succ.setdefault(a, set()).add(b)
        nodes.add(a)
        nodes.add(b)

    # iterative Tarjan SCC
    index: dict[Iri, int] = {}
    lowlink: dict[Iri, int] = {}
    on_stack: set[Iri] = set()
    stack: list[Iri] = []
    comp_of: dict[Iri, int] = {}
    comps: list[list[Iri]] = []
    counter = [0]

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(sorted(succ.get(root, ()), key=lambda c: c.value)))]
        index[root] = lowlink[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = lowlink[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(sorted(succ.get(nxt, ()), key=lambda c: c.value))))
                    advanced = True
                    break
                elif nxt in on_stack:
                    lowlink[node] = min(lowlink[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                comp = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    comp.append(member)
                    if member == node:
                        break
                comp_id = len(comps)
                comps.append(comp)
                for member in comp:
                    comp_of[member] = comp_id

    # Tarjan emits components in reverse topological order: successors first
    comp_succ: dict[int, set[int]] = {i: set() for i in range(len(comps))}
    for a, b in edges:
        ca, cb = comp_of[a], comp_of[b]
        if ca != cb:
            comp_succ[ca].add(cb)
    comp_reach: dict[int, set[int]] = {}
    for cid in range(len(comps)):
        reach: set[int] = set()
        for nxt in comp_succ[cid]:
            reach.add(nxt)
            reach |= comp_reach[nxt]
        comp_reach[cid] = reach

    closure: dict[Iri, set[Iri]] = {}
    for cid, members in enumerate(comps):
        targets: set[Iri] = set()
        for rid in comp_reach[cid]:
            targets.update(comps[rid])
        cyclic = len(members) > 1 or any((m, m) in edges for m in members)
        for node in members:
            mine = set(targets)
            if cyclic:
                mine |= set(members)
            else:
                mine.discard(node)
            closure[node] = mine
    return closure


def materialize(g: Graph) -> InferredGraph:
    base_sub, base_equiv, base_rel = _normalize(g)

    equiv_closure = _equivalence_groups(base_equiv)

    # level-0 subclass edges: base plus R4 edges from the equivalence closure
    level0 = set(base_sub)
    for node, others in equiv_closure.items():
        for other in others:
            level0.add((node, other))
    sub_closure = _transitive_closure(level0)

    # relations: expand object equivalence (R6), then inherit downward (R5)
    rel_prov: dict[tuple[Iri, Iri, Iri], tuple[str, tuple] | None] = {}
    rel_all: set[tuple[Iri, Iri, Iri]] = set(base_rel)
    for edge in base_rel:
        rel_prov[edge] = None
    for s, p, o in sorted(base_rel):
        for o2 in sorted(equiv_closure.get(o, ()), key=lambda c: c.value):
            e = (s, p, o2)
            if e not in rel_all:
                rel_all.add(e)
                rel_prov[e] = ("R6", ((s, p, o), (o, o2)))
    descendants: dict[Iri, set[Iri]] = {}
    for node, supers in sub_closure.items():
        for sup in supers:
            descendants.setdefault(sup, set()).add(node)
    for s, p, o in sorted(set(rel_prov)):
        for desc in sorted(descendants.get(s, ()), key=lambda c: c.value):
            if desc == s:
                continue
            e = (desc, p, o)
            if e not in rel_all:
                rel_all.add(e)
                rel_prov[e] = ("R5", ((desc, s), (s, p, o)))

    derived: set[Triple] = set()
    base_triples = g.triples
    for a, b in ((x, y) for x, supers in sub_closure.items() for y in supers):
        t = _sub_triple(a, b)
        if t not in base_triples:
            derived.add(t)
    for a, others in equiv_closure.items():
        for b in others:
            t = _equiv_triple(a, b)
            if t not in base_triples:
                derived.add(t)
    explicit_rel_triples = {Triple(s, p, o) for s, p, o in base_rel}
    for s, p, o in rel_all:
        t = Triple(s, p, o)
        if t not in base_triples and t not in explicit_rel_triples:
            derived.add(t)

    rel_edges: dict[Iri, set[tuple[Iri, Iri]]] = {}
    for s, p, o in rel_all:
        rel_edges.setdefault(p, set()).add((s, o))

    return InferredGraph(
        base=g,
        derived=frozenset(derived),
        sub_closure=sub_closure,
        equiv_closure=equiv_closure,
        rel_edges=rel_edges,
        _base_sub=base_sub,
        _base_equiv=base_equiv,
        _base_rel=base_rel,
        _rel_provenance=rel_prov,
    )


def index_graph(g: Graph) -> InferredGraph:
    """Match-ready view of a graph without the equivalence/relation rules.

    Subclass edges are still closed transitively so class atoms behave,
    but nothing is derived: used by query mode without --materialize.
    """
    base_sub, base_equiv, base_rel = _normalize(g)
    rel_edges: dict[Iri, set[tuple[Iri, Iri]]] = {}
    for s, p, o in base_rel:
        rel_edges.setdefault(p, set()).add((s, o))
    return InferredGraph(
        base=g,
        derived=frozenset(),
        sub_closure=_transitive_closure(base_sub),
        equiv_closure={},
        rel_edges=rel_edges,
        _base_sub=base_sub,
        _base_equiv=base_equiv,
        _base_rel=base_rel,
        _rel_provenance={e: None for e in base_rel},
    )


# ---------------------------------------------------------------------------
# Explanation


def _shortest_path(start: Iri, goal: Iri, succ: dict[Iri, set[Iri]]) -> Optional[list[Iri]]:
    if start == goal:
        return [start]
    from collections import deque

    queue = deque([start])
    prev: dict[Iri, Iri] = {}
    seen = {start}
    while queue:
        node = queue.popleft()
        for nxt in sorted(succ.get(node, ()), key=lambda c: c.value):
            if nxt in seen:
                continue
            seen.add(nxt)
            prev[nxt] = node
            if nxt == goal:
                path = [goal]
                while path[-1] != start:
                    path.append(prev[path[-1]])
                return list(reversed(path))
            queue.append(nxt)
    return None


class _Explainer:
    def __init__(self, ig: InferredGraph):
        self.ig = ig
        self._sub_succ: dict[Iri, set[Iri]] = {}
        for a, b in ig._base_sub:
            self._sub_succ.setdefault(a, set()).add(b)
        for node, others in ig.equiv_closure.items():
            self._sub_succ.setdefault(node, set()).update(others)
        self._equiv_adj: dict[Iri, set[Iri]] = {}
        for a, b in ig._base_equiv:
            self._equiv_adj.setdefault(a, set()).add(b)
            self._equiv_adj.setdefault(b, set()).add(a)

    def explain(self, triple: Triple) -> Derivation:
        if triple in self.ig.base.triples:
            return Derivation("base", triple)
        s, p, o = triple.subject, triple.predicate, triple.object
        if not isinstance(s, Iri) or not isinstance(o, Iri):
            raise NotEntailed(_triple_text(triple))
        if p == vocab.RDFS_SUBCLASSOF:
            if not self.ig.has_sub(s, o):
                raise NotEntailed(_triple_text(triple))
            return self._explain_sub(s, o)
        if p == vocab.OWL_EQUIVALENT_CLASS:
            if o not in self.ig.equiv_closure.get(s, ()):
                raise NotEntailed(_triple_text(triple))
            return self._explain_equiv(s, o)
        if self.ig.has_rel(s, p, o):
            return self._explain_rel(s, p, o)
        raise NotEntailed(_triple_text(triple))

    def _base_or(self, triple: Triple, builder) -> Derivation:
        if triple in self.ig.base.triples:
            return Derivation("base", triple)
        return builder()

    def _explain_sub(self, a: Iri, b: Iri) -> Derivation:
        t = _sub_triple(a, b)
        if t in self.ig.base.triples:
            return Derivation("base", t)
        if (a, b) in self.ig._base_sub:
            return Derivation("base", t)
        # single equivalence step is an R4 application
        if b in self.ig.equiv_closure.get(a, ()):
            return Derivation("R4", t, (self._explain_equiv(a, b),))
        path = _shortest_path(a, b, self._sub_succ)
        if path is None or len(path) < 3:
            if path is not None and len(path) == 2:
                return self._explain_level0(a, b)
            raise NotEntailed(_triple_text(t))
        mid = path[1]
        return Derivation(
            "R1",
            t,
            (self._explain_level0(a, mid), self._explain_sub(mid, b)),
        )

    def _explain_level0(self, a: Iri, b: Iri) -> Derivation:
        t = _sub_triple(a, b)
        if (a, b) in self.ig._base_sub:
            return self._base_or(t, lambda: Derivation("base", t))
        return Derivation("R4", t, (self._explain_equiv(a, b),))

    def _explain_equiv(self, a: Iri, b: Iri) -> Derivation:
        t = _equiv_triple(a, b)
        if (a, b) in self.ig._base_equiv:
            return self._base_or(t, lambda: Derivation("base", t))
        if (b, a) in self.ig._base_equiv:
            rev = _equiv_triple(b, a)
            premise = self._base_or(rev, lambda: Derivation("base", rev))
            return Derivation("R2", t, (premise,))
        path = _shortest_path(a, b, self._equiv_adj)
        if path is None or len(path) < 3:
            raise NotEntailed(_triple_text(t))
        mid = path[1]
        return Derivation("R3", t, (self._explain_equiv(a, mid), self._explain_equiv(mid, b)))

    def _explain_rel(self, s: Iri, p: Iri, o: Iri) -> Derivation:
        t = Triple(s, p, o)
        prov = self.ig._rel_provenance.get((s, p, o))
        if prov is None:
            if (s, p, o) in self.ig._base_rel:
                if t in self.ig.base.triples:
                    return Derivation("base", t)
                # normalized from a restriction blank node pattern
                return Derivation("base", t)
            raise NotEntailed(_triple_text(t))
        rule, premises = prov
        if rule == "R6":
            (bs, bp, bo), (o1, o2) = premises
            return Derivation(
                "R6", t, (self._explain_rel(bs, bp, bo), self._explain_equiv(o1, o2))
            )
        (sub_a, sub_b), (rs, rp, ro) = premises
        return Derivation(
            "R5", t, (self._explain_sub(sub_a, sub_b), self._explain_rel(rs, rp, ro))
        )


def explain(ig: InferredGraph, triple: Triple) -> Derivation:
    return _Explainer(ig).explain(triple)


# ---------------------------------------------------------------------------
# Pattern matching


@dataclass(frozen=True)
class ClassAtom:
    var: str
    cls: Iri


@dataclass(frozen=True)
class EdgeAtom:
    subject_var: str
    property: Iri
    object_var: str


Atom = Union[ClassAtom, EdgeAtom]


@dataclass(frozen=True)
class Pattern:
    atoms: tuple[Atom, ...]

    def variables(self) -> list[str]:
        seen: list[str] = []
        for atom in self.atoms:
            names = [atom.var] if isinstance(atom, ClassAtom) else [atom.subject_var, atom.object_var]
            for name in names:
                if name not in seen:
                    seen.append(name)
        return seen


def validate_pattern(p: Pattern) -> None:
    if not p.atoms:
        raise MalformedPattern("pattern has no atoms")
    edge_vars = {v for a in p.atoms if isinstance(a, EdgeAtom) for v in (a.subject_var, a.object_var)}
    all_vars = set(p.variables())
    for atom in p.atoms:
        if isinstance(atom, ClassAtom) and atom.var not in edge_vars and len(all_vars) > 1:
            raise MalformedPattern(
                f"class atom variable ?{atom.var} not connected to any edge atom"
            )


def parse_pattern(text: str, prefixes: Optional[dict[str, str]] = None) -> Pattern:
    """One atom per line: ``class ?v <term>`` or ``edge ?v <term> ?w``."""
    prefixes = prefixes or {}

    def term(tok: str, line_no: int) -> Iri:
        if tok.startswith("<") and tok.endswith(">"):
            return Iri(tok[1:-1])
        if looks_like_iri(tok):
            return Iri(tok)
        try:
            return expand_curie(tok, prefixes)
        except Exception:
            raise MalformedPattern(f"cannot resolve term {tok!r} (line {line_no})")

    def var(tok: str, line_no: int) -> str:
        if not tok.startswith("?") or len(tok) < 2:
            raise MalformedPattern(f"expected variable, got {tok!r} (line {line_no})")
        return tok[1:]

    atoms: list[Atom] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "class" and len(parts) == 3:
            atoms.append(ClassAtom(var(parts[1], line_no), term(parts[2], line_no)))
        elif parts[0] == "edge" and len(parts) == 4:
            atoms.append(EdgeAtom(var(parts[1], line_no), term(parts[2], line_no), var(parts[3], line_no)))
        else:
            raise MalformedPattern(f"unparseable atom (line {line_no}): {raw!r}")
    pattern = Pattern(tuple(atoms))
    validate_pattern(pattern)
    return pattern


def match(ig: InferredGraph, p: Pattern) -> list[dict[str, Iri]]:
    validate_pattern(p)

    def class_ok(node: Iri, cls: Iri) -> bool:
        return node == cls or ig.has_sub(node, cls)

    def candidates_for_class(cls: Iri) -> set[Iri]:
        out = {cls} if _known_node(cls) else set()
        for node, supers in ig.sub_closure.items():
            if cls in supers:
                out.add(node)
        if not out:
            # the class may exist without sub edges
            if _known_node(cls):
                out.add(cls)
        return out

    def _known_node(node: Iri) -> bool:
        if node in ig.sub_closure or node in ig.equiv_closure:
            return True
        for pairs in ig.rel_edges.values():
            for s, o in pairs:
                if node in (s, o):
                    return True
        for t in ig.base.triples:
            if node in (t.subject, t.object):
                return True
        return False

    results: list[dict[str, Iri]] = []

    def extend(atom_idx: int, bindings: dict[str, Iri]) -> None:
        if atom_idx == len(p.atoms):
            if bindings not in results:
                results.append(dict(bindings))
            return
        atom = p.atoms[atom_idx]
        if isinstance(atom, ClassAtom):
            bound = bindings.get(atom.var)
            if bound is not None:
                if class_ok(bound, atom.cls):
                    extend(atom_idx + 1, bindings)
                return
            for node in sorted(candidates_for_class(atom.cls), key=lambda c: c.value):
                bindings[atom.var] = node
                extend(atom_idx + 1, bindings)
                del bindings[atom.var]
            return
        pairs = ig.rel_edges.get(atom.property, set())
        bs = bindings.get(atom.subject_var)
        bo = bindings.get(atom.object_var)
        for s, o in sorted(pairs, key=lambda e: (e[0].value, e[1].value)):
            if bs is not None and s != bs:
                continue
            if bo is not None and o != bo:
                continue
            added = []
            if bs is None:
                bindings[atom.subject_var] = s
                added.append(atom.subject_var)
            if bo is None:
                bindings[atom.object_var] = o
                added.append(atom.object_var)
            extend(atom_idx + 1, bindings)
            for name in added:
                del bindings[name]

    extend(0, {})
    variables = p.variables()
    results.sort(key=lambda b: tuple(b[v].value for v in variables))

    # Bindings that differ only by equivalent class members denote the same
    # answer node; keep the lexicographically first representative.
    def canonical(node: Iri) -> Iri:
        group = ig.equiv_closure.get(node)
        if not group:
            return node
        return min(group | {node}, key=lambda c: c.value)

    seen_canonical: set[tuple[str, ...]] = set()
    deduped: list[dict[str, Iri]] = []
    for binding in results:
        key = tuple(canonical(binding[v]).value for v in variables)
        if key in seen_canonical:
            continue
        seen_canonical.add(key)
        deduped.append(binding)
    return deduped
