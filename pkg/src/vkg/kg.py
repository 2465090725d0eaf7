"""Indexed in-memory triple store with a lightweight schema.

Stores (subject, predicate, object) assertions grounded in a declared
schema of classes, subclass edges, relations, and DSL aliases.  Pattern
matching runs off per-position indexes, entity equivalence is handled by
``sameAs`` merging with canonical-representative rewriting, and a
(predicate, neighbor) Jaccard overlap provides a graph-native similarity
baseline.

Concurrency contract: many concurrent readers OR one writer.  Use
:meth:`Graph.snapshot` to hand a read-only copy to another thread while
the original keeps mutating.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

from .errors import (
    GraphFormatError,
    SchemaError,
    UnknownClassError,
    UnknownRelationError,
)

#: Relations every graph understands without a schema declaration.
RESERVED_RELATIONS = frozenset({"type", "subClassOf", "sameAs", "hasVector"})

_WHITESPACE = re.compile(r"\s+")


def normalize(token: str) -> str:
    """Normalize an entity or class token: lowercase, whitespace runs to '_'.

    Idempotent; raises ValueError on empty input.
    """
    norm = _WHITESPACE.sub("_", token.strip().lower())
    if not norm:
        raise ValueError("empty token")
    return norm


@dataclass(frozen=True)
class Literal:
    """Typed leaf term (version numbers, linked vocabulary tokens, ...).

    Literals are never entities: they carry no type, cannot be merged by
    sameAs, and cannot be linked to vectors.
    """

    value: str


Term = Union[str, Literal]


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: Term

    def sort_key(self) -> tuple:
        obj = self.object
        if isinstance(obj, Literal):
            return (self.subject, self.predicate, 1, obj.value)
        return (self.subject, self.predicate, 0, obj)


class Schema:
    """Class hierarchy, relation declarations, and DSL keyword aliases.

    Class names are normalized like entity tokens; relation ids are kept
    verbatim.  Subclass edges must stay acyclic.
    """

    def __init__(self) -> None:
        self.classes: set[str] = set()
        self.subclass_edges: set[tuple[str, str]] = set()
        self.relations: dict[str, tuple[str | None, str | None]] = {}
        self.aliases: dict[str, str] = {}

    def declare_class(self, name: str) -> None:
        self.classes.add(normalize(name))

    def declare_subclass(self, child: str, parent: str) -> None:
        child, parent = normalize(child), normalize(parent)
        for c in (child, parent):
            if c not in self.classes:
                raise SchemaError(f"subclass edge references undeclared class '{c}'")
        edges = self.subclass_edges | {(child, parent)}
        if _has_cycle(edges):
            raise SchemaError(f"subclass edge {child} -> {parent} creates a cycle")
        self.subclass_edges = edges

    def declare_relation(self, name: str, domain: str | None = None,
                         range_: str | None = None) -> None:
        if not name or _WHITESPACE.search(name):
            raise SchemaError(f"invalid relation id {name!r}")
        for c in (domain, range_):
            if c is not None and normalize(c) not in self.classes:
                raise SchemaError(f"relation '{name}' references undeclared class '{c}'")
        self.relations[name] = (
            normalize(domain) if domain else None,
            normalize(range_) if range_ else None,
        )

    def declare_alias(self, keyword: str, relation: str) -> None:
        if relation not in self.relations:
            raise SchemaError(f"alias '{keyword}' targets undeclared relation '{relation}'")
        self.aliases[keyword.lower()] = relation

    def has_class(self, name: str) -> bool:
        return normalize(name) in self.classes

    def resolve_alias(self, keyword: str) -> str:
        """Map a DSL keyword to its relation id (falls back to a literal relation name)."""
        key = keyword.lower()
        if key in self.aliases:
            return self.aliases[key]
        if keyword in self.relations or keyword in RESERVED_RELATIONS:
            return keyword
        raise UnknownRelationError(f"no relation or alias named '{keyword}'")

    def subclasses(self, name: str, extra_edges: Iterable[tuple[str, str]] = ()) -> set[str]:
        """The class plus all transitive descendants."""
        name = normalize(name)
        if name not in self.classes:
            raise UnknownClassError(f"unknown class '{name}'")
        children: dict[str, set[str]] = {}
        for child, parent in list(self.subclass_edges) + list(extra_edges):
            children.setdefault(parent, set()).add(child)
        seen = {name}
        stack = [name]
        while stack:
            for child in children.get(stack.pop(), ()):
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        return seen

    @classmethod
    def parse(cls, text: str) -> "Schema":
        """Parse the declarative schema format.

        Four ``[section]`` blocks: classes (one name per line), subclass
        (``child parent``), relations (``name [domain range]``), aliases
        (``keyword relation``).  '#' starts a comment.
        """
        schema = cls()
        section = None
        pending_subclass: list[tuple[str, str, int]] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip().lower()
                if section not in {"classes", "subclass", "relations", "aliases"}:
                    raise GraphFormatError(f"unknown schema section '{section}'", lineno)
                continue
            fields = line.split()
            try:
                if section == "classes":
                    if len(fields) != 1:
                        raise GraphFormatError("expected one class name", lineno)
                    schema.declare_class(fields[0])
                elif section == "subclass":
                    if len(fields) != 2:
                        raise GraphFormatError("expected 'child parent'", lineno)
                    pending_subclass.append((fields[0], fields[1], lineno))
                elif section == "relations":
                    if len(fields) == 1:
                        schema.declare_relation(fields[0])
                    elif len(fields) == 3:
                        schema.declare_relation(fields[0], fields[1], fields[2])
                    else:
                        raise GraphFormatError("expected 'name' or 'name domain range'", lineno)
                elif section == "aliases":
                    if len(fields) != 2:
                        raise GraphFormatError("expected 'keyword relation'", lineno)
                    schema.declare_alias(fields[0], fields[1])
                else:
                    raise GraphFormatError("declaration before any [section] header", lineno)
            except SchemaError as exc:
                raise GraphFormatError(str(exc), lineno) from exc
        for child, parent, lineno in pending_subclass:
            try:
                schema.declare_subclass(child, parent)
            except SchemaError as exc:
                raise GraphFormatError(str(exc), lineno) from exc
        return schema

    @classmethod
    def load(cls, path) -> "Schema":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())


def _has_cycle(edges: set[tuple[str, str]]) -> bool:
    parents: dict[str, set[str]] = {}
    for child, parent in edges:
        parents.setdefault(child, set()).add(parent)
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[str, int] = {}

    def visit(node: str) -> bool:
        color[node] = GRAY
        for nxt in parents.get(node, ()):
            state = color.get(nxt, WHITE)
            if state == GRAY or (state == WHITE and visit(nxt)):
                return True
        color[node] = BLACK
        return False

    return any(color.get(n, WHITE) == WHITE and visit(n) for n in parents)


class Graph:
    """Triple set with by-subject/predicate/object/(subject,predicate) indexes.

    Entity positions are rewritten to the canonical (lexicographically
    smallest) member of their sameAs equivalence class at query time; the
    raw asserted triples are what save/load round-trips.
    """

    def __init__(self, schema: Schema | None = None):
        self.schema = schema if schema is not None else Schema()
        self._triples: set[Triple] = set()
        self._by_s: dict[str, set[Triple]] = {}
        self._by_p: dict[str, set[Triple]] = {}
        self._by_o: dict[Term, set[Triple]] = {}
        self._by_sp: dict[tuple[str, str], set[Triple]] = {}
        self._same_parent: dict[str, str] = {}

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(sorted(self._triples, key=Triple.sort_key))

    def __contains__(self, t: Triple) -> bool:
        return t in self._triples

    # --- sameAs equivalence ---------------------------------------------

    def canonical(self, entity: str) -> str:
        """Lexicographically smallest member of the entity's sameAs class."""
        node = entity
        while self._same_parent.get(node, node) != node:
            node = self._same_parent[node]
        # path compression
        while self._same_parent.get(entity, entity) != entity:
            self._same_parent[entity], entity = node, self._same_parent[entity]
        return node

    def _union(self, a: str, b: str) -> None:
        ra, rb = self.canonical(a), self.canonical(b)
        if ra == rb:
            return
        winner, loser = (ra, rb) if ra < rb else (rb, ra)
        self._same_parent[loser] = winner
        # fold the loser's index buckets into the winner's
        if loser in self._by_s:
            self._by_s.setdefault(winner, set()).update(self._by_s.pop(loser))
        if loser in self._by_o:
            self._by_o.setdefault(winner, set()).update(self._by_o.pop(loser))
        for s, p in [k for k in self._by_sp if k[0] == loser]:
            self._by_sp.setdefault((winner, p), set()).update(self._by_sp.pop((s, p)))

    # --- mutation ---------------------------------------------------------

    def assert_triple(self, subject: str, predicate: str, obj: Term) -> Triple:
        """Validate, normalize, index, and store one triple (idempotent).

        Entity tokens and class names are normalized; asserting a sameAs
        triple also merges the two equivalence classes, and a subClassOf
        triple extends the subclass hierarchy seen by instances_of.
        """
        t = self._check(subject, predicate, obj)
        if t in self._triples:
            return t
        self._triples.add(t)
        cs = self.canonical(t.subject)
        self._by_s.setdefault(cs, set()).add(t)
        self._by_p.setdefault(t.predicate, set()).add(t)
        okey = t.object if isinstance(t.object, Literal) else self.canonical(t.object)
        self._by_o.setdefault(okey, set()).add(t)
        self._by_sp.setdefault((cs, t.predicate), set()).add(t)
        if t.predicate == "sameAs" and isinstance(t.object, str):
            self._union(t.subject, t.object)
        return t

    def retract_triple(self, subject: str, predicate: str, obj: Term) -> bool:
        """Remove one exact triple; returns whether it was present.

        sameAs merges are not undone (equivalence closure is monotone).
        """
        t = self._check(subject, predicate, obj)
        if t not in self._triples:
            return False
        self._triples.discard(t)
        cs = self.canonical(t.subject)
        okey = t.object if isinstance(t.object, Literal) else self.canonical(t.object)
        for index, key in ((self._by_s, cs), (self._by_p, t.predicate),
                           (self._by_o, okey), (self._by_sp, (cs, t.predicate))):
            bucket = index.get(key)
            if bucket is not None:
                bucket.discard(t)
                if not bucket:
                    del index[key]
        return True

    def merge_same_as(self, a: str, b: str) -> None:
        """Assert ``a sameAs b``; afterwards the two are interchangeable in queries."""
        self.assert_triple(a, "sameAs", b)

    def make_triple(self, subject: str, predicate: str, obj: Term) -> Triple:
        """Validate and normalize a triple without storing it (overlay use)."""
        return self._check(subject, predicate, obj)

    def _check(self, subject: str, predicate: str, obj: Term) -> Triple:
        if predicate not in RESERVED_RELATIONS and predicate not in self.schema.relations:
            raise UnknownRelationError(f"relation '{predicate}' not declared in schema")
        subject = _safe_token(normalize(subject))
        if isinstance(obj, Literal):
            return Triple(subject, predicate, obj)
        obj = _safe_token(normalize(obj))
        if predicate == "type" and obj not in self.schema.classes:
            raise UnknownClassError(f"type object '{obj}' is not a declared class")
        if predicate == "subClassOf":
            for cls in (subject, obj):
                if cls not in self.schema.classes:
                    raise UnknownClassError(f"subClassOf operand '{cls}' is not a declared class")
        return Triple(subject, predicate, obj)

    # --- queries ------------------------------------------------------------

    def match_pattern(self, subject: str | None = None, predicate: str | None = None,
                      obj: Term | None = None) -> list[Triple]:
        """All triples matching the bound positions, canonicalized and sorted.

        None is a wildcard.  Entity positions in both the pattern and the
        results are rewritten to sameAs-canonical representatives, so two
        merged entities are fully interchangeable.  Unknown ids simply
        match nothing.
        """
        s = self.canonical(normalize(subject)) if subject is not None else None
        o: Term | None = obj
        if isinstance(obj, str):
            o = self.canonical(normalize(obj))
        candidates = self._candidates(s, predicate, o)
        out = set()
        for t in candidates:
            ct = self._canonical_triple(t)
            if s is not None and ct.subject != s:
                continue
            if predicate is not None and ct.predicate != predicate:
                continue
            if o is not None and ct.object != o:
                continue
            out.add(ct)
        return sorted(out, key=Triple.sort_key)

    def _candidates(self, s, p, o) -> Iterable[Triple]:
        pools = []
        if s is not None and p is not None:
            pools.append(self._by_sp.get((s, p), set()))
        else:
            if s is not None:
                pools.append(self._by_s.get(s, set()))
            if p is not None:
                pools.append(self._by_p.get(p, set()))
        if o is not None:
            pools.append(self._by_o.get(o, set()))
        if not pools:
            return self._triples
        return min(pools, key=len)

    def _canonical_triple(self, t: Triple) -> Triple:
        obj = t.object if isinstance(t.object, Literal) else self.canonical(t.object)
        return Triple(self.canonical(t.subject), t.predicate, obj)

    def instances_of(self, class_name: str) -> set[str]:
        """Entities typed as the class or any transitive subclass of it."""
        asserted = [
            (t.subject, t.object) for t in self._by_p.get("subClassOf", ())
            if isinstance(t.object, str)
        ]
        out: set[str] = set()
        for cls in self.schema.subclasses(class_name, extra_edges=asserted):
            for t in self._by_o.get(cls, ()):
                if t.predicate == "type":
                    out.add(self.canonical(t.subject))
        return out

    def entities(self) -> set[str]:
        """All raw (un-merged) entity nodes.

        Class names and literals are not entities; subjects/objects of
        subClassOf triples and objects of type triples are classes.
        """
        out: set[str] = set()
        for t in self._triples:
            if t.predicate == "subClassOf":
                continue
            out.add(t.subject)
            if isinstance(t.object, str) and t.predicate != "type":
                out.add(t.object)
        return out - self.schema.classes

    def neighbor_pairs(self, entity: str) -> set[tuple[str, str]]:
        """Canonicalized (predicate, neighbor) pairs in both directions.

        sameAs and hasVector edges and literal-valued objects are excluded;
        this is the edge set graph_similarity compares.
        """
        c = self.canonical(normalize(entity))
        pairs: set[tuple[str, str]] = set()
        for t in self._by_s.get(c, ()):
            if t.predicate in ("sameAs", "hasVector") or isinstance(t.object, Literal):
                continue
            pairs.add((t.predicate, self.canonical(t.object)))
        for t in self._by_o.get(c, ()):
            if t.predicate == "sameAs":
                continue
            pairs.add((t.predicate, self.canonical(t.subject)))
        return pairs

    def graph_similarity(self, a: str, b: str) -> float:
        """Jaccard overlap of the two entities' (predicate, neighbor) sets.

        Symmetric; 1.0 for the same (or sameAs-merged) entity, 0.0 when
        either side is isolated.
        """
        ca, cb = self.canonical(normalize(a)), self.canonical(normalize(b))
        if ca == cb:
            return 1.0
        pa, pb = self.neighbor_pairs(ca), self.neighbor_pairs(cb)
        if not pa or not pb:
            return 0.0
        return len(pa & pb) / len(pa | pb)

    # --- persistence ----------------------------------------------------

    def snapshot(self) -> "Graph":
        """Independent copy safe to hand to a reader thread."""
        g = Graph(self.schema)
        for t in sorted(self._triples, key=Triple.sort_key):
            g.assert_triple(t.subject, t.predicate, t.object)
        return g

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    def to_text(self) -> str:
        """Canonical line format: ``<subject> <predicate> <object> .`` sorted."""
        lines = []
        for t in sorted(self._triples, key=Triple.sort_key):
            if isinstance(t.object, Literal):
                escaped = t.object.value.replace("\\", "\\\\").replace('"', '\\"')
                obj = f'"{escaped}"'
            else:
                obj = f"<{t.object}>"
            lines.append(f"<{t.subject}> <{t.predicate}> {obj} .\n")
        return "".join(lines)

    @classmethod
    def load(cls, path, schema: Schema) -> "Graph":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read(), schema)

    @classmethod
    def parse(cls, text: str, schema: Schema) -> "Graph":
        graph = cls(schema)
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            m = _TRIPLE_LINE.match(line)
            if m is None:
                raise GraphFormatError(f"unparseable triple {line!r}", lineno)
            subject, predicate, entity_obj, literal_obj = m.groups()
            obj: Term
            if entity_obj is not None:
                obj = entity_obj
            else:
                obj = Literal(literal_obj.replace('\\"', '"').replace("\\\\", "\\"))
            try:
                graph.assert_triple(subject, predicate, obj)
            except (UnknownRelationError, UnknownClassError, ValueError) as exc:
                raise GraphFormatError(str(exc), lineno) from exc
        return graph


_TRIPLE_LINE = re.compile(
    r'^<([^<>\s]+)>\s+<([^<>\s]+)>\s+(?:<([^<>\s]+)>|"((?:[^"\\]|\\.)*)")\s+\.$'
)

_BAD_CHARS = frozenset('<>"')


def _safe_token(token: str) -> str:
    if _BAD_CHARS & set(token):
        raise ValueError(f"token {token!r} contains a reserved character")
    return token
