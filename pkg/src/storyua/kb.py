"""Commonsense knowledge base: concepts, typed relational assertions, scripts.

A ``KB`` is immutable. ``assert_fact`` returns a new value; readers may share
one instance freely.

Text format, one form per line::

    (concept car "car" "automobile")
    (ako car motor-vehicle)
    (size-of chair tall 3 feet)
    (script rob (roles robber victim) (event 1 threaten robber victim))
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from .sexpr import Form, ParseError, Str, quote, read_forms

RELATION_KINDS = (
    "ako", "isa", "part-of", "material-of", "used-for", "used-at", "color-of",
    "size-of", "duration-of", "typical-subject-of", "typical-object-of",
    "implies", "causes",
)
MAGNITUDE_KINDS = frozenset({"size-of", "duration-of"})
# isa is an instance link; everything else inherits down ako edges.
NON_INHERITED = frozenset({"isa"})


class KBError(ValueError):
    pass


class CycleError(KBError):
    pass


class UnknownConcept(KBError, KeyError):
    def __str__(self):
        return f"unknown concept: {self.args[0]}"


@dataclass(frozen=True)
class Concept:
    id: str
    names: tuple[str, ...] = ()
    gloss: str | None = None
    implicit: bool = False


@dataclass(frozen=True, order=True)
class Assertion:
    kind: str
    source: str
    target: str
    magnitude: tuple[float, str] | None = None

    def __post_init__(self):
        if self.kind not in RELATION_KINDS:
            raise KBError(f"unknown relation kind {self.kind!r}")
        if (self.magnitude is not None) != (self.kind in MAGNITUDE_KINDS):
            raise KBError(f"magnitude must be given iff kind is size-of/duration-of: {self}")

    def to_text(self) -> str:
        s = f"({self.kind} {self.source} {self.target}"
        if self.magnitude is not None:
            value, unit = self.magnitude
            s += f" {_num(value)} {unit}"
        return s + ")"


@dataclass(frozen=True)
class Script:
    id: str
    roles: tuple[str, ...]
    events: tuple[tuple[int, str, tuple[str, ...]], ...]
    preconditions: tuple[tuple[str, ...], ...] = ()
    postconditions: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        declared = set(self.roles)
        for n, pred, refs in self.events:
            missing = [r for r in refs if r not in declared]
            if missing:
                raise KBError(f"script {self.id}: event {n} references undeclared role(s) {missing}")
        order = [n for n, _, _ in self.events]
        if len(set(order)) != len(order):
            raise KBError(f"script {self.id}: event order is not total")

    def to_text(self) -> str:
        parts = [f"(script {self.id} (roles {' '.join(self.roles)})"]
        for n, pred, refs in sorted(self.events):
            parts.append(f"(event {n} {pred}{''.join(' ' + r for r in refs)})")
        for tag, conds in (("pre", self.preconditions), ("post", self.postconditions)):
            for c in conds:
                parts.append(f"({tag} {' '.join(c)})")
        return " ".join(parts) + ")"


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


@dataclass(frozen=True)
class KB:
    concepts: Mapping[str, Concept] = field(default_factory=lambda: MappingProxyType({}))
    assertions: frozenset[Assertion] = frozenset()
    scripts: Mapping[str, Script] = field(default_factory=lambda: MappingProxyType({}))

    # derived indexes are rebuilt lazily; the KB itself never mutates
    def _index(self) -> dict[tuple[str, str], list[Assertion]]:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {}
            for a in self.assertions:
                idx.setdefault((a.kind, a.source), []).append(a)
            object.__setattr__(self, "_idx", idx)
        return idx

    def __contains__(self, cid: str) -> bool:
        return cid in self.concepts

    def __len__(self) -> int:
        return len(self.concepts)

    def check(self, cid: str) -> None:
        if cid not in self.concepts:
            raise UnknownConcept(cid)

    def direct(self, kind: str, source: str) -> list[Assertion]:
        return list(self._index().get((kind, source), ()))

    def parents(self, cid: str) -> list[str]:
        return sorted(a.target for a in self.direct("ako", cid))

    def ancestors(self, cid: str) -> dict[str, int]:
        """Every concept reachable upward via ako, with its shortest distance (self = 0)."""
        self.check(cid)
        cache = self.__dict__.setdefault("_anc", {})
        if cid in cache:
            return cache[cid]
        dist = {cid: 0}
        queue = deque([cid])
        while queue:
            c = queue.popleft()
            for p in self.parents(c):
                if p not in dist:
                    dist[p] = dist[c] + 1
                    queue.append(p)
        cache[cid] = dist
        return dist

    def label(self, cid: str) -> str:
        c = self.concepts.get(cid)
        return c.names[0] if c and c.names else cid


def _freeze(concepts: dict, assertions: Iterable[Assertion], scripts: dict) -> KB:
    return KB(MappingProxyType(dict(concepts)), frozenset(assertions), MappingProxyType(dict(scripts)))


def _check_acyclic(assertions: Iterable[Assertion]) -> None:
    graph: dict[str, list[str]] = {}
    for a in assertions:
        if a.kind == "ako":
            graph.setdefault(a.source, []).append(a.target)
    WHITE, GREY, BLACK = 0, 1, 2
    color: dict[str, int] = {}
    for root in sorted(graph):
        if color.get(root, WHITE) != WHITE:
            continue
        stack = [(root, iter(sorted(graph.get(root, ()))))]
        color[root] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = BLACK
                stack.pop()
            elif color.get(nxt, WHITE) == GREY:
                raise CycleError(f"ako cycle through {nxt!r} and {node!r}")
            elif color.get(nxt, WHITE) == WHITE:
                color[nxt] = GREY
                stack.append((nxt, iter(sorted(graph.get(nxt, ())))))


def _parse_form(form: Form, concepts: dict, assertions: set, scripts: dict, path) -> None:
    head = form.head
    if not isinstance(head, str) or isinstance(head, Str):
        raise ParseError("form must start with a symbol", form.line, path)

    def mention(cid):
        if not isinstance(cid, str) or isinstance(cid, Form):
            raise ParseError(f"expected a concept id, got {cid!r}", form.line, path)
        if cid not in concepts:
            concepts[cid] = Concept(cid, implicit=True)

    if head == "concept":
        if len(form) < 2 or isinstance(form[1], Form):
            raise ParseError("concept needs an id", form.line, path)
        cid = form[1]
        names, gloss = [], None
        for item in form.items[2:]:
            if isinstance(item, Form) and item.head == "gloss" and len(item) == 2:
                gloss = str(item[1])
            elif isinstance(item, Str):
                names.append(str(item))
            else:
                raise ParseError(f"bad concept field {item!r}", form.line, path)
        concepts[cid] = Concept(cid, tuple(names), gloss, implicit=False)
    elif head in RELATION_KINDS:
        args = form.items[1:]
        if any(isinstance(x, Form) for x in args):
            raise ParseError(f"{head}: nested forms not allowed", form.line, path)
        if head in MAGNITUDE_KINDS:
            if len(args) != 4:
                raise ParseError(f"{head} needs source target magnitude unit", form.line, path)
            try:
                mag = (float(args[2]), str(args[3]))
            except ValueError:
                raise ParseError(f"bad magnitude {args[2]!r}", form.line, path) from None
        else:
            if len(args) != 2:
                raise ParseError(f"{head} needs source and target", form.line, path)
            mag = None
        mention(args[0])
        mention(args[1])
        assertions.add(Assertion(head, str(args[0]), str(args[1]), mag))
    elif head == "script":
        if len(form) < 2:
            raise ParseError("script needs an id", form.line, path)
        sid = str(form[1])
        mention(sid)
        roles, events, pre, post = (), [], [], []
        for item in form.items[2:]:
            if not isinstance(item, Form):
                raise ParseError(f"bad script field {item!r}", form.line, path)
            if item.head == "roles":
                roles = tuple(str(r) for r in item.items[1:])
            elif item.head == "event":
                try:
                    n = int(item[1])
                except (IndexError, ValueError):
                    raise ParseError("event needs an integer position", form.line, path) from None
                events.append((n, str(item[2]), tuple(str(r) for r in item.items[3:])))
            elif item.head in ("pre", "post"):
                (pre if item.head == "pre" else post).append(tuple(str(x) for x in item.items[1:]))
            else:
                raise ParseError(f"bad script field {item.head!r}", form.line, path)
        try:
            scripts[sid] = Script(sid, roles, tuple(sorted(events)), tuple(pre), tuple(post))
        except KBError as e:
            raise ParseError(str(e), form.line, path) from None
    else:
        raise ParseError(f"unknown form {head!r}", form.line, path)


def loads_kb(text: str, path: str | None = None) -> KB:
    concepts: dict[str, Concept] = {}
    assertions: set[Assertion] = set()
    scripts: dict[str, Script] = {}
    for form in read_forms(text, path):
        try:
            _parse_form(form, concepts, assertions, scripts, path)
        except KBError as e:
            raise ParseError(str(e), form.line, path) from None
    _check_acyclic(assertions)
    return _freeze(concepts, assertions, scripts)


def load_kb(path) -> KB:
    path = Path(path)
    return loads_kb(path.read_text(encoding="utf-8"), str(path))


def load_kbs(paths) -> KB:
    text = "\n".join(Path(p).read_text(encoding="utf-8") for p in paths)
    return loads_kb(text, ",".join(str(p) for p in paths))


def dumps_kb(kb: KB) -> str:
    lines = []
    for cid in sorted(kb.concepts):
        c = kb.concepts[cid]
        if c.implicit:
            continue
        s = f"(concept {cid}{''.join(' ' + quote(n) for n in c.names)}"
        if c.gloss is not None:
            s += f" (gloss {quote(c.gloss)})"
        lines.append(s + ")")
    lines.extend(a.to_text() for a in sorted(kb.assertions))
    lines.extend(kb.scripts[s].to_text() for s in sorted(kb.scripts))
    return "\n".join(lines) + ("\n" if lines else "")


def save_kb(kb: KB, path) -> None:
    Path(path).write_text(dumps_kb(kb), encoding="utf-8")


def assert_fact(kb: KB, a: Assertion) -> KB:
    """Return a KB that also holds ``a``. Unknown concepts are created implicitly."""
    if a in kb.assertions:
        return kb
    concepts = dict(kb.concepts)
    for cid in (a.source, a.target):
        concepts.setdefault(cid, Concept(cid, implicit=True))
    assertions = set(kb.assertions) | {a}
    if a.kind == "ako":
        _check_acyclic(assertions)
    return _freeze(concepts, assertions, kb.scripts)


def add_concept(kb: KB, concept: Concept) -> KB:
    concepts = dict(kb.concepts)
    concepts[concept.id] = concept
    return _freeze(concepts, kb.assertions, kb.scripts)


def query(kb: KB, kind: str, source: str) -> list[tuple[str, tuple[float, str] | None]]:
    """Targets of ``kind`` for ``source``, including those inherited down ako.

    For magnitude-bearing kinds the nearest ancestor's magnitude wins; ties go
    to the smaller magnitude.
    """
    if kind not in RELATION_KINDS:
        raise KBError(f"unknown relation kind {kind!r}")
    kb.check(source)
    levels = {source: 0} if kind in NON_INHERITED else kb.ancestors(source)
    best: dict[str, tuple[int, float, tuple[float, str] | None]] = {}
    for anc, d in levels.items():
        for a in kb.direct(kind, anc):
            mag_key = a.magnitude[0] if a.magnitude else 0.0
            key = (d, mag_key, a.magnitude)
            if a.target not in best or key[:2] < best[a.target][:2]:
                best[a.target] = key
    return [(t, best[t][2]) for t in sorted(best)]


def specializes(kb: KB, sub: str, sup: str) -> bool:
    kb.check(sub)
    kb.check(sup)
    return sup in kb.ancestors(sub)


def related(kb: KB, a: str, b: str, kinds: Iterable[str]) -> bool:
    """True when some listed relation (with inheritance) links a to b or b to a."""
    for kind in kinds:
        if any(t == b or specializes(kb, b, t) for t, _ in query(kb, kind, a)):
            return True
        if any(t == a or specializes(kb, a, t) for t, _ in query(kb, kind, b)):
            return True
    return False
