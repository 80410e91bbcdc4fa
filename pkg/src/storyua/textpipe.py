"""Sentence segmentation, textual entities, tokenization and n-best tagging."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .lexicon import TAGSET, Lexicon, lookup_units
from .sexpr import ParseError, read_forms

ENTITY_KINDS = ("word", "phrase", "time", "place", "name", "number", "price")
TIME_WORDS = frozenset({
    "yesterday", "today", "tomorrow", "tonight", "monday", "tuesday", "wednesday", "thursday",
    "friday", "saturday", "sunday",
})
MONTHS = ("January|February|March|April|May|June|July|August|September|October|November|December")
UNITS = ("inches", "inch", "feet", "foot", "miles", "mile", "pounds", "pound", "years", "year",
         "meters", "meter", "minutes", "minute", "hours", "hour", "days", "day")
# capitalized words that start sentences but never begin a name
NON_NAME_CAPS = frozenset({
    "a", "an", "the", "he", "she", "it", "they", "we", "i", "you", "his", "her", "its", "their",
    "this", "that", "these", "those", "when", "while", "after", "before", "yes", "no", "and", "but",
    "little", "dear", "all", "two", "three", "one", "some", "something", "there", "then",
})


@dataclass(frozen=True)
class TextEntity:
    span: tuple[int, int]
    kind: str
    value: object

    def __post_init__(self):
        if self.kind not in ENTITY_KINDS:
            raise ValueError(f"unknown entity kind {self.kind!r}")


@dataclass(frozen=True)
class Reading:
    tag: str
    lemma: str
    feature: str
    weight: float


@dataclass(frozen=True)
class Token:
    surface: str
    span: tuple[int, int]
    readings: tuple[Reading, ...]
    entity: TextEntity | None = None
    unknown: bool = False
    n_words: int = 1  # >1 for merged multiword units

    @property
    def tags(self) -> list[tuple[str, float]]:
        return [(r.tag, r.weight) for r in self.readings]

    @property
    def tag(self) -> str:
        return self.readings[0].tag

    @property
    def lemma(self) -> str:
        return self.readings[0].lemma

    def reading(self, tag: str) -> Reading | None:
        for r in self.readings:
            if r.tag == tag:
                return r
        return None

    @property
    def is_punct(self) -> bool:
        return self.tag not in TAGSET


# --------------------------------------------------------------------------- resources

def _data_lines(name: str) -> list[str]:
    text = resources.files("storyua").joinpath("data", name).read_text(encoding="utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


@lru_cache(maxsize=None)
def default_abbreviations() -> frozenset[str]:
    return frozenset(_data_lines("abbreviations.txt"))


@lru_cache(maxsize=None)
def default_gazetteer() -> tuple[str, ...]:
    return tuple(_data_lines("gazetteer.txt"))


@dataclass(frozen=True)
class TagRule:
    id: str
    prev_tags: frozenset = frozenset()
    prev_words: frozenset = frozenset()
    prefer: tuple[str, ...] = ()

    def fires(self, prev: Token | None) -> bool:
        if prev is None:
            return False
        if self.prev_words and prev.surface.lower() in self.prev_words:
            return True
        return bool(self.prev_tags) and prev.tag in self.prev_tags


def loads_tag_rules(text: str, path: str | None = None) -> tuple[TagRule, ...]:
    rules = []
    for form in read_forms(text, path):
        if form.head != "tagrule" or len(form) < 3:
            raise ParseError("expected (tagrule id (prev-tag|prev-word ...) (prefer ...))", form.line, path)
        tags, words, prefer = set(), set(), ()
        for item in form.items[2:]:
            if item.head == "prev-tag":
                tags.update(item.items[1:])
            elif item.head == "prev-word":
                words.update(w.lower() for w in item.items[1:])
            elif item.head == "prefer":
                prefer = tuple(item.items[1:])
            else:
                raise ParseError(f"unknown tagrule field {item.head!r}", form.line, path)
        rules.append(TagRule(str(form[1]), frozenset(tags), frozenset(words), prefer))
    return tuple(rules)


@lru_cache(maxsize=None)
def default_tag_rules() -> tuple[TagRule, ...]:
    text = resources.files("storyua").joinpath("data", "tagrules.rules").read_text(encoding="utf-8")
    return loads_tag_rules(text, "tagrules.rules")


def load_word_list(path) -> tuple[str, ...]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return tuple(ln.strip() for ln in lines if ln.strip() and not ln.strip().startswith("#"))


# --------------------------------------------------------------------------- segmentation

_TERMINATOR = re.compile(r"[.?!]+[\"')\]]*")


def segment_sentences(text: str, abbreviations=None) -> list[tuple[int, int]]:
    """Character spans of sentences, each trimmed of surrounding whitespace."""
    abbrevs = default_abbreviations() if abbreviations is None else frozenset(abbreviations)
    spans = []
    start = None
    i = 0
    n = len(text)
    while i < n:
        if start is None:
            if text[i].isspace():
                i += 1
                continue
            start = i
        m = _TERMINATOR.match(text, i) if text[i] in ".?!" else None
        if m is None:
            i += 1
            continue
        end = m.end()
        if text[i] == "." and m.group(0) == "." and not _period_ends(text, i, end, abbrevs):
            i = end
            continue
        spans.append((start, end))
        start = None
        i = end
    if start is not None:
        end = len(text.rstrip())
        if end > start:
            spans.append((start, end))
    return spans


def _period_ends(text: str, i: int, end: int, abbrevs) -> bool:
    word = re.search(r"(\w+)$", text[:i])
    if end < len(text) and text[end].isdigit():
        return False  # decimal point
    if word:
        w = word.group(1)
        if w in abbrevs or (len(w) == 1 and w.isupper()):
            return False
    return True


# --------------------------------------------------------------------------- entities

_PRICE = re.compile(r"\$\d{1,3}(?:,\d{3})+(?:\.\d+)?|\$\d+(?:\.\d+)?")
_MEASURE = re.compile(r"\b(\d+(?:\.\d+)?)(?:\s+|-)(%s)\b" % "|".join(UNITS))
_NUMBER = re.compile(r"\b\d{1,3}(?:,\d{3})+\b|\b\d+(?:\.\d+)?\b")
_DATE = re.compile(r"\b(?:%s)\s+\d{1,2}(?:,\s*\d{4})?\b" % MONTHS)
_NAME = re.compile(r"\b[A-Z][a-z]+(?:\s+(?:[A-Z]\.|[A-Z][a-z]+))*")


def recognize_entities(text: str, gazetteer=None, names=None) -> list[TextEntity]:
    """Prices, measures, numbers, places, names and time words, non-overlapping."""
    text = text.rstrip()
    places = default_gazetteer() if gazetteer is None else tuple(gazetteer)
    known_names = frozenset(names or ())
    found: list[TextEntity] = []
    for m in _PRICE.finditer(text):
        found.append(TextEntity(m.span(), "price", (_amount(m.group(0)[1:]), "USD")))
    for m in _MEASURE.finditer(text):
        unit = m.group(2)
        found.append(TextEntity(m.span(), "number", (_amount(m.group(1)), _unit(unit))))
    for m in _DATE.finditer(text):
        found.append(TextEntity(m.span(), "time", m.group(0)))
    for m in re.finditer(r"\b\w+\b", text):
        if m.group(0).lower() in TIME_WORDS:
            found.append(TextEntity(m.span(), "time", m.group(0).lower()))
    for place in sorted(places, key=len, reverse=True):
        for m in re.finditer(r"\b%s\b" % re.escape(place), text, flags=re.IGNORECASE):
            found.append(TextEntity(m.span(), "place", place))
    for m in _NAME.finditer(text):
        name = _trim_name(text, m, known_names)
        if name is not None:
            found.append(name)
    for m in _NUMBER.finditer(text):
        if m.start() > 0 and text[m.start() - 1] == "$":
            continue
        found.append(TextEntity(m.span(), "number", (_amount(m.group(0)), None)))
    return _resolve_overlaps(found)


_PRIORITY = {"price": 0, "place": 1, "time": 2, "number": 3, "name": 4, "phrase": 5}


def _resolve_overlaps(found):
    chosen: list[TextEntity] = []
    for e in sorted(found, key=lambda e: (-(e.span[1] - e.span[0]), _PRIORITY[e.kind], e.span)):
        if all(e.span[1] <= c.span[0] or c.span[1] <= e.span[0] for c in chosen):
            chosen.append(e)
    return sorted(chosen, key=lambda e: e.span)


def _trim_name(text, m, known_names):
    words = re.findall(r"[A-Z]\.|[A-Z][a-z]+", m.group(0))
    start = m.start()
    sentence_initial = _sentence_initial(text, start)
    if words and words[0].lower() in NON_NAME_CAPS:
        if len(words) == 1:
            return None
        # drop the leading function word and retry on the remainder
        rest = m.group(0)[len(words[0]):]
        offset = len(m.group(0)) - len(rest.lstrip())
        sub = _NAME.match(text, start + offset)
        return _trim_name(text, sub, known_names) if sub else None
    if len(words) == 1 and sentence_initial and words[0] not in known_names:
        return None
    if any(w.lower() in TIME_WORDS for w in words):
        return None
    return TextEntity(m.span(), "name", m.group(0))


def _sentence_initial(text, start):
    before = text[:start].rstrip()
    return not before or before[-1] in ".?!\"'"


def _amount(s: str) -> float | int:
    v = float(s.replace(",", ""))
    return int(v) if v.is_integer() else v


def _unit(u: str) -> str:
    singular = {"inches": "inch", "feet": "foot", "miles": "mile", "pounds": "pound", "years": "year",
                "meters": "meter", "minutes": "minute", "hours": "hour", "days": "day"}
    return singular.get(u, u)


# --------------------------------------------------------------------------- tokens and tags

_TOKEN = re.compile(r"\$\d{1,3}(?:,\d{3})+(?:\.\d+)?|\$\d+(?:\.\d+)?|\d+-[A-Za-z]+|\d+(?:[.,]\d+)*"
                    r"|[A-Z]\.(?=\s|$)|\w+(?:-\w+)*|'s\b|[^\w\s]")


def tokenize(text: str, span: tuple[int, int] | None = None) -> list[tuple[str, tuple[int, int]]]:
    start, end = span if span is not None else (0, len(text))
    return [(m.group(0), (m.start(), m.end())) for m in _TOKEN.finditer(text, start, end)]


def _base_readings(lex: Lexicon, surface: str, entity: TextEntity | None) -> tuple[list, bool]:
    out: list[tuple[str, str, str]] = []
    if re.fullmatch(r"\d+-[A-Za-z]+", surface):
        out.append(("JJ", surface.lower(), "base"))
    elif entity is not None and entity.kind == "price" or re.fullmatch(r"\$?\d[\d,.]*", surface):
        out.append(("CD", surface, "base"))
    units = [u for u in lookup_units(lex, [surface]) if u.length == 1 and not u.unknown]
    for u in units:
        for t in u.tags:
            out.append((t, u.lemma, u.feature))
    unknown = not out
    if unknown:
        if not re.search(r"\w", surface):
            return [(surface, surface, "punct")], False
        if surface[:1].isupper():
            out.append(("NNP", surface, "base"))
        else:
            out.append(("NN", surface.lower(), "base"))
    elif surface[:1].isupper() and not any(t == "NNP" for t, _, _ in out) and entity is not None \
            and entity.kind in ("name", "place"):
        out.insert(0, ("NNP", surface, "base"))
    seen, uniq = set(), []
    for r in out:
        if r[0] not in seen:
            seen.add(r[0])
            uniq.append(r)
    return uniq, unknown


def tag_nbest(lex: Lexicon, sentence, k: int, rules=None, entities=None, merge_multiword: bool = True) -> list[Token]:
    """Tag a sentence with at most ``k`` weighted hypotheses per token.

    ``sentence`` is either raw text or a list of (surface, span) pairs.
    Multiword lexicon units are merged into a single token first.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    rules = default_tag_rules() if rules is None else rules
    if isinstance(sentence, str):
        if entities is None:
            entities = recognize_entities(sentence)
        pairs = tokenize(sentence)
    else:
        pairs = list(sentence)
    entities = entities or []

    def entity_at(span):
        for e in entities:
            if e.span[0] <= span[0] and span[1] <= e.span[1]:
                return e
        return None

    groups = _multiword_groups(lex, [s for s, _ in pairs]) if merge_multiword and pairs else {}
    raw: list[tuple[str, tuple[int, int], list, bool, TextEntity | None, int]] = []
    i = 0
    while i < len(pairs):
        if i in groups:
            n, unit_tags, lemma = groups[i]
            surface = " ".join(s for s, _ in pairs[i:i + n])
            span = (pairs[i][1][0], pairs[i + n - 1][1][1])
            raw.append((surface, span, [(t, lemma, "base") for t in unit_tags], False, None, n))
            i += n
            continue
        surface, span = pairs[i]
        ent = entity_at(span)
        readings, unknown = _base_readings(lex, surface, ent)
        raw.append((surface, span, readings, unknown, ent, 1))
        i += 1

    tokens: list[Token] = []
    prev: Token | None = None
    for surface, span, readings, unknown, ent, n in raw:
        order = list(readings)
        for rule in rules:
            if rule.fires(prev):
                for want in rule.prefer:
                    hit = next((r for r in order if r[0] == want), None)
                    if hit is not None:
                        order.remove(hit)
                        order.insert(0, hit)
                        break
                else:
                    continue
                break
        weighted = tuple(Reading(t, lem, feat, round(1.0 / (rank + 1), 6))
                         for rank, (t, lem, feat) in enumerate(order))
        tok = Token(surface, span, weighted, ent, unknown, n)
        tokens.append(tok)
        if not tok.is_punct:
            prev = tok
    return [Token(t.surface, t.span, t.readings[:k], t.entity, t.unknown, t.n_words) for t in tokens]


def _multiword_groups(lex: Lexicon, words: list[str]) -> dict[int, tuple[int, tuple[str, ...], str]]:
    groups = {}
    units = lookup_units(lex, words)
    taken_until = 0
    for u in units:
        if u.length > 1 and u.span[0] >= taken_until:
            groups[u.span[0]] = (u.length, u.tags, u.lemma)
            taken_until = u.span[1]
    return groups


def format_tags(tokens, with_punct: bool = False) -> str:
    return " ".join(f"{t.surface}/{t.tag}" for t in tokens if with_punct or not t.is_punct)


def dump_entities(text: str, entities) -> list[str]:
    return [f"{e.span[0]}-{e.span[1]}\t{e.kind}\t{_fmt_value(e.value)}" for e in entities]


def _fmt_value(v) -> str:
    if isinstance(v, tuple):
        return " ".join(str(x) for x in v if x is not None)
    return str(v)
