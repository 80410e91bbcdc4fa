"""Lexicon: words and multiword phrases mapped to senses, argument structure,
selectional preferences, plus a small inflectional morphology.

File format (one s-expression per entry)::

    (lex "set" VB
      (sense place (pattern SettingAnObject (subject performedBy) (object objectActedOn)
                                            (prep "on" onLocation)))
      (sense jell (pattern Jelling (subject performedBy) (object objectActedOn))))
    (lex "bark" VB (sense barking (pattern Barking (subject performedBy)) (prefer performedBy dog 1)))
    (lex "French fries" NNS (sense french-fries))
    (inflect "was" "be" past)
    (gender "John" m)

Pattern slots: ``(subject r)``, ``(object r)``, ``(object2 r)``, ``(prep "p" r)``,
``(prep? "p" r)`` (optional), ``(clause r subject|object)`` (infinitive whose
understood subject is the named slot's filler).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .kb import KB, UnknownConcept, specializes
from .sexpr import Form, ParseError, Str, quote, read_forms

TAGSET = ("DT", "JJ", "NN", "NNP", "NNS", "VB", "VBD", "VBN", "IN", "RP", "PRP", "PRP$", "CD", "TO", "RB")
POS_ALIASES = {"noun": "NN", "verb": "VB", "adjective": "JJ", "adverb": "RB", "name": "NNP",
               "preposition": "IN", "determiner": "DT", "pronoun": "PRP"}
NOUN_TAGS = frozenset({"NN", "NNS", "NNP"})
VERB_TAGS = frozenset({"VB", "VBD", "VBN"})
SLOT_KINDS = ("subject", "object", "object2", "prep", "prep?", "clause")


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class Slot:
    kind: str  # subject | object | object2 | prep | clause
    role: str
    prep: str | None = None
    optional: bool = False
    controller: str | None = None  # clause slots: which slot supplies the inner subject

    def to_text(self) -> str:
        if self.kind == "prep":
            return f"({'prep?' if self.optional else 'prep'} {quote(self.prep)} {self.role})"
        if self.kind == "clause":
            return f"(clause {self.role} {self.controller})"
        return f"({self.kind} {self.role})"


@dataclass(frozen=True)
class ArgPattern:
    frame_type: str
    shape: tuple[Slot, ...]

    @property
    def role_map(self) -> dict[str, str]:
        out = {}
        for s in self.shape:
            key = f"prep:{s.prep}" if s.kind == "prep" else s.kind
            out[key] = s.role
        return out

    def slot(self, kind: str, prep: str | None = None) -> Slot | None:
        for s in self.shape:
            if s.kind == kind and (prep is None or s.prep == prep):
                return s
        return None

    def to_text(self) -> str:
        return f"(pattern {self.frame_type} {' '.join(s.to_text() for s in self.shape)})"


@dataclass(frozen=True)
class SelectionalPref:
    role: str
    preferred: str
    strength: float

    def __post_init__(self):
        if not self.strength > 0:
            raise LexiconError(f"preference strength must be positive: {self}")


@dataclass(frozen=True)
class Sense:
    concept: str
    patterns: tuple[ArgPattern, ...] = ()
    prefs: tuple[SelectionalPref, ...] = ()
    renderings: tuple[tuple[str, str], ...] = ()  # (modified concept, word)


@dataclass(frozen=True)
class LexEntry:
    lemma: str
    pos: str
    senses: tuple[Sense, ...]

    @property
    def n_tokens(self) -> int:
        return len(self.lemma.split())


@dataclass(frozen=True)
class LexUnit:
    """One lexical reading of a token span."""

    span: tuple[int, int]  # token indices [start, end)
    surface: str
    lemma: str
    tags: tuple[str, ...]  # candidate tags for this reading, most plausible first
    feature: str = "base"
    unknown: bool = False

    @property
    def length(self) -> int:
        return self.span[1] - self.span[0]


@dataclass
class Lexicon:
    entries: dict = field(default_factory=dict)  # (lemma, pos) -> LexEntry
    order: list = field(default_factory=list)  # (lemma, pos) in file order
    irregular: dict = field(default_factory=dict)  # form -> [(lemma, feature)]
    genders: dict = field(default_factory=dict)  # first name -> m | f

    def __len__(self):
        return len(self.entries)

    def by_lemma(self, lemma: str) -> list[LexEntry]:
        return [self.entries[k] for k in self.order if k[0] == lemma]

    def has_word(self, word: str) -> bool:
        w = word.lower()
        return any(k[0].lower() == w for k in self.entries) or w in self.irregular

    def multiword(self) -> list[LexEntry]:
        return [self.entries[k] for k in self.order if " " in k[0]]


def normalize_pos(pos: str) -> str:
    pos = POS_ALIASES.get(pos, pos)
    if pos not in TAGSET:
        raise LexiconError(f"tag {pos!r} is outside the tagset")
    return pos


def _parse_slot(item: Form, line, path) -> Slot:
    kind = item.head
    try:
        if kind in ("subject", "object", "object2"):
            return Slot(kind, str(item[1]))
        if kind in ("prep", "prep?"):
            if not isinstance(item[1], Str):
                raise ParseError("preposition slots name their preposition in quotes", line, path)
            return Slot("prep", str(item[2]), str(item[1]), optional=kind == "prep?")
        if kind == "clause":
            ctrl = str(item[2]) if len(item) > 2 else "subject"
            if ctrl not in ("subject", "object"):
                raise ParseError(f"clause controller must be subject or object, got {ctrl}", line, path)
            return Slot("clause", str(item[1]), controller=ctrl)
    except IndexError:
        raise ParseError(f"incomplete slot {kind!r}", line, path) from None
    raise ParseError(f"unknown slot kind {kind!r}", line, path)


def _parse_sense(form: Form, kb: KB | None, line, path) -> Sense:
    if len(form) < 2 or isinstance(form[1], Form):
        raise ParseError("sense needs a concept", line, path)
    concept = str(form[1])
    if kb is not None and concept not in kb:
        raise LexiconError(f"line {line}: unknown concept {concept!r}")
    patterns, prefs, renders = [], [], []
    for item in form.items[2:]:
        if not isinstance(item, Form):
            raise ParseError(f"bad sense field {item!r}", line, path)
        if item.head == "pattern":
            ftype = str(item[1])
            if kb is not None and ftype not in kb:
                raise LexiconError(f"line {line}: unknown frame type {ftype!r}")
            shape = tuple(_parse_slot(s, line, path) for s in item.items[2:])
            roles = [s.role for s in shape]
            if len(set(roles)) != len(roles):
                raise ParseError(f"pattern {ftype}: a role appears twice", line, path)
            patterns.append(ArgPattern(ftype, shape))
        elif item.head == "prefer":
            role, pref, strength = str(item[1]), str(item[2]), float(item[3])
            if kb is not None and pref not in kb:
                raise LexiconError(f"line {line}: unknown concept {pref!r}")
            prefs.append(SelectionalPref(role, pref, strength))
        elif item.head == "render":
            renders.append((str(item[1]), str(item[2])))
        else:
            raise ParseError(f"bad sense field {item.head!r}", line, path)
    return Sense(concept, tuple(patterns), tuple(prefs), tuple(renders))


def loads_lexicon(text: str, kb: KB | None = None, path: str | None = None) -> Lexicon:
    lex = Lexicon()
    for form in read_forms(text, path):
        head = form.head
        try:
            if head == "lex":
                if len(form) < 3 or not isinstance(form[1], Str):
                    raise ParseError("lex needs a quoted lemma and a tag", form.line, path)
                lemma = str(form[1])
                pos = normalize_pos(str(form[2]))
                senses = tuple(
                    _parse_sense(s, kb, form.line, path)
                    for s in form.items[3:]
                    if isinstance(s, Form) and s.head == "sense"
                )
                if len(senses) != len(form.items) - 3:
                    raise ParseError("lex entries contain only sense forms", form.line, path)
                if not senses:
                    raise LexiconError(f"line {form.line}: entry {lemma!r} has no sense")
                for s in senses:
                    if pos in VERB_TAGS and not s.patterns:
                        raise LexiconError(f"line {form.line}: verb sense {s.concept} needs a pattern")
                    if pos not in VERB_TAGS and pos != "JJ" and s.patterns:
                        raise LexiconError(f"line {form.line}: {pos} sense {s.concept} cannot have patterns")
                key = (lemma, pos)
                if key in lex.entries:
                    raise LexiconError(f"line {form.line}: duplicate entry {lemma!r} {pos}")
                lex.entries[key] = LexEntry(lemma, pos, senses)
                lex.order.append(key)
            elif head == "inflect":
                form_, lemma, feature = str(form[1]), str(form[2]), str(form[3])
                lex.irregular.setdefault(form_.lower(), []).append((lemma, feature))
            elif head == "gender":
                lex.genders[str(form[1])] = str(form[2])
            else:
                raise ParseError(f"unknown form {head!r}", form.line, path)
        except IndexError:
            raise ParseError(f"incomplete {head} form", form.line, path) from None
        except LexiconError as e:
            if kb is not None and "unknown concept" in str(e):
                raise UnknownConcept(str(e)) from None
            raise
    return lex


def load_lexicon(path, kb: KB | None = None) -> Lexicon:
    path = Path(path)
    return loads_lexicon(path.read_text(encoding="utf-8"), kb, str(path))


def load_lexicons(paths, kb: KB | None = None) -> Lexicon:
    text = "\n".join(Path(p).read_text(encoding="utf-8") for p in paths)
    return loads_lexicon(text, kb, ",".join(str(p) for p in paths))


def dumps_lexicon(lex: Lexicon) -> str:
    lines = []
    for key in lex.order:
        e = lex.entries[key]
        parts = [f"(lex {quote(e.lemma)} {e.pos}"]
        for s in e.senses:
            bits = [f"(sense {s.concept}"]
            bits += [p.to_text() for p in s.patterns]
            bits += [f"(prefer {p.role} {p.preferred} {_num(p.strength)})" for p in s.prefs]
            bits += [f"(render {c} {quote(w)})" for c, w in s.renderings]
            parts.append(" ".join(bits) + ")")
        lines.append(" ".join(parts) + ")")
    for form_, pairs in lex.irregular.items():
        for lemma, feat in pairs:
            lines.append(f"(inflect {quote(form_)} {quote(lemma)} {feat})")
    for name, g in lex.genders.items():
        lines.append(f"(gender {quote(name)} {g})")
    return "\n".join(lines) + ("\n" if lines else "")


def save_lexicon(lex: Lexicon, path) -> None:
    Path(path).write_text(dumps_lexicon(lex), encoding="utf-8")


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


# --------------------------------------------------------------------------- morphology

FEATURE_TAGS = {
    ("VB", "base"): ("VB",),
    ("VB", "past"): ("VBD", "VBN"),
    ("VB", "pasttense"): ("VBD",),
    ("VB", "pastpart"): ("VBN",),
    ("VB", "3sg"): ("VB",),
    ("VB", "prog"): ("VB",),
    ("NN", "plural"): ("NNS",),
}


def _regular_analyses(word: str):
    """(candidate lemma, feature, applies-to tag) for regular inflections."""
    out = []
    if word.endswith("ied") and len(word) > 4:
        out.append((word[:-3] + "y", "past", "VB"))
    if word.endswith("ed") and len(word) > 3:
        stem = word[:-2]
        out += [(stem, "past", "VB"), (word[:-1], "past", "VB")]
        if len(stem) > 2 and stem[-1] == stem[-2]:
            out.append((stem[:-1], "past", "VB"))
    if word.endswith("ing") and len(word) > 4:
        stem = word[:-3]
        out += [(stem, "prog", "VB"), (stem + "e", "prog", "VB")]
        if len(stem) > 2 and stem[-1] == stem[-2]:
            out.append((stem[:-1], "prog", "VB"))
    if word.endswith("ies") and len(word) > 4:
        out += [(word[:-3] + "y", "plural", "NN"), (word[:-3] + "y", "3sg", "VB")]
    if word.endswith("es") and len(word) > 3:
        out += [(word[:-2], "plural", "NN"), (word[:-2], "3sg", "VB")]
    if word.endswith("s") and not word.endswith("ss") and len(word) > 2:
        out += [(word[:-1], "plural", "NN"), (word[:-1], "3sg", "VB")]
    return out


def analyses(lex: Lexicon, surface: str) -> list[tuple[str, str, tuple[str, ...]]]:
    """All (lemma, feature, tags) readings of one token, lexicon order first."""
    out: list[tuple[str, str, tuple[str, ...]]] = []
    seen = set()

    def add(lemma, feature, tags):
        key = (lemma, feature, tags)
        if key not in seen:
            seen.add(key)
            out.append(key)

    forms = [surface] if surface == surface.lower() else [surface, surface.lower()]
    for w in forms:
        for e in lex.by_lemma(w):
            if " " not in e.lemma:
                add(e.lemma, "base", (e.pos,))
    low = surface.lower()
    for lemma, feature in lex.irregular.get(low, ()):
        for e in lex.by_lemma(lemma):
            tags = FEATURE_TAGS.get((e.pos, feature))
            if tags:
                add(lemma, feature, tags)
    for lemma, feature, pos in _regular_analyses(low):
        if (lemma, pos) in lex.entries:
            add(lemma, feature, FEATURE_TAGS[(pos, feature)])
    return out


def lookup_units(lex: Lexicon, tokens) -> list[LexUnit]:
    """Multiword and single-token readings of ``tokens``.

    Units are ordered by start position; at each position longer units come
    first. Every token is covered, unknown words by an ``unknown`` unit.
    """
    words = [t if isinstance(t, str) else t.surface for t in tokens]
    if not words:
        raise ValueError("lookup_units needs at least one token")
    lowered = [w.lower() for w in words]
    multi = {}
    for e in lex.multiword():
        parts = e.lemma.lower().split()
        multi.setdefault(parts[0], []).append((parts, e))
    units: list[LexUnit] = []
    for i, w in enumerate(words):
        here: list[LexUnit] = []
        for parts, e in multi.get(lowered[i], ()):
            n = len(parts)
            if lowered[i:i + n] == parts:
                here.append(LexUnit((i, i + n), " ".join(words[i:i + n]), e.lemma, (e.pos,)))
                continue
            # plural head of a multiword noun ("buffer spring" / "buffer springs")
            if e.pos == "NN" and n > 1 and lowered[i:i + n - 1] == parts[:-1] and i + n <= len(words):
                last = lowered[i + n - 1]
                if last in (parts[-1] + "s", parts[-1] + "es"):
                    here.append(LexUnit((i, i + n), " ".join(words[i:i + n]), e.lemma, ("NNS",), "plural"))
        here.sort(key=lambda u: -u.length)
        units.extend(here)
        found = analyses(lex, w)
        if found:
            for lemma, feature, tags in found:
                units.append(LexUnit((i, i + 1), w, lemma, tags, feature))
        else:
            units.append(LexUnit((i, i + 1), w, w.lower() if not w[:1].isupper() else w, (), unknown=True))
    return units


def senses_of(lex: Lexicon, lemma: str, pos: str) -> list[Sense]:
    try:
        pos = normalize_pos(pos)
    except LexiconError:
        return []
    base = {"NNS": "NN", "VBD": "VB", "VBN": "VB"}.get(pos, pos)
    e = lex.entries.get((lemma, base)) or lex.entries.get((lemma, pos))
    return list(e.senses) if e else []


def patterns_for(sense: Sense) -> list[ArgPattern]:
    return list(sense.patterns)


def selectional_fit(kb: KB, sense: Sense, role: str, filler: str) -> float:
    """Summed strength of the sense's preferences on ``role`` that ``filler`` satisfies."""
    kb.check(filler)
    return float(sum(p.strength for p in sense.prefs
                     if p.role == role and p.preferred in kb and specializes(kb, filler, p.preferred)))
