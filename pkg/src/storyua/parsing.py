"""Chunk parsing, semantic frames and anaphor candidates.

The chunker groups tagged tokens into NP / verb-group / PP chunks, splits them
into clauses at subordinators, and enumerates PP-attachment alternatives only
where a preposition could fill a slot of one of the clause verb's patterns.
Frames record the sense and referent propositions they depend on so that the
narrative layer can condition them on the corresponding hypotheses.
"""

from __future__ import annotations

import copy
import itertools
import re
from dataclasses import dataclass, field

from .kb import KB, specializes
from .lexicon import ArgPattern, Lexicon, Sense, selectional_fit, senses_of
from .textpipe import Token

MAX_ALTERNATIVES = 8
NOUN = frozenset({"NN", "NNS", "NNP"})
VERB = frozenset({"VB", "VBD", "VBN"})
SUBORDINATORS = frozenset({"while", "because", "when", "although", "if", "whereas"})
MAYBE_SUBORDINATORS = frozenset({"after", "before", "as", "since", "until"})
COORDINATORS = frozenset({"and", "but", "or"})
AUXILIARIES = frozenset({"be", "have", "do"})
DEFINITE = frozenset({"the", "this", "that", "these", "those"})

# surface pronoun -> (number, gender, kind); gender None means any
PRONOUNS = {
    "he": ("sg", "m", "pronoun"), "him": ("sg", "m", "pronoun"), "himself": ("sg", "m", "reflexive"),
    "his": ("sg", "m", "possessive"),
    "she": ("sg", "f", "pronoun"), "her": ("sg", "f", "pronoun"), "herself": ("sg", "f", "reflexive"),
    "hers": ("sg", "f", "possessive"),
    "it": ("sg", "n", "pronoun"), "itself": ("sg", "n", "reflexive"), "its": ("sg", "n", "possessive"),
    "they": ("pl", None, "pronoun"), "them": ("pl", None, "pronoun"), "themselves": ("pl", None, "reflexive"),
    "their": ("pl", None, "possessive"),
}
INDEFINITE_PRONOUNS = frozenset({"something", "someone", "somebody", "anything", "everything", "nothing"})


class ParsingError(ValueError):
    pass


# --------------------------------------------------------------------------- chunks

@dataclass
class Chunk:
    kind: str  # NP VG IN TO RB JJ SUB CC RP PUNCT X
    start: int
    end: int  # exclusive token index
    head: int
    det: int | None = None
    aux: tuple[int, ...] = ()
    passive: bool = False
    particle: int | None = None

    @property
    def span(self):
        return (self.start, self.end)


def _tag(t: Token) -> str:
    return t.tag


def chunk_tokens(tokens: list[Token]) -> list[Chunk]:
    chunks: list[Chunk] = []
    i, n = 0, len(tokens)
    while i < n:
        t = tokens[i]
        tag = _tag(t)
        low = t.surface.lower()
        if t.is_punct:
            chunks.append(Chunk("PUNCT", i, i + 1, i))
            i += 1
        elif tag == "PRP" or (low in INDEFINITE_PRONOUNS and tag in NOUN):
            j = i + 1
            # "something gentle": trailing adjective modifies an indefinite pronoun
            while low in INDEFINITE_PRONOUNS and j < n and _tag(tokens[j]) == "JJ":
                j += 1
            chunks.append(Chunk("NP", i, j, i))
            i = j
        elif tag in ("DT", "PRP$", "CD") or tag in NOUN or (tag == "JJ" and _np_follows(tokens, i)):
            j = i
            det = None
            if tag in ("DT", "PRP$") or (tag == "CD" and _np_follows(tokens, i + 1, allow_bare_cd=False)):
                det = i
                j = i + 1
            while j < n and (_tag(tokens[j]) in ("JJ", "CD") and _np_follows(tokens, j)):
                j += 1
            k = j
            while k < n and _tag(tokens[k]) in NOUN:
                k += 1
            if k > j:
                chunks.append(Chunk("NP", i, k, k - 1, det))
                i = k
            elif j > i and j < n and _tag(tokens[j]) in ("JJ", "CD") and det is not None:
                # elliptical NP such as "a third"
                chunks.append(Chunk("NP", i, j + 1, j, det))
                i = j + 1
            elif tag == "CD":
                chunks.append(Chunk("NP", i, i + 1, i))
                i += 1
            elif det is not None and j == i + 1 and tag == "DT" and j <= n:
                # bare determiner used pronominally ("that way" handled above); keep as X
                chunks.append(Chunk("X", i, i + 1, i))
                i += 1
            else:
                chunks.append(Chunk("JJ", i, i + 1, i))
                i += 1
        elif tag in VERB:
            j = i
            while j < n and (_tag(tokens[j]) in VERB or (_tag(tokens[j]) == "RB" and j + 1 < n
                                                          and _tag(tokens[j + 1]) in VERB)):
                j += 1
            verbs = [x for x in range(i, j) if _tag(tokens[x]) in VERB]
            main = verbs[-1]
            aux = tuple(verbs[:-1])
            passive = bool(aux) and _tag(tokens[main]) == "VBN" and tokens[aux[-1]].lemma == "be"
            particle = None
            if j < n and _tag(tokens[j]) == "RP":
                particle = j
                j += 1
            chunks.append(Chunk("VG", i, j, main, aux=aux, passive=passive, particle=particle))
            i = j
        elif tag == "IN":
            kind = "SUB" if low in SUBORDINATORS else "IN"
            if low in MAYBE_SUBORDINATORS and _clause_follows(tokens, i + 1):
                kind = "SUB"
            if low in COORDINATORS:
                kind = "CC"
            chunks.append(Chunk(kind, i, i + 1, i))
            i += 1
        elif low in COORDINATORS:
            chunks.append(Chunk("CC", i, i + 1, i))
            i += 1
        elif tag in ("TO", "RB", "JJ", "RP"):
            chunks.append(Chunk(tag, i, i + 1, i))
            i += 1
        else:
            chunks.append(Chunk("X", i, i + 1, i))
            i += 1
    return chunks


def _np_follows(tokens, i, allow_bare_cd=True) -> bool:
    """True if tokens from i continue as modifiers ending in a noun."""
    j = i
    n = len(tokens)
    if j < n and _tag(tokens[j]) in ("JJ", "CD"):
        j += 1
    while j < n and _tag(tokens[j]) in ("JJ", "CD"):
        j += 1
    return j < n and _tag(tokens[j]) in NOUN


def _clause_follows(tokens, i) -> bool:
    seen_np = False
    for t in tokens[i:i + 6]:
        if _tag(t) in NOUN or _tag(t) == "PRP":
            seen_np = True
        elif _tag(t) in VERB:
            return seen_np
    return False


# --------------------------------------------------------------------------- clauses

@dataclass
class PP:
    prep: str
    prep_index: int
    np: int  # chunk index of the NP object
    candidates: tuple  # attachment sites: "verb" and/or chunk index of an NP


@dataclass
class Clause:
    verb: int | None  # chunk index of the verb group
    subject: int | None = None  # chunk index of the subject NP
    objects: list = field(default_factory=list)
    pps: list = field(default_factory=list)
    adjuncts: list = field(default_factory=list)  # NP chunks used adverbially (yesterday)
    pred_adj: int | None = None
    infinitive: "Clause | None" = None
    controller: str | None = None  # for infinitives: "subject" | "object" of the governing clause
    parent: "Clause | None" = None
    kind: str = "main"  # main | sub | inf | coord
    marker: int | None = None  # chunk index of the subordinator
    span: tuple = (0, 0)


@dataclass
class ParseFragment:
    label: str  # S NP VP PP Clause, or a lexical category for leaves
    children: list
    head: int  # token index
    span: tuple

    def render(self, tokens) -> str:
        if not self.children:
            return f"[{self.label} {tokens[self.head].surface}]"
        return f"[{self.label} " + " ".join(
            c.render(tokens) if isinstance(c, ParseFragment) else f"[{_leaf_label(tokens[c])} {tokens[c].surface}]"
            for c in self.children) + "]"


def _leaf_label(tok: Token) -> str:
    return {"DT": "Det", "NN": "N", "NNS": "N", "NNP": "Name", "JJ": "Adj", "IN": "Prep", "VB": "V",
            "VBD": "V", "VBN": "V", "PRP": "Pron", "PRP$": "Det", "CD": "Num", "RB": "Adv",
            "RP": "Part", "TO": "To"}.get(tok.tag, tok.tag)


@dataclass
class Parse:
    """One parse alternative of a sentence."""

    clauses: list
    attachment: dict  # id(PP) -> "verb" | chunk index
    fragments: list
    full: bool


@dataclass
class SentenceAnalysis:
    tokens: list
    chunks: list
    clauses: list
    parses: list
    truncated: bool = False


def _split_segments(chunks):
    segments, current, marker, kind = [], [], None, "main"
    for ci, c in enumerate(chunks):
        if c.kind == "SUB":
            if current:
                segments.append((current, marker, kind))
            current, marker, kind = [], ci, "sub"
        elif c.kind == "CC" and current and any(chunks[x].kind == "VG" for x in current) \
                and _next_kind(chunks, ci) in ("VG", "NP"):
            segments.append((current, marker, kind))
            current, marker, kind = [], ci, "coord"
        elif c.kind == "PUNCT" and chunks[ci].end - chunks[ci].start == 1:
            current.append(ci)
        else:
            current.append(ci)
    if current:
        segments.append((current, marker, kind))
    return segments


def _next_kind(chunks, ci):
    for c in chunks[ci + 1:]:
        if c.kind != "PUNCT":
            return c.kind
    return None


def analyze_clauses(tokens, chunks, lex: Lexicon | None = None) -> list[Clause]:
    clauses: list[Clause] = []
    for seg, marker, kind in _split_segments(chunks):
        seg = [ci for ci in seg if chunks[ci].kind != "PUNCT"]
        if not seg:
            continue
        clause = _clause_from(seg, chunks, tokens, lex, kind, marker)
        if kind == "coord" and clause.subject is None and clauses:
            clause.parent = clauses[-1]
            clause.controller = "subject"
        clauses.append(clause)
    return clauses


def _clause_from(seg, chunks, tokens, lex, kind, marker) -> Clause:
    vpos = next((p for p, ci in enumerate(seg) if chunks[ci].kind == "VG"), None)
    start = chunks[seg[0]].start
    end = chunks[seg[-1]].end
    if vpos is None:
        return Clause(None, kind=kind, marker=marker, span=(start, end),
                      objects=[ci for ci in seg if chunks[ci].kind == "NP"])
    verb = seg[vpos]
    subject = None
    for ci in reversed(seg[:vpos]):
        if chunks[ci].kind == "NP":
            subject = ci
            break
        if chunks[ci].kind not in ("RB", "PUNCT"):
            break
    clause = Clause(verb, subject, kind=kind, marker=marker, span=(start, end))
    rest = seg[vpos + 1:]
    _fill_complements(clause, rest, chunks, tokens, lex)
    return clause


def _fill_complements(clause: Clause, rest, chunks, tokens, lex):
    p = 0
    last_np = None
    while p < len(rest):
        ci = rest[p]
        c = chunks[ci]
        vg = chunks[clause.verb] if clause.verb is not None else None
        if (c.kind == "NP" and p == 0 and vg is not None and vg.particle is not None
                and _verb_takes_prep(clause, tokens[vg.particle].surface.lower(), chunks, tokens, lex)):
            # "pushed down the shaft": the particle heads a verb-attached phrase
            clause.pps.append(PP(tokens[vg.particle].surface.lower(), vg.particle, ci, ("verb",)))
            last_np = ci
            p += 1
        elif c.kind == "NP":
            is_time = tokens[c.head].entity is not None and tokens[c.head].entity.kind == "time"
            if is_time or (len(clause.objects) >= 2) or clause.pps:
                clause.adjuncts.append(ci)
            else:
                clause.objects.append(ci)
            last_np = ci
            p += 1
        elif c.kind in ("IN", "TO") and p + 1 < len(rest) and chunks[rest[p + 1]].kind == "NP":
            prep = tokens[c.head].surface.lower()
            np_ci = rest[p + 1]
            sites = _attachment_sites(clause, prep, last_np, chunks, tokens, lex)
            clause.pps.append(PP(prep, c.head, np_ci, sites))
            last_np = np_ci
            p += 2
        elif c.kind == "TO" and p + 1 < len(rest) and chunks[rest[p + 1]].kind == "VG":
            inner = Clause(rest[p + 1], None, kind="inf", span=(c.start, chunks[rest[-1]].end))
            inner.parent = clause
            inner.controller = "object" if clause.objects else "subject"
            _fill_complements(inner, rest[p + 2:], chunks, tokens, lex)
            clause.infinitive = inner
            return
        elif c.kind == "JJ" and clause.pred_adj is None and not clause.objects:
            clause.pred_adj = ci
            p += 1
        else:
            p += 1


def _attachment_sites(clause, prep, last_np, chunks, tokens, lex) -> tuple:
    if last_np is None:
        return ("verb",)
    if prep == "of":
        return (last_np,)
    if _verb_takes_prep(clause, prep, chunks, tokens, lex):
        return ("verb", last_np)
    if clause.pred_adj is not None:
        return ("verb",)
    return (last_np,) if prep in ("on", "in", "with", "at", "near", "above", "below", "under") else ("verb",)


def _verb_takes_prep(clause, prep, chunks, tokens, lex) -> bool:
    if lex is None:
        return True
    heads = []
    if clause.verb is not None:
        heads.append(tokens[chunks[clause.verb].head])
    if clause.pred_adj is not None:
        heads.append(tokens[chunks[clause.pred_adj].head])
    for tok in heads:
        for r in tok.readings:
            for sense in senses_of(lex, r.lemma, r.tag):
                for pat in sense.patterns:
                    if any(s.kind == "prep" and s.prep == prep for s in pat.shape):
                        return True
    return False


def _all_pps(clauses):
    for cl in clauses:
        c = cl
        while c is not None:
            yield from c.pps
            c = c.infinitive


def chunk_parse(tokens: list[Token], lex: Lexicon | None = None, max_alternatives: int = MAX_ALTERNATIVES) -> SentenceAnalysis:
    """Parse alternatives for one tagged sentence.

    Full parses (every non-punctuation chunk inside a clause with a verb) come
    back as one S fragment per alternative; otherwise the alternative holds the
    maximal fragments. A sentence with no usable chunks degenerates to one
    fragment per token.
    """
    chunks = chunk_tokens(tokens)
    clauses = analyze_clauses(tokens, chunks, lex)
    pps = list(_all_pps(clauses))
    choices = [pp.candidates for pp in pps]
    combos = list(itertools.islice(itertools.product(*choices), max_alternatives + 1)) if pps else [()]
    truncated = len(combos) > max_alternatives
    combos = combos[:max_alternatives]
    parses = []
    for combo in combos:
        attachment = {id(pp): site for pp, site in zip(pps, combo)}
        frags, full = _fragments(tokens, chunks, clauses, attachment)
        parses.append(Parse(clauses, attachment, frags, full))
    return SentenceAnalysis(tokens, chunks, clauses, parses, truncated)


def _np_fragment(chunks, ci, attached_pps, tokens):
    c = chunks[ci]
    children = list(range(c.start, c.end))
    for pp in attached_pps.get(ci, []):
        children.append(_pp_fragment(chunks, pp, attached_pps, tokens))
    end = max([c.end] + [ch.span[1] for ch in children if isinstance(ch, ParseFragment)])
    return ParseFragment("NP", children, c.head, (c.start, end))


def _pp_fragment(chunks, pp, attached_pps, tokens):
    np = _np_fragment(chunks, pp.np, attached_pps, tokens)
    return ParseFragment("PP", [pp.prep_index, np], pp.prep_index, (pp.prep_index, np.span[1]))


def _clause_fragment(cl, chunks, attachment, tokens, label):
    attached: dict = {}
    c = cl
    while c is not None:
        for pp in c.pps:
            site = attachment.get(id(pp), pp.candidates[0])
            if site != "verb":
                attached.setdefault(site, []).append(pp)
        c = c.infinitive
    vp_children: list = []
    if cl.verb is not None:
        vg = chunks[cl.verb]
        vp_children.extend(range(vg.start, vg.end))
    for ci in cl.objects:
        vp_children.append(_np_fragment(chunks, ci, attached, tokens))
    if cl.pred_adj is not None:
        vp_children.append(chunks[cl.pred_adj].head)
    for pp in cl.pps:
        if attachment.get(id(pp), pp.candidates[0]) == "verb":
            vp_children.append(_pp_fragment(chunks, pp, attached, tokens))
    for ci in cl.adjuncts:
        vp_children.append(_np_fragment(chunks, ci, attached, tokens))
    if cl.infinitive is not None:
        vp_children.append(_clause_fragment(cl.infinitive, chunks, attachment, tokens, "Clause"))
    children = []
    if cl.marker is not None:
        children.append(chunks[cl.marker].head)
    if cl.subject is not None:
        children.append(_np_fragment(chunks, cl.subject, attached, tokens))
    head = chunks[cl.verb].head if cl.verb is not None else cl.span[0]
    spans = [x.span for x in vp_children if isinstance(x, ParseFragment)] + \
            [(x, x + 1) for x in vp_children if isinstance(x, int)]
    vp_span = (min(s[0] for s in spans), max(s[1] for s in spans)) if spans else (head, head + 1)
    vp = ParseFragment("VP", vp_children, head, vp_span)
    children.append(vp)
    spans = [x.span for x in children if isinstance(x, ParseFragment)] + \
            [(x, x + 1) for x in children if isinstance(x, int)]
    return ParseFragment(label, children, head, (min(s[0] for s in spans), max(s[1] for s in spans)))


def _fragments(tokens, chunks, clauses, attachment):
    real = [c for c in chunks if c.kind != "PUNCT"]
    if not real:
        return [], False
    verbed = [cl for cl in clauses if cl.verb is not None]
    if not verbed:
        if len(real) == len([t for t in tokens if not t.is_punct]) and all(c.kind not in ("NP",) for c in real):
            return [ParseFragment(_leaf_label(tokens[c.head]), [], c.head, c.span) for c in real], False
        frags = []
        for ci, c in enumerate(chunks):
            if c.kind == "NP":
                frags.append(_np_fragment(chunks, ci, {}, tokens))
            elif c.kind != "PUNCT":
                frags.append(ParseFragment(_leaf_label(tokens[c.head]), [], c.head, c.span))
        return frags, False
    frags = []
    for k, cl in enumerate(clauses):
        if cl.verb is None:
            for ci in cl.objects:
                frags.append(_np_fragment(chunks, ci, {}, tokens))
            continue
        label = "S" if cl.kind == "main" else "Clause"
        frags.append(_clause_fragment(cl, chunks, attachment, tokens, label))
    full = len(frags) == 1 and frags[0].label == "S"
    if len(frags) > 1 and frags[0].label == "S":
        # subordinate clauses hang under the main clause
        main = frags[0]
        main.children.extend(frags[1:])
        main.span = (main.span[0], max(f.span[1] for f in frags))
        frags = [main]
        full = True
    return frags, full


# --------------------------------------------------------------------------- entities and mentions

@dataclass
class Entity:
    id: str
    lemma: str
    concepts: tuple  # candidate KB concepts (senses of the head)
    number: str = "sg"
    gender: str | None = None
    animate: bool | None = None
    name: str | None = None
    text: str = ""
    attrs: dict = field(default_factory=dict)
    predicative: bool = False
    first_sentence: int = 0
    last_sentence: int = 0
    last_role: str = "other"
    last_order: int = 0


@dataclass
class Mention:
    id: str
    sentence: int
    chunk: int
    span: tuple
    head_lemma: str
    surface: str
    kind: str  # name pronoun possessive reflexive definite indefinite bare
    number: str
    gender: str | None
    role: str = "other"  # subject | object | other
    entity: str | None = None
    candidates: tuple = ()


@dataclass(frozen=True)
class AnaphorCandidate:
    anaphor: str  # mention id
    span: tuple
    kind: str
    candidate: str  # entity id
    salience: float


@dataclass
class EntityRegistry:
    entities: dict = field(default_factory=dict)
    mentions: dict = field(default_factory=dict)
    counters: dict = field(default_factory=dict)
    order: int = 0

    def clone(self) -> "EntityRegistry":
        return copy.deepcopy(self)

    def new_entity(self, lemma: str, **kw) -> Entity:
        base = re.sub(r"[^a-z0-9]+", "-", lemma.lower()).strip("-") or "x"
        self.counters[base] = self.counters.get(base, 0) + 1
        eid = f"{base}{self.counters[base]}"
        ent = Entity(eid, lemma, **kw)
        self.entities[eid] = ent
        return ent

    def touch(self, eid: str, sentence: int, role: str):
        ent = self.entities[eid]
        self.order += 1
        ent.last_sentence = sentence
        ent.last_role = role
        ent.last_order = self.order

    def display(self, eid: str, depth: int = 0) -> str:
        ent = self.entities.get(eid)
        if ent is None:
            return eid
        if ent.name:
            return ent.name
        text = f"the {ent.text}"
        of = ent.attrs.get("of")
        if of and depth < 1:
            text += " of " + self.display(of, depth + 1)
        return text


def _concepts_for(kb: KB | None, lex: Lexicon, tok: Token) -> tuple:
    out = []
    for r in tok.readings:
        for s in senses_of(lex, r.lemma, r.tag):
            if s.concept not in out:
                out.append(s.concept)
        if out:
            break
    return tuple(out)


def _is_animate(kb: KB | None, concepts) -> bool | None:
    if kb is None or not concepts:
        return None
    flags = [specializes(kb, c, "animate") for c in concepts if c in kb and "animate" in kb]
    if not flags:
        return None
    return any(flags)


def register_mentions(registry: EntityRegistry, analysis: SentenceAnalysis, sentence: int,
                      kb: KB | None, lex: Lexicon) -> list[Mention]:
    """Create mentions for every NP, new entities for non-anaphoric ones and
    candidate lists for anaphors. Entities are touched in textual order."""
    tokens, chunks = analysis.tokens, analysis.chunks
    roles = {}
    predicative = set()
    subj_of = {}
    clause_of = {}

    def walk(cl):
        if cl.subject is not None:
            roles[cl.subject] = "subject"
        for o in cl.objects:
            roles.setdefault(o, "object")
            if cl.verb is not None and tokens[chunks[cl.verb].head].lemma == "be":
                predicative.add(o)
        for ci in [cl.subject, *cl.objects, *(pp.np for pp in cl.pps), *cl.adjuncts]:
            if ci is not None:
                clause_of[ci] = cl
        if cl.infinitive is not None:
            walk(cl.infinitive)

    for cl in analysis.clauses:
        walk(cl)

    mentions: list[Mention] = []
    by_chunk: dict[int, Mention] = {}
    for ci, c in enumerate(chunks):
        if c.kind != "NP":
            continue
        head = tokens[c.head]
        low = head.surface.lower()
        det_tok = tokens[c.det] if c.det is not None else None
        # possessive determiner gets a mention of its own
        if det_tok is not None and det_tok.tag == "PRP$":
            dlow = det_tok.surface.lower()
            num, gen, _ = PRONOUNS.get(dlow, ("sg", None, "possessive"))
            m = Mention(f"m{sentence}.{c.det}", sentence, ci, (c.det, c.det + 1), dlow, det_tok.surface,
                        "possessive", num, gen, "other")
            mentions.append(m)
        if head.tag == "PRP" and low in PRONOUNS:
            num, gen, kind = PRONOUNS[low]
        elif head.tag == "PRP":
            num, gen, kind = "sg", None, "deictic"
        else:
            num = "pl" if head.tag == "NNS" or (det_tok is not None and det_tok.tag == "CD"
                                                 and det_tok.surface.lower() not in ("one", "1")) else "sg"
            gen = lex.genders.get(head.lemma) or lex.genders.get(head.surface)
            if head.tag == "NNP":
                kind = "name"
                first = tokens[c.start].surface
                gen = gen or lex.genders.get(first)
            elif low in INDEFINITE_PRONOUNS:
                kind = "indefinite"
            elif det_tok is not None and det_tok.surface.lower() in DEFINITE:
                kind = "definite"
            elif det_tok is not None and det_tok.tag == "PRP$":
                kind = "indefinite"
            else:
                kind = "indefinite" if det_tok is not None else "bare"
        head_lemma = "money" if head.entity is not None and head.entity.kind == "price" else head.lemma
        m = Mention(f"m{sentence}.{c.head}", sentence, ci, c.span, head_lemma, _np_text(tokens, c), kind,
                    num, gen, roles.get(ci, "other"))
        mentions.append(m)
        by_chunk[ci] = m

    for m in mentions:
        registry.mentions[m.id] = m
        if m.kind in ("pronoun", "possessive", "reflexive", "definite", "name"):
            cands = anaphor_candidates(registry, m, mentions, analysis, subj_of, clause_of, by_chunk, kb)
            if m.kind == "reflexive":
                cands = cands[:1]
            m.candidates = tuple(cands)
            if len(cands) == 1:
                m.entity = cands[0].candidate
            elif not cands and m.kind in ("definite", "name", "pronoun", "possessive", "reflexive"):
                m.entity = _new_entity_for(registry, m, tokens, chunks, kb, lex, sentence,
                                           m.chunk in predicative).id
        else:
            m.entity = _new_entity_for(registry, m, tokens, chunks, kb, lex, sentence, m.chunk in predicative).id
        if m.entity is not None:
            registry.touch(m.entity, sentence, m.role)
        elif m.candidates:
            registry.order += 1
    # NP-attached "of" phrases and possessives become entity attributes
    for cl in analysis.clauses:
        c = cl
        while c is not None:
            for pp in c.pps:
                if pp.candidates == (pp.candidates[0],) and pp.candidates[0] != "verb" and pp.prep == "of":
                    owner, part = by_chunk.get(pp.candidates[0]), by_chunk.get(pp.np)
                    if owner and part and owner.entity and part.entity:
                        registry.entities[owner.entity].attrs.setdefault("of", part.entity)
            c = c.infinitive
    for m in mentions:
        if m.kind == "possessive" and m.entity:
            owned = by_chunk.get(m.chunk)
            if owned is not None and owned.entity:
                registry.entities[owned.entity].attrs.setdefault("owner", m.entity)
    return mentions


def _np_text(tokens, c: Chunk) -> str:
    start = c.start + (1 if c.det is not None else 0)
    return " ".join(t.surface for t in tokens[start:c.end])


def _new_entity_for(registry, m, tokens, chunks, kb, lex, sentence, predicative) -> Entity:
    c = chunks[m.chunk]
    head = tokens[c.head]
    if m.kind in ("pronoun", "possessive", "reflexive", "deictic"):
        concepts = ("person",) if m.gender in ("m", "f") else ()
        if kb is not None:
            concepts = tuple(x for x in concepts if x in kb)
        ent = registry.new_entity(m.head_lemma, concepts=concepts, number=m.number, gender=m.gender,
                                  animate=True if m.gender in ("m", "f") else None, text=m.surface,
                                  first_sentence=sentence)
        return ent
    concepts = _concepts_for(kb, lex, head)
    name = None
    if head.tag == "NNP":
        name = " ".join(t.surface for t in tokens[c.start + (1 if c.det is not None else 0):c.end])
        if not concepts and kb is not None and "person" in kb and (m.gender or re.search(r"\b[A-Z]\.", name)):
            concepts = ("person",)
    animate = _is_animate(kb, concepts)
    if m.gender in ("m", "f"):
        animate = True
    attrs = {}
    for t in tokens[c.start:c.end]:
        mm = re.fullmatch(r"(\d+)-years?", t.surface.lower())
        if mm:
            attrs["age"] = mm.group(1)
        if t.entity is not None and t.entity.kind == "place" and t is not head:
            attrs["place"] = str(t.entity.value)
        if t.entity is not None and t.entity.kind == "price":
            attrs["amount"] = str(t.entity.value[0])
    lemma = head.lemma if head.tag != "NNP" else head.surface
    if head.entity is not None and head.entity.kind == "price":
        lemma = "money"
        concepts = tuple(x for x in ("money",) if kb is None or x in kb) or concepts
    ent = registry.new_entity(lemma, concepts=concepts, number=m.number, gender=m.gender, animate=animate,
                              name=name, text=_np_text(tokens, c), attrs=attrs, predicative=predicative,
                              first_sentence=sentence)
    return ent


def _compatible(ent: Entity, m: Mention, kb) -> bool:
    if ent.predicative:
        return False
    if m.kind in ("pronoun", "possessive", "reflexive"):
        if ent.number != m.number:
            return False
        if m.gender in ("m", "f"):
            if ent.gender not in (None, m.gender) or ent.animate is not True:
                return False
        elif m.gender == "n":
            if ent.gender in ("m", "f"):
                return False
        return True
    if m.kind == "name":
        return ent.name is not None and m.surface.split()[-1] in ent.name.split()
    if m.kind == "definite":
        if ent.number != m.number:
            return False
        if ent.lemma == m.head_lemma:
            return True
        return False
    return False


def anaphor_candidates(registry: EntityRegistry, m: Mention, sentence_mentions, analysis, subj_of=None,
                       clause_of=None, by_chunk=None, kb=None) -> list[AnaphorCandidate]:
    """Compatible earlier entities for one anaphoric mention, most salient first."""
    clause_of = clause_of or {}
    by_chunk = by_chunk or {}
    earlier_here = set()
    for other in sentence_mentions:
        if other is m:
            break
        if other.entity is not None:
            earlier_here.add(other.entity)
        earlier_here.update(c.candidate for c in other.candidates)
    pool = [e for e in registry.entities.values()
            if e.first_sentence < m.sentence or e.id in earlier_here]
    # clause-mate subject exclusion / reflexive binding
    subject_entities: set = set()
    cl = clause_of.get(m.chunk)
    if cl is not None:
        subj = _effective_subject(cl, by_chunk)
        if subj is not None and subj is not m:
            subject_entities = {subj.entity} if subj.entity else {c.candidate for c in subj.candidates}
    out = []
    ranked = sorted(pool, key=lambda e: -e.last_order)
    for rank, ent in enumerate(ranked, start=1):
        if not _compatible(ent, m, kb):
            continue
        if m.kind == "pronoun" and ent.id in subject_entities:
            continue
        if m.kind == "reflexive" and subject_entities and ent.id not in subject_entities:
            continue
        bonus = {"subject": 2.0, "object": 1.0}.get(ent.last_role, 0.0)
        out.append(AnaphorCandidate(m.id, m.span, m.kind, ent.id, round(1.0 / rank + bonus, 6)))
    out.sort(key=lambda a: (-a.salience, a.candidate))
    return out


def _effective_subject(cl: Clause, by_chunk) -> Mention | None:
    c = cl
    while c is not None:
        if c.subject is not None:
            return by_chunk.get(c.subject)
        if c.parent is None:
            return None
        if c.controller == "object" and c.parent.objects:
            return by_chunk.get(c.parent.objects[0])
        c = c.parent
    return None


# --------------------------------------------------------------------------- frames

@dataclass(frozen=True)
class Frame:
    id: str
    frame_type: str
    roles: tuple  # ((role, filler), ...) filler is an entity id or "group:<gid>"
    span: tuple
    group: str
    sentence: int
    lemma: str
    sense: str
    alternative: int
    requires: tuple  # propositions this reading depends on: ("sense", lemma, concept) / ("referent", mention, entity)
    fit: float = 0.0
    fits: tuple = ()  # ((role, filler, fit), ...) per preference match

    def role(self, name):
        for r, v in self.roles:
            if r == name:
                return v
        return None

    def render(self, registry: EntityRegistry | None = None) -> str:
        parts = [self.frame_type]
        for r, v in self.roles:
            parts.append(f"{r}={v}")
        return "[" + " ".join(parts) + "]"


def _slot_fillers(cl: Clause, pat: ArgPattern, attachment, passive: bool, chunks):
    """Map each pattern slot to a chunk index (NP) or clause; None if a required slot is unfilled."""
    surface_subject = cl.subject
    subj_from_controller = cl.subject is None and cl.parent is not None
    verb_pps = [pp for pp in cl.pps if attachment.get(id(pp), pp.candidates[0]) == "verb"]
    fill: dict = {}
    objects = list(cl.objects)
    by_pp = None
    if passive:
        by_pp = next((pp for pp in verb_pps if pp.prep == "by"), None)
    for slot in pat.shape:
        val = None
        if slot.kind == "subject":
            if passive:
                val = ("np", by_pp.np) if by_pp else ("implicit", None)
            elif surface_subject is not None:
                val = ("np", surface_subject)
            elif subj_from_controller:
                val = ("controller", cl.controller)
        elif slot.kind == "object":
            if passive:
                if surface_subject is not None:
                    val = ("np", surface_subject)
                elif subj_from_controller:
                    val = ("controller", cl.controller)
            elif objects:
                val = ("np", objects[0])
        elif slot.kind == "object2":
            if not passive and len(objects) > 1:
                val = ("np", objects[1])
        elif slot.kind == "prep":
            pp = next((pp for pp in verb_pps if pp.prep == slot.prep and pp is not by_pp), None)
            if pp is not None:
                val = ("np", pp.np)
            elif slot.optional:
                continue
        elif slot.kind == "clause":
            if cl.infinitive is not None:
                val = ("clause", cl.infinitive)
        if val is None:
            return None
        fill[slot.role] = val
    n_obj = sum(1 for s in pat.shape if s.kind in ("object", "object2"))
    if not passive and len(objects) > n_obj and not any(s.kind == "clause" for s in pat.shape):
        return None
    return fill


@dataclass
class FrameBuild:
    frames: list
    unframed: list  # (sentence, token index, lemma)
    groups: dict  # group id -> list of frame ids


def build_frames(kb: KB, lex: Lexicon, analysis: SentenceAnalysis, mentions: list[Mention],
                 registry: EntityRegistry, sentence: int) -> FrameBuild:
    """One frame per parse alternative x sense x matching pattern, expanded over
    anaphor referent candidates."""
    tokens, chunks = analysis.tokens, analysis.chunks
    by_chunk = {m.chunk: m for m in mentions if m.kind != "possessive" or m.span[0] == chunks[m.chunk].head}
    frames: list[Frame] = []
    unframed = []
    groups: dict = {}
    counter = itertools.count(1)

    def verb_units(cl):
        heads = []
        if cl.verb is not None:
            vg = chunks[cl.verb]
            tok = tokens[vg.head]
            if tok.lemma in AUXILIARIES and cl.pred_adj is not None:
                heads.append((tokens[chunks[cl.pred_adj].head], False, chunks[cl.pred_adj].head))
            else:
                heads.append((tok, vg.passive, vg.head))
        return heads

    def clauses_of(cl):
        while cl is not None:
            yield cl
            cl = cl.infinitive

    all_clauses = [c for top in analysis.clauses for c in clauses_of(top)]
    group_of = {id(c): f"g{sentence}.{chunks[c.verb].head}" for c in all_clauses if c.verb is not None}

    def filler_options(val, cl):
        kind, x = val
        if kind == "implicit":
            return [None]
        if kind == "clause":
            return [(f"group:{group_of.get(id(x), 'none')}", ())]
        if kind == "controller":
            parent = cl.parent
            ci = None
            if parent is not None:
                ci = parent.objects[0] if x == "object" and parent.objects else None
                if ci is None:
                    sub = _effective_subject(parent, by_chunk)
                    return _mention_options(sub)
            return _mention_options(by_chunk.get(ci))
        return _mention_options(by_chunk.get(x))

    for alt_index, parse in enumerate(analysis.parses):
        for cl in all_clauses:
            for tok, passive, tok_index in verb_units(cl):
                readings = [r for r in tok.readings if r.tag in VERB or r.tag == "JJ"][:1]
                if not readings:
                    continue
                r = readings[0]
                senses = senses_of(lex, r.lemma, r.tag)
                gid = group_of[id(cl)]
                matched_any = False
                for sense in senses:
                    for pat in sense.patterns:
                        fill = _slot_fillers(cl, pat, parse.attachment, passive, chunks)
                        if fill is None:
                            continue
                        options = []
                        for role, val in fill.items():
                            opts = [o for o in filler_options(val, cl)]
                            options.append([(role, o) for o in opts] or [(role, None)])
                        for combo in itertools.product(*options):
                            roles, reqs = [], []
                            if len(senses) > 1:
                                reqs.append(("sense", r.lemma, sense.concept))
                            for role, opt in combo:
                                if opt is None:
                                    continue
                                filler, req = opt
                                roles.append((role, filler))
                                reqs.extend(req)
                            fid = f"f{sentence}.{next(counter)}"
                            fit, fits = _frame_fit(kb, sense, roles, registry)
                            frames.append(Frame(fid, pat.frame_type, tuple(roles), cl.span, gid, sentence, r.lemma,
                                                sense.concept, alt_index, tuple(dict.fromkeys(reqs)), fit, fits))
                            groups.setdefault(gid, []).append(fid)
                            matched_any = True
                if not matched_any and alt_index == 0:
                    unframed.append((sentence, tok_index, r.lemma))
    return FrameBuild(frames, unframed, groups)


def _mention_options(m: Mention | None):
    if m is None:
        return []
    if m.entity is not None:
        return [(m.entity, ())]
    return [(c.candidate, (("referent", m.id, c.candidate),)) for c in m.candidates]


def _frame_fit(kb, sense: Sense, roles, registry):
    total, fits = 0.0, []
    for role, filler in roles:
        ent = registry.entities.get(filler)
        if ent is None:
            continue
        best = 0.0
        for concept in ent.concepts:
            if concept in kb:
                best = max(best, selectional_fit(kb, sense, role, concept))
        if best > 0:
            total += best
            fits.append((role, filler, best))
    return total, tuple(fits)


def frame_count_oracle(lex: Lexicon, analysis: SentenceAnalysis, mentions: list[Mention]) -> int:
    """Brute-force count of (alternative, verb, sense, pattern, referent) readings."""
    chunks = analysis.chunks
    by_chunk = {m.chunk: m for m in mentions}
    total = 0
    for parse in analysis.parses:
        stack = list(analysis.clauses)
        while stack:
            cl = stack.pop()
            if cl.infinitive is not None:
                stack.append(cl.infinitive)
            if cl.verb is None:
                continue
            tok = analysis.tokens[chunks[cl.verb].head]
            passive = chunks[cl.verb].passive
            if tok.lemma in AUXILIARIES and cl.pred_adj is not None:
                tok, passive = analysis.tokens[chunks[cl.pred_adj].head], False
            r = next((r for r in tok.readings if r.tag in VERB or r.tag == "JJ"), None)
            if r is None:
                continue
            for sense in senses_of(lex, r.lemma, r.tag):
                for pat in sense.patterns:
                    fill = _slot_fillers(cl, pat, parse.attachment, passive, chunks)
                    if fill is None:
                        continue
                    n = 1
                    for val in fill.values():
                        if val[0] == "np":
                            m = by_chunk.get(val[1])
                            if m is not None and m.entity is None and m.candidates:
                                n *= len(m.candidates)
                    total += n
    return total


def predicate_tokens(analysis: SentenceAnalysis) -> list[tuple[int, object]]:
    """(token index, reading) of every clause predicate, in token order."""
    tokens, chunks = analysis.tokens, analysis.chunks
    out = []
    stack = list(analysis.clauses)
    while stack:
        cl = stack.pop()
        if cl.infinitive is not None:
            stack.append(cl.infinitive)
        if cl.verb is None:
            continue
        idx = chunks[cl.verb].head
        if tokens[idx].lemma in AUXILIARIES and cl.pred_adj is not None:
            idx = chunks[cl.pred_adj].head
        r = next((r for r in tokens[idx].readings if r.tag in VERB or r.tag == "JJ"), None)
        if r is not None:
            out.append((idx, r))
    return sorted(out, key=lambda x: x[0])
