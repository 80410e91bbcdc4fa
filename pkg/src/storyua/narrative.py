"""Incremental discourse interpretation.

Each sentence runs through tagging, chunk parsing, mention registration and
frame building; lexical ambiguity becomes sense and referent hypotheses; the
understanding agents re-run over the whole discourse; frames from the new
sentence are offered merges with earlier frames; then the live hypothesis store
is settled. Hypotheses that stay false in every optimum for ``horizon``
consecutive sentences are retired. Retirement is the only lossy step, so a
reread restores an earlier snapshot and replays with retirement switched off.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field

from .agents import (
    Constraint, Engine, Hypothesis, HypothesisStore, StateView, coherence_constraints,
    run_agents, sense_hypotheses,
)
from .kb import KB, specializes
from .lexicon import Lexicon, senses_of
from .parsing import (
    MAX_ALTERNATIVES, Entity, EntityRegistry, Frame, Mention, build_frames, chunk_parse, predicate_tokens,
    register_mentions,
)
from .settle import ConstraintSystem, Settlement, SolveConfig, evaluate_formula, settle, substitute, variables_of
from .textpipe import default_gazetteer, default_tag_rules, recognize_entities, segment_sentences, tag_nbest

SNAPSHOT_VERSION = 1


class NarrativeError(ValueError):
    pass


@dataclass
class NarrativeConfig:
    horizon: int | None = 2  # None disables retirement
    k_tags: int = 3
    max_alternatives: int = MAX_ALTERNATIVES
    solve: SolveConfig = field(default_factory=SolveConfig)
    indefinite_above: int = 2

    def __post_init__(self):
        if self.horizon is not None and self.horizon < 1:
            raise NarrativeError("horizon must be positive (or None for no retirement)")


@dataclass(frozen=True)
class PruneEntry:
    sentence: int
    dropped: tuple
    reason: str


@dataclass(frozen=True)
class Signal:
    kind: str  # confusion | score-drop
    sentence: int
    detail: str = ""


@dataclass
class Summary:
    """What survives of a settlement: enough to report, prune and answer questions."""

    feasible: bool = True
    true: frozenset = frozenset()  # free and entailed hypotheses true in the working interpretation
    co: frozenset = frozenset()  # free hypotheses true in some optimum, plus entailed ones true in the working one
    score: float = 0.0
    exact: bool = True
    diagnosis: str | None = None


@dataclass
class State:
    texts: list = field(default_factory=list)
    lemmas: list = field(default_factory=list)  # per sentence: [(lemma, entity id or None)]
    registry: EntityRegistry = field(default_factory=EntityRegistry)
    store: HypothesisStore = field(default_factory=HypothesisStore)
    frames: list = field(default_factory=list)  # canonical frames of all sentences
    sense_groups: dict = field(default_factory=dict)  # lemma -> candidate concepts
    lexical: dict = field(default_factory=dict)  # key -> Constraint (senses, referents, coverage, fit, merges)
    agent_constraints: list = field(default_factory=list)
    supports: dict = field(default_factory=dict)  # entailed hid -> frozenset of literal tuples
    links: list = field(default_factory=list)
    streak: dict = field(default_factory=dict)  # hid -> consecutive sentences false in every optimum
    prune_log: list = field(default_factory=list)
    unframed: list = field(default_factory=list)
    summary: Summary = field(default_factory=Summary)
    system: ConstraintSystem | None = None


@dataclass
class Discourse:
    kb: KB
    lex: Lexicon
    engine: Engine
    config: NarrativeConfig = field(default_factory=NarrativeConfig)
    state: State = field(default_factory=State)
    history: list = field(default_factory=list)  # State after each sentence
    signals: list = field(default_factory=list)
    rereads: list = field(default_factory=list)  # (at sentence, from sentence)
    unresolved: bool = False
    tag_rules: tuple = field(default_factory=default_tag_rules)
    gazetteer: tuple = field(default_factory=default_gazetteer)

    @property
    def n_sentences(self) -> int:
        return len(self.state.texts)

    def view(self) -> StateView:
        s = self.state
        return StateView(self.kb, s.frames, s.lemmas, s.registry, s.store, s.sense_groups)


def new_discourse(kb: KB, lex: Lexicon, engine: Engine, config: NarrativeConfig | None = None) -> Discourse:
    return Discourse(kb, lex, engine, config or NarrativeConfig())


# --------------------------------------------------------------------------- ingestion

def ingest_sentence(d: Discourse, text: str, prune: bool = True) -> Discourse:
    """Read one sentence, settle the live store, retire stale hypotheses, snapshot."""
    st = d.state
    s = len(st.texts) + 1
    st.texts.append(text)
    names = tuple(d.lex.genders)
    entities = recognize_entities(text, d.gazetteer, names)
    tokens = tag_nbest(d.lex, text, d.config.k_tags, d.tag_rules, entities)
    analysis = chunk_parse(tokens, d.lex, d.config.max_alternatives)
    if analysis.truncated:
        st.prune_log.append(PruneEntry(s, (), f"parse alternatives capped at {d.config.max_alternatives}"))
    before = set(st.registry.entities)
    mentions = register_mentions(st.registry, analysis, s, d.kb, d.lex)
    st.lemmas.append(_sentence_lemmas(analysis, mentions))

    _add_sense_hypotheses(d, analysis, mentions, before, s)
    _add_referent_hypotheses(d, mentions, s)
    fb = build_frames(d.kb, d.lex, analysis, mentions, st.registry, s)
    new_frames = canonical_frames(fb.frames)
    st.frames.extend(new_frames)
    st.unframed.extend(fb.unframed)
    view = d.view()
    _add_frame_constraints(d, view, new_frames)

    result = run_agents(d.engine, view, s)
    st.agent_constraints = list(result.constraints) + coherence_constraints(view, d.engine.table.coherence)
    st.supports = dict(result.supports)
    st.links = list(result.links)

    for c in merge_events(d, new_frames):
        st.lexical.setdefault(_constraint_key(c), c)

    _settle_state(d, s)
    if not st.summary.feasible:
        d.signals.append(Signal("confusion", s, st.summary.diagnosis or "infeasible"))
    elif len(d.history) and d.history[-1].summary.feasible:
        prev = d.history[-1].summary.score
        if prev > 0 and st.summary.score < 0.5 * prev:
            d.signals.append(Signal("score-drop", s, f"{prev:g} -> {st.summary.score:g}"))
    if prune and st.summary.feasible:
        prune_state(d, s)
    d.history.append(copy.deepcopy(st))
    return d


def _sentence_lemmas(analysis, mentions: list[Mention]) -> list:
    ent_at = {}
    for m in mentions:
        for i in range(*m.span):
            if m.entity is not None:
                ent_at.setdefault(i, m.entity)
    return [(t.lemma.lower() if not t.is_punct else t.surface, ent_at.get(i)) for i, t in enumerate(analysis.tokens)]


def _add_sense_hypotheses(d: Discourse, analysis, mentions, before: set, s: int):
    """Sense hypotheses in token order: heads of new entities and clause predicates."""
    st = d.state
    items = []
    for m in mentions:
        if m.entity is None or m.entity in before or m.kind == "possessive":
            continue
        ent = st.registry.entities[m.entity]
        items.append((analysis.chunks[m.chunk].head, ent.lemma, ent.concepts))
    for idx, reading in predicate_tokens(analysis):
        concepts = tuple(x.concept for x in senses_of(d.lex, reading.lemma, reading.tag))
        items.append((idx, reading.lemma, concepts))
    for _, lemma, concepts in sorted(items, key=lambda x: x[0]):
        if not concepts:
            continue
        group = list(st.sense_groups.get(lemma, ()))
        group.extend(c for c in concepts if c not in group)
        st.sense_groups[lemma] = tuple(group)
        if len(group) < 2:
            continue
        ids = sense_hypotheses(st.store, d.engine.table, lemma, group, s)
        c = Constraint(f"sense:{lemma}", True, 0.0, ("xor", *ids), "one sense per discourse")
        st.lexical[("sense", lemma)] = c


def _add_referent_hypotheses(d: Discourse, mentions, s: int):
    st = d.state
    for m in mentions:
        if m.entity is not None or len(m.candidates) < 2:
            continue
        ids = []
        for cand in m.candidates:
            hid, _ = st.store.get_or_create("physical", "referent-choice", ("referent", m.id, cand.candidate),
                                            ("anaphora", m.surface), s)
            ids.append(hid)
        st.lexical[("referent", m.id)] = Constraint(f"referent:{m.id}", True, 0.0, ("xor", *ids), "one referent")


def canonical_frames(frames: list[Frame]) -> list[Frame]:
    """Per (group, sense) keep only the frames of the first alternative that yields any."""
    first = {}
    for fr in frames:
        key = (fr.group, fr.sense)
        first[key] = min(first.get(key, fr.alternative), fr.alternative)
    return [fr for fr in frames if fr.alternative == first[(fr.group, fr.sense)]]


def _conj(lits):
    lits = list(dict.fromkeys(x for x in lits if x is not True))
    if any(x is False for x in lits):
        return False
    if not lits:
        return True
    return lits[0] if len(lits) == 1 else ("and", *lits)


def _add_frame_constraints(d: Discourse, view: StateView, frames: list[Frame]):
    """Coverage: a multi-sense predicate must take a sense that some frame supports.
    Fit: each frame whose fillers match a selectional preference earns its fit."""
    st = d.state
    by_group: dict = {}
    for fr in frames:
        by_group.setdefault((fr.group, fr.lemma), []).append(fr)
    for (gid, lemma), frs in by_group.items():
        senses = st.sense_groups.get(lemma, ())
        framed = tuple(dict.fromkeys(fr.sense for fr in frs))
        if len(senses) > 1 and set(framed) < set(senses):
            lits = [view.sense_literal(lemma, c) for c in framed]
            c = Constraint(f"coverage:{gid}", True, 0.0, ("or", *lits) if len(lits) > 1 else lits[0],
                           "predicate sense must be framed")
            st.lexical[("coverage", gid)] = c
    for fr in frames:
        if fr.fit <= 0:
            continue
        f = _conj([view.literal(r) for r in fr.requires])
        key = ("fit", fr.group, fr.sense, fr.frame_type, fr.roles)
        st.lexical.setdefault(key, Constraint(f"fit:{fr.id}", False, float(fr.fit), f, "selectional fit"))


def _constraint_key(c: Constraint):
    return ("merge", c.id)


# --------------------------------------------------------------------------- merging

def unifiable(kb: KB, a: str, b: str) -> bool:
    if a == b:
        return True
    return a in kb and b in kb and (specializes(kb, a, b) or specializes(kb, b, a))


def merge_candidates(kb: KB, new: Frame, old: Frame) -> int:
    """Role overlap if the two frames may describe one event, else 0."""
    if new.group == old.group or new.sentence <= old.sentence or not unifiable(kb, new.frame_type, old.frame_type):
        return 0
    old_roles = dict(old.roles)
    overlap = 0
    for role, filler in new.roles:
        if role not in old_roles:
            continue
        if old_roles[role] != filler:
            return 0
        overlap += 1
    return overlap


def merge_events(d: Discourse, new_frames: list[Frame]) -> list[Constraint]:
    """Merge hypotheses between new frames and earlier ones, with their constraints."""
    st = d.state
    view = d.view()
    out = []
    old_frames = [fr for fr in st.frames if fr.sentence < (new_frames[0].sentence if new_frames else 0)]
    for new in new_frames:
        options = []
        for old in old_frames:
            overlap = merge_candidates(d.kb, new, old)
            if overlap < 1:
                continue
            hid, _ = st.store.get_or_create("physical", "merge", ("same-event", new.id, old.id),
                                            ("merge", f"{new.id}={old.id}"), new.sentence)
            options.append(hid)
            out.append(Constraint(f"merge-weight:{hid}", False, float(overlap), hid, "role overlap"))
            cond = _conj([view.literal(r) for r in new.requires + old.requires])
            if cond is not True:
                out.append(Constraint(f"merge-cond:{hid}", True, 0.0, ("or", ("not", hid), cond),
                                      "merged frames must both hold"))
        if options:
            none, _ = st.store.get_or_create("physical", "merge", ("no-merge", new.id), ("merge", new.id),
                                             new.sentence)
            out.append(Constraint(f"merge-choice:{new.id}", True, 0.0, ("xor", *options, none), "at most one merge"))
    return out


# --------------------------------------------------------------------------- settlement

def _expand(f, defs: dict, memo: dict, stack: set, cyclic: set):
    if isinstance(f, bool):
        return f
    if isinstance(f, int):
        if f not in defs:
            return f
        if f in memo:
            return memo[f]
        if f in stack:
            cyclic.add(f)
            return f
        stack.add(f)
        out = _expand(defs[f], defs, memo, stack, cyclic)
        stack.discard(f)
        if f not in cyclic:
            memo[f] = out
        return out
    return (f[0], *(_expand(a, defs, memo, stack, cyclic) for a in f[1:]))


def definitions(state: State) -> dict:
    """Entailed hypothesis -> formula: true exactly when one of its supports holds."""
    defs = {}
    for hid, h in state.store.hyps.items():
        if not h.entailed or hid in state.store.retired:
            continue
        sups = sorted(state.supports.get(hid, ()), key=repr)
        terms = [_conj(list(s)) for s in sups]
        if not terms:
            defs[hid] = False
        elif len(terms) == 1:
            defs[hid] = terms[0]
        else:
            defs[hid] = ("or", *terms)
    return defs


def live_constraints(state: State) -> list[Constraint]:
    return list(state.lexical.values()) + list(state.agent_constraints)


def assemble(state: State, forced: dict | None = None) -> tuple[ConstraintSystem, dict]:
    """Build the settlement system over free live hypotheses.

    Entailed hypotheses are replaced by their definitions; retired ones and any
    ``forced`` values become constants. Returns the system and the expanded
    definitions (for evaluating entailed hypotheses afterwards).
    """
    forced = dict(forced or {})
    store = state.store
    defs = definitions(state)
    for hid in forced:
        defs.pop(hid, None)
    consts = {hid: False for hid in store.retired}
    consts.update(forced)
    memo: dict = {}
    cyclic: set = set()
    for hid in sorted(defs):
        _expand(hid, defs, memo, set(), cyclic)
    expanded = {}
    hard, soft = [], []
    for hid in sorted(defs):
        if hid in cyclic:
            body = substitute(_expand(defs[hid], {k: v for k, v in defs.items() if k not in cyclic}, {}, set(), set()),
                              consts)
            hard.append(("xor", hid, ("not", body)))
            expanded[hid] = hid
        else:
            expanded[hid] = substitute(memo[hid], consts)
    exp_defs = {k: v for k, v in defs.items() if k not in cyclic}
    for c in live_constraints(state):
        f = substitute(_expand(c.formula, exp_defs, dict(memo), set(), set()), consts)
        if c.hard:
            hard.append(f)
        else:
            soft.append((c.weight, f))
    free = [hid for hid, h in sorted(store.hyps.items())
            if hid not in store.retired and hid not in forced and (not h.entailed or hid in cyclic)]
    used = set(free)
    for f in hard + [f for _, f in soft] + list(expanded.values()):
        if not isinstance(f, bool):
            used |= variables_of(f)
    labels = {hid: store.hyps[hid].render() for hid in used if hid in store.hyps}
    # drop constants that settle treats specially only when harmless
    system = ConstraintSystem(tuple(used), [f for f in hard if f is not True],
                              [(w, f) for w, f in soft if f is not False], labels)
    return system, expanded


def settle_state(state: State, config: SolveConfig, forced: dict | None = None) -> tuple[Settlement, Summary]:
    system, expanded = assemble(state, forced)
    st = settle(system, config)
    state.system = system
    if not st.feasible:
        return st, Summary(False, frozenset(), frozenset(), 0.0, st.exact, st.diagnosis)
    assignment = st.working.assignment
    true = set(st.working.true)
    co = set(st.co_optimal_true)
    for hid, f in expanded.items():
        if isinstance(f, bool):
            val = f
        else:
            val = evaluate_formula(f, assignment)
        if val:
            true.add(hid)
            co.add(hid)
    for hid, val in (forced or {}).items():
        if val:
            true.add(hid)
            co.add(hid)
    return st, Summary(True, frozenset(true), frozenset(co), st.score, st.exact, None)


def _settle_state(d: Discourse, s: int):
    _, d.state.summary = settle_state(d.state, d.config.solve)


def prune_state(d: Discourse, s: int, horizon: int | None = None) -> list:
    """Retire free hypotheses that were false in every optimum for ``horizon`` sentences."""
    st = d.state
    horizon = d.config.horizon if horizon is None else horizon
    free = [hid for hid, h in sorted(st.store.hyps.items()) if hid not in st.store.retired and not h.entailed]
    dropped = []
    for hid in free:
        if hid in st.summary.co:
            st.streak[hid] = 0
            continue
        st.streak[hid] = st.streak.get(hid, 0) + 1
        if horizon is not None and st.streak[hid] >= horizon:
            st.store.retired[hid] = s
            dropped.append(hid)
    if dropped:
        entry = PruneEntry(s, tuple(dropped), f"false in every optimum for {horizon} sentences")
        st.prune_log.append(entry)
        return [entry]
    return []


# --------------------------------------------------------------------------- rereading

def fresh_state() -> State:
    return State()


def reread(d: Discourse, from_sentence: int) -> Discourse:
    """Restore the snapshot taken before ``from_sentence`` and replay the rest without retirement."""
    n = d.n_sentences
    if not 1 <= from_sentence <= n:
        raise NarrativeError(f"reread index {from_sentence} outside 1..{n}")
    texts = list(d.state.texts)
    d.state = copy.deepcopy(d.history[from_sentence - 2]) if from_sentence > 1 else fresh_state()
    d.history = d.history[:from_sentence - 1]
    for text in texts[from_sentence - 1:]:
        ingest_sentence(d, text, prune=False)
    return d


def read_story(d: Discourse, sentences, supervisor=None) -> Discourse:
    """Ingest sentences in order; on confusion follow the supervisor's reread
    directive and, if that fails, escalate once to rereading from the start."""
    from .control import Supervisor

    supervisor = supervisor or Supervisor()
    for text in sentences:
        ingest_sentence(d, text)
        k = d.n_sentences
        if d.state.summary.feasible:
            supervisor.observe(d.signals[-1] if d.signals and d.signals[-1].sentence == k else None)
            continue
        target = supervisor.on_confusion(k)
        if target is not None:
            d.rereads.append((k, target))
            reread(d, target)
            if not d.state.summary.feasible and target > 1:
                d.rereads.append((k, 1))
                reread(d, 1)
        if not d.state.summary.feasible:
            d.unresolved = True
            break
    return d


def split_story(text: str) -> list[str]:
    """Story files hold one reading unit per line; blank lines and ``#`` comments are skipped."""
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def split_sentences(text: str) -> list[str]:
    """Running text split at sentence boundaries."""
    return [text[a:b].strip() for a, b in segment_sentences(text) if text[a:b].strip()]


# --------------------------------------------------------------------------- reporting

def true_hypotheses(d: Discourse) -> list[Hypothesis]:
    st = d.state
    return [st.store.hyps[h] for h in sorted(st.summary.true)]


def category_set(d: Discourse, pred: str = "category", entity: str | None = None) -> tuple[tuple, bool]:
    """Co-optimal values of ``(pred entity value)`` hypotheses, and whether the set is indefinite."""
    st = d.state
    values = []
    for hid in sorted(st.summary.co):
        h = st.store.hyps[hid]
        if h.prop[0] == pred and (entity is None or h.prop[1] == entity) and hid not in st.store.retired:
            if h.prop[-1] not in values:
                values.append(h.prop[-1])
    values.sort()
    return tuple(values), len(values) > d.config.indefinite_above


def settled_senses(d: Discourse) -> dict:
    """Lemma -> chosen concept, for every ambiguous lemma with a true sense hypothesis."""
    out = {}
    for h in true_hypotheses(d):
        if h.prop[0] == "sense":
            out[h.prop[1]] = h.prop[2]
    return out


def sentence_report(d: Discourse, index: int | None = None) -> list[str]:
    st = d.state if index is None else d.history[index - 1]
    k = len(st.texts)
    lines = [f"sentence {k}: {st.texts[-1]}" if st.texts else "sentence 0"]
    if not st.summary.feasible:
        lines.append(f"  confused: {st.summary.diagnosis}")
        return lines
    by_realm: dict = {}
    for hid in sorted(st.summary.true):
        h = st.store.hyps[hid]
        if h.kind == "merge" and h.prop[0] == "no-merge":
            continue
        by_realm.setdefault(h.realm, []).append(f"{hid}:{_render_hyp(h, st.registry)}")
    for realm in sorted(by_realm):
        lines.append(f"  {realm}: " + " ".join(by_realm[realm]))
    lines.append(f"  score {st.summary.score:g}{'' if st.summary.exact else ' (local search)'}")
    for e in st.prune_log:
        if e.sentence == k:
            lines.append("  retired " + " ".join(str(h) for h in e.dropped))
    return lines


def _render_hyp(h: Hypothesis, registry: EntityRegistry) -> str:
    if h.prop[0] == "sense":
        return f"{h.prop[1]}={h.prop[2]}"
    return h.render()


def state_hash(d: Discourse) -> str:
    text = dump_state(d.state) + "".join(dump_state(s) for s in d.history)
    return hashlib.sha256(text.encode()).hexdigest()


# --------------------------------------------------------------------------- snapshot format

def _json(x) -> str:
    return json.dumps(x, sort_keys=True, separators=(",", ":"))


def _tuples(x):
    if isinstance(x, list):
        return tuple(_tuples(i) for i in x)
    if isinstance(x, dict):
        return {k: _tuples(v) for k, v in x.items()}
    return x


def _formula_out(f):
    if isinstance(f, bool) or isinstance(f, int):
        return f
    return [f[0], *(_formula_out(a) for a in f[1:])]


def _formula_in(f):
    if isinstance(f, list):
        return (f[0], *(_formula_in(a) for a in f[1:]))
    return f


def dump_state(st: State) -> str:
    """Versioned line-oriented snapshot: one ``<record>\\t<json>`` per line."""
    lines = [f"snapshot\t{SNAPSHOT_VERSION}"]
    for i, (text, lem) in enumerate(zip(st.texts, st.lemmas), 1):
        lines.append("sentence\t" + _json({"i": i, "text": text, "lemmas": lem}))
    reg = st.registry
    lines.append("registry\t" + _json({"counters": reg.counters, "order": reg.order}))
    for eid in sorted(reg.entities):
        e = reg.entities[eid]
        lines.append("entity\t" + _json({**e.__dict__, "concepts": list(e.concepts)}))
    for mid in sorted(reg.mentions):
        m = reg.mentions[mid]
        rec = {**m.__dict__, "candidates": [[c.anaphor, list(c.span), c.kind, c.candidate, c.salience]
                                            for c in m.candidates]}
        lines.append("mention\t" + _json(rec))
    lines.append("store\t" + _json({"next_id": st.store.next_id}))
    for hid in sorted(st.store.hyps):
        h = st.store.hyps[hid]
        lines.append("hyp\t" + _json({"id": h.id, "realm": h.realm, "kind": h.kind, "prop": list(h.prop),
                                      "provenance": list(h.provenance), "sentence": h.sentence,
                                      "entailed": h.entailed}))
    for hid in sorted(st.store.retired):
        lines.append("retired\t" + _json([hid, st.store.retired[hid]]))
    for fr in st.frames:
        lines.append("frame\t" + _json({**fr.__dict__}))
    for lemma in sorted(st.sense_groups):
        lines.append("senses\t" + _json([lemma, list(st.sense_groups[lemma])]))
    for key, c in st.lexical.items():
        lines.append("lexical\t" + _json({"key": list(key), "id": c.id, "hard": c.hard, "weight": c.weight,
                                          "formula": _formula_out(c.formula), "provenance": c.provenance}))
    for c in st.agent_constraints:
        lines.append("agent\t" + _json({"id": c.id, "hard": c.hard, "weight": c.weight,
                                        "formula": _formula_out(c.formula), "provenance": c.provenance}))
    for hid in sorted(st.supports):
        lines.append("support\t" + _json([hid, sorted([list(s) for s in st.supports[hid]], key=repr)]))
    for ln in st.links:
        lines.append("link\t" + _json([ln.cause, ln.effect, ln.note]))
    for hid in sorted(st.streak):
        lines.append("streak\t" + _json([hid, st.streak[hid]]))
    for e in st.prune_log:
        lines.append("pruned\t" + _json([e.sentence, list(e.dropped), e.reason]))
    for u in st.unframed:
        lines.append("unframed\t" + _json(list(u)))
    sm = st.summary
    lines.append("summary\t" + _json({"feasible": sm.feasible, "true": sorted(sm.true), "co": sorted(sm.co),
                                      "score": sm.score, "exact": sm.exact, "diagnosis": sm.diagnosis}))
    return "\n".join(lines) + "\n"


def load_state(text: str) -> State:
    """Inverse of ``dump_state``."""
    from .agents import CausalLink
    from .parsing import AnaphorCandidate

    st = State()
    lines = text.splitlines()
    if not lines or lines[0] != f"snapshot\t{SNAPSHOT_VERSION}":
        raise NarrativeError("not a snapshot (or unsupported version)")
    for lineno, raw in enumerate(lines[1:], 2):
        kind, _, body = raw.partition("\t")
        try:
            rec = json.loads(body)
        except json.JSONDecodeError as e:
            raise NarrativeError(f"line {lineno}: {e}") from None
        if kind == "sentence":
            st.texts.append(rec["text"])
            st.lemmas.append([tuple(x) for x in rec["lemmas"]])
        elif kind == "registry":
            st.registry.counters = rec["counters"]
            st.registry.order = rec["order"]
        elif kind == "entity":
            rec["concepts"] = tuple(rec["concepts"])
            st.registry.entities[rec["id"]] = Entity(**rec)
        elif kind == "mention":
            rec["span"] = tuple(rec["span"])
            rec["candidates"] = tuple(AnaphorCandidate(a, tuple(sp), k, c, sal)
                                      for a, sp, k, c, sal in rec["candidates"])
            st.registry.mentions[rec["id"]] = Mention(**rec)
        elif kind == "store":
            st.store.next_id = rec["next_id"]
        elif kind == "hyp":
            h = Hypothesis(rec["id"], rec["realm"], rec["kind"], tuple(rec["prop"]), tuple(rec["provenance"]),
                           rec["sentence"], rec["entailed"])
            st.store.hyps[h.id] = h
            st.store.by_key[(h.realm, h.prop)] = h.id
            st.store.by_prop.setdefault(h.prop, []).append(h.id)
        elif kind == "retired":
            st.store.retired[rec[0]] = rec[1]
        elif kind == "frame":
            st.frames.append(Frame(**_tuples(rec)))
        elif kind == "senses":
            st.sense_groups[rec[0]] = tuple(rec[1])
        elif kind == "lexical":
            st.lexical[_tuples(rec["key"])] = Constraint(rec["id"], rec["hard"], rec["weight"],
                                                         _formula_in(rec["formula"]), rec["provenance"])
        elif kind == "agent":
            st.agent_constraints.append(Constraint(rec["id"], rec["hard"], rec["weight"],
                                                   _formula_in(rec["formula"]), rec["provenance"]))
        elif kind == "support":
            st.supports[rec[0]] = frozenset(tuple(_formula_in(x) for x in s) for s in rec[1])
        elif kind == "link":
            st.links.append(CausalLink(*rec))
        elif kind == "streak":
            st.streak[rec[0]] = rec[1]
        elif kind == "pruned":
            st.prune_log.append(PruneEntry(rec[0], tuple(rec[1]), rec[2]))
        elif kind == "unframed":
            st.unframed.append(tuple(rec))
        elif kind == "summary":
            st.summary = Summary(rec["feasible"], frozenset(rec["true"]), frozenset(rec["co"]), rec["score"],
                                 rec["exact"], rec["diagnosis"])
        else:
            raise NarrativeError(f"line {lineno}: unknown record {kind!r}")
    return st
