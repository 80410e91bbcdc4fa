"""Understanding agents: realm registry, rule tables and the shared hypothesis store.

Rule-table format (one s-expression per rule)::

    (rule emotion anger-from-dissatisfaction
      (when (hyp dissatisfied ?r ?o) (hyp gives ?s ?r ?o))
      (for ?r)
      (infer angry state (angry ?r ?s))
      (because angry (hyp dissatisfied ?r ?o)))

Patterns: ``(frame <type|*> (<role> ?v)... [(self ?f)])``, ``(entity ?x <concept> [?k])``,
``(hyp <pred> <arg>...)``, ``(lemma "w" [?x])``, ``(phrase "w1 w2")``, ``(attr ?x <key> ?v)``.
Frame, lemma and phrase patterns of one rule must match within a single sentence.

Actions: ``(hyp <name> <kind> (<pred> <arg>...))`` proposes a free hypothesis;
``(infer <name> <kind> (...))`` proposes one that holds exactly when some
match's conditions hold; ``(hard F)``, ``(soft <w> F)``, ``(because <effect> <cause>...)``.
``(unless (hyp ...))`` adds negated conditions to every ``infer`` of the rule.

Formula references: local names, ``(sense <lemma> <concept>)``, ``(is ?x <concept>)``,
``(hyp <pred> <arg>...)``, ``cond`` (the match's conditions) and ``and/or/xor/not``.

Other forms: ``(owner <realm> <concept>...)`` assigns sense hypotheses to a
realm; ``(coherence <relation-kind>...)`` adds a unit soft constraint for every
pair of KB-related concepts chosen in the discourse; ``(realm <id> [per-entity])``
declares an extra realm.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

from .kb import KB, RELATION_KINDS, specializes
from .sexpr import Form, ParseError, Str, read_forms

HYPOTHESIS_KINDS = ("sense-choice", "referent-choice", "attachment-choice", "event", "state", "goal", "merge")
MAX_PASSES = 8


class AgentError(ValueError):
    pass


class RuleError(AgentError):
    pass


@dataclass(frozen=True)
class Realm:
    id: str
    per_entity: bool = False


BUILTIN_REALMS = (
    Realm("physical"), Realm("possession"), Realm("device"), Realm("coercion"),
    Realm("emotion", True), Realm("need-goal", True), Realm("personal", True),
    Realm("competition"), Realm("mental"),
)


@dataclass(frozen=True)
class Hypothesis:
    id: int
    realm: str  # realm instance, e.g. "emotion:robber1"
    kind: str
    prop: tuple
    provenance: tuple  # (rule id, trigger description)
    sentence: int
    entailed: bool = False

    def __post_init__(self):
        if self.kind not in HYPOTHESIS_KINDS:
            raise AgentError(f"unknown hypothesis kind {self.kind!r}")

    @property
    def base_realm(self) -> str:
        return self.realm.split(":", 1)[0]

    def render(self) -> str:
        return f"{self.prop[0]}({', '.join(str(a) for a in self.prop[1:])})"


@dataclass(frozen=True)
class Constraint:
    id: str
    hard: bool
    weight: float
    formula: object
    provenance: str = ""

    def __post_init__(self):
        if not self.hard and not self.weight > 0:
            raise AgentError(f"soft weight must be positive: {self}")


@dataclass(frozen=True)
class CausalLink:
    cause: int
    effect: int
    note: str

    def __post_init__(self):
        if self.cause == self.effect:
            raise AgentError("a causal link needs distinct cause and effect")


@dataclass
class UAReport:
    realm: str
    hypotheses: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    links: list = field(default_factory=list)


# --------------------------------------------------------------------------- rules

@dataclass(frozen=True)
class Rule:
    realm: str
    id: str
    patterns: tuple
    actions: tuple
    unless: tuple = ()
    for_var: str | None = None


@dataclass
class RuleTable:
    rules: list = field(default_factory=list)
    owners: dict = field(default_factory=dict)  # concept -> realm
    coherence: tuple = ()
    realms: list = field(default_factory=list)


def _plain(x):
    if isinstance(x, Form):
        return tuple(_plain(i) for i in x.items)
    return x


def loads_rules(text: str, path: str | None = None) -> RuleTable:
    table = RuleTable()
    seen = set()
    for form in read_forms(text, path):
        head = form.head
        if head == "rule":
            if len(form) < 3:
                raise ParseError("rule needs a realm and an id", form.line, path)
            realm, rid = str(form[1]), str(form[2])
            if (realm, rid) in seen:
                raise ParseError(f"duplicate rule {realm} {rid}", form.line, path)
            seen.add((realm, rid))
            patterns, actions, unless, for_var = [], [], [], None
            for item in form.items[3:]:
                if not isinstance(item, Form):
                    raise ParseError(f"bad rule field {item!r}", form.line, path)
                if item.head == "when":
                    patterns.extend(_plain(p) for p in item.items[1:])
                elif item.head == "unless":
                    unless.extend(_plain(p) for p in item.items[1:])
                elif item.head == "for":
                    for_var = str(item[1])
                elif item.head in ("hyp", "infer", "hard", "soft", "because"):
                    actions.append(_plain(item))
                else:
                    raise ParseError(f"unknown rule field {item.head!r}", form.line, path)
            for p in patterns:
                if not p or p[0] not in ("frame", "entity", "hyp", "lemma", "phrase", "attr"):
                    raise ParseError(f"unknown pattern {p!r}", form.line, path)
            for p in unless:
                if p[0] != "hyp":
                    raise ParseError("unless takes hyp patterns only", form.line, path)
            for a in actions:
                if a[0] in ("hyp", "infer"):
                    if len(a) != 4 or not isinstance(a[3], tuple) or a[2] not in HYPOTHESIS_KINDS:
                        raise ParseError(f"expected ({a[0]} name kind (pred args...))", form.line, path)
                if a[0] == "soft":
                    try:
                        if float(a[1]) <= 0:
                            raise ValueError
                    except (ValueError, IndexError):
                        raise ParseError("soft weight must be a positive number", form.line, path) from None
            table.rules.append(Rule(realm, rid, tuple(patterns), tuple(actions), tuple(unless), for_var))
        elif head == "owner":
            for c in form.items[2:]:
                table.owners[str(c)] = str(form[1])
        elif head == "coherence":
            kinds = tuple(str(k) for k in form.items[1:])
            bad = [k for k in kinds if k not in RELATION_KINDS]
            if bad:
                raise ParseError(f"unknown relation kinds {bad}", form.line, path)
            table.coherence = tuple(dict.fromkeys(table.coherence + kinds))
        elif head == "realm":
            table.realms.append(Realm(str(form[1]), len(form) > 2 and str(form[2]) == "per-entity"))
        else:
            raise ParseError(f"unknown form {head!r}", form.line, path)
    return table


def load_rules(paths) -> RuleTable:
    if isinstance(paths, (str, Path)):
        paths = [paths]
    merged = RuleTable()
    for p in paths:
        t = loads_rules(Path(p).read_text(encoding="utf-8"), str(p))
        merged.rules.extend(t.rules)
        merged.owners.update(t.owners)
        merged.coherence = tuple(dict.fromkeys(merged.coherence + t.coherence))
        merged.realms.extend(t.realms)
    return merged


# --------------------------------------------------------------------------- engine

@dataclass
class Engine:
    kb: KB
    realms: dict = field(default_factory=dict)
    table: RuleTable = field(default_factory=RuleTable)

    @property
    def realm_ids(self):
        return sorted(self.realms)


def register_realm(engine: Engine, realm: Realm) -> Engine:
    if realm.id in engine.realms:
        raise AgentError(f"realm {realm.id!r} already registered")
    engine.realms[realm.id] = realm
    return engine


def make_engine(kb: KB, table: RuleTable | None = None) -> Engine:
    engine = Engine(kb, {}, table or RuleTable())
    for r in BUILTIN_REALMS:
        register_realm(engine, r)
    for r in engine.table.realms:
        register_realm(engine, r)
    for rule in engine.table.rules:
        if rule.realm not in engine.realms:
            raise AgentError(f"rule {rule.id} names unknown realm {rule.realm!r}")
        if engine.realms[rule.realm].per_entity and rule.for_var is None:
            raise AgentError(f"rule {rule.id} in per-entity realm {rule.realm} needs (for ?var)")
    return engine


def realm_instances(engine: Engine, store: "HypothesisStore") -> list[str]:
    """Realm instances present in the store (per-entity realms once per entity)."""
    seen = {h.realm for h in store.hyps.values()}
    out = []
    for rid in engine.realm_ids:
        if engine.realms[rid].per_entity:
            out.extend(sorted(r for r in seen if r.startswith(rid + ":")))
        else:
            out.append(rid)
    return out


# --------------------------------------------------------------------------- store

@dataclass
class HypothesisStore:
    hyps: dict = field(default_factory=dict)  # id -> Hypothesis
    by_key: dict = field(default_factory=dict)  # (realm, prop) -> id
    by_prop: dict = field(default_factory=dict)  # prop -> [ids]
    retired: dict = field(default_factory=dict)  # id -> sentence retired
    next_id: int = 1

    def get_or_create(self, realm, kind, prop, provenance, sentence, entailed=False) -> tuple[int, bool]:
        key = (realm, prop)
        if key in self.by_key:
            return self.by_key[key], False
        hid = self.next_id
        self.next_id += 1
        self.hyps[hid] = Hypothesis(hid, realm, kind, prop, provenance, sentence, entailed)
        self.by_key[key] = hid
        self.by_prop.setdefault(prop, []).append(hid)
        return hid, True

    def live(self, hid) -> bool:
        return hid in self.hyps and hid not in self.retired

    def find(self, prop) -> int | None:
        ids = self.by_prop.get(prop, [])
        live = [i for i in ids if i not in self.retired]
        if live:
            return live[0]
        return ids[0] if ids else None

    def sense(self, lemma, concept) -> int | None:
        return self.find(("sense", lemma, concept))


# --------------------------------------------------------------------------- state view

@dataclass
class StateView:
    """What rules may look at: frames, sentences, entities, hypotheses."""

    kb: KB
    frames: list  # parsing.Frame, all sentences
    sentences: list  # per sentence: list of (lemma, entity or None) per token
    registry: object  # parsing.EntityRegistry
    store: HypothesisStore
    sense_groups: dict  # lemma -> candidate concepts, for every lemma read so far

    def literal(self, req):
        """Map a frame requirement proposition to a formula literal."""
        if req[0] == "sense":
            return self.sense_literal(req[1], req[2])
        hid = self.store.find(req)
        if hid is None:
            return True
        return False if hid in self.store.retired else hid

    def sense_literal(self, lemma, concept):
        hid = self.store.sense(lemma, concept)
        if hid is None:
            return concept in self.sense_groups.get(lemma, ())
        return False if hid in self.store.retired else hid

    def entity_concept_literal(self, eid, concept):
        ent = self.registry.entities.get(eid)
        if ent is None:
            return False
        if len(ent.concepts) <= 1:
            return bool(ent.concepts) and any(self._spec(c, concept) for c in ent.concepts)
        lits = [self.sense_literal(ent.lemma, c) for c in ent.concepts if self._spec(c, concept)]
        lits = [x for x in lits if x is not False]
        if not lits:
            return False
        if True in lits:
            return True
        return lits[0] if len(lits) == 1 else ("or", *lits)

    def _spec(self, a, b):
        if a == b:
            return True
        return a in self.kb and b in self.kb and specializes(self.kb, a, b)


def _is_var(x) -> bool:
    return isinstance(x, str) and not isinstance(x, Str) and x.startswith("?")


@dataclass
class Match:
    bind: dict
    literals: tuple
    sentence: int | None
    triggers: tuple


def _unify(pattern_args, values, bind) -> dict | None:
    if len(pattern_args) != len(values):
        return None
    out = dict(bind)
    for p, v in zip(pattern_args, values):
        if _is_var(p):
            if p in out and out[p] != v:
                return None
            out[p] = v
        elif str(p) != str(v):
            return None
    return out


def _match_patterns(view: StateView, patterns, match: Match):
    if not patterns:
        yield match
        return
    pat, rest = patterns[0], patterns[1:]
    head = pat[0]
    if head == "frame":
        ftype = pat[1]
        role_pats = [p for p in pat[2:] if isinstance(p, tuple) and p[0] not in ("self", "sense", "lemma")]
        self_var = next((p[1] for p in pat[2:] if isinstance(p, tuple) and p[0] == "self"), None)
        sense_var = next((p[1] for p in pat[2:] if isinstance(p, tuple) and p[0] == "sense"), None)
        for fr in view.frames:
            if match.sentence is not None and fr.sentence != match.sentence:
                continue
            if ftype != "*" and not view._spec(fr.frame_type, ftype):
                continue
            bind = match.bind
            ok = True
            for role, var in role_pats:
                val = fr.role(role)
                if val is None:
                    ok = False
                    break
                bind = _unify([var], [val], bind)
                if bind is None:
                    ok = False
                    break
            if not ok:
                continue
            if self_var is not None:
                bind = _unify([self_var], [fr.id], bind)
            if sense_var is not None and bind is not None:
                bind = _unify([sense_var], [fr.sense], bind)
            if bind is None:
                continue
            lits = tuple(view.literal(r) for r in fr.requires)
            if False in lits:
                continue
            lits = tuple(x for x in lits if x is not True)
            yield from _match_patterns(view, rest, Match(bind, match.literals + lits, fr.sentence,
                                                         match.triggers + (fr.id,)))
    elif head == "entity":
        var, concept = pat[1], pat[2]
        kvar = pat[3] if len(pat) > 3 else None
        if var in match.bind:
            ids = [match.bind[var]]
        else:
            ids = sorted(view.registry.entities)
        for eid in ids:
            ent = view.registry.entities.get(eid)
            if ent is None:
                continue
            for c in ent.concepts:
                if _is_var(concept):
                    ok_bind = _unify([concept], [c], match.bind)
                    if ok_bind is None:
                        continue
                elif not view._spec(c, concept):
                    continue
                else:
                    ok_bind = match.bind
                bind = _unify([var], [eid], ok_bind)
                if bind is None:
                    continue
                if kvar is not None:
                    bind = _unify([kvar], [c], bind)
                    if bind is None:
                        continue
                lits = ()
                if len(ent.concepts) > 1:
                    lit = view.sense_literal(ent.lemma, c)
                    if lit is False:
                        continue
                    if lit is not True:
                        lits = (lit,)
                yield from _match_patterns(view, rest, Match(bind, match.literals + lits, match.sentence,
                                                             match.triggers))
    elif head == "hyp":
        prop_pat = pat[1:]
        for hid in sorted(view.store.hyps):
            if hid in view.store.retired:
                continue
            h = view.store.hyps[hid]
            if h.prop[0] != prop_pat[0]:
                continue
            bind = _unify(prop_pat[1:], h.prop[1:], match.bind)
            if bind is None:
                continue
            yield from _match_patterns(view, rest, Match(bind, match.literals + (hid,), match.sentence,
                                                         match.triggers + (f"h{hid}",)))
    elif head in ("lemma", "phrase"):
        words = str(pat[1]).lower().split()
        var = pat[2] if head == "lemma" and len(pat) > 2 else None
        for si, toks in enumerate(view.sentences, start=1):
            if match.sentence is not None and si != match.sentence:
                continue
            for ti in range(len(toks) - len(words) + 1):
                if [toks[ti + k][0] for k in range(len(words))] != words:
                    continue
                bind = match.bind
                if var is not None:
                    ent = toks[ti][1]
                    if ent is None:
                        continue
                    bind = _unify([var], [ent], bind)
                    if bind is None:
                        continue
                yield from _match_patterns(view, rest, Match(bind, match.literals, si,
                                                             match.triggers + (f"s{si}.{ti}",)))
    elif head == "attr":
        var, key, vvar = pat[1], pat[2], pat[3]
        ids = [match.bind[var]] if var in match.bind else sorted(view.registry.entities)
        for eid in ids:
            ent = view.registry.entities.get(eid)
            if ent is None or key not in ent.attrs:
                continue
            bind = _unify([var, vvar], [eid, ent.attrs[key]], match.bind)
            if bind is not None:
                yield from _match_patterns(view, rest, Match(bind, match.literals, match.sentence, match.triggers))
    else:
        raise RuleError(f"unknown pattern {head!r}")


def _inst(template, bind):
    out = []
    for a in template:
        if _is_var(a):
            if a not in bind:
                raise RuleError(f"unbound variable {a} in {template}")
            out.append(bind[a])
        elif isinstance(a, tuple):
            raise RuleError(f"nested term in proposition {template}")
        else:
            out.append(str(a))
    return tuple(out)


@dataclass
class _Collected:
    reports: dict = field(default_factory=dict)  # realm instance -> UAReport
    supports: dict = field(default_factory=dict)  # hid -> set of literal tuples
    constraints: dict = field(default_factory=dict)  # key -> Constraint
    links: dict = field(default_factory=dict)  # (cause, effect) -> CausalLink
    created: int = 0


def _formula(expr, names, bind, view: StateView, match: Match):
    if isinstance(expr, tuple):
        op = expr[0]
        if op in ("and", "or", "xor"):
            return (op, *(_formula(a, names, bind, view, match) for a in expr[1:]))
        if op == "not":
            return ("not", _formula(expr[1], names, bind, view, match))
        if op == "sense":
            return view.sense_literal(str(expr[1]), str(expr[2]))
        if op == "is":
            eid = bind.get(expr[1], expr[1]) if _is_var(expr[1]) else expr[1]
            return view.entity_concept_literal(eid, str(expr[2]))
        if op == "hyp":
            hid = view.store.find(_inst(expr[1:], bind))
            if hid is None or hid in view.store.retired:
                return False
            return hid
        raise RuleError(f"unknown formula operator {op!r}")
    if expr == "cond":
        return ("and", *match.literals) if match.literals else True
    if expr == "true":
        return True
    if expr == "false":
        return False
    if expr in names:
        hid = names[expr]
        return False if hid in view.store.retired else hid
    raise RuleError(f"unknown name {expr!r} in formula")


def _run_rule(engine: Engine, rule: Rule, view: StateView, col: _Collected, sentence: int):
    realm_def = engine.realms[rule.realm]
    for match in _match_patterns(view, list(rule.patterns), Match({}, (), None, ())):
        bind = match.bind
        realm = rule.realm
        if realm_def.per_entity:
            if rule.for_var not in bind:
                raise RuleError(f"rule {rule.id}: (for {rule.for_var}) is unbound")
            realm = f"{rule.realm}:{bind[rule.for_var]}"
        report = col.reports.setdefault(realm, UAReport(realm))
        neg = []
        for up in rule.unless:
            try:
                prop = _inst(up[1:], bind)
            except RuleError:
                continue
            hid = view.store.find(prop)
            if hid is not None and hid not in view.store.retired:
                neg.append(("not", hid))
        names: dict = {}
        for act in rule.actions:
            op = act[0]
            if op in ("hyp", "infer"):
                _, name, kind, template = act
                prop = _inst(template, bind)
                hid, new = view.store.get_or_create(realm, kind, prop, (rule.id, ",".join(match.triggers)),
                                                    sentence, entailed=(op == "infer"))
                if new:
                    col.created += 1
                names[str(name)] = hid
                if hid not in report.hypotheses:
                    report.hypotheses.append(hid)
                if op == "infer" and view.store.hyps[hid].entailed:
                    col.supports.setdefault(hid, set()).add(tuple(sorted(set(match.literals) | set(neg), key=repr)))
            elif op in ("hard", "soft"):
                weight = float(act[1]) if op == "soft" else 0.0
                f = _formula(act[-1], names, bind, view, match)
                key = (rule.realm, rule.id, op, repr(f))
                if key not in col.constraints:
                    c = Constraint(f"{rule.id}#{len(col.constraints) + 1}", op == "hard", weight, f, rule.id)
                    col.constraints[key] = c
                    report.constraints.append(c)
            elif op == "because":
                refs = [_formula(r, names, bind, view, match) for r in act[1:]]
                effect, causes = refs[0], refs[1:]
                for cause in causes:
                    if isinstance(effect, int) and isinstance(cause, int) and effect != cause \
                            and (cause, effect) not in col.links:
                        link = CausalLink(cause, effect, rule.id)
                        col.links[(cause, effect)] = link
                        report.links.append(link)


@dataclass
class AgentResult:
    reports: list  # UAReport, sorted by realm instance
    supports: dict  # hid -> frozenset of literal tuples
    constraints: list
    links: list
    passes: int


def run_agents(engine: Engine, view: StateView, sentence: int, max_passes: int = MAX_PASSES) -> AgentResult:
    """Evaluate every rule to a fixpoint over the whole discourse.

    Rules run sorted by realm then rule id; passes repeat while new
    hypotheses appear. Supports and constraints come from the final pass.
    """
    rules = sorted(engine.table.rules, key=lambda r: (r.realm, r.id))
    passes = 0
    while True:
        passes += 1
        col = _Collected()
        for rule in rules:
            _run_rule(engine, rule, view, col, sentence)
        if col.created == 0 or passes >= max_passes:
            break
    reports = [col.reports[k] for k in sorted(col.reports)]
    return AgentResult(reports, {h: frozenset(s) for h, s in col.supports.items()},
                       list(col.constraints.values()), list(col.links.values()), passes)


def propose(engine: Engine, realm: str, view: StateView, sentence: int) -> UAReport:
    """Run the rules of one realm (all its instances) and report what they produced."""
    if realm not in engine.realms:
        raise AgentError(f"unknown realm {realm!r}")
    col = _Collected()
    for rule in sorted((r for r in engine.table.rules if r.realm == realm), key=lambda r: r.id):
        _run_rule(engine, rule, view, col, sentence)
    merged = UAReport(realm)
    for key in sorted(col.reports):
        rep = col.reports[key]
        merged.hypotheses.extend(h for h in rep.hypotheses if h not in merged.hypotheses)
        merged.constraints.extend(rep.constraints)
        merged.links.extend(rep.links)
    return merged


def link_causes(reports, store: HypothesisStore) -> list[CausalLink]:
    out, seen = [], set()
    for rep in reports:
        for link in rep.links:
            if link.cause not in store.hyps or link.effect not in store.hyps:
                raise AgentError(f"dangling causal link {link}")
            if (link.cause, link.effect) not in seen:
                seen.add((link.cause, link.effect))
                out.append(link)
    return out


# --------------------------------------------------------------------------- lexical constraints

def sense_hypotheses(store: HypothesisStore, table: RuleTable, lemma: str, concepts, sentence: int) -> list[int]:
    ids = []
    for c in concepts:
        realm = table.owners.get(c, "physical")
        hid, _ = store.get_or_create(realm, "sense-choice", ("sense", lemma, c), ("lexicon", lemma), sentence)
        ids.append(hid)
    return ids


def coherence_constraints(view: StateView, kinds) -> list[Constraint]:
    """Unit soft constraints between KB-related concepts chosen in the discourse."""
    if not kinds:
        return []
    kb = view.kb
    choices = {}  # concept -> literal
    for ent in sorted(view.registry.entities.values(), key=lambda e: e.id):
        for c in ent.concepts:
            lit = view.sense_literal(ent.lemma, c) if len(ent.concepts) > 1 else True
            if lit is not False and c in kb:
                choices.setdefault(c, lit)
    for fr in view.frames:
        lit = view.sense_literal(fr.lemma, fr.sense)
        if lit is not False and fr.sense in kb:
            choices.setdefault(fr.sense, lit)
    concepts = sorted(choices)
    related = set()
    for a in kb.assertions:
        if a.kind in kinds:
            related.add((a.source, a.target))
    out = []
    for a, b in itertools.combinations(concepts, 2):
        if not _related(kb, a, b, related):
            continue
        la, lb = choices[a], choices[b]
        if la is True and lb is True:
            continue
        parts = [x for x in (la, lb) if x is not True]
        f = parts[0] if len(parts) == 1 else ("and", *parts)
        out.append(Constraint(f"coherence:{a}:{b}", False, 1.0, f, "coherence"))
    return out


def _related(kb, a, b, related) -> bool:
    for s, t in related:
        if (_spec(kb, a, s) and _spec(kb, b, t)) or (_spec(kb, b, s) and _spec(kb, a, t)):
            return True
    return False


def _spec(kb, a, b):
    return a == b or (a in kb and b in kb and specializes(kb, a, b))


# --------------------------------------------------------------------------- baseline answers

@dataclass(frozen=True)
class QueryForm:
    kind: str
    args: tuple


@dataclass
class Answer:
    payload: object
    support: tuple = ()
    explanation: tuple = ()
    text: str = ""
    unknown: bool = False


class UnsupportedQuery(AgentError):
    pass


BASELINE_KINDS = {
    "possession": ("holder-of", "transferred"),
    "need-goal": ("goal-of", "wanted", "goal-outcome"),
    "emotion": ("feel", "liked"),
    "physical": ("location-of",),
    "competition": ("concord-conflict",),
}


def owning_realm(kind: str) -> str:
    for realm, kinds in BASELINE_KINDS.items():
        if kind in kinds:
            return realm
    raise UnsupportedQuery(f"no realm answers {kind!r}")


def answer_baseline(realm: str, form: QueryForm, interp) -> Answer:
    """Answer from true hypotheses only.

    ``interp`` exposes ``true_hyps`` (ordered list of Hypothesis), ``point``
    (time-point to sentence index) and ``display`` (entity id to text).
    """
    if form.kind not in BASELINE_KINDS.get(realm, ()):
        raise UnsupportedQuery(f"realm {realm} does not answer {form.kind}")
    hyps = [h for h in interp.true_hyps if h.base_realm == realm or h.prop[0] in _CROSS]
    return _HANDLERS[form.kind](form, hyps, interp)


_CROSS = frozenset()


def _by_pred(hyps, pred, pos=None):
    out = []
    for h in hyps:
        if h.prop[0] != pred:
            continue
        if all(len(h.prop) > i and h.prop[i] == v for i, v in (pos or {}).items()):
            out.append(h)
    return out


def _at_or_before(hyps, limit):
    return [h for h in hyps if limit is None or h.sentence <= limit]


def _holder_of(form, hyps, interp):
    obj, point = form.args[0], form.args[1] if len(form.args) > 1 else "end"
    limit = interp.point(point)
    if point == "begin":
        cands = _by_pred(hyps, "had", {2: obj})
    else:
        cands = _at_or_before(_by_pred(hyps, "has", {2: obj}), limit) or \
            _at_or_before(_by_pred(hyps, "had", {2: obj}), limit)
    if not cands:
        return Answer(None, unknown=True, text="unknown")
    h = max(cands, key=lambda h: (h.sentence, h.id))
    return Answer(h.prop[1], (h.id,), interp.explain(h.id), interp.display(h.prop[1]))


def _transferred(form, hyps, interp):
    obj = form.args[0]
    cands = _by_pred(hyps, "gives", {3: obj})
    if not cands:
        return Answer(None, unknown=True, text="unknown")
    h = cands[-1]
    text = f"{interp.display(h.prop[1])} gave it to {interp.display(h.prop[2])}"
    return Answer((h.prop[1], h.prop[2]), (h.id,), interp.explain(h.id), text)


def _goal_of(form, hyps, interp):
    who = form.args[0]
    goals = _by_pred(hyps, "wants", {1: who}) + _by_pred(hyps, "wants-avoid", {1: who})
    if not goals:
        return Answer(None, unknown=True, text="unknown")
    goals.sort(key=lambda h: h.id)
    text = "; ".join(_goal_text(h) for h in goals)
    return Answer(tuple(h.prop[2:] if h.prop[0] == "wants" else ("avoid",) + h.prop[2:] for h in goals),
                  tuple(h.id for h in goals), (), text)


def _goal_text(h):
    if h.prop[0] == "wants-avoid":
        return "avoid " + " ".join(h.prop[2:])
    return " ".join(h.prop[2:])


def _wanted(form, hyps, interp):
    who, goal = form.args[0], form.args[1]
    avoid = _by_pred(hyps, "wants-avoid", {1: who, 2: goal})
    if avoid:
        return Answer(False, (avoid[0].id,), interp.explain(avoid[0].id), "no")
    want = _by_pred(hyps, "wants", {1: who, 2: goal})
    if want:
        return Answer(True, (want[0].id,), interp.explain(want[0].id), "yes")
    return Answer(None, unknown=True, text="unknown")


def _goal_outcome(form, hyps, interp):
    who = form.args[0]
    done = _by_pred(hyps, "goal-succeeded", {1: who})
    failed = _by_pred(hyps, "goal-failed", {1: who})
    if not done and not failed:
        return Answer(None, unknown=True, text="unknown")
    parts = [f"succeeded: {' '.join(h.prop[2:])}" for h in done] + \
            [f"failed: {' '.join(h.prop[2:])}" for h in failed]
    return Answer(bool(done) and not failed, tuple(h.id for h in done + failed), (), "; ".join(parts))


def _feel(form, hyps, interp):
    who = form.args[0]
    feelings = [h for h in hyps if len(h.prop) >= 2 and h.prop[1] == who
                and h.prop[0] in ("fearful-of", "angry", "dissatisfied", "happy", "sad", "glad")]
    if not feelings:
        return Answer(None, unknown=True, text="unknown")
    feelings.sort(key=lambda h: h.id)
    text = "; ".join(f"{h.prop[0]} " + " ".join(interp.display(a) for a in h.prop[2:]) for h in feelings)
    return Answer(tuple((h.prop[0],) + h.prop[2:] for h in feelings), tuple(h.id for h in feelings), (), text.strip())


def _liked(form, hyps, interp):
    a, b = form.args[0], form.args[1]
    neg = [h for h in hyps if h.prop[0] in ("angry", "fearful-of", "dislikes") and h.prop[1:3] == (a, b)]
    pos = [h for h in hyps if h.prop[0] == "likes" and h.prop[1:3] == (a, b)]
    if neg:
        return Answer(False, (neg[0].id,), interp.explain(neg[0].id), "no")
    if pos:
        return Answer(True, (pos[0].id,), interp.explain(pos[0].id), "yes")
    return Answer(None, unknown=True, text="unknown")


def _location_of(form, hyps, interp):
    who, point = form.args[0], form.args[1] if len(form.args) > 1 else "end"
    limit = interp.point(point)
    locs = _at_or_before([h for h in hyps if h.prop[0] in ("located-at", "located-in") and h.prop[1] == who], limit)
    if point == "begin":
        locs = locs[:1]
    if not locs:
        return Answer(None, unknown=True, text="unknown")
    h = max(locs, key=lambda h: (h.sentence, h.id)) if point != "begin" else locs[0]
    return Answer(h.prop[2], (h.id,), interp.explain(h.id), interp.display(h.prop[2]))


def _concord_conflict(form, hyps, interp):
    a, b = form.args[0], form.args[1]
    conflict = [h for h in hyps if h.prop[0] == "conflict" and set(h.prop[1:3]) == {a, b}]
    concord = [h for h in hyps if h.prop[0] == "concord" and set(h.prop[1:3]) == {a, b}]
    if conflict:
        return Answer("conflict", (conflict[0].id,), interp.explain(conflict[0].id), "conflict")
    if concord:
        return Answer("concord", (concord[0].id,), interp.explain(concord[0].id), "concord")
    return Answer(None, unknown=True, text="unknown")


_HANDLERS = {
    "holder-of": _holder_of, "transferred": _transferred, "goal-of": _goal_of, "wanted": _wanted,
    "goal-outcome": _goal_outcome, "feel": _feel, "liked": _liked, "location-of": _location_of,
    "concord-conflict": _concord_conflict,
}
