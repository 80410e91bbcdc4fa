"""Question answering over a settled discourse.

Questions come either as controlled English matched against a closed set of
templates, or in a structured form such as ``(?holder-of $1200 end)``.
Baseline questions are answered by the realm that owns them from the true
hypotheses of the working interpretation. ``why`` walks causal links
backwards. Counterfactual removal forces one hypothesis false on a private
copy of the discourse, re-runs the rules and settlement there, and reports
what became true.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, replace

from .agents import (Answer, QueryForm, UnsupportedQuery, answer_baseline, coherence_constraints, owning_realm,
                     run_agents)
from .control import BUILTIN_RULES, Agenda, Budget, TaskResult, apply_rules, run_until_budget, submit_task
from .narrative import Discourse, Signal, settle_state, state_hash
from .sexpr import Form, ParseError, read_forms, to_plain

QUERY_KINDS = ("holder-of", "location-of", "goal-of", "wanted", "feel", "liked", "transferred",
               "concord-conflict", "goal-outcome", "why", "counterfactual-remove")
ARITY = {"holder-of": (1, 2), "location-of": (1, 2), "goal-of": (1, 1), "wanted": (2, 2), "feel": (1, 1),
         "liked": (2, 2), "transferred": (1, 1), "concord-conflict": (2, 2), "goal-outcome": (1, 1),
         "why": (1, 1), "counterfactual-remove": (1, 1)}
TITLES = ("mr.", "mrs.", "ms.", "dr.", "mr", "mrs", "ms", "dr")


class QAError(ValueError):
    pass


class UnparseableQuestion(QAError):
    pass


@dataclass(frozen=True)
class Question:
    text: str
    form: QueryForm | None


def _point(s: str | None) -> str:
    if not s:
        return "end"
    s = s.lower()
    if "begin" in s or "start" in s:
        return "begin"
    return "end"


def _verb_goal(words: str) -> str:
    return "-".join(w for w in words.lower().split())


# (pattern, builder, example) tried in order; builders return (kind, args)
TEMPLATES = (
    (r"who had (?P<x>.+?)(?: at the (?P<t>end|beginning|start))?", lambda m: ("holder-of", (m["x"], _point(m["t"]))),
     "Who had the money at the end?"),
    (r"who has (?P<x>.+?)(?: at the (?P<t>end|beginning|start))?", lambda m: ("holder-of", (m["x"], _point(m["t"]))),
     "Who has the money?"),
    (r"did (?P<x>.+?) want to (?P<g>.+?)", lambda m: ("wanted", (m["x"], _verb_goal(m["g"]))),
     "Did Mr. Hug want to be crushed?"),
    (r"where was (?P<x>.+?)(?: at the (?P<t>end|beginning|start))?", lambda m: ("location-of", (m["x"], _point(m["t"]))),
     "Where was Mr. Hug at the end?"),
    (r"where is (?P<x>.+?)", lambda m: ("location-of", (m["x"], "end")), "Where is Mr. Hug?"),
    (r"what did (?P<x>.+?) want", lambda m: ("goal-of", (m["x"],)), "What did the robbers want?"),
    (r"how did (?P<x>.+?) feel", lambda m: ("feel", (m["x"],)), "How did Mr. Hug feel?"),
    (r"did (?P<a>.+?) like (?P<b>.+?)", lambda m: ("liked", (m["a"], m["b"])), "Did Mr. Hug like the robbers?"),
    (r"who gave (?P<x>.+?)(?: to whom)?", lambda m: ("transferred", (m["x"],)), "Who gave the money to whom?"),
    (r"(?:were|was) (?P<a>.+?) and (?P<b>.+?) in conflict", lambda m: ("concord-conflict", (m["a"], m["b"])),
     "Were the robbers and Mr. Hug in conflict?"),
    (r"did (?P<x>.+?) succeed", lambda m: ("goal-outcome", (m["x"],)), "Did Mr. Hug succeed?"),
    (r"why (?:was|were) (?P<a>.+?) (?P<p>angry|fearful|dissatisfied) (?:at|of|with) (?P<b>.+?)",
     lambda m: ("why", ((_STATE_PRED[m["p"]], m["a"], m["b"]),)), "Why were the robbers angry at Mr. Hug?"),
    (r"(?:what would have happened|what) if (?P<x>.+?) had not (?P<v>\w+?)(?:ed)? (?:himself|herself|themselves)\b.*",
     lambda m: ("counterfactual-remove", ((_past_to_pred(m["v"]), m["x"]),)),
     "What would have happened if Mr. Hug had not flattened himself?"),
)
_STATE_PRED = {"angry": "angry", "fearful": "fearful-of", "dissatisfied": "dissatisfied"}


def _past_to_pred(v: str) -> str:
    v = v.lower()
    return v + "s"


def supported_templates() -> list[str]:
    return [ex for _, _, ex in TEMPLATES] + ["(?<kind> <arg>...) with kind one of: " + " ".join(QUERY_KINDS)]


def parse_question(lex, text: str) -> QueryForm:
    """Match a controlled-English template or the structured ``(?kind args...)`` syntax."""
    t = text.strip()
    if t.startswith("(?"):
        return _parse_structured(t)
    body = re.sub(r"\s+", " ", t).rstrip("?.! ").strip()
    for pattern, build, _ in TEMPLATES:
        m = re.fullmatch(pattern, body, flags=re.IGNORECASE)
        if m:
            kind, args = build(m)
            return QueryForm(kind, args)
    raise UnparseableQuestion("no question template matches; supported:\n  " + "\n  ".join(supported_templates()))


def _parse_structured(text: str) -> QueryForm:
    try:
        forms = read_forms("(" + text[2:])
    except ParseError as e:
        raise UnparseableQuestion(f"malformed structured query: {e}") from None
    if len(forms) != 1 or not isinstance(forms[0], Form):
        raise UnparseableQuestion("expected exactly one (?kind args...) form")
    plain = to_plain(forms[0])
    kind, args = str(plain[0]), tuple(_tupled(a) for a in plain[1:])
    if kind not in QUERY_KINDS:
        raise UnparseableQuestion(f"unknown query kind {kind!r}; supported: {' '.join(QUERY_KINDS)}")
    lo, hi = ARITY[kind]
    if not lo <= len(args) <= hi:
        raise UnparseableQuestion(f"{kind} takes {lo}..{hi} arguments, got {len(args)}")
    return QueryForm(kind, args)


def _tupled(x):
    if isinstance(x, (list, tuple)):
        return tuple(_tupled(i) for i in x)
    return str(x)


# --------------------------------------------------------------------------- references

def resolve_entity(d: Discourse, ref: str) -> str:
    """Entity id for a question's noun phrase, id, name, amount or lemma."""
    reg = d.state.registry
    if ref in reg.entities:
        return ref
    words = [w for w in re.split(r"\s+", ref.strip().lower()) if w]
    while words and words[0] in TITLES + ("the", "a", "an", "his", "her", "their"):
        words = words[1:]
    if not words:
        raise QAError(f"unknown entity {ref!r}")
    phrase = " ".join(words)
    ents = sorted((e for e in reg.entities.values() if not e.predicative), key=lambda e: (e.first_sentence, e.id))
    amount = re.fullmatch(r"\$?([\d,]+(?:\.\d+)?)", phrase)
    if amount:
        digits = amount.group(1).replace(",", "")
        for e in ents:
            if e.attrs.get("amount") is not None and e.attrs["amount"].replace(",", "") == digits:
                return e.id
    for e in ents:
        if e.name and all(w in e.name.lower().split() for w in words):
            return e.id
    head = words[-1]
    for cand in (head, head[:-1] if head.endswith("s") else None, head[:-2] if head.endswith("es") else None):
        if not cand:
            continue
        for e in ents:
            if e.lemma.lower() == cand or e.text.lower() == phrase:
                return e.id
    raise QAError(f"unknown entity {ref!r}")


def _same_lemma(d: Discourse, eid: str) -> list[str]:
    reg = d.state.registry
    base = reg.entities[eid]
    return [e.id for e in sorted(reg.entities.values(), key=lambda e: e.id)
            if e.id != eid and e.lemma == base.lemma and not e.predicative]


def _resolve_form(d: Discourse, form: QueryForm) -> QueryForm:
    kind, args = form.kind, list(form.args)
    if kind in ("why", "counterfactual-remove"):
        prop = args[0]
        if not isinstance(prop, tuple) or not prop:
            raise QAError(f"{kind} needs a proposition like (angry R S)")
        out = [prop[0]]
        for a in prop[1:]:
            try:
                out.append(resolve_entity(d, a))
            except QAError:
                out.append(a)
        return QueryForm(kind, (tuple(out),))
    n_entities = {"holder-of": 1, "location-of": 1, "goal-of": 1, "wanted": 1, "feel": 1, "liked": 2,
                  "transferred": 1, "concord-conflict": 2, "goal-outcome": 1}[kind]
    for i in range(n_entities):
        args[i] = resolve_entity(d, args[i])
    if kind in ("holder-of", "location-of") and len(args) == 1:
        args.append("end")
    return QueryForm(kind, tuple(args))


# --------------------------------------------------------------------------- interpretation access

class Interp:
    """Read-only view of the working interpretation used by baseline answerers."""

    def __init__(self, d: Discourse):
        self.d = d
        st = d.state
        self.true_ids = frozenset(st.summary.true)
        self.true_hyps = [st.store.hyps[h] for h in sorted(self.true_ids)]

    def point(self, tp):
        if tp in (None, "end", "begin"):
            return None
        try:
            return int(tp)
        except (TypeError, ValueError):
            raise QAError(f"bad time point {tp!r}") from None

    def display(self, eid) -> str:
        return self.d.state.registry.display(eid) if eid in self.d.state.registry.entities else str(eid)

    def render(self, hid) -> str:
        h = self.d.state.store.hyps[hid]
        return f"{h.prop[0]}({', '.join(self.display(a) for a in h.prop[1:])})"

    def causes(self, hid, limit: int = 8) -> list[int]:
        """Causes of a hypothesis, nearest first, following causal links backwards."""
        out, frontier, seen = [], [hid], {hid}
        links = self.d.state.links
        while frontier and len(out) < limit:
            nxt = []
            for eff in frontier:
                for c in sorted({ln.cause for ln in links if ln.effect == eff}):
                    if c in self.true_ids and c not in seen:
                        seen.add(c)
                        out.append(c)
                        nxt.append(c)
            frontier = nxt
        return out[:limit]

    def explain(self, hid) -> tuple:
        return tuple(self.render(c) for c in self.causes(hid))


# --------------------------------------------------------------------------- answering

def answer_question(d: Discourse, form: QueryForm, budget: Budget | None = None, trace: list | None = None) -> Answer:
    """Answer one parsed question; never modifies ``d``."""
    if form.kind not in QUERY_KINDS:
        raise UnsupportedQuery(f"unknown query kind {form.kind!r}")
    form = _resolve_form(d, form)
    if form.kind == "why":
        return _why(d, form)
    if form.kind == "counterfactual-remove":
        return counterfactual_remove(d, form.args[0], budget, trace)
    interp = Interp(d)
    ans = answer_baseline(owning_realm(form.kind), form, interp)
    if not ans.unknown:
        return ans
    for act in apply_rules(BUILTIN_RULES, None, [Signal("unanswered", d.n_sentences, form.kind)]):
        if act.kind == "lower-level":
            found = _elaborate(d, form, interp, budget or Budget(), trace)
            if found is not None:
                return found
    return ans


def _elaborate(d: Discourse, form: QueryForm, interp: Interp, budget: Budget, trace: list | None) -> Answer | None:
    """One lower-level pass: retry with each argument widened to entities of the same head word."""
    agenda = Agenda(Budget(budget.max_question_tasks, budget.max_depth, budget.max_question_tasks))
    found: list = []
    n_entities = {"liked": 2, "concord-conflict": 2}.get(form.kind, 1)
    variants = []
    for i in range(n_entities):
        for alt in _same_lemma(d, form.args[i]):
            args = list(form.args)
            args[i] = alt
            variants.append(QueryForm(form.kind, tuple(args)))
    for v in variants:
        submit_task(agenda, agenda.new_task("elaborate-hypothesis", (v.kind, *v.args), tag="question"))

    def execute(task):
        if found:
            return TaskResult()
        q = QueryForm(task.args[0], tuple(task.args[1:]))
        ans = answer_baseline(owning_realm(q.kind), q, interp)
        if not ans.unknown:
            found.append(ans)
        return TaskResult(ans, useful=not ans.unknown)

    run_until_budget(agenda, execute)
    if trace is not None:
        trace.extend(agenda.log)
    return found[0] if found else None


def _find_hyp(d: Discourse, prop: tuple, must_be_true: bool) -> int:
    st = d.state
    ids = [hid for hid in st.store.by_prop.get(tuple(prop), [])]
    if not ids:
        raise QAError(f"no hypothesis {prop[0]}({', '.join(prop[1:])})")
    true = [h for h in ids if h in st.summary.true]
    if must_be_true and not true:
        raise QAError(f"hypothesis {prop[0]}({', '.join(prop[1:])}) is not true in the working interpretation")
    return (true or ids)[0]


def _why(d: Discourse, form: QueryForm) -> Answer:
    hid = _find_hyp(d, form.args[0], must_be_true=True)
    interp = Interp(d)
    chain = interp.causes(hid)
    if not chain:
        return Answer((), (hid,), (), "no recorded cause")
    texts = tuple(interp.render(c) for c in chain)
    payload = tuple(d.state.store.hyps[c].prop for c in chain)
    return Answer(payload, (hid, *chain), texts, texts[0])


def counterfactual_remove(d: Discourse, prop, budget: Budget | None = None, trace: list | None = None) -> Answer:
    """Force a true hypothesis false on a copy, re-run rules and settlement, report new truths."""
    if isinstance(prop, int):
        hid = prop
        if hid not in d.state.summary.true:
            raise QAError(f"hypothesis {hid} is not true in the working interpretation")
    else:
        hid = _find_hyp(d, tuple(prop), must_be_true=True)
    budget = budget or Budget()
    agenda = Agenda(Budget(budget.max_question_tasks, budget.max_depth, budget.max_question_tasks))
    out: list = []

    def execute(task):
        clone = replace(d, state=copy.deepcopy(d.state), history=[], signals=[], rereads=[])
        st = clone.state
        view = clone.view()
        result = run_agents(clone.engine, view, clone.n_sentences)
        st.agent_constraints = list(result.constraints) + coherence_constraints(view, clone.engine.table.coherence)
        st.supports = dict(result.supports)
        st.links = list(result.links)
        _, summary = settle_state(st, clone.config.solve, forced={hid: False})
        out.append((clone, summary))
        return TaskResult(summary, useful=summary.feasible)

    submit_task(agenda, agenda.new_task("answer-question", ("counterfactual-remove", hid), tag="question"))
    run_until_budget(agenda, execute)
    if trace is not None:
        trace.extend(agenda.log)
    if not out:
        return Answer(None, (hid,), (), "unknown", unknown=True)
    clone, summary = out[0]
    if not summary.feasible:
        return Answer(None, (hid,), (), "the story becomes inconsistent", unknown=True)
    before = d.state.summary.true
    new = sorted(h for h in summary.true - before if h != hid and not _bookkeeping(clone.state.store.hyps[h]))
    interp = Interp(clone)
    texts = tuple(interp.render(h) for h in new)
    lost = sorted(h for h in before - summary.true if h != hid and not _bookkeeping(d.state.store.hyps[h]))
    gone = tuple("no longer " + Interp(d).render(h) for h in lost)
    return Answer(tuple(clone.state.store.hyps[h].prop for h in new), tuple([hid, *new]), gone,
                  "; ".join(texts) if texts else "nothing else changes")


def _bookkeeping(h) -> bool:
    return h.kind in ("merge", "referent-choice")


def ask(d: Discourse, text: str, lex=None, budget: Budget | None = None, trace: list | None = None) -> Answer:
    return answer_question(d, parse_question(lex, text), budget, trace)


def format_answer(ans: Answer) -> list[str]:
    payload = ans.text if ans.text else ("unknown" if ans.unknown else str(ans.payload))
    lines = [f"answer: {payload}"]
    lines.append("because: " + (" <- ".join(ans.explanation) if ans.explanation else "-"))
    lines.append("support: " + (" ".join(str(s) for s in ans.support) if ans.support else "-"))
    return lines


def discourse_fingerprint(d: Discourse) -> str:
    return state_hash(d)
