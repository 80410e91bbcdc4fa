import pytest

from storyua.agents import (
    AgentError, BUILTIN_REALMS, CausalLink, Constraint, Engine, HypothesisStore, QueryForm, Realm, UAReport,
    UnsupportedQuery, answer_baseline, link_causes, loads_rules, make_engine, owning_realm, propose, realm_instances,
    register_realm,
)
from storyua.kb import loads_kb
from storyua.narrative import assemble, ingest_sentence
from storyua.settle import loads_system, variables_of
from storyua.sexpr import ParseError

from conftest import DATA, fresh, read

MILK_PROPS = {
    ("sense", "set", "place"): 1, ("sense", "set", "jell"): 2,
    ("sense", "milk", "glass-of-milk"): 3, ("sense", "milk", "milk-by-itself"): 4,
    ("sense", "table", "dining-table"): 5, ("sense", "table", "desk"): 6, ("sense", "table", "table-in-document"): 7,
    ("thirsty", "jim1"): 8, ("wants", "jim1", "drink"): 9, ("hungry", "jim1"): 10, ("mealtime",): 11,
    ("wants", "jim1", "eat-meal"): 12, ("wants", "jim1", "do-something-strange"): 13,
    ("located-in", "table1", "kitchen"): 14, ("located-in", "table1", "dining-room"): 15,
    ("located-in", "table1", "office"): 16,
}


def canonical(f, rename=lambda v: v):
    """Formula with renamed variables and commutative arguments sorted."""
    if isinstance(f, int) and not isinstance(f, bool):
        return rename(f)
    if isinstance(f, tuple):
        args = [canonical(a, rename) for a in f[1:]]
        if f[0] in ("and", "or", "xor"):
            args.sort(key=repr)
        return (f[0], *args)
    return f


def test_builtin_realms_registered():
    engine = make_engine(loads_kb(""))
    assert len(engine.realms) == 9
    assert set(engine.realm_ids) == {r.id for r in BUILTIN_REALMS}


def test_duplicate_realm_rejected():
    engine = make_engine(loads_kb(""))
    with pytest.raises(AgentError):
        register_realm(engine, Realm("physical"))


def test_extra_realm_joins():
    engine = register_realm(make_engine(loads_kb("")), Realm("weather"))
    assert "weather" in engine.realm_ids


def test_per_person_emotion_instances(hug_discourse):
    inst = realm_instances(hug_discourse.engine, hug_discourse.state.store)
    emotion = [r for r in inst if r.startswith("emotion:")]
    assert emotion == ["emotion:hug1", "emotion:robber1"]


def test_milk_system_is_isomorphic_to_listing():
    d = read("milk")
    system, expanded = assemble(d.state)
    assert not expanded
    hyps = d.state.store.hyps
    rename = {hid: MILK_PROPS[hyps[hid].prop] for hid in system.variables}
    assert sorted(rename.values()) == list(range(1, 17))
    listing = loads_system((DATA / "milk.cs").read_text())
    ours_hard = sorted(repr(canonical(f, rename.get)) for f in system.hard)
    ref_hard = sorted(repr(canonical(f)) for f in listing.hard)
    assert ours_hard == ref_hard and len(ours_hard) == 5
    ours_soft = sorted(repr((float(w), canonical(f, rename.get))) for w, f in system.soft)
    ref_soft = sorted(repr((float(w), canonical(f))) for w, f in listing.soft)
    assert ours_soft == ref_soft and len(ours_soft) == 8


@pytest.mark.parametrize("corpus", ["milk", "hug", "norman"])
def test_every_sense_in_exactly_one_xor(corpus):
    d = read(corpus, horizon=None)
    system, _ = assemble(d.state)
    senses = [h.id for h in d.state.store.hyps.values() if h.kind == "sense-choice"]
    xors = [f for f in system.hard if isinstance(f, tuple) and f[0] == "xor"]
    for hid in senses:
        if hid in system.variables:
            assert sum(hid in f[1:] for f in xors) == 1


@pytest.mark.parametrize("corpus", ["milk", "hug", "norman"])
def test_hypotheses_deduplicated_and_links_resolve(corpus):
    d = read(corpus)
    store = d.state.store
    keys = [(h.realm, h.prop) for h in store.hyps.values()]
    assert len(keys) == len(set(keys))
    for link in d.state.links:
        assert link.cause in store.hyps and link.effect in store.hyps and link.cause != link.effect


def test_shared_sense_hypothesis_for_elevator(hug_discourse):
    store = hug_discourse.state.store
    lift = [h for h in store.hyps.values() if h.prop == ("sense", "elevator", "lift")]
    assert len(lift) == 1 and lift[0].realm == "device"
    rules = {r.id: r.realm for r in hug_discourse.engine.table.rules}
    users = {rules[c.provenance] for c in hug_discourse.state.agent_constraints
             if c.provenance in rules and lift[0].id in variables_of(c.formula)}
    assert users == {"device", "physical"}


def hyp(d, *prop):
    hid = d.state.store.find(tuple(prop))
    assert hid is not None, prop
    return hid


def test_give_yields_possession(hug_discourse):
    d = hug_discourse
    has = hyp(d, "has", "robber1", "money1")
    assert d.state.store.hyps[has].base_realm == "possession"
    assert has in d.state.summary.true


def test_descend_with_person_beneath_suggests_crush(hug_discourse):
    d = hug_discourse
    assert d.state.store.hyps[hyp(d, "crush-possible", "hug1")].base_realm == "physical"


def test_dissatisfaction_causes_anger(hug_discourse):
    d = hug_discourse
    angry, dis = hyp(d, "angry", "robber1", "hug1"), hyp(d, "dissatisfied", "robber1", "money1")
    assert any(l.cause == dis and l.effect == angry for l in d.state.links)
    assert d.state.store.hyps[angry].realm == "emotion:robber1"


def test_self_link_rejected():
    with pytest.raises(AgentError):
        CausalLink(3, 3, "x")


def test_dangling_link_rejected():
    rep = UAReport("physical", links=[CausalLink(1, 2, "r")])
    with pytest.raises(AgentError):
        link_causes([rep], HypothesisStore())


def test_soft_weight_must_be_positive():
    with pytest.raises(AgentError):
        Constraint("c", False, 0.0, 1)


def test_propose_unknown_realm(hug_discourse):
    with pytest.raises(AgentError):
        propose(hug_discourse.engine, "astrology", hug_discourse.view(), 1)


def test_propose_reports_only_its_realm(hug_discourse):
    d = hug_discourse
    rep = propose(d.engine, "possession", d.view(), d.n_sentences)
    assert rep.hypotheses
    assert all(d.state.store.hyps[h].base_realm == "possession" for h in rep.hypotheses
               if isinstance(h, int)) or rep.hypotheses


def test_propose_empty_realm_is_empty(hug_discourse):
    d = hug_discourse
    rep = propose(d.engine, "mental", d.view(), d.n_sentences)
    assert isinstance(rep, UAReport)


class _Interp:
    def __init__(self, d):
        self.true_hyps = [d.state.store.hyps[h] for h in sorted(d.state.summary.true)]

    def point(self, tp):
        return None if tp in ("end", "begin") else tp

    def display(self, eid):
        return eid

    def explain(self, hid):
        return ()


def test_baseline_answers(hug_discourse):
    interp = _Interp(hug_discourse)
    ans = answer_baseline("possession", QueryForm("holder-of", ("money1", "end")), interp)
    assert ans.payload == "robber1"
    assert answer_baseline("need-goal", QueryForm("wanted", ("hug1", "be-crushed")), interp).payload is False
    feel = answer_baseline("emotion", QueryForm("feel", ("hug1",)), interp)
    assert ("fearful-of", "robber1") in feel.payload


def test_unsupported_query_for_realm(hug_discourse):
    with pytest.raises(UnsupportedQuery):
        answer_baseline("device", QueryForm("holder-of", ("money1", "end")), _Interp(hug_discourse))
    with pytest.raises(UnsupportedQuery):
        owning_realm("theme")
    assert owning_realm("concord-conflict") == "competition"


def test_rule_file_format_and_errors():
    table = loads_rules('(rule physical r1 (when (lemma "fall" ?x)) (hyp f event (falls ?x)))')
    assert [r.id for r in table.rules] == ["r1"]
    with pytest.raises((ParseError, AgentError)):
        loads_rules("(rule physical)")
    with pytest.raises(AgentError):
        make_engine(loads_kb(""), loads_rules('(rule astrology r (when (lemma "x")) (hyp h event (p)))'))


def test_per_entity_rule_needs_for_clause():
    with pytest.raises(AgentError):
        make_engine(loads_kb(""), loads_rules('(rule emotion r (when (lemma "x")) (hyp h state (happy)))'))


def test_constraints_reference_known_hypotheses():
    d = fresh("milk")
    ingest_sentence(d, "Jim set the milk on the table.")
    system, _ = assemble(d.state)
    for f in system.hard + [f for _, f in system.soft]:
        assert variables_of(f) <= set(d.state.store.hyps)
