import pytest

from storyua.narrative import ingest_sentence, split_story
from storyua.parsing import EntityRegistry, build_frames, chunk_parse, frame_count_oracle, register_mentions
from storyua.textpipe import tag_nbest

from conftest import DATA, fresh, resources


@pytest.fixture(scope="module")
def milk():
    kb, lex, _ = resources("milk")
    return kb, lex


@pytest.fixture(scope="module")
def hug():
    kb, lex, _ = resources("hug")
    return kb, lex


def analyse(kb, lex, text, registry=None, sentence=1):
    analysis = chunk_parse(tag_nbest(lex, text, 3), lex)
    registry = registry or EntityRegistry()
    mentions = register_mentions(registry, analysis, sentence, kb, lex)
    return analysis, mentions, build_frames(kb, lex, analysis, mentions, registry, sentence), registry


def test_attachment_gives_two_trees(milk):
    analysis, *_ = analyse(*milk, "Jim set the milk on the table.")
    trees = [[f.render(analysis.tokens) for f in p.fragments] for p in analysis.parses]
    assert trees == [
        ["[S [NP [Name Jim]] [VP [V set] [NP [Det the] [N milk]] [PP [Prep on] [NP [Det the] [N table]]]]]"],
        ["[S [NP [Name Jim]] [VP [V set] [NP [Det the] [N milk] [PP [Prep on] [NP [Det the] [N table]]]]]]"],
    ]
    assert all(p.full for p in analysis.parses)


def test_single_noun_is_one_np(milk):
    analysis, *_ = analyse(*milk, "milk")
    assert [[f.label for f in p.fragments] for p in analysis.parses] == [["NP"]]


def test_word_salad_degenerates_to_units(milk):
    analysis, *_ = analyse(*milk, "on on the on")
    assert len(analysis.parses) == 1
    assert len(analysis.parses[0].fragments) == len(analysis.tokens)
    assert not analysis.parses[0].full


def test_place_frame_roles(milk):
    _, _, fb, _ = analyse(*milk, "Jim set the milk on the table.")
    place = [f for f in fb.frames if f.sense == "place"]
    assert len(place) == 1
    assert dict(place[0].roles) == {"performedBy": "jim1", "objectActedOn": "milk1", "onLocation": "table1"}
    assert place[0].frame_type == "SettingAnObject"


def test_jell_alternatives_share_group(milk):
    _, _, fb, _ = analyse(*milk, "Jim set the milk on the table.")
    jell = [f for f in fb.frames if f.sense == "jell"]
    assert jell and {f.group for f in fb.frames} == {jell[0].group}


def test_passive_maps_by_phrase_to_agent(hug):
    kb, lex = hug
    _, _, fb, reg = analyse(kb, lex, "The salesman was pushed down the shaft by two robbers.")
    pushes = [f for f in fb.frames if f.lemma == "push" and f.sense == "physically-push"]
    assert pushes
    roles = dict(pushes[0].roles)
    assert reg.entities[roles["performedBy"]].lemma == "robber"
    assert reg.entities[roles["objectActedOn"]].lemma == "salesman"


def test_unmatched_verb_is_marked_unframed(milk):
    _, _, fb, _ = analyse(*milk, "Jim set.")
    assert fb.unframed or all(f.sense == "jell" for f in fb.frames)


@pytest.mark.parametrize("corpus", ["milk", "hug", "norman"])
def test_frame_count_matches_brute_force(corpus):
    kb, lex, _ = resources(corpus)
    registry = EntityRegistry()
    for i, text in enumerate(split_story((DATA / f"{corpus}.story").read_text()), start=1):
        analysis, mentions, fb, registry = analyse(kb, lex, text, registry, i)
        assert frame_count_oracle(lex, analysis, mentions) == len(fb.frames)


@pytest.mark.parametrize("corpus", ["milk", "hug", "norman"])
def test_groups_share_spans_and_candidates_precede_anaphors(corpus):
    d = fresh(corpus)
    for text in split_story((DATA / f"{corpus}.story").read_text()):
        ingest_sentence(d, text)
    spans = {}
    for f in d.state.frames:
        spans.setdefault(f.group, set()).add(f.span)
    assert all(len(s) == 1 for s in spans.values())
    reg = d.state.registry
    for m in reg.mentions.values():
        for c in m.candidates:
            assert reg.entities[c.candidate].first_sentence <= m.sentence
            assert c.salience >= 0


def test_possessive_his_finds_salesman():
    d = fresh("hug")
    ingest_sentence(d, "John J. Hug was a 61-year old furniture salesman.")
    ingest_sentence(d, "He worked in his downtown Brooklyn store.")
    his = [m for m in d.state.registry.mentions.values() if m.surface == "his"]
    assert [c.candidate for c in his[0].candidates] == ["hug1"]


def test_it_candidates_include_box_and_fur():
    d = fresh("norman")
    for text in split_story((DATA / "norman.story").read_text())[:5]:
        ingest_sentence(d, text)
    it = [m for m in d.state.registry.mentions.values() if m.sentence == 5 and m.surface == "it"][0]
    ranked = [c.candidate for c in it.candidates]
    assert "box1" in ranked and "thing1" in ranked
    assert ranked.index("thing1") < ranked.index("box1")


def test_first_sentence_pronoun_has_no_candidates(milk):
    _, mentions, _, _ = analyse(*milk, "He set it.")
    assert all(m.candidates == () for m in mentions)


def test_salience_is_recency_plus_role_bonus():
    d = fresh("hug")
    ingest_sentence(d, "John J. Hug was a 61-year old furniture salesman.")
    ingest_sentence(d, "He worked in his downtown Brooklyn store.")
    he = [m for m in d.state.registry.mentions.values() if m.surface == "He"][0]
    assert he.candidates[0].candidate == "hug1"
    assert he.candidates[0].salience == pytest.approx(1.0 / 2 + 2.0)
