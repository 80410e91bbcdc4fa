import pytest
from hypothesis import given, settings, strategies as st

from storyua.kb import (
    Assertion, CycleError, KB, UnknownConcept, assert_fact, dumps_kb, load_kb,
    loads_kb, query, save_kb, specializes,
)
from storyua.sexpr import ParseError


def test_single_ako_line(tmp_path):
    p = tmp_path / "a.kb"
    p.write_text("(ako car motor-vehicle)\n")
    kb = load_kb(p)
    assert len(kb.concepts) == 2
    assert len(kb.assertions) == 1
    assert kb.concepts["car"].implicit


def test_save_load_file(tmp_path):
    kb = loads_kb('(concept car "car" (gloss "a road vehicle"))\n(ako car motor-vehicle)\n(duration-of play long 2 hours)')
    save_kb(kb, tmp_path / "k.kb")
    again = load_kb(tmp_path / "k.kb")
    assert again.concepts == kb.concepts and again.assertions == kb.assertions


def test_empty_file():
    kb = loads_kb("")
    assert len(kb.concepts) == 0


def test_two_cycle_rejected():
    with pytest.raises(CycleError):
        loads_kb("(ako a b)\n(ako b a)\n")


def test_parse_error_has_line_number():
    with pytest.raises(ParseError) as err:
        loads_kb("(ako a b)\n# comment\n(frobnicate a b)\n")
    assert err.value.line == 3


def test_magnitude_only_for_size_and_duration():
    with pytest.raises(ParseError):
        loads_kb("(color-of grass green 3 feet)")
    kb = loads_kb("(size-of chair tall 3 feet)")
    assert query(kb, "size-of", "chair") == [("tall", (3.0, "feet"))]


def test_assert_fact_isa_and_idempotence():
    kb = loads_kb("(concept city \"city\")")
    kb2 = assert_fact(kb, Assertion("isa", "Boston", "city"))
    assert query(kb2, "isa", "Boston") == [("city", None)]
    kb3 = assert_fact(kb2, Assertion("isa", "Boston", "city"))
    assert kb3 is kb2
    assert "Boston" not in kb


def test_assert_fact_causes():
    kb = assert_fact(KB(), Assertion("causes", "cheer-up", "happy"))
    assert [t for t, _ in query(kb, "causes", "cheer-up")] == ["happy"]


def test_assert_fact_rejects_cycle():
    kb = loads_kb("(ako a b)")
    with pytest.raises(CycleError):
        assert_fact(kb, Assertion("ako", "b", "a"))


def test_query_examples():
    kb = loads_kb("""
        (ako car motor-vehicle)
        (part-of car ignition-switch)
        (used-for motor-vehicle drive)
        (color-of grass green)
    """)
    assert query(kb, "part-of", "car") == [("ignition-switch", None)]
    assert query(kb, "used-for", "car") == [("drive", None)]
    assert query(kb, "color-of", "grass") == [("green", None)]
    with pytest.raises(UnknownConcept):
        query(kb, "color-of", "sky")


def test_isa_not_inherited():
    kb = loads_kb("(ako dog animal)\n(isa animal kingdom-member)")
    assert query(kb, "isa", "dog") == []


def test_nearest_magnitude_wins_then_smaller():
    kb = loads_kb("""
        (ako armchair chair)
        (ako chair furniture)
        (size-of furniture tall 6 feet)
        (size-of chair tall 3 feet)
        (ako stool seat)
        (ako stool perch)
        (size-of seat tall 2 feet)
        (size-of perch tall 1.5 feet)
    """)
    assert query(kb, "size-of", "armchair") == [("tall", (3.0, "feet"))]
    assert query(kb, "size-of", "stool") == [("tall", (1.5, "feet"))]


def test_specializes():
    kb = loads_kb("(ako car motor-vehicle)")
    assert specializes(kb, "car", "motor-vehicle")
    assert specializes(kb, "car", "car")
    assert not specializes(kb, "motor-vehicle", "car")


def test_script_roles_checked():
    kb = loads_kb("(script rob (roles robber victim) (event 1 threaten robber victim) (event 2 take robber))")
    assert kb.scripts["rob"].events[0] == (1, "threaten", ("robber", "victim"))
    with pytest.raises(ParseError):
        loads_kb("(script rob (roles robber) (event 1 threaten robber victim))")


@st.composite
def dags(draw, max_n=30):
    n = draw(st.integers(1, max_n))
    names = [f"c{i}" for i in range(n)]
    edges = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=3 * n))
    # orient edges from higher to lower index so the graph is acyclic
    ako = {(names[max(a, b)], names[min(a, b)]) for a, b in edges if a != b}
    props = draw(st.lists(st.tuples(st.integers(0, n - 1), st.sampled_from(["red", "blue", "green"])), max_size=n))
    lines = [f"(concept {c})" for c in names]
    lines += [f"(ako {a} {b})" for a, b in sorted(ako)]
    lines += [f"(color-of {names[i]} {col})" for i, col in props]
    return names, ako, props, "\n".join(lines)


def _closure(names, ako):
    reach = {c: {c} for c in names}
    changed = True
    while changed:
        changed = False
        for a, b in ako:
            for c in names:
                if a in reach[c] and b not in reach[c]:
                    reach[c].add(b)
                    changed = True
    return reach


@given(dags())
@settings(max_examples=60, deadline=None)
def test_specializes_matches_closure(data):
    names, ako, _, text = data
    kb = loads_kb(text)
    reach = _closure(names, ako)
    for a in names:
        for b in names:
            assert specializes(kb, a, b) == (b in reach[a])


@given(dags())
@settings(max_examples=60, deadline=None)
def test_inherited_query_is_union_over_ancestors(data):
    names, ako, props, text = data
    kb = loads_kb(text)
    reach = _closure(names, ako)
    for c in names:
        expected = sorted({col for i, col in props if names[i] in reach[c]})
        assert [t for t, _ in query(kb, "color-of", c)] == expected


@given(dags())
@settings(max_examples=40, deadline=None)
def test_round_trip(data):
    *_, text = data
    kb = loads_kb(text)
    kb2 = loads_kb(dumps_kb(kb))
    assert kb2.concepts == kb.concepts
    assert kb2.assertions == kb.assertions
    assert dumps_kb(kb2) == dumps_kb(kb)
