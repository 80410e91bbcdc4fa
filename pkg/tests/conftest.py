from pathlib import Path

import pytest

from storyua.agents import load_rules, make_engine
from storyua.kb import load_kbs
from storyua.lexicon import load_lexicons
from storyua.narrative import NarrativeConfig, new_discourse, read_story, split_story

DATA = Path(__file__).resolve().parent.parent / "src" / "storyua" / "data"


def resources(name):
    kb = load_kbs([DATA / "core.kb", DATA / f"{name}.kb"])
    lex = load_lexicons([DATA / "core.lex", DATA / f"{name}.lex"], kb)
    engine = make_engine(kb, load_rules([DATA / f"{name}.rules"]))
    return kb, lex, engine


def fresh(name, **config):
    kb, lex, engine = resources(name)
    return new_discourse(kb, lex, engine, NarrativeConfig(**config))


def read(name, story=None, **config):
    d = fresh(name, **config)
    read_story(d, split_story((DATA / f"{story or name}.story").read_text()))
    return d


@pytest.fixture(scope="session")
def hug_discourse():
    return read("hug")


@pytest.fixture(scope="session")
def hug_lex():
    return resources("hug")[1]


CRITERIA: dict = {}


def pytest_runtest_logreport(report):
    for key, value in report.user_properties:
        if key == "criterion" and (report.when == "call" or report.failed):
            ok = CRITERIA.get(value, True) and report.passed
            CRITERIA[value] = ok


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(CRITERIA, key=lambda n: int(n.split()[0])):
        terminalreporter.write_line(f"criterion {name}: {'PASS' if CRITERIA[name] else 'FAIL'}")
