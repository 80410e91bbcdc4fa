import io

import pytest

from storyua.cli import ConfigError, loads_config, main

from conftest import DATA


def run(argv, stdin=None, monkeypatch=None):
    out = io.StringIO()
    if stdin is not None:
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin))
    code = main(argv, out)
    return code, out.getvalue()


def conf(name):
    return str(DATA / f"{name}.conf")


def test_understand_milk_lists_senses():
    code, out = run(["--config", conf("milk"), "--no-timestamps", "understand", str(DATA / "milk.story")])
    assert code == 0
    assert out.splitlines()[0] == f"# storyua understand config={conf('milk')} seed=0"
    for sense in ("set=place", "milk=glass-of-milk", "table=dining-table"):
        assert sense in out


def test_understand_with_questions():
    code, out = run(["--config", conf("hug"), "--no-timestamps", "understand", str(DATA / "hug.story"),
                     "--questions", str(DATA / "hug.questions")])
    assert code == 0
    assert "question: Who had the money at the end?\nanswer: the robbers" in out
    assert "answer: crushed-possible(John J. Hug)" in out


def test_reports_are_byte_identical():
    argv = ["--config", conf("norman"), "--no-timestamps", "understand", str(DATA / "norman.story")]
    assert run(argv) == run(argv)


def test_timestamp_in_header_by_default():
    _, out = run(["--config", conf("milk"), "understand", str(DATA / "milk.story")])
    assert " time=" in out.splitlines()[0]


def test_empty_story(tmp_path):
    story = tmp_path / "empty.story"
    story.write_text("")
    code, out = run(["--config", conf("milk"), "--no-timestamps", "understand", str(story)])
    assert code == 0 and out.splitlines()[1:] == []


def test_unresolved_confusion_exits_2(tmp_path):
    rules = tmp_path / "clash.rules"
    rules.write_text('(rule physical clash (when (lemma "paradox" ?x)) (hyp p state (odd ?x)) (hard p) (hard (not p)))')
    cfg = tmp_path / "clash.conf"
    cfg.write_text(f"kb = core.kb milk.kb\nlexicon = core.lex milk.lex\nrules = {rules}\n")
    story = tmp_path / "s.story"
    story.write_text("The paradox was here.\n")
    code, out = run(["--config", str(cfg), "--no-timestamps", "understand", str(story)])
    assert code == 2 and "unresolved" in out


def test_missing_files_exit_1(tmp_path):
    assert run(["--config", conf("milk"), "understand", str(tmp_path / "nope.story")])[0] == 1
    assert run(["--config", str(tmp_path / "nope.conf"), "understand", "x"])[0] == 1


def test_bad_encoding_exit_1(tmp_path):
    story = tmp_path / "latin.story"
    story.write_bytes(b"Jim set the caf\xe9 on the table.\n")
    assert run(["--config", conf("milk"), "understand", str(story)])[0] == 1


def test_solve_milk_listing():
    code, out = run(["--no-timestamps", "solve", str(DATA / "milk.cs")])
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "optimum 3"
    assert "solution 1 3 5 11 12 15" in lines


def test_solve_single_xor(tmp_path):
    p = tmp_path / "one.cs"
    p.write_text("var 1\nhard xor(1)\n")
    code, out = run(["--no-timestamps", "solve", str(p)])
    assert code == 0 and out.splitlines()[-1] == "solution 1"


def test_solve_local_search_flags(tmp_path):
    p = tmp_path / "big.cs"
    p.write_text("\n".join(f"var {i}" for i in range(1, 31)) + "\n" +
                 "\n".join(f"soft 1 {i}" for i in range(1, 31)) + "\nhard xor(1,2)\n")
    code, out = run(["--seed", "4", "--no-timestamps", "solve", str(p), "--restarts", "3"])
    assert code == 0 and "optimum 29" in out and "solution 1 3 4" in out


def test_solve_exact_flag_matches_default():
    argv = ["--no-timestamps", "solve", str(DATA / "milk.cs")]
    assert run(argv + ["--exact"]) == run(argv)


def test_solve_malformed_reports_line(tmp_path, capsys):
    p = tmp_path / "bad.cs"
    p.write_text("var 1\nhard xor(1,\n")
    code, _ = run(["solve", str(p)])
    assert code == 1
    assert ":2:" in capsys.readouterr().err


def test_trace_shows_reread_directive():
    code, out = run(["--config", conf("milk"), "--no-timestamps", "trace", str(DATA / "milk3.story")])
    assert code == 0
    assert "sentence 3 -> reread from 1 [rule=confusion]" in out


def test_trace_dumps_tags_trees_and_frames():
    code, out = run(["--config", conf("milk"), "--no-timestamps", "trace", str(DATA / "milk.story")])
    assert code == 0
    assert "  tags: Jim/NNP set/VB the/DT milk/NN on/IN the/DT table/NN" in out
    assert "  entity: 0-3\tname\tJim" in out
    assert "[PP [Prep on] [NP [Det the] [N table]]]]]" in out
    assert "  frame f1.1: [SettingAnObject performedBy=jim1 objectActedOn=milk1 onLocation=table1]" in out


def test_trace_logs_question_tasks():
    code, out = run(["--config", conf("hug"), "--no-timestamps", "trace", str(DATA / "hug.story"),
                     "--questions", str(DATA / "hug.questions")])
    assert code == 0
    assert "task 1 answer-question depth=0 -> done" in out


def test_repl_session(monkeypatch):
    stdin = "Who had the money at the end?\n:hyps possession\nWhat is the meaning of life?\n:reread 99\n:quit\nignored\n"
    code, out = run(["--config", conf("hug"), "repl", str(DATA / "hug.story")], stdin, monkeypatch)
    assert code == 0
    assert "answer: the robbers" in out
    assert "has(robber1, money1)" in out
    assert "error: no question template matches" in out
    assert "commands: :trace" in out
    assert "error: reread index 99" in out


def test_original_text_fragment_smoke():
    code, out = run(["--config", conf("hug-original"), "--no-timestamps", "understand",
                     str(DATA / "hug-original.txt")])
    assert code == 0
    assert out.count("\nsentence ") == 3


def test_config_parsing(tmp_path):
    cfg = loads_config("kb = core.kb\nseed = 7\nbudget = 12\nhorizon = none\n", tmp_path)
    assert cfg.solve.seed == 7 and cfg.budget.max_tasks == 12 and cfg.horizon is None
    assert cfg.kb[0].name == "core.kb" and cfg.kb[0].is_file()
    with pytest.raises(ConfigError):
        loads_config("colour = blue\n", tmp_path)
    with pytest.raises(ConfigError):
        loads_config("seed = many\n", tmp_path)
    with pytest.raises(ConfigError):
        loads_config("just words\n", tmp_path)
