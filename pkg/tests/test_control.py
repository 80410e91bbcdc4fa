import pytest
from hypothesis import given, settings, strategies as st

from storyua.control import (
    BUILTIN_RULES, Agenda, Budget, ControlError, ControllerRule, Stats, Supervisor, Task, TaskResult, apply_rules,
    run_until_budget, submit_task,
)
from storyua.narrative import Signal


def test_first_submission_queued():
    agenda = Agenda()
    submit_task(agenda, agenda.new_task("merge-scan", ("f1",)))
    assert len(agenda) == 1


def test_same_signature_counted_not_requeued():
    agenda = Agenda()
    for _ in range(3):
        submit_task(agenda, agenda.new_task("merge-scan", ("f1",)))
    assert len(agenda) == 1
    assert agenda.repeats[("merge-scan", ("f1",))] == 3


def test_submission_past_budget_rejected():
    agenda = Agenda(Budget(max_tasks=2))
    for i in range(3):
        submit_task(agenda, agenda.new_task("merge-scan", (i,)))
    assert len(agenda) == 2
    assert agenda.log[-1].outcome == "rejected" and agenda.log[-1].rule == "budget"


def test_signature_is_deterministic():
    a = Task(1, "answer-question", ("holder-of", "money1"))
    b = Task(9, "answer-question", ("holder-of", "money1"), depth=2, priority=5)
    assert a.signature == b.signature


def test_negative_depth_and_bad_budget_rejected():
    with pytest.raises(ControlError):
        Task(1, "summarize", depth=-1)
    with pytest.raises(ControlError):
        Budget(max_tasks=0)
    with pytest.raises(ControlError):
        ControllerRule("x", "never", "explode")


def test_independent_tasks_all_done():
    agenda = Agenda(Budget(max_tasks=10))
    for i in range(3):
        submit_task(agenda, agenda.new_task("elaborate-hypothesis", (i,)))
    log = run_until_budget(agenda, lambda t: TaskResult(t.id, useful=True))
    assert [e.outcome for e in log] == ["done"] * 3
    assert len(agenda.hints) == 3


def runaway(agenda):
    """Each spatial-layout task spawns a deeper variant of itself."""
    def execute(task):
        return TaskResult(spawned=[("spatial-layout-enumerate", ("layout", task.depth + 1), 1.0, "")])
    return execute


def test_runaway_layout_stopped_by_detail_rule():
    budget = Budget(max_tasks=50, max_depth=4)
    agenda = Agenda(budget)
    submit_task(agenda, agenda.new_task("spatial-layout-enumerate", ("layout", 0)))
    log = run_until_budget(agenda, runaway(agenda))
    done = [e for e in log if e.outcome == "done"]
    assert len(done) <= budget.max_tasks
    assert max(e.depth for e in done if e.kind == "spatial-layout-enumerate") == budget.max_depth
    outcomes = [(e.outcome, e.rule) for e in log]
    i = outcomes.index(("raise-level", "detail"))
    assert ("stopped", "detail") in outcomes[i:]
    assert any(e.kind == "summarize" and e.outcome == "done" for e in log)


def test_self_resubmission_stopped_by_repetition():
    agenda = Agenda(Budget(max_tasks=50))
    submit_task(agenda, agenda.new_task("elaborate-hypothesis", ("h7",)))

    def execute(task):
        return TaskResult(spawned=[("elaborate-hypothesis", ("h7",), 0.0, "")])

    log = run_until_budget(agenda, execute)
    assert [e.outcome for e in log if e.kind == "elaborate-hypothesis"] == ["done", "done", "stopped"]
    assert log[-1].rule == "repetition"


def test_irrelevant_tasks_stopped_after_quarter_budget():
    budget = Budget(max_tasks=8, relevance=frozenset({"question"}))
    agenda = Agenda(budget)
    for i in range(6):
        submit_task(agenda, agenda.new_task("merge-scan", (i,), tag="scenery"))
    log = run_until_budget(agenda, lambda t: TaskResult())
    assert [e.outcome for e in log].count("done") == 3
    assert all(e.rule == "relevance" for e in log if e.outcome == "stopped")


def test_depth_six_raises_level():
    task = Task(1, "elaborate-hypothesis", depth=6)
    acts = apply_rules(BUILTIN_RULES, Stats(task, 1, 0, Budget(max_depth=4)))
    assert ("raise-level", "detail") in [(a.kind, a.rule) for a in acts]


def test_infeasibility_signal_gives_reread_directive():
    acts = apply_rules(BUILTIN_RULES, None, [Signal("confusion", 5)])
    assert [(a.kind, a.value) for a in acts] == [("reread", 3)]
    assert apply_rules(BUILTIN_RULES, None, [Signal("confusion", 2)])[0].value == 1


def test_no_triggers_no_actions():
    task = Task(1, "merge-scan")
    assert apply_rules(BUILTIN_RULES, Stats(task, 1, 0, Budget())) == []


def test_score_drop_and_unanswered_signals():
    acts = apply_rules(BUILTIN_RULES, None, [Signal("score-drop", 4), Signal("unanswered", 4, "holder-of")])
    assert [a.kind for a in acts] == ["deprioritize", "lower-level"]


def test_supervisor_issues_one_directive_per_confusion():
    sup = Supervisor()
    assert sup.on_confusion(3) == 1
    assert len(sup.directives) == 1 and sup.log == ["sentence 3 -> reread from 1 [rule=confusion]"]


def test_log_line_format():
    agenda = Agenda()
    submit_task(agenda, agenda.new_task("summarize", ()))
    log = run_until_budget(agenda, lambda t: None)
    assert str(log[0]) == "task 1 summarize depth=0 -> done"


spawn_plans = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 2), st.floats(0, 5), st.booleans()),
                       min_size=1, max_size=12)


def run_plan(plan, budget):
    agenda = Agenda(budget)
    for i, (_, _, prio, _) in enumerate(plan):
        submit_task(agenda, agenda.new_task("elaborate-hypothesis", (i,), priority=prio,
                                            tag="question" if i % 2 else "scenery"))

    def execute(task):
        if task.kind == "summarize":
            return TaskResult(task.args)
        n_children, same, _, useful = plan[task.args[0] % len(plan)]
        kids = []
        for j in range(n_children):
            arg = task.args[0] if same else task.args[0] * 7 + j + 1
            kids.append(("spatial-layout-enumerate" if j % 2 else "elaborate-hypothesis", (arg,), 1.0, "question"))
        return TaskResult(task.id, kids, useful)

    return run_until_budget(agenda, execute), agenda


@settings(max_examples=60, deadline=None)
@given(spawn_plans, st.integers(1, 20), st.integers(1, 5))
def test_budget_depth_and_rule_citation_invariants(plan, max_tasks, max_depth):
    budget = Budget(max_tasks=max_tasks, max_depth=max_depth, relevance=frozenset({"question"}))
    log, agenda = run_plan(plan, budget)
    done = [e for e in log if e.outcome == "done"]
    assert len(done) <= max_tasks
    assert all(e.depth <= max_depth for e in done)
    assert all(e.rule for e in log if e.outcome in ("stopped", "rejected", "raise-level"))
    again, _ = run_plan(plan, budget)
    assert [str(e) for e in again] == [str(e) for e in log]
