"""Task agenda with supervisory rules.

Worker tasks (elaboration, question answering, merge scans, layout
enumeration) run from a priority agenda. After every task a fixed set of
supervisory rules inspects agenda statistics and discourse signals and may
stop a task, lower its priority, take a higher-level view, remember a useful
result or ask the reader to go back and reread.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Callable

TASK_KINDS = ("elaborate-hypothesis", "answer-question", "merge-scan", "spatial-layout-enumerate", "summarize")
ACTIONS = ("stop-task", "deprioritize", "remember", "raise-level", "lower-level", "reread")
REPETITION_THRESHOLD = 3
RELEVANCE_FRACTION = 0.25
SCORE_DROP_FRACTION = 0.5


class ControlError(ValueError):
    pass


@dataclass(frozen=True)
class Task:
    id: int
    kind: str
    args: tuple = ()
    depth: int = 0
    priority: float = 0.0
    cost: float = 1.0
    tag: str = ""
    parent: int | None = None

    def __post_init__(self):
        if self.depth < 0:
            raise ControlError("task depth must be non-negative")

    @property
    def signature(self) -> tuple:
        return (self.kind, tuple(str(a) for a in self.args))


@dataclass(frozen=True)
class ControllerRule:
    id: str
    trigger: str  # description of the statistic it watches
    action: str

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ControlError(f"unknown controller action {self.action!r}")


BUILTIN_RULES = (
    ControllerRule("repetition", f"signature submitted >= {REPETITION_THRESHOLD} times", "stop-task"),
    ControllerRule("detail", "task depth > max-depth", "raise-level"),
    ControllerRule("relevance", f"off-purpose task after {RELEVANCE_FRACTION:.0%} of budget", "stop-task"),
    ControllerRule("confusion", "settlement infeasible", "reread"),
    ControllerRule("score-drop", f"optimum fell by more than {SCORE_DROP_FRACTION:.0%}", "deprioritize"),
    ControllerRule("good-result", "task produced a useful result", "remember"),
    ControllerRule("unspecific", "baseline question unanswered", "lower-level"),
)


@dataclass(frozen=True)
class Budget:
    max_tasks: int = 50
    max_depth: int = 4
    max_question_tasks: int = 10
    relevance: frozenset = frozenset()

    def __post_init__(self):
        if min(self.max_tasks, self.max_depth, self.max_question_tasks) < 1:
            raise ControlError("budget limits must be positive")


@dataclass(frozen=True)
class Action:
    kind: str
    rule: str
    task: int | None = None
    value: object = None


@dataclass(frozen=True)
class LogEntry:
    task: int
    kind: str
    depth: int
    outcome: str
    rule: str | None = None

    def __str__(self):
        tail = f" [rule={self.rule}]" if self.rule else ""
        return f"task {self.task} {self.kind} depth={self.depth} -> {self.outcome}{tail}"


@dataclass
class TaskResult:
    value: object = None
    spawned: list = field(default_factory=list)  # (kind, args, priority, tag) tuples
    useful: bool = False


@dataclass
class Stats:
    task: Task | None
    repeats: int
    executed: int
    budget: Budget


@dataclass
class Agenda:
    budget: Budget = field(default_factory=Budget)
    queue: list = field(default_factory=list)  # heap of (-priority, seq, Task)
    queued: dict = field(default_factory=dict)  # signature -> task id
    repeats: dict = field(default_factory=dict)  # signature -> submissions
    stopped: set = field(default_factory=set)  # signatures stopped by rule
    tasks: dict = field(default_factory=dict)  # id -> Task
    accepted: int = 0
    executed: int = 0
    hints: dict = field(default_factory=dict)  # signature -> remembered result
    log: list = field(default_factory=list)
    _ids: itertools.count = field(default_factory=lambda: itertools.count(1))
    _seq: itertools.count = field(default_factory=lambda: itertools.count())

    def new_task(self, kind, args=(), depth=0, priority=0.0, tag="", parent=None, cost=1.0) -> Task:
        return Task(next(self._ids), kind, tuple(args), depth, priority, cost, tag, parent)

    def __len__(self):
        return len(self.queue)


def submit_task(agenda: Agenda, task: Task) -> Agenda:
    """Queue by priority; a signature already queued only bumps its repetition counter."""
    sig = task.signature
    agenda.repeats[sig] = agenda.repeats.get(sig, 0) + 1
    if sig in agenda.stopped:
        agenda.log.append(LogEntry(task.id, task.kind, task.depth, "rejected", "repetition"))
        return agenda
    if sig in agenda.queued:
        return agenda
    if agenda.accepted >= agenda.budget.max_tasks:
        agenda.log.append(LogEntry(task.id, task.kind, task.depth, "rejected", "budget"))
        return agenda
    agenda.accepted += 1
    agenda.tasks[task.id] = task
    agenda.queued[sig] = task.id
    heapq.heappush(agenda.queue, (-task.priority, next(agenda._seq), task))
    return agenda


def apply_rules(rules, stats: Stats | None, signals=(), result: TaskResult | None = None) -> list[Action]:
    """Fire the supervisory rules whose triggers hold, in rule order."""
    active = {r.id for r in rules}
    out: list[Action] = []
    task = stats.task if stats else None
    if stats is not None and task is not None:
        b = stats.budget
        if "repetition" in active and stats.repeats >= REPETITION_THRESHOLD:
            out.append(Action("stop-task", "repetition", task.id))
        if "detail" in active and task.depth > b.max_depth:
            out.append(Action("raise-level", "detail", task.id))
            out.append(Action("stop-task", "detail", task.id))
        if ("relevance" in active and b.relevance and task.tag and task.tag not in b.relevance
                and stats.executed > RELEVANCE_FRACTION * b.max_tasks):
            out.append(Action("stop-task", "relevance", task.id))
        if "good-result" in active and result is not None and result.useful:
            out.append(Action("remember", "good-result", task.id, result.value))
    for sig in signals:
        kind = getattr(sig, "kind", None)
        if kind == "confusion" and "confusion" in active:
            out.append(Action("reread", "confusion", None, max(1, sig.sentence - 2)))
        elif kind == "score-drop" and "score-drop" in active:
            out.append(Action("deprioritize", "score-drop", None, sig.sentence))
        elif kind == "unanswered" and "unspecific" in active:
            out.append(Action("lower-level", "unspecific", None, getattr(sig, "detail", None)))
    return out


def _stats(agenda: Agenda, task: Task) -> Stats:
    return Stats(task, agenda.repeats.get(task.signature, 0), agenda.executed, agenda.budget)


def _cancel_descendants(agenda: Agenda, root: int):
    doomed = {root}
    changed = True
    while changed:
        changed = False
        for t in agenda.tasks.values():
            if t.parent in doomed and t.id not in doomed:
                doomed.add(t.id)
                changed = True
    keep = []
    for item in agenda.queue:
        t = item[2]
        if t.id in doomed:
            agenda.queued.pop(t.signature, None)
            agenda.log.append(LogEntry(t.id, t.kind, t.depth, "stopped", "detail"))
        else:
            keep.append(item)
    heapq.heapify(keep)
    agenda.queue = keep


def _root(agenda: Agenda, task: Task) -> Task:
    while task.parent is not None and task.parent in agenda.tasks:
        task = agenda.tasks[task.parent]
    return task


def run_until_budget(agenda: Agenda, execute: Callable[[Task], TaskResult], budget: Budget | None = None,
                     rules=BUILTIN_RULES) -> list[LogEntry]:
    """Run tasks in priority order under the supervisory rules; return the execution log."""
    if budget is not None:
        agenda.budget = budget
    start = len(agenda.log)
    while agenda.queue and agenda.executed < agenda.budget.max_tasks:
        _, _, task = heapq.heappop(agenda.queue)
        agenda.queued.pop(task.signature, None)
        actions = apply_rules(rules, _stats(agenda, task))
        if _handle(agenda, task, actions):
            continue
        result = execute(task) or TaskResult()
        agenda.executed += 1
        agenda.log.append(LogEntry(task.id, task.kind, task.depth, "done"))
        for act in apply_rules(rules, _stats(agenda, task), result=result):
            if act.kind == "remember":
                agenda.hints[task.signature] = act.value
        for kind, args, priority, tag in result.spawned:
            submit_task(agenda, agenda.new_task(kind, args, task.depth + 1, priority, tag, task.id))
    for item in sorted(agenda.queue):
        t = item[2]
        agenda.log.append(LogEntry(t.id, t.kind, t.depth, "stopped", "budget"))
    agenda.queue = []
    agenda.queued.clear()
    return agenda.log[start:]


def _handle(agenda: Agenda, task: Task, actions) -> bool:
    """Apply pre-execution actions; True if the task must not run."""
    stop = None
    for act in actions:
        if act.kind == "raise-level":
            agenda.log.append(LogEntry(task.id, task.kind, task.depth, "raise-level", act.rule))
            root = _root(agenda, task)
            _cancel_descendants(agenda, root.id)
            summary = agenda.new_task("summarize", (root.kind, *root.args), root.depth, task.priority, root.tag)
            agenda.stopped.add(task.signature)
            submit_task(agenda, summary)
        elif act.kind == "stop-task" and stop is None:
            stop = act.rule
    if stop is not None:
        agenda.stopped.add(task.signature)
        agenda.log.append(LogEntry(task.id, task.kind, task.depth, "stopped", stop))
        return True
    return False


# --------------------------------------------------------------------------- reading supervision

@dataclass
class Supervisor:
    """Rule-driven decisions taken while reading a story."""

    rules: tuple = BUILTIN_RULES
    directives: list = field(default_factory=list)  # Action records, in order
    log: list = field(default_factory=list)

    def on_confusion(self, sentence: int) -> int | None:
        from .narrative import Signal

        for act in apply_rules(self.rules, None, [Signal("confusion", sentence)]):
            if act.kind == "reread":
                self.directives.append(act)
                self.log.append(f"sentence {sentence} -> reread from {act.value} [rule={act.rule}]")
                return act.value
        return None

    def observe(self, signal) -> None:
        if signal is None:
            return
        for act in apply_rules(self.rules, None, [signal]):
            self.directives.append(act)
            self.log.append(f"sentence {signal.sentence} -> {act.kind} [rule={act.rule}]")
