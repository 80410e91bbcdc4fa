"""Command-line entry point: understand a story, ask questions, solve systems, trace control."""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from .agents import AgentError, UnsupportedQuery, load_rules, make_engine
from .control import Budget, ControlError, Supervisor
from .kb import KBError, load_kbs
from .lexicon import LexiconError, load_lexicons
from .parsing import chunk_parse
from .textpipe import dump_entities, format_tags, recognize_entities, tag_nbest
from .narrative import (NarrativeConfig, NarrativeError, new_discourse, read_story, reread, sentence_report,
                        split_sentences, split_story)
from .qa import QAError, ask, format_answer, supported_templates
from .settle import SolveConfig, SolveError, loads_system, settle, solve_exact
from .sexpr import ParseError

DATA_DIR = Path(__file__).parent / "data"
EXIT_OK, EXIT_INPUT, EXIT_UNRESOLVED = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    kb: list = field(default_factory=lambda: [DATA_DIR / "core.kb"])
    lexicon: list = field(default_factory=lambda: [DATA_DIR / "core.lex"])
    rules: list = field(default_factory=list)
    solve: SolveConfig = field(default_factory=SolveConfig)
    budget: Budget = field(default_factory=Budget)
    horizon: int | None = 2
    k_tags: int = 3
    story_format: str = "lines"  # "lines": one reading unit per line; "text": running text
    trace: int = 1  # 2 also prints supervisor decisions in reports
    source: str = "<default>"

    def check(self):
        for p in [*self.kb, *self.lexicon, *self.rules]:
            if not Path(p).is_file():
                raise ConfigError(f"missing file {p}")
        if self.story_format not in ("lines", "text"):
            raise ConfigError(f"unknown story format {self.story_format!r}")


def _resolve(base: Path, name: str) -> Path:
    p = Path(name)
    if p.is_absolute():
        return p
    for root in (base, DATA_DIR):
        if (root / p).exists():
            return root / p
    return base / p


def loads_config(text: str, base: Path, source: str = "<config>") -> RunConfig:
    """``key = value`` lines; path lists are whitespace separated and resolved
    against the config file's directory, then the shipped data directory."""
    cfg = RunConfig(source=source)
    solve = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        try:
            if key in ("kb", "lexicon", "rules"):
                setattr(cfg, key, [_resolve(base, v) for v in value.split()])
            elif key == "seed":
                solve["seed"] = int(value)
            elif key == "restarts":
                solve["max_restarts"] = int(value)
            elif key == "exact_threshold":
                solve["exact_threshold"] = int(value)
            elif key == "noise":
                solve["noise"] = float(value)
            elif key == "budget":
                n = int(value)
                cfg.budget = replace(cfg.budget, max_tasks=n, max_question_tasks=n)
            elif key == "max_depth":
                cfg.budget = replace(cfg.budget, max_depth=int(value))
            elif key == "horizon":
                cfg.horizon = None if value.lower() == "none" else int(value)
            elif key == "k_tags":
                cfg.k_tags = int(value)
            elif key == "format":
                cfg.story_format = value
            elif key == "trace":
                cfg.trace = int(value)
            else:
                raise ConfigError(f"unknown key {key!r}")
        except (ValueError, ControlError) as e:
            if isinstance(e, ConfigError):
                raise ConfigError(f"{source}:{lineno}: {e}") from None
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {e}") from None
    try:
        cfg.solve = replace(cfg.solve, **solve)
    except ValueError as e:
        raise ConfigError(f"{source}: {e}") from None
    return cfg


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    if not p.is_file() and (DATA_DIR / path).is_file():
        p = DATA_DIR / path
    if not p.is_file():
        raise ConfigError(f"missing config file {path}")
    return loads_config(p.read_text(encoding="utf-8"), p.parent, str(path))


def apply_flags(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        cfg.solve = replace(cfg.solve, seed=args.seed)
    if args.budget is not None:
        cfg.budget = replace(cfg.budget, max_tasks=args.budget, max_question_tasks=args.budget)
    return cfg


def build_discourse(cfg: RunConfig):
    cfg.check()
    kb = load_kbs(cfg.kb)
    lex = load_lexicons(cfg.lexicon, kb)
    engine = make_engine(kb, load_rules(cfg.rules) if cfg.rules else None)
    ncfg = NarrativeConfig(horizon=cfg.horizon, k_tags=cfg.k_tags, solve=cfg.solve)
    return new_discourse(kb, lex, engine, ncfg)


def read_units(cfg: RunConfig, path: str) -> list[str]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"missing story file {path}")
    try:
        text = p.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ConfigError(f"{path}: not UTF-8 text ({e.reason})") from None
    return split_sentences(text) if cfg.story_format == "text" else split_story(text)


def read_questions(paths) -> list[str]:
    out = []
    for path in paths or ():
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"missing question file {path}")
        out += split_story(p.read_text(encoding="utf-8"))
    return out


def header(cmd: str, cfg: RunConfig, args) -> str:
    stamp = "" if args.no_timestamps else time.strftime(" time=%Y-%m-%dT%H:%M:%S", time.gmtime())
    return f"# storyua {cmd} config={cfg.source} seed={cfg.solve.seed}{stamp}"


def understand(d, cfg: RunConfig, units, out, supervisor=None):
    supervisor = supervisor or Supervisor()
    read_story(d, units, supervisor)
    for i in range(1, len(d.history) + 1):
        for line in sentence_report(d, i):
            print(line, file=out)
    for at, frm in d.rereads:
        print(f"reread at sentence {at} from sentence {frm}", file=out)
    if cfg.trace >= 2:
        for line in supervisor.log:
            print(line, file=out)
    if d.unresolved:
        print("unresolved: no consistent interpretation after rereading", file=out)
    return supervisor


def answer_lines(d, question: str, cfg: RunConfig, trace=None) -> list[str]:
    try:
        ans = ask(d, question, d.lex, cfg.budget, trace)
    except (QAError, UnsupportedQuery) as e:
        return [f"error: {e}"]
    return format_answer(ans)


# --------------------------------------------------------------------------- commands

def cmd_understand(cfg, args, out) -> int:
    units = read_units(cfg, args.story)
    questions = read_questions(args.questions)
    d = build_discourse(cfg)
    print(header("understand", cfg, args), file=out)
    understand(d, cfg, units, out)
    if d.unresolved:
        return EXIT_UNRESOLVED
    for q in questions:
        print(f"question: {q}", file=out)
        for line in answer_lines(d, q, cfg):
            print(line, file=out)
    return EXIT_OK


def analysis_lines(d, k: int) -> list[str]:
    """Tags, entities, parse alternatives and frames for sentence k (1-based)."""
    text = d.state.texts[k - 1]
    entities = recognize_entities(text, d.gazetteer, tuple(d.lex.genders))
    tokens = tag_nbest(d.lex, text, d.config.k_tags, d.tag_rules, entities)
    analysis = chunk_parse(tokens, d.lex, d.config.max_alternatives)
    lines = [f"sentence {k}: {text}", f"  tags: {format_tags(tokens)}"]
    lines += [f"  entity: {e}" for e in dump_entities(text, entities)]
    for i, parse in enumerate(analysis.parses, start=1):
        lines.append(f"  parse {i}: " + " ".join(f.render(tokens) for f in parse.fragments))
    for f in d.state.frames:
        if f.sentence == k:
            roles = " ".join(f"{r}={v}" for r, v in f.roles)
            lines.append(f"  frame {f.id}: [{f.frame_type} {roles}]")
    return lines


def cmd_trace(cfg, args, out) -> int:
    units = read_units(cfg, args.story)
    questions = read_questions(args.questions)
    d = build_discourse(cfg)
    print(header("trace", cfg, args), file=out)
    sup = Supervisor()
    read_story(d, units, sup)
    for k in range(1, len(d.state.texts) + 1):
        for line in analysis_lines(d, k):
            print(line, file=out)
    for line in sup.log:
        print(line, file=out)
    for e in d.state.prune_log:
        print(f"sentence {e.sentence} -> retire {' '.join(map(str, e.dropped))} [{e.reason}]", file=out)
    if d.unresolved:
        print("unresolved: no consistent interpretation after rereading", file=out)
        return EXIT_UNRESOLVED
    for q in questions:
        log: list = []
        answer_lines(d, q, cfg, log)
        print(f"question: {q}", file=out)
        for entry in log:
            print(str(entry), file=out)
    return EXIT_OK


REPL_HELP = """commands: :trace  :hyps <realm>  :reread <n>  :quit
questions (controlled English or structured):
  """


def cmd_repl(cfg, args, out, inp=None) -> int:
    inp = inp or sys.stdin
    units = read_units(cfg, args.story)
    d = build_discourse(cfg)
    sup = Supervisor()
    read_story(d, units, sup)
    if d.unresolved:
        print("unresolved: no consistent interpretation after rereading", file=out)
        return EXIT_UNRESOLVED
    last_trace: list = []
    for raw in inp:
        line = raw.strip()
        if not line:
            continue
        if line in (":quit", ":q"):
            break
        if line == ":trace":
            for s in sup.log:
                print(s, file=out)
            for entry in last_trace:
                print(str(entry), file=out)
            continue
        if line.startswith(":hyps"):
            realm = line[5:].strip()
            for h in sorted(d.state.store.hyps.values(), key=lambda h: h.id):
                if h.id in d.state.summary.true and (not realm or h.base_realm == realm or h.realm == realm):
                    print(f"{h.id}: {h.render()}", file=out)
            continue
        if line.startswith(":reread"):
            try:
                reread(d, int(line[7:].strip()))
                print(f"reread; score {d.state.summary.score:g}", file=out)
            except (ValueError, NarrativeError) as e:
                print(f"error: {e}", file=out)
            continue
        if line.startswith(":"):
            print(REPL_HELP + "\n  ".join(supported_templates()), file=out)
            continue
        last_trace = []
        try:
            ans = ask(d, line, d.lex, cfg.budget, last_trace)
            for s in format_answer(ans):
                print(s, file=out)
        except (QAError, UnsupportedQuery) as e:
            print(f"error: {e}", file=out)
            print(REPL_HELP.splitlines()[0], file=out)
    return EXIT_OK


def cmd_solve(cfg, args, out) -> int:
    p = Path(args.system)
    if not p.is_file():
        raise ConfigError(f"missing system file {args.system}")
    system = loads_system(p.read_text(encoding="utf-8"), str(p))
    solve_cfg = cfg.solve
    if args.restarts is not None:
        solve_cfg = replace(solve_cfg, max_restarts=args.restarts)
    print(header("solve", cfg, args), file=out)
    exact = args.exact or len(system.variables) <= solve_cfg.exact_threshold
    if exact:
        if args.exact:
            solve_cfg = replace(solve_cfg, exact_threshold=max(solve_cfg.exact_threshold, len(system.variables)))
        optima = solve_exact(system, solve_cfg)
        if not optima:
            print(f"infeasible: {optima.diagnosis}", file=out)
            return EXIT_UNRESOLVED
        print(f"optimum {optima.score:g}", file=out)
        print(f"optima {len(optima)}", file=out)
        for it in optima:
            print("solution " + " ".join(str(v) for v in sorted(it.true)), file=out)
        return EXIT_OK
    st = settle(system, solve_cfg)
    if not st.feasible:
        print(f"infeasible: {st.diagnosis}", file=out)
        return EXIT_UNRESOLVED
    print(f"optimum {st.score:g}{'' if st.exact else ' (local search)'}", file=out)
    print("solution " + " ".join(str(v) for v in sorted(st.working.true)), file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="storyua", description="Story understanding by settling interacting agents.")
    ap.add_argument("--config", help="key-value config file (paths resolve against its directory, then shipped data)")
    ap.add_argument("--seed", type=int, help="solver seed")
    ap.add_argument("--budget", type=int, help="task budget for control and question answering")
    ap.add_argument("--no-timestamps", action="store_true", help="omit wall-clock time from report headers")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("understand", help="read a story and print per-sentence interpretations")
    p.add_argument("story")
    p.add_argument("--questions", nargs="*", default=[], help="batch question files, one question per line")
    p = sub.add_parser("repl", help="read a story, then answer questions from standard input")
    p.add_argument("story")
    p = sub.add_parser("solve", help="solve a constraint-system file")
    p.add_argument("system")
    p.add_argument("--exact", action="store_true", help="force exhaustive enumeration")
    p.add_argument("--restarts", type=int, help="local search restarts")
    p = sub.add_parser("trace", help="read a story and print the control log")
    p.add_argument("story")
    p.add_argument("--questions", nargs="*", default=[])
    return ap


COMMANDS = {"understand": cmd_understand, "repl": cmd_repl, "solve": cmd_solve, "trace": cmd_trace}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_flags(load_config(args.config), args)
        return COMMANDS[args.command](cfg, args, out)
    except (ConfigError, ParseError, KBError, LexiconError, AgentError, NarrativeError, SolveError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
