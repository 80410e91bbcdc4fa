"""Weighted MAX-SAT settlement over hypothesis ids.

Formulas are nested tuples: an ``int`` is a variable, ``True``/``False`` are
constants, and ``("and", ...)``, ``("or", ...)``, ``("xor", ...)``,
``("not", f)`` combine them. ``xor`` means exactly one argument is true.

Hard formulas are feasibility conditions. Soft formulas carry a positive
weight; an interpretation's score is the total weight of satisfied soft
formulas.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

OPS = ("and", "or", "xor", "not")


class SolveError(RuntimeError):
    pass


class ThresholdExceeded(SolveError):
    pass


class InfeasibilityUnknown(SolveError):
    """Local search found no hard-feasible assignment within its budget.

    This says nothing about whether one exists; see ``solve_exact`` for proofs.
    """


class PartialAssignment(ValueError):
    pass


# --------------------------------------------------------------------------- formulas


def variables_of(f) -> set[int]:
    if isinstance(f, bool):
        return set()
    if isinstance(f, int):
        return {f}
    out: set[int] = set()
    for arg in f[1:]:
        out |= variables_of(arg)
    return out


def evaluate_formula(f, a: Mapping[int, bool]) -> bool:
    if isinstance(f, bool):
        return f
    if isinstance(f, int):
        return bool(a[f])
    op, args = f[0], f[1:]
    if op == "and":
        return all(evaluate_formula(x, a) for x in args)
    if op == "or":
        return any(evaluate_formula(x, a) for x in args)
    if op == "xor":
        return sum(evaluate_formula(x, a) for x in args) == 1
    if op == "not":
        return not evaluate_formula(args[0], a)
    raise ValueError(f"unknown operator {op!r}")


def substitute(f, values: Mapping[int, bool]):
    """Replace variables that have fixed values, folding constants."""
    if isinstance(f, bool):
        return f
    if isinstance(f, int):
        return values.get(f, f)
    op = f[0]
    args = [substitute(x, values) for x in f[1:]]
    if op == "not":
        x = args[0]
        return (not x) if isinstance(x, bool) else ("not", x)
    if op == "and":
        if any(x is False for x in args):
            return False
        rest = [x for x in args if x is not True]
        if not rest:
            return True
        return rest[0] if len(rest) == 1 else ("and", *rest)
    if op == "or":
        if any(x is True for x in args):
            return True
        rest = [x for x in args if x is not False]
        if not rest:
            return False
        return rest[0] if len(rest) == 1 else ("or", *rest)
    if op == "xor":
        n_true = sum(1 for x in args if x is True)
        rest = [x for x in args if not isinstance(x, bool)]
        if n_true > 1:
            return False
        if n_true == 1:
            if not rest:
                return True
            return ("not", ("or", *rest)) if len(rest) > 1 else ("not", rest[0])
        if not rest:
            return False
        return ("xor", *rest)
    raise ValueError(f"unknown operator {op!r}")


def format_formula(f) -> str:
    if f is True:
        return "true"
    if f is False:
        return "false"
    if isinstance(f, int):
        return str(f)
    return f"{f[0]}({','.join(format_formula(x) for x in f[1:])})"


_FTOK = re.compile(r"\s*(?:(\d+)|([a-z]+)|(\()|(\))|(,))")


def parse_formula(text: str):
    pos = 0
    toks = []
    text = text.strip()
    while pos < len(text):
        m = _FTOK.match(text, pos)
        if m is None or m.end() == pos:
            raise ValueError(f"bad formula near {text[pos:]!r}")
        pos = m.end()
        toks.append(m.group(0).strip())
    toks = [t for t in toks if t]
    i = 0

    def parse():
        nonlocal i
        if i >= len(toks):
            raise ValueError("unexpected end of formula")
        t = toks[i]
        i += 1
        if t.isdigit():
            return int(t)
        if t in ("true", "false"):
            return t == "true"
        if t not in OPS:
            raise ValueError(f"unknown operator {t!r}")
        if i >= len(toks) or toks[i] != "(":
            raise ValueError(f"expected '(' after {t}")
        i += 1
        args = []
        while True:
            if i < len(toks) and toks[i] == ")":
                i += 1
                break
            args.append(parse())
            if i < len(toks) and toks[i] == ",":
                i += 1
            elif i < len(toks) and toks[i] == ")":
                i += 1
                break
            else:
                raise ValueError("expected ',' or ')'")
        if t == "not" and len(args) != 1:
            raise ValueError("not takes one argument")
        return (t, *args)

    out = parse()
    if i != len(toks):
        raise ValueError(f"trailing input in formula {text!r}")
    return out


# --------------------------------------------------------------------------- systems


@dataclass
class ConstraintSystem:
    variables: tuple[int, ...] = ()
    hard: list = field(default_factory=list)
    soft: list = field(default_factory=list)  # (weight, formula)
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.variables = tuple(sorted(set(self.variables)))
        declared = set(self.variables)
        for f in self.hard:
            undeclared = variables_of(f) - declared
            if undeclared:
                raise ValueError(f"hard formula uses undeclared variables {sorted(undeclared)}")
        for w, f in self.soft:
            if not w > 0:
                raise ValueError(f"soft weight must be positive, got {w}")
            undeclared = variables_of(f) - declared
            if undeclared:
                raise ValueError(f"soft formula uses undeclared variables {sorted(undeclared)}")

    @property
    def total_soft(self) -> float:
        return float(sum(w for w, _ in self.soft))

    def restrict(self, fixed: Mapping[int, bool]) -> "ConstraintSystem":
        """Force some variables to constants, keeping them declared."""
        hard = list(self.hard) + [v if val else ("not", v) for v, val in sorted(fixed.items())]
        return ConstraintSystem(self.variables, hard, list(self.soft), dict(self.labels))


@dataclass(frozen=True)
class Interpretation:
    variables: tuple[int, ...]
    true: frozenset[int]
    score: float
    feasible: bool

    @property
    def assignment(self) -> dict[int, bool]:
        return {v: v in self.true for v in self.variables}

    def key(self) -> tuple[int, ...]:
        return tuple(sorted(self.true))


class Optima(list):
    """Optimal interpretations, plus a diagnosis when there are none."""

    def __init__(self, items=(), score: float | None = None, diagnosis: str | None = None):
        super().__init__(items)
        self.score = score
        self.diagnosis = diagnosis


@dataclass
class SolveConfig:
    seed: int = 0
    max_restarts: int = 32
    max_flips: int | None = None  # default 200 * variable count
    noise: float = 0.1
    exact_threshold: int = 24
    stall_flips: int | None = None  # restart ends after this many non-improving flips; default n + 20

    def __post_init__(self):
        if self.max_restarts < 1 or self.exact_threshold < 1:
            raise ValueError("solver bounds must be positive")
        if self.max_flips is not None and self.max_flips < 1:
            raise ValueError("max_flips must be positive")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must lie in [0, 1]")

    def flips_for(self, n: int) -> int:
        return self.max_flips if self.max_flips is not None else 200 * max(n, 1)

    def stall_for(self, n: int) -> int:
        return self.stall_flips if self.stall_flips is not None else n + 20


def evaluate(system: ConstraintSystem, assignment: Mapping[int, bool]):
    """Return ``(feasible, score, violated_hard_indices)``."""
    missing = [v for v in system.variables if v not in assignment]
    if missing:
        raise PartialAssignment(f"assignment misses variables {missing}")
    violated = [i for i, f in enumerate(system.hard) if not evaluate_formula(f, assignment)]
    score = float(sum(w for w, f in system.soft if evaluate_formula(f, assignment)))
    return (not violated, score, violated)


def _interp(system, true_set) -> Interpretation:
    a = {v: v in true_set for v in system.variables}
    feasible, score, _ = evaluate(system, a)
    return Interpretation(system.variables, frozenset(true_set), score, feasible)


# --------------------------------------------------------------------------- exact


def _pure_groups(system: ConstraintSystem):
    """Split hard formulas into disjoint plain-variable xor groups and the rest."""
    used: set[int] = set()
    groups: list[tuple[int, ...]] = []
    rest = []
    for f in system.hard:
        if (
            isinstance(f, tuple) and f[0] == "xor" and len(f) > 1
            and all(isinstance(x, int) and not isinstance(x, bool) for x in f[1:])
            and len(set(f[1:])) == len(f) - 1
            and not (set(f[1:]) & used)
        ):
            groups.append(tuple(f[1:]))
            used |= set(f[1:])
        else:
            rest.append(f)
    free = [v for v in system.variables if v not in used]
    return groups, free, rest


def _vec(f, M, col):
    if isinstance(f, bool):
        return np.full(M.shape[0], f)
    if isinstance(f, int):
        return M[:, col[f]]
    op, args = f[0], f[1:]
    if op == "not":
        return ~_vec(args[0], M, col)
    vals = [_vec(x, M, col) for x in args]
    if op == "and":
        out = np.ones(M.shape[0], dtype=bool)
        for v in vals:
            out &= v
        return out
    if op == "or":
        out = np.zeros(M.shape[0], dtype=bool)
        for v in vals:
            out |= v
        return out
    if op == "xor":
        count = np.zeros(M.shape[0], dtype=np.int16)
        for v in vals:
            count += v
        return count == 1
    raise ValueError(f"unknown operator {op!r}")


def feasible_space_size(system: ConstraintSystem) -> int:
    groups, free, _ = _pure_groups(system)
    size = 1
    for g in groups:
        size *= len(g)
    return size << len(free)


def iter_feasible_candidates(system: ConstraintSystem, chunk: int = 1 << 16):
    """Yield boolean matrices covering every assignment allowed by the pure xor groups."""
    groups, free, _ = _pure_groups(system)
    col = {v: i for i, v in enumerate(system.variables)}
    total = feasible_space_size(system)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        M = np.zeros((idx.size, len(system.variables)), dtype=bool)
        rem = idx.copy()
        rows = np.arange(idx.size)
        for g in groups:
            choice = rem % len(g)
            rem //= len(g)
            cols = np.array([col[v] for v in g])[choice]
            M[rows, cols] = True
        for v in free:
            M[:, col[v]] = (rem & 1).astype(bool)
            rem >>= 1
        yield M


def solve_exact(system: ConstraintSystem, config: SolveConfig | None = None) -> Optima:
    """Every feasible assignment of maximum score, sorted by true-id set."""
    config = config or SolveConfig()
    n = len(system.variables)
    if n > config.exact_threshold:
        raise ThresholdExceeded(f"{n} variables exceed exact threshold {config.exact_threshold}")
    _, _, rest = _pure_groups(system)
    col = {v: i for i, v in enumerate(system.variables)}
    weights = np.array([w for w, _ in system.soft], dtype=float)
    best = -np.inf
    winners: list[np.ndarray] = []
    seen_feasible = False
    for M in iter_feasible_candidates(system):
        ok = np.ones(M.shape[0], dtype=bool)
        for f in rest:
            ok &= _vec(f, M, col)
        if not ok.any():
            continue
        seen_feasible = True
        M = M[ok]
        if len(weights):
            sat = np.stack([_vec(f, M, col) for _, f in system.soft], axis=1)
            scores = sat.astype(float) @ weights
        else:
            scores = np.zeros(M.shape[0])
        top = scores.max()
        if top > best + 1e-9:
            best = top
            winners = [M[np.abs(scores - top) <= 1e-9]]
        elif abs(top - best) <= 1e-9:
            winners.append(M[np.abs(scores - top) <= 1e-9])
    if not seen_feasible:
        return Optima([], None, "no assignment satisfies every hard constraint")
    rows = np.concatenate(winners) if winners else np.zeros((0, n), dtype=bool)
    var_arr = np.array(system.variables, dtype=np.int64)
    keys = sorted(tuple(int(v) for v in var_arr[r]) for r in rows)
    out = [Interpretation(system.variables, frozenset(k), float(best), True) for k in keys]
    return Optima(out, float(best), None)


def brute_force(system: ConstraintSystem) -> Optima:
    """Plain 2^n enumeration with scalar evaluation; an oracle for small systems."""
    vs = system.variables
    best, keys = None, []
    for mask in range(1 << len(vs)):
        a = {v: bool(mask >> i & 1) for i, v in enumerate(vs)}
        feasible, score, _ = evaluate(system, a)
        if not feasible:
            continue
        k = tuple(v for v in vs if a[v])
        if best is None or score > best + 1e-9:
            best, keys = score, [k]
        elif abs(score - best) <= 1e-9:
            keys.append(k)
    if best is None:
        return Optima([], None, "no assignment satisfies every hard constraint")
    return Optima([Interpretation(vs, frozenset(k), best, True) for k in sorted(keys)], best)


# --------------------------------------------------------------------------- local search


def _compile(f, pos):
    if f is True or f is False:
        return lambda a, c=f: c
    if isinstance(f, int):
        i = pos[f]
        return lambda a: a[i]
    op = f[0]
    subs = [_compile(x, pos) for x in f[1:]]
    if op == "not":
        s = subs[0]
        return lambda a: not s(a)
    if op == "and":
        return lambda a: all(s(a) for s in subs)
    if op == "or":
        return lambda a: any(s(a) for s in subs)
    if op == "xor":
        def xor(a):
            n = 0
            for s in subs:
                if s(a):
                    n += 1
                    if n > 1:
                        return False
            return n == 1
        return xor
    raise ValueError(f"unknown operator {op!r}")


class _Search:
    def __init__(self, system: ConstraintSystem):
        self.system = system
        vs = system.variables
        self.pos = {v: i for i, v in enumerate(vs)}
        groups, free, rest = _pure_groups(system)
        self.groups = [[self.pos[v] for v in g] for g in groups]
        self.free = [self.pos[v] for v in free]
        self.hard = [_compile(f, self.pos) for f in rest]
        self.soft = [(w, _compile(f, self.pos)) for w, f in system.soft]
        self.hard_occ = [[] for _ in vs]
        for i, f in enumerate(rest):
            for v in variables_of(f):
                self.hard_occ[self.pos[v]].append(i)
        self.soft_occ = [[] for _ in vs]
        for i, (_, f) in enumerate(system.soft):
            for v in variables_of(f):
                self.soft_occ[self.pos[v]].append(i)
        self._soft_cache = {}
        self._hard_cache = {}

    def score(self, a) -> float:
        return float(sum(w for w, s in self.soft if s(a)))

    def violated(self, a) -> list[int]:
        return [i for i, h in enumerate(self.hard) if not h(a)]

    def moves(self, a):
        """Each move is a tuple of (position, new value) changes."""
        out = []
        for g in self.groups:
            cur = next(p for p in g if a[p])
            for p in g:
                if p != cur:
                    out.append(((cur, False), (p, True)))
        for p in self.free:
            out.append(((p, not a[p]),))
        return out

    def affected(self, move, hard: bool = False):
        cache = self._hard_cache if hard else self._soft_cache
        key = tuple(p for p, _ in move)
        idx = cache.get(key)
        if idx is None:
            occ = self.hard_occ if hard else self.soft_occ
            idx = sorted({i for p in key for i in occ[p]})
            cache[key] = idx
        return idx



def _apply(a, move):
    for p, val in move:
        a[p] = val


def _undo(a, move):
    for p, val in move:
        a[p] = not val


def _restart(search: _Search, rng: random.Random, flips: int, stall: int, noise: float, bound: float):
    n = len(search.system.variables)
    a = [rng.random() < 0.5 for _ in range(n)]
    for g in search.groups:  # greedy repair: exactly one member per xor group
        pick = rng.choice(g)
        for p in g:
            a[p] = p == pick
    hard = search.hard

    def violation_delta(move):
        idx = search.affected(move, hard=True)
        before = sum(1 for i in idx if not hard[i](a))
        _apply(a, move)
        after = sum(1 for i in idx if not hard[i](a))
        _undo(a, move)
        return after - before

    # reach hard feasibility for the remaining formulas
    steps = 0
    while hard and search.violated(a):
        if steps >= flips:
            return None
        steps += 1
        moves = search.moves(a)
        if not moves:
            return None
        if rng.random() < noise:
            move = rng.choice(moves)
        else:
            deltas = [violation_delta(m) for m in moves]
            lo = min(deltas)
            move = rng.choice([m for m, d in zip(moves, deltas) if d == lo])
        _apply(a, move)

    soft = search.soft
    sat = [s(a) for _, s in soft]

    def delta(move):
        idx = search.affected(move)
        _apply(a, move)
        d = 0.0
        for i in idx:
            now = soft[i][1](a)
            if now != sat[i]:
                d += soft[i][0] if now else -soft[i][0]
        _undo(a, move)
        return d

    def feasible_after(move):
        idx = search.affected(move, hard=True)
        if not idx:
            return True
        _apply(a, move)
        ok = all(hard[i](a) for i in idx)
        _undo(a, move)
        return ok

    score = float(sum(w for (w, _), on in zip(soft, sat) if on))
    best_a, best = list(a), score
    since = 0
    while steps < flips and since < stall and best < bound - 1e-9:
        steps += 1
        moves = search.moves(a)
        if hard:
            moves = [m for m in moves if feasible_after(m)]
        if not moves:
            break
        if rng.random() < noise:
            move = rng.choice(moves)
            d = delta(move)
        else:
            deltas = [delta(m) for m in moves]
            d = max(deltas)
            move = rng.choice([m for m, dd in zip(moves, deltas) if dd >= d - 1e-9])
        _apply(a, move)
        for i in search.affected(move):
            sat[i] = soft[i][1](a)
        score += d
        if score > best + 1e-9:
            best, best_a, since = score, list(a), 0
        else:
            since += 1
    return best_a, search.score(best_a)


def solve_stochastic(system: ConstraintSystem, config: SolveConfig | None = None) -> Interpretation:
    """Seeded restart hill climbing with random-walk noise over hard-feasible moves."""
    config = config or SolveConfig()
    n = len(system.variables)
    search = _Search(system)
    flips, stall = config.flips_for(n), config.stall_for(n)
    bound = system.total_soft
    results = []
    for r in range(config.max_restarts):
        rng = random.Random(config.seed * 1_000_003 + r)
        found = _restart(search, rng, flips, stall, config.noise, bound)
        if found is None:
            continue
        a, score = found
        key = tuple(v for v, val in zip(system.variables, a) if val)
        results.append((-score, key))
        if score >= bound - 1e-9:
            break
    if not results:
        raise InfeasibilityUnknown(
            f"no hard-feasible assignment found in {config.max_restarts} restarts x {flips} flips"
        )
    neg, key = min(results)
    return Interpretation(system.variables, frozenset(key), -neg, True)


# --------------------------------------------------------------------------- components


def components(system: ConstraintSystem) -> list[ConstraintSystem]:
    """Independent subsystems (variables linked by sharing a formula)."""
    parent = {v: v for v in system.variables}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def link(vs):
        vs = sorted(vs)
        for v in vs[1:]:
            ra, rb = find(vs[0]), find(v)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    formulas = list(system.hard) + [f for _, f in system.soft]
    for f in formulas:
        link(variables_of(f))
    buckets: dict[int, list[int]] = {}
    for v in system.variables:
        buckets.setdefault(find(v), []).append(v)
    out = []
    for root in sorted(buckets):
        vs = set(buckets[root])
        hard = [f for f in system.hard if variables_of(f) & vs]
        soft = [(w, f) for w, f in system.soft if variables_of(f) & vs]
        labels = {v: system.labels[v] for v in vs if v in system.labels}
        out.append(ConstraintSystem(tuple(vs), hard, soft, labels))
    return out


@dataclass
class Settlement:
    """Result of settling a (possibly large) system component by component."""

    working: Interpretation | None
    feasible: bool
    score: float
    co_optimal_true: frozenset[int]
    exact: bool
    optima_count: int
    diagnosis: str | None = None
    unknown: bool = False

    def false_in_all_optima(self, variables: Iterable[int]) -> set[int]:
        return {v for v in variables if v not in self.co_optimal_true}


def settle(system: ConstraintSystem, config: SolveConfig | None = None) -> Settlement:
    """Settle each independent component; exact where small enough, else local search."""
    config = config or SolveConfig()
    constant_hard = [f for f in system.hard if isinstance(f, bool)]
    if any(f is False for f in constant_hard):
        return Settlement(None, False, 0.0, frozenset(), True, 0, "a hard constraint is unsatisfiable")
    base = float(sum(w for w, f in system.soft if f is True))
    system = ConstraintSystem(
        system.variables,
        [f for f in system.hard if not isinstance(f, bool)],
        [(w, f) for w, f in system.soft if not isinstance(f, bool)],
        system.labels,
    )
    true: set[int] = set()
    co: set[int] = set()
    score = base
    exact = True
    count = 1
    for comp in components(system):
        if not comp.hard and not comp.soft:
            co.update(comp.variables)
            count *= 2 ** len(comp.variables)
            continue
        if len(comp.variables) <= config.exact_threshold:
            optima = solve_exact(comp, config)
            if not optima:
                return Settlement(None, False, 0.0, frozenset(), True, 0,
                                  f"component {list(comp.variables)}: {optima.diagnosis}")
            true |= optima[0].true
            for o in optima:
                co |= o.true
            score += optima.score
            count *= len(optima)
        else:
            exact = False
            try:
                best = solve_stochastic(comp, config)
            except InfeasibilityUnknown as e:
                return Settlement(None, False, 0.0, frozenset(), False, 0, str(e), unknown=True)
            true |= best.true
            co |= best.true
            score += best.score
    working = Interpretation(system.variables, frozenset(true), score, True)
    return Settlement(working, True, score, frozenset(co), exact, count)


# --------------------------------------------------------------------------- file format


def loads_system(text: str, path: str | None = None) -> ConstraintSystem:
    """Parse the line-oriented constraint-system format used by the ``solve`` command."""
    from .sexpr import ParseError

    variables, labels, hard, soft = [], {}, [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            kw, _, rest = line.partition(" ")
            if kw == "var":
                m = re.fullmatch(r'(\d+)(?:\s+"((?:[^"\\]|\\.)*)")?\s*', rest)
                if not m:
                    raise ValueError("expected: var <id> \"<label>\"")
                v = int(m.group(1))
                variables.append(v)
                if m.group(2) is not None:
                    labels[v] = m.group(2)
            elif kw == "hard":
                hard.append(parse_formula(rest))
            elif kw == "soft":
                w, _, f = rest.strip().partition(" ")
                weight = float(w)
                if not weight > 0:
                    raise ValueError("soft weight must be positive")
                soft.append((int(weight) if weight.is_integer() else weight, parse_formula(f)))
            else:
                raise ValueError(f"unknown directive {kw!r}")
        except ValueError as e:
            raise ParseError(str(e), lineno, path) from None
    try:
        return ConstraintSystem(tuple(variables), hard, soft, labels)
    except ValueError as e:
        raise ParseError(str(e), None, path) from None


def dumps_system(system: ConstraintSystem) -> str:
    lines = []
    for v in system.variables:
        label = system.labels.get(v)
        lines.append(f'var {v} "{label}"' if label is not None else f"var {v}")
    lines += [f"hard {format_formula(f)}" for f in system.hard]
    for w, f in system.soft:
        ws = str(int(w)) if float(w).is_integer() else repr(float(w))
        lines.append(f"soft {ws} {format_formula(f)}")
    return "\n".join(lines) + "\n"


def random_system(rng: random.Random, max_vars: int = 20, max_constraints: int = 40) -> ConstraintSystem:
    """Random system with disjoint xor groups as hard constraints and mixed soft formulas."""
    n = rng.randint(3, max_vars)
    vs = list(range(1, n + 1))
    pool = vs[:]
    rng.shuffle(pool)
    hard = []
    budget = rng.randint(n // 2, max_constraints)
    while len(pool) >= 2 and rng.random() < 0.6 and len(hard) < budget // 3:
        k = min(len(pool), rng.randint(2, 4))
        group, pool = pool[:k], pool[k:]
        hard.append(("xor", *sorted(group)))
    if rng.random() < 0.3 and len(vs) >= 2:
        a, b = rng.sample(vs, 2)
        hard.append(("or", ("not", a), b))

    def lit():
        v = rng.choice(vs)
        return ("not", v) if rng.random() < 0.3 else v

    def formula(depth=0):
        if depth > 1 or rng.random() < 0.3:
            return lit()
        op = rng.choice(["and", "and", "or"])
        return (op, *[formula(depth + 1) for _ in range(rng.randint(2, 3))])

    soft = [(rng.choice([1, 1, 1, 2, 3]), formula()) for _ in range(budget - len(hard))]
    return ConstraintSystem(tuple(vs), hard, soft)
