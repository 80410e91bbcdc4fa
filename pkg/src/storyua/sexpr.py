"""Minimal s-expression reader shared by the KB, lexicon and rule-table loaders."""

from __future__ import annotations

import re
from dataclasses import dataclass


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class Str(str):
    """A double-quoted string atom (distinguished from a bare symbol)."""


@dataclass
class Form:
    items: list
    line: int

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

    @property
    def head(self):
        return self.items[0] if self.items else None


_TOKEN = re.compile(r'\s+|;[^\n]*|#[^\n]*|\(|\)|"(?:[^"\\]|\\.)*"|[^\s()"]+')


def read_forms(text: str, path: str | None = None) -> list[Form]:
    """Read every top-level form. `#` and `;` start comments."""
    forms: list[Form] = []
    stack: list[Form] = []
    line = 1
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, path)
        tok = m.group(0)
        pos = m.end()
        if tok[0].isspace() or tok[0] in ";#":
            line += tok.count("\n")
            continue
        if tok == "(":
            stack.append(Form([], line))
        elif tok == ")":
            if not stack:
                raise ParseError("unbalanced ')'", line, path)
            done = stack.pop()
            if stack:
                stack[-1].items.append(done)
            else:
                forms.append(done)
        else:
            if tok.startswith('"'):
                atom = Str(re.sub(r"\\(.)", r"\1", tok[1:-1]))
            else:
                atom = tok
            if not stack:
                raise ParseError(f"atom {tok!r} outside a form", line, path)
            stack[-1].items.append(atom)
    if stack:
        raise ParseError("unterminated form", stack[-1].line, path)
    return forms


def to_plain(x):
    """Strip Form wrappers, giving nested lists of str."""
    if isinstance(x, Form):
        return [to_plain(i) for i in x.items]
    return x


def quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'
