"""Lexer, parser, control-flow graph and linter for the CAICL bot dialect.

The dialect is line oriented: one statement per line, keywords are
case-insensitive and labels are case-folded, so ``goto start`` binds to
``Start:``.  Parsing never raises; problems are reported as
:class:`Diagnostic` records and, in lenient mode, a small set of recovery
rules keeps imperfect scripts loadable:

* ``if <cond> goto then <id>`` is read as ``if <cond> then goto <id>``
  (``recovered-syntax``).
* ``if <cond> then`` with nothing after ``then`` takes the statement on the
  next non-blank line as its action (``dangling-then``).
* a jump to an undefined label is a warning and runs as a no-op
  (``undefined-label``).
"""

from __future__ import annotations

import enum
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

__all__ = [
    "SourceSpan", "Token", "Op", "EntityKind", "CondKind", "Condition",
    "Instruction", "Program", "Diagnostic", "DIAGNOSTIC_CODES", "Edge", "CFG",
    "HALT", "tokenize", "parse", "build_cfg", "lint", "unreachable_regions",
    "format_program", "format_instruction", "format_diagnostic", "has_errors",
]


# ---------------------------------------------------------------------------
# Tokens

class SourceSpan(NamedTuple):
    line: int
    column_start: int
    column_end: int


class Token(NamedTuple):
    kind: str  # keyword | identifier | integer | comparator | colon | error
    text: str

    @property
    def folded(self) -> str:
        return self.text.casefold()


KEYWORDS = frozenset("""
    name raise lower shield move forward backward turn left right long range
    scan gps launch missile fire gun throw grenade discharge energy generate
    random self destruct goto gosub return if then found enemy flag barrier
    mine fuel bump is damage
""".split())

_TOKEN_RE = re.compile(r"""
    (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<integer>[0-9]+)
  | (?P<comparator><=|>=|<|>|=)
  | (?P<colon>:)
  | (?P<comment>\#.*)
  | (?P<space>[ \t\f\v]+)
  | (?P<error>.)
""", re.VERBOSE)


def tokenize(source: str) -> list[tuple[SourceSpan, Token]]:
    """Split *source* into ``(span, token)`` pairs.

    Columns are 1-based and inclusive.  Comments and whitespace produce no
    tokens; characters outside the alphabet become ``error`` tokens.
    """
    out: list[tuple[SourceSpan, Token]] = []
    for lineno, line in enumerate(source.splitlines(), start=1):
        for m in _TOKEN_RE.finditer(line):
            kind = m.lastgroup
            if kind in ("space", "comment"):
                continue
            text = m.group()
            if kind == "word":
                kind = "keyword" if text.casefold() in KEYWORDS else "identifier"
            out.append((SourceSpan(lineno, m.start() + 1, m.end()), Token(kind, text)))
    return out


# ---------------------------------------------------------------------------
# AST

class Op(enum.Enum):
    NAME = "name"
    RAISE_SHIELD = "raise shield"
    LOWER_SHIELD = "lower shield"
    MOVE_FORWARD = "move forward"
    MOVE_BACKWARD = "move backward"
    TURN_LEFT = "turn left"
    TURN_RIGHT = "turn right"
    LONG_RANGE_SCAN = "long range scan"
    SCAN_FORWARD = "scan forward"
    SCAN_LEFT = "scan left"
    SCAN_RIGHT = "scan right"
    GPS_SCAN = "gps scan"
    LAUNCH_MISSILE = "launch missile"
    FIRE_GUN = "fire gun"
    THROW_GRENADE = "throw grenade"
    DISCHARGE_ENERGY = "discharge energy"
    GENERATE_RANDOM = "generate random"
    SELF_DESTRUCT = "self destruct"
    GOTO = "goto"
    GOSUB = "gosub"
    RETURN = "return"
    IF = "if"

    @property
    def is_jump(self) -> bool:
        return self in (Op.GOTO, Op.GOSUB)


# Fixed multi-word statements, keyed by their folded keyword sequence.
_PHRASES: dict[tuple[str, ...], Op] = {
    tuple(op.value.split()): op
    for op in Op
    if op not in (Op.NAME, Op.GOTO, Op.GOSUB, Op.IF)
}

ACTING_OPS = frozenset({
    Op.MOVE_FORWARD, Op.MOVE_BACKWARD, Op.TURN_LEFT, Op.TURN_RIGHT,
    Op.LONG_RANGE_SCAN, Op.SCAN_FORWARD, Op.SCAN_LEFT, Op.SCAN_RIGHT,
    Op.LAUNCH_MISSILE, Op.FIRE_GUN, Op.THROW_GRENADE, Op.DISCHARGE_ENERGY,
    Op.SELF_DESTRUCT,
})


class EntityKind(str, enum.Enum):
    ENEMY = "enemy"
    FLAG = "flag"
    BARRIER = "barrier"
    MINE = "mine"
    FUEL = "fuel"


class CondKind(enum.Enum):
    SCAN_FOUND = "scan found"
    BUMP_BARRIER = "bump barrier"
    RANDOM_IS = "random is"
    FUEL_CMP = "fuel is"
    DAMAGE_CMP = "damage is"


COMPARATORS = ("<", ">", "=", "<=", ">=")


@dataclass(frozen=True)
class Condition:
    kind: CondKind
    entity: EntityKind | None = None
    comparator: str | None = None
    value: int | None = None

    def __str__(self) -> str:
        if self.kind is CondKind.SCAN_FOUND:
            return f"scan found {self.entity.value}"
        if self.kind is CondKind.BUMP_BARRIER:
            return "bump barrier"
        if self.kind is CondKind.RANDOM_IS:
            return f"random is {self.value}"
        return f"{self.kind.value} {self.comparator} {self.value}"


@dataclass(frozen=True)
class Instruction:
    """One statement.  ``arg`` holds the name or jump label verbatim."""

    op: Op
    arg: str | None = None
    cond: Condition | None = None
    then: Instruction | None = None

    def __post_init__(self):
        if self.op is Op.IF:
            if self.cond is None or self.then is None:
                raise ValueError("if needs a condition and an action")
            if self.then.op is Op.IF:
                raise ValueError("conditionals cannot nest")

    @property
    def action(self) -> Instruction:
        """The instruction that runs when this one fires (itself unless an if)."""
        return self.then if self.op is Op.IF else self

    def __str__(self) -> str:
        return format_instruction(self)


@dataclass(frozen=True)
class Program:
    name: str = "unnamed"
    instructions: tuple[Instruction, ...] = ()
    spans: tuple[SourceSpan, ...] = ()
    labels: dict[str, int] = field(default_factory=dict)
    label_spans: dict[str, SourceSpan] = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.instructions)

    def resolve(self, label: str) -> int | None:
        return self.labels.get(label.casefold())

    def same_structure(self, other: Program) -> bool:
        """Equal instructions and label bindings, ignoring source positions."""
        return (self.name == other.name
                and self.instructions == other.instructions
                and self.labels == other.labels)


DIAGNOSTIC_CODES = frozenset({
    "syntax-error",      # line could not be parsed or recovered; dropped
    "invalid-token",     # character outside the alphabet
    "recovered-syntax",  # `if ... goto then L` transposition repaired
    "dangling-then",     # `if ... then` completed by the following line
    "undefined-label",
    "duplicate-label",
    "duplicate-name",
    "unreachable-code",
    "unused-label",
    "missing-return",
})


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # error | warning | info
    code: str
    span: SourceSpan
    message: str

    def __post_init__(self):
        assert self.code in DIAGNOSTIC_CODES, self.code
        assert self.severity in ("error", "warning", "info"), self.severity


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diagnostics)


def format_diagnostic(d: Diagnostic, filename: str = "<input>") -> str:
    return (f"{filename}:{d.span.line}:{d.span.column_start}: "
            f"{d.severity}[{d.code}] {d.message}")


# ---------------------------------------------------------------------------
# Parser

class _Syntax(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(message)
        self.span = span


class _Line:
    """Cursor over the tokens of a single source line."""

    def __init__(self, toks: list[tuple[SourceSpan, Token]]):
        self.toks = toks
        self.i = 0

    @property
    def span(self) -> SourceSpan:
        first, last = self.toks[0][0], self.toks[-1][0]
        return SourceSpan(first.line, first.column_start, last.column_end)

    def peek(self, offset: int = 0) -> Token | None:
        j = self.i + offset
        return self.toks[j][1] if j < len(self.toks) else None

    def here(self) -> SourceSpan:
        if self.i < len(self.toks):
            return self.toks[self.i][0]
        last = self.toks[-1][0]
        return SourceSpan(last.line, last.column_end, last.column_end)

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    def next(self, what: str) -> Token:
        if self.at_end():
            raise _Syntax(f"expected {what} at end of line", self.here())
        tok = self.toks[self.i][1]
        self.i += 1
        return tok

    def expect_word(self, word: str) -> None:
        span = self.here()
        tok = self.next(f"'{word}'")
        if tok.kind != "keyword" or tok.folded != word:
            raise _Syntax(f"expected '{word}', found '{tok.text}'", span)

    def word(self, what: str) -> str:
        span = self.here()
        tok = self.next(what)
        if tok.kind not in ("keyword", "identifier"):
            raise _Syntax(f"expected {what}, found '{tok.text}'", span)
        return tok.text

    def integer(self) -> int:
        span = self.here()
        tok = self.next("a number")
        if tok.kind != "integer":
            raise _Syntax(f"expected a number, found '{tok.text}'", span)
        return int(tok.text)

    def finish(self) -> None:
        if not self.at_end():
            raise _Syntax(f"unexpected '{self.peek().text}'", self.here())


def _parse_condition(ln: _Line) -> Condition:
    span = ln.here()
    head = ln.word("a condition").casefold()
    if head == "scan":
        ln.expect_word("found")
        span = ln.here()
        what = ln.word("an entity kind").casefold()
        try:
            return Condition(CondKind.SCAN_FOUND, entity=EntityKind(what))
        except ValueError:
            raise _Syntax(f"unknown entity kind '{what}'", span) from None
    if head == "bump":
        ln.expect_word("barrier")
        return Condition(CondKind.BUMP_BARRIER)
    if head == "random":
        ln.expect_word("is")
        return Condition(CondKind.RANDOM_IS, value=ln.integer())
    if head in ("fuel", "damage"):
        ln.expect_word("is")
        cmp = "="
        nxt = ln.peek()
        if nxt is not None and nxt.kind == "comparator":
            cmp = ln.next("a comparator").text
        kind = CondKind.FUEL_CMP if head == "fuel" else CondKind.DAMAGE_CMP
        return Condition(kind, comparator=cmp, value=ln.integer())
    raise _Syntax(f"unknown condition '{head}'", span)


def _parse_simple(ln: _Line) -> Instruction:
    """Parse a non-``if`` statement filling the rest of the line."""
    span = ln.here()
    head = ln.word("a statement").casefold()
    if head == "name":
        ident = ln.word("a name")
        ln.finish()
        return Instruction(Op.NAME, arg=ident)
    if head in ("goto", "gosub"):
        label = ln.word("a label")
        ln.finish()
        return Instruction(Op.GOTO if head == "goto" else Op.GOSUB, arg=label)
    if head == "if":
        raise _Syntax("conditionals cannot nest", span)
    words = [head]
    while not ln.at_end():
        words.append(ln.word("a keyword").casefold())
    op = _PHRASES.get(tuple(words))
    if op is None:
        raise _Syntax(f"unknown statement '{' '.join(words)}'", span)
    return Instruction(op)


class _Parser:
    def __init__(self, source: str, strict: bool):
        self.strict = strict
        self.diags: list[Diagnostic] = []
        self.instructions: list[Instruction] = []
        self.spans: list[SourceSpan] = []
        self.labels: dict[str, int] = {}
        self.label_spans: dict[str, SourceSpan] = {}
        self.name = "unnamed"
        self.name_span: SourceSpan | None = None

        lines: dict[int, list[tuple[SourceSpan, Token]]] = {}
        for span, tok in tokenize(source):
            lines.setdefault(span.line, []).append((span, tok))
        self.lines = [_Line(toks) for _, toks in sorted(lines.items())]

    def diag(self, severity: str, code: str, span: SourceSpan, msg: str) -> None:
        self.diags.append(Diagnostic(severity, code, span, msg))

    def recovered(self, code: str, span: SourceSpan, msg: str) -> bool:
        """Report a recovery; returns False when strict mode forbids it."""
        self.diag("error" if self.strict else "warning", code, span, msg)
        return not self.strict

    def run(self) -> tuple[Program, list[Diagnostic]]:
        k = 0
        while k < len(self.lines):
            k = self.line(k)
        self.check_labels()
        prog = Program(self.name, tuple(self.instructions), tuple(self.spans),
                       dict(self.labels), dict(self.label_spans))
        self.diags.sort(key=lambda d: (d.span.line, d.span.column_start))
        return prog, self.diags

    def line(self, k: int) -> int:
        ln = self.lines[k]
        bad = [(s, t) for s, t in ln.toks if t.kind == "error"]
        if bad:
            for s, t in bad:
                self.diag("error", "invalid-token", s, f"invalid character {t.text!r}")
            return k + 1

        # label definitions, optionally followed by a statement
        while (ln.peek() is not None and ln.peek(1) is not None
               and ln.peek().kind in ("identifier", "keyword")
               and ln.peek(1).kind == "colon"):
            span = ln.here()
            self.define_label(ln.next("label").text, span)
            ln.next("colon")
        if ln.at_end():
            return k + 1

        start = ln.here()
        try:
            if ln.peek().kind == "keyword" and ln.peek().folded == "if":
                return self.conditional(k, ln, start)
            ins = _parse_simple(ln)
        except _Syntax as e:
            self.diag("error", "syntax-error", e.span, str(e))
            return k + 1
        self.emit(ins, SourceSpan(start.line, start.column_start, ln.span.column_end))
        return k + 1

    def conditional(self, k: int, ln: _Line, start: SourceSpan) -> int:
        span = SourceSpan(start.line, start.column_start, ln.span.column_end)
        ln.next("if")
        cond = _parse_condition(ln)
        nxt = ln.peek()
        if (nxt is not None and nxt.folded == "goto" and ln.peek(1) is not None
                and ln.peek(1).folded == "then"):
            # R1: `if c goto then L`
            ln.next("goto")
            ln.next("then")
            label = ln.word("a label")
            ln.finish()
            if self.recovered("recovered-syntax", span,
                              f"read 'goto then {label}' as 'then goto {label}'"):
                self.emit(Instruction(Op.IF, cond=cond,
                                      then=Instruction(Op.GOTO, arg=label)), span)
            return k + 1
        ln.expect_word("then")
        if not ln.at_end():
            self.emit(Instruction(Op.IF, cond=cond, then=_parse_simple(ln)), span)
            return k + 1

        # R2: `if c then` completed by the next non-blank line
        if k + 1 >= len(self.lines):
            raise _Syntax("'then' has no action", ln.here())
        follow = self.lines[k + 1]
        if any(t.kind in ("error", "colon") for _, t in follow.toks):
            raise _Syntax("'then' has no action", ln.here())
        try:
            action = _parse_simple(follow)
        except _Syntax:
            raise _Syntax("'then' has no action", ln.here()) from None
        if self.recovered("dangling-then", span,
                          f"'then' completed by line {follow.span.line}: "
                          f"'{format_instruction(action)}'"):
            self.emit(Instruction(Op.IF, cond=cond, then=action), span)
            return k + 2
        return k + 1

    def emit(self, ins: Instruction, span: SourceSpan) -> None:
        if ins.op is Op.NAME:
            if self.name_span is not None:
                self.diag("warning", "duplicate-name", span,
                          f"name '{ins.arg}' replaces '{self.name}'")
            self.name, self.name_span = ins.arg, span
        self.instructions.append(ins)
        self.spans.append(span)

    def define_label(self, text: str, span: SourceSpan) -> None:
        key = text.casefold()
        if key in self.labels:
            first = self.label_spans[key]
            self.diag("error", "duplicate-label", span,
                      f"label '{text}' already defined on line {first.line}")
            return
        self.labels[key] = len(self.instructions)
        self.label_spans[key] = span

    def check_labels(self) -> None:
        for ins, span in zip(self.instructions, self.spans):
            act = ins.action
            if act.op.is_jump and act.arg.casefold() not in self.labels:
                self.diag("error" if self.strict else "warning", "undefined-label",
                          span, f"undefined label '{act.arg}'")


def parse(source: str, mode: str = "lenient") -> tuple[Program, list[Diagnostic]]:
    """Parse CAICL *source*; *mode* is ``"lenient"`` or ``"strict"``.

    Always returns a program.  Lines that fail to parse (or, in strict mode,
    lines that would need a recovery rule) are dropped and reported with
    error severity.
    """
    if mode not in ("lenient", "strict"):
        raise ValueError(f"unknown parse mode {mode!r}")
    return _Parser(source, strict=(mode == "strict")).run()


# ---------------------------------------------------------------------------
# Pretty printing

def format_instruction(ins: Instruction) -> str:
    if ins.op is Op.IF:
        return f"if {ins.cond} then {format_instruction(ins.then)}"
    if ins.arg is not None:
        return f"{ins.op.value} {ins.arg}"
    return ins.op.value


def format_program(program: Program) -> str:
    """Render *program* as source that parses back to the same structure."""
    by_index: dict[int, list[str]] = {}
    for key, idx in sorted(program.labels.items()):
        by_index.setdefault(idx, []).append(key)
    out = []
    for i in range(len(program.instructions) + 1):
        out.extend(f"{key}:" for key in by_index.get(i, ()))
        if i < len(program.instructions):
            out.append(format_instruction(program.instructions[i]))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Control flow

HALT = -1  # pseudo node: falling off the program end


class Edge(NamedTuple):
    src: int
    dst: int  # instruction index or HALT
    kind: str  # fallthrough | jump | call | return | conditional | halt


@dataclass
class CFG:
    """Instruction-level control-flow graph.

    ``Return`` has no outgoing edges: each ``Gosub`` carries a
    ``return`` edge straight to its continuation instead, which keeps
    reachability context-insensitive but sound.
    """

    nodes: list[int]
    edges: list[Edge]

    def successors(self, node: int) -> list[int]:
        return [e.dst for e in self._out.get(node, ())]

    def out_edges(self, node: int) -> list[Edge]:
        return list(self._out.get(node, ()))

    def __post_init__(self):
        self._out: dict[int, list[Edge]] = {}
        for e in self.edges:
            self._out.setdefault(e.src, []).append(e)

    def reachable(self, start: int = 0) -> set[int]:
        if not self.nodes:
            return set()
        seen = {start}
        todo = deque([start])
        while todo:
            for nxt in self.successors(todo.popleft()):
                if nxt != HALT and nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        return seen


def _target(program: Program, i: int, label: str) -> int:
    idx = program.resolve(label)
    if idx is None:
        return i + 1
    return idx


def _node(program: Program, i: int) -> int:
    return HALT if i >= len(program.instructions) else i


def _action_edges(program: Program, i: int, act: Instruction, kind: str) -> list[Edge]:
    n = lambda j: _node(program, j)
    if act.op is Op.GOTO:
        if program.resolve(act.arg) is None:
            return [Edge(i, n(i + 1), "fallthrough")]
        return [Edge(i, n(_target(program, i, act.arg)), kind)]
    if act.op is Op.GOSUB:
        if program.resolve(act.arg) is None:
            return [Edge(i, n(i + 1), "fallthrough")]
        return [Edge(i, n(_target(program, i, act.arg)), "call"),
                Edge(i, n(i + 1), "return")]
    if act.op is Op.RETURN:
        return []
    return [Edge(i, n(i + 1), "fallthrough" if kind == "jump" else kind)]


def build_cfg(program: Program) -> CFG:
    edges: list[Edge] = []
    for i, ins in enumerate(program.instructions):
        if ins.op is Op.IF:
            taken = _action_edges(program, i, ins.then, "conditional")
            edges.extend(taken)
            if not any(e.kind == "return" for e in taken):
                edges.append(Edge(i, _node(program, i + 1), "fallthrough"))
        else:
            edges.extend(_action_edges(program, i, ins, "jump"))
    edges = [e._replace(kind="halt") if e.dst == HALT else e for e in edges]
    return CFG(list(range(len(program.instructions))), edges)


def unreachable_regions(program: Program, cfg: CFG | None = None) -> list[range]:
    """Runs of instructions that no path from the entry reaches.

    A run breaks at label definitions and after unconditional transfers,
    so each reported region is one dead block.
    """
    cfg = cfg or build_cfg(program)
    live = cfg.reachable(0)
    starts = set(program.labels.values())
    regions: list[range] = []
    begin = None
    for i, ins in enumerate(program.instructions):
        if begin is not None and i in starts:
            regions.append(range(begin, i))
            begin = None
        if i in live:
            if begin is not None:
                regions.append(range(begin, i))
                begin = None
            continue
        if begin is None:
            begin = i
        if ins.op in (Op.GOTO, Op.RETURN):
            regions.append(range(begin, i + 1))
            begin = None
    if begin is not None:
        regions.append(range(begin, len(program.instructions)))
    return regions


def _span_at(program: Program, i: int) -> SourceSpan:
    if program.spans and i < len(program.spans):
        return program.spans[i]
    return SourceSpan(1, 1, 1)


def _returns(program: Program, cfg: CFG, entry: int) -> tuple[bool, bool]:
    """(reaches a return, can fall off the end) from a subroutine entry."""
    seen = {entry}
    todo = deque([entry])
    halts = returns = False
    while todo:
        i = todo.popleft()
        if i == HALT:
            halts = True
            continue
        if program.instructions[i].action.op is Op.RETURN:
            returns = True
        for e in cfg.out_edges(i):
            # stay inside the subroutine: step over nested calls
            if e.kind == "call":
                continue
            if e.dst not in seen:
                seen.add(e.dst)
                todo.append(e.dst)
    return returns, halts


def lint(program: Program) -> list[Diagnostic]:
    """Static findings over a parsed program, sorted by position."""
    cfg = build_cfg(program)
    out: list[Diagnostic] = []

    for region in unreachable_regions(program, cfg):
        first = _span_at(program, region.start)
        last = _span_at(program, region.stop - 1)
        lines = (f"line {first.line}" if first.line == last.line
                 else f"lines {first.line}-{last.line}")
        out.append(Diagnostic("warning", "unreachable-code", first,
                              f"unreachable code ({lines}, {len(region)} "
                              f"instruction{'s' * (len(region) != 1)})"))

    used: set[str] = set()
    called: dict[str, int] = {}
    for i, ins in enumerate(program.instructions):
        act = ins.action
        if not act.op.is_jump:
            continue
        key = act.arg.casefold()
        if key in program.labels:
            used.add(key)
            if act.op is Op.GOSUB:
                called.setdefault(key, i)
        else:
            out.append(Diagnostic("warning", "undefined-label", _span_at(program, i),
                                  f"undefined label '{act.arg}'"))

    for key, idx in sorted(program.labels.items(), key=lambda kv: kv[1]):
        if key not in used:
            span = program.label_spans.get(key) or _span_at(program, idx)
            out.append(Diagnostic("info", "unused-label", span,
                                  f"label '{key}' is never used"))

    for key, site in called.items():
        entry = program.labels[key]
        if entry >= len(program.instructions):
            returns, halts = False, True
        else:
            returns, halts = _returns(program, cfg, entry)
        if halts or not returns:
            why = "can fall off the program end" if halts else "never reaches 'return'"
            out.append(Diagnostic("warning", "missing-return", _span_at(program, site),
                                  f"subroutine '{key}' {why}"))

    out.sort(key=lambda d: (d.span.line, d.span.column_start, d.code))
    return out


def iter_actions(program: Program) -> Iterator[tuple[int, Instruction]]:
    for i, ins in enumerate(program.instructions):
        yield i, ins.action
