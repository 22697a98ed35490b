"""Tokenizer and operator-precedence reader for the clause syntax.

Only the operators needed by the language subset are known to the reader
(see ``docs/grammar.md``).  Quoted atoms are never treated as operators,
which keeps the printer simple: it quotes every operator atom that is used
as an operand.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .terms import NIL, Struct, Term, Var, mklist


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


# name -> (priority, type)
INFIX_OPS: dict[str, tuple[int, str]] = {
    ":-": (1200, "xfx"),
    ",": (1000, "xfy"),
    "=": (700, "xfx"),
    "\\=": (700, "xfx"),
    "==": (700, "xfx"),
    "\\==": (700, "xfx"),
    "is": (700, "xfx"),
    "=:=": (700, "xfx"),
    "=\\=": (700, "xfx"),
    "<": (700, "xfx"),
    ">": (700, "xfx"),
    "=<": (700, "xfx"),
    ">=": (700, "xfx"),
    "+": (500, "yfx"),
    "-": (500, "yfx"),
    "*": (400, "yfx"),
    "/": (400, "yfx"),
    "//": (400, "yfx"),
    "mod": (400, "yfx"),
    "rem": (400, "yfx"),
    "**": (200, "xfx"),
    "^": (200, "xfy"),
}
PREFIX_OPS: dict[str, tuple[int, str]] = {
    ":-": (1200, "fx"),
    "-": (200, "fy"),
}

SYMBOL_CHARS = "+-*/\\^<>=~:.?@#&$"

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<block>/\*.*?\*/)
  | (?P<float>\d+\.\d+(?:[eE][+-]?\d+)?)
  | (?P<int>\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<qatom>'(?:[^'\\]|\\.|'')*')
  | (?P<nil>\[\])
  | (?P<punct>[()\[\],|!;])
  | (?P<sym>[+\-*/\\^<>=~:.?@\#&$]+)
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass
class Token:
    kind: str  # atom, qatom, var, int, float, punct, end, eof
    value: object
    line: int
    col: int
    layout_before: bool = False


def _unquote(text: str) -> str:
    body = text[1:-1].replace("''", "'")
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), body)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    layout = True
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind in ("ws", "comment", "block"):
            layout = True
        elif kind == "sym" and lexeme == "." and (m.end() >= n or text[m.end()] in " \t\r\n%"):
            tokens.append(Token("end", ".", line, col, layout))
            layout = False
        elif kind == "sym" and lexeme.endswith(".") and len(lexeme) > 1 and (
            m.end() >= n or text[m.end()] in " \t\r\n%"
        ):
            # e.g. "X = a+." is not valid anyway, but "foo :- bar." never hits
            # this; split a trailing end token off a symbol run like "=.."
            tokens.append(Token("atom", lexeme[:-1], line, col, layout))
            tokens.append(Token("end", ".", line, col + len(lexeme) - 1, False))
            layout = False
        else:
            if kind == "int":
                value: object = int(lexeme)
            elif kind == "float":
                value = float(lexeme)
            elif kind == "qatom":
                value = _unquote(lexeme)
            elif kind == "nil":
                value = NIL
                kind = "atom"
            elif kind in ("name", "sym"):
                kind = "atom"
                value = lexeme
            else:
                value = lexeme
            tokens.append(Token(kind, value, line, col, layout))
            layout = False
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rindex("\n") + 1
        pos = m.end()
    col = pos - line_start + 1
    tokens.append(Token("eof", None, line, col, True))
    return tokens


class _Reader:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.i = 0
        self.varmap: dict[str, Var] = {}

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def expect_punct(self, p: str) -> Token:
        t = self.tok
        if t.kind != "punct" or t.value != p:
            if t.kind == "eof":
                raise self.error(f"unexpected end of input, expected {p!r}")
            raise self.error(f"expected {p!r}, found {t.value!r}")
        return self.advance()

    # -- terms -----------------------------------------------------------

    def variable(self, name: str) -> Var:
        if name == "_":
            return Var("_")
        if name not in self.varmap:
            self.varmap[name] = Var(name)
        return self.varmap[name]

    def infix_op(self, tok: Token) -> tuple[int, str] | None:
        if tok.kind == "atom" and tok.value in INFIX_OPS:
            return INFIX_OPS[tok.value]
        if tok.kind == "punct" and tok.value == ",":
            return INFIX_OPS[","]
        return None

    def parse(self, max_prec: int) -> Term:
        left, left_prec = self.parse_primary(max_prec)
        while True:
            tok = self.tok
            op = self.infix_op(tok)
            if op is None:
                break
            prec, typ = op
            if prec > max_prec:
                break
            left_max = prec if typ[0] == "y" else prec - 1
            if left_prec > left_max:
                break
            right_max = prec if typ[2] == "y" else prec - 1
            self.advance()
            right = self.parse(right_max)
            left = Struct(str(tok.value), (left, right))
            left_prec = prec
        return left

    def parse_arglist(self) -> list[Term]:
        self.expect_punct("(")
        args = [self.parse(999)]
        while self.tok.kind == "punct" and self.tok.value == ",":
            self.advance()
            args.append(self.parse(999))
        self.expect_punct(")")
        return args

    def parse_list(self) -> Term:
        self.expect_punct("[")
        items = [self.parse(999)]
        tail: Term = NIL
        while self.tok.kind == "punct" and self.tok.value == ",":
            self.advance()
            items.append(self.parse(999))
        if self.tok.kind == "punct" and self.tok.value == "|":
            self.advance()
            tail = self.parse(999)
        self.expect_punct("]")
        return mklist(items, tail)

    def starts_term(self, tok: Token) -> bool:
        if tok.kind in ("int", "float", "var", "qatom"):
            return True
        if tok.kind == "atom":
            return tok.value not in INFIX_OPS or tok.value in PREFIX_OPS
        return tok.kind == "punct" and tok.value in ("(", "[", "!")

    def parse_primary(self, max_prec: int) -> tuple[Term, int]:
        tok = self.tok
        if tok.kind in ("int", "float"):
            self.advance()
            return tok.value, 0
        if tok.kind == "var":
            self.advance()
            return self.variable(str(tok.value)), 0
        if tok.kind == "punct":
            if tok.value == "(":
                self.advance()
                t = self.parse(1200)
                self.expect_punct(")")
                return t, 0
            if tok.value == "[":
                return self.parse_list(), 0
            if tok.value == "!":
                self.advance()
                return "!", 0
            if tok.value == ";":
                raise self.error("disjunction is not part of the language subset")
            raise self.error(f"unexpected {tok.value!r}")
        if tok.kind in ("atom", "qatom"):
            name = str(tok.value)
            nxt = self.peek()
            if nxt.kind == "punct" and nxt.value == "(" and not nxt.layout_before:
                self.advance()
                return Struct(name, tuple(self.parse_arglist())), 0
            if tok.kind == "atom" and name == "-" and nxt.kind in ("int", "float") and not nxt.layout_before:
                self.advance()
                self.advance()
                return -nxt.value, 0
            if tok.kind == "atom" and name in PREFIX_OPS and self.starts_term(nxt):
                prec, typ = PREFIX_OPS[name]
                if prec > max_prec:
                    prec = 999
                arg_max = prec if typ[1] == "y" else prec - 1
                self.advance()
                arg = self.parse(arg_max)
                return Struct(name, (arg,)), prec
            self.advance()
            prec = 0
            if tok.kind == "atom" and (name in INFIX_OPS or name in PREFIX_OPS):
                prec = max(INFIX_OPS.get(name, (0,))[0], PREFIX_OPS.get(name, (0,))[0])
                prec = min(prec, max_prec)
            return name, prec
        if tok.kind == "end":
            raise self.error("unexpected end of clause")
        raise self.error("unexpected end of input")


@dataclass
class ReadClause:
    term: Term
    line: int
    col: int
    varnames: dict[str, Var]


def read_clauses(text: str) -> list[ReadClause]:
    """Read every period-terminated clause of ``text``.

    Each clause gets its own variable namespace, so no variable object is
    shared between two clauses.
    """
    reader = _Reader(tokenize(text))
    out = []
    while reader.tok.kind != "eof":
        start = reader.tok
        reader.varmap = {}
        term = reader.parse(1200)
        tok = reader.tok
        if tok.kind == "eof":
            raise reader.error("unterminated clause (missing '.')", tok)
        if tok.kind != "end":
            raise reader.error(f"operator expected, found {tok.value!r}", tok)
        reader.advance()
        out.append(ReadClause(term, start.line, start.col, dict(reader.varmap)))
    return out


def read_term(text: str) -> Term:
    """Read a single term; a terminating period is optional."""
    text = text.strip()
    if not text.endswith("."):
        text += " ."
    clauses = read_clauses(text)
    if len(clauses) != 1:
        raise ParseError("expected exactly one term", 1, 1)
    return clauses[0].term
