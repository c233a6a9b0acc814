"""Lexer and recursive-descent parser for typed (.ggv) and untyped (.ugv) source."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from . import syntax as s
from . import types as ty
from .types import LIN, UN, Mult


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.msg, self.line, self.col = msg, line, col


_TOKEN = re.compile(r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<str>"[^"\n]*")
  | (?P<sym>-un>|-lin>|\*un\b|\*lin\b|@un\b|@lin\b|End!|End\?|==|[-+(){},.:;=!?&*@])
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_']*)
""", re.X)

KEYWORDS = {
    "lambda_un", "lambda_lin", "lambda", "let", "in", "fork", "new", "send", "receive",
    "select", "case", "of", "close", "wait", "if", "then", "else", "type", "import",
    "untyped", "as",
}


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: str) -> List[Tok]:
    out, pos, line, lstart = [], 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - lstart + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if kind == "id" and text in KEYWORDS:
                kind = "kw"
            out.append(Tok(kind, text, line, pos - lstart + 1))
        nl = text.count("\n")
        if nl:
            line += nl
            lstart = pos + text.rindex("\n") + 1
        pos = m.end()
    out.append(Tok("eof", "", line, pos - lstart + 1))
    return out


@dataclass
class Import:
    path: str
    name: str
    pos: Tuple[int, int]


@dataclass
class Program:
    body: s.Term
    aliases: Dict[str, ty.Type] = field(default_factory=dict)
    imports: List[Import] = field(default_factory=list)


_BASE = {"Unit": ty.Unit, "Int": ty.Int, "Dyn": ty.Dyn}
_SBASE = {"End!": ty.EndOut, "End?": ty.EndIn, "DC": ty.DC}


class Parser:
    def __init__(self, src: str, untyped: bool = False, aliases=None):
        self.toks = tokenize(src)
        self.i = 0
        self.untyped = untyped
        self.aliases: Dict[str, ty.Type] = dict(aliases or {})

    # -- token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("sym", "kw")

    def advance(self) -> Tok:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.advance()

    def ident(self) -> str:
        if self.tok.kind != "id":
            self.error("expected an identifier")
        return self.advance().text

    def error(self, msg: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"{msg}, found {found}", t.line, t.col)

    def pos(self):
        return (self.tok.line, self.tok.col)

    # -- types
    def type_(self) -> ty.Type:
        left = self.prod_type()
        for m in (UN, LIN):
            if self.at(f"-{m}>"):
                self.advance()
                return ty.Fn(m, left, self.type_())
        return left

    def prod_type(self) -> ty.Type:
        left = self.atom_type()
        for m in (UN, LIN):
            if self.at(f"*{m}"):
                self.advance()
                return ty.Prod(m, left, self.prod_type())
        return left

    def session(self) -> ty.SessionType:
        t = self.tok
        x = self.atom_type()
        if not isinstance(x, ty.Sess):
            raise ParseError(f"expected a session type, got {ty.show_type(x)}", t.line, t.col)
        return x.s

    def atom_type(self) -> ty.Type:
        t = self.tok
        if t.kind == "id":
            self.advance()
            if t.text in _BASE:
                return _BASE[t.text]
            if t.text == "DC":
                return ty.Sess(ty.DC)
            if t.text in self.aliases:
                return self.aliases[t.text]
            raise ParseError(f"unknown type {t.text}", t.line, t.col)
        if t.text in ("End!", "End?"):
            self.advance()
            return ty.Sess(_SBASE[t.text])
        if self.at("!") or self.at("?"):
            self.advance()
            carried = self.atom_type()
            self.expect(".")
            rest = self.session()
            cls = ty.Send if t.text == "!" else ty.Recv
            return ty.Sess(cls(carried, rest))
        if self.at("+") or self.at("&"):
            self.advance()
            self.expect("{")
            branches = []
            while True:
                l = self.ident()
                self.expect(":")
                branches.append((l, self.session()))
                if not self.at(","):
                    break
                self.advance()
            self.expect("}")
            try:
                cls = ty.Select if t.text == "+" else ty.Offer
                return ty.Sess(cls(branches))
            except ValueError as exc:
                raise ParseError(str(exc), t.line, t.col) from None
        if self.at("("):
            self.advance()
            x = self.type_()
            self.expect(")")
            return x
        self.error("expected a type")

    # -- expressions
    def expr(self) -> s.Term:
        p = self.pos()
        e = self.low()
        if self.at(";"):
            self.advance()
            rest = self.expr()
            if self.untyped:
                return s.Let("_", e, rest, pos=p)
            return s.App(s.Lam(LIN, "_", ty.Unit, rest, pos=p), e, pos=p)
        return e

    def low(self) -> s.Term:
        p = self.pos()
        if self.tok.text in ("lambda_un", "lambda_lin", "lambda") and self.tok.kind == "kw":
            kw = self.advance().text
            x = self.ident()
            if kw == "lambda":
                if not self.untyped:
                    self.error("typed lambdas are written lambda_un or lambda_lin")
                self.expect(".")
                return s.Lam(UN, x, None, self.expr(), pos=p)
            if self.untyped:
                self.error("untyped code uses plain lambda")
            self.expect(":")
            ann = self.type_()
            self.expect(".")
            return s.Lam(Mult(kw[len("lambda_"):]), x, ann, self.expr(), pos=p)
        if self.at("let"):
            self.advance()
            x = self.ident()
            if self.at(","):
                self.advance()
                y = self.ident()
                if x == y and x != "_":
                    raise ParseError(f"pattern binds {x} twice", *p)
                self.expect("=")
                bound = self.expr()
                self.expect("in")
                return s.LetPair(x, y, bound, self.expr(), pos=p)
            if self.untyped:
                self.expect("=")
                bound = self.expr()
                self.expect("in")
                return s.Let(x, bound, self.expr(), pos=p)
            self.expect(":")
            ann = self.type_()
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            body = self.expr()
            return s.App(s.Lam(LIN, x, ann, body, pos=p), bound, pos=p)
        if self.at("if"):
            self.advance()
            c = self.expr()
            self.expect("then")
            a = self.expr()
            self.expect("else")
            return s.If(c, a, self.low(), pos=p)
        return self.cmp()

    def cmp(self) -> s.Term:
        p = self.pos()
        left = self.additive()
        if self.at("=="):
            self.advance()
            return s.Arith("eq", (left, self.additive()), pos=p)
        return left

    def additive(self) -> s.Term:
        p = self.pos()
        left = self.unary()
        while self.at("+") or self.at("-"):
            op = "add" if self.advance().text == "+" else "sub"
            left = s.Arith(op, (left, self.unary()), pos=p)
        return left

    def unary(self) -> s.Term:
        p = self.pos()
        if self.at("-"):
            self.advance()
            if self.tok.kind == "int":
                return s.IntLit(-int(self.advance().text), pos=p)
            return s.Arith("neg", (self.unary(),), pos=p)
        return self.app()

    def app(self) -> s.Term:
        p = self.pos()
        t = self.tok
        if t.kind == "kw" and t.text in ("fork", "receive", "close", "wait"):
            self.advance()
            arg = self.atom()
            cls = {"fork": s.Fork, "receive": s.Receive, "close": s.CloseE, "wait": s.WaitE}[t.text]
            return cls(arg, pos=p)
        if self.at("send"):
            self.advance()
            a = self.atom()
            return s.Send(a, self.atom(), pos=p)
        if self.at("select"):
            self.advance()
            l = self.ident()
            return s.SelectE(l, self.atom(), pos=p)
        if self.at("new") and not self.untyped:
            self.advance()
            return s.New(self.session(), pos=p)
        if self.at("case"):
            return self.case()
        e = self.atom()
        while self.starts_atom():
            e = s.App(e, self.atom(), pos=p)
        return e

    def case(self) -> s.Term:
        p = self.pos()
        self.expect("case")
        scrut = self.expr()
        self.expect("of")
        self.expect("{")
        branches = []
        while True:
            l = self.ident()
            self.expect(":")
            x = self.ident()
            self.expect(".")
            branches.append((l, x, self.expr()))
            if not self.at(","):
                break
            self.advance()
        self.expect("}")
        labels = [b[0] for b in branches]
        if len(set(labels)) != len(labels):
            raise ParseError("duplicate label in case", *p)
        return s.CaseE(scrut, tuple(branches), pos=p)

    def starts_atom(self) -> bool:
        t = self.tok
        return t.kind in ("id", "int") or self.at("(") or (self.untyped and self.at("new"))

    def atom(self) -> s.Term:
        p = self.pos()
        t = self.tok
        if t.kind == "id":
            self.advance()
            return s.Var(t.text, pos=p)
        if t.kind == "int":
            self.advance()
            return s.IntLit(int(t.text), pos=p)
        if self.untyped and self.at("new"):
            # untyped new takes no session argument, so it is atomic
            self.advance()
            return s.New(None, pos=p)
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return s.UnitLit(pos=p)
            first = self.expr()
            if self.at(","):
                self.advance()
                second = self.expr()
                self.expect(")")
                if self.untyped:
                    return s.Pair(UN, first, second, pos=p)
                if self.at("@un") or self.at("@lin"):
                    m = Mult(self.advance().text[1:])
                    return s.Pair(m, first, second, pos=p)
                self.error("a typed pair needs @un or @lin")
            self.expect(")")
            return first
        self.error("expected an expression")

    # -- files
    def program(self) -> Program:
        imports = []
        while self.at("type") or self.at("import"):
            if self.at("type"):
                self.advance()
                name = self.ident()
                self.expect("=")
                self.aliases[name] = self.type_()
            else:
                p = self.pos()
                self.advance()
                self.expect("untyped")
                if self.tok.kind != "str":
                    self.error("expected a quoted file name")
                path = self.advance().text[1:-1]
                self.expect("as")
                imports.append(Import(path, self.ident(), p))
        body = self.expr()
        if self.tok.kind != "eof":
            self.error("unexpected input after expression")
        return Program(body, self.aliases, imports)


def parse_type(src: str, aliases=None) -> ty.Type:
    p = Parser(src, aliases=aliases)
    t = p.type_()
    if p.tok.kind != "eof":
        p.error("unexpected input after type")
    return t


def parse_expr(src: str, untyped: bool = False) -> s.Term:
    return parse_program(src, untyped).body


def parse_program(src: str, untyped: bool = False) -> Program:
    return Parser(src, untyped=untyped).program()
