"""Recursive-descent parser for MiniLang.

Grammar (informal)::

    unit     := decl*
    decl     := ("fn" | "test") IDENT "(" [IDENT ("," IDENT)*] ")" block
    block    := "{" stmt* "}"
    stmt     := "let" IDENT "=" expr ";"
              | IDENT "=" expr ";"
              | "if" "(" expr ")" block ["else" (block | if-stmt)]
              | "while" "(" expr ")" block
              | "return" [expr] ";"
              | expr ";"
    expr     := or-expr with the usual C precedence ladder
"""

from __future__ import annotations

from .errors import ParseError
from .lexer import tokenize
from .nodes import (
    Assign, Binary, BoolLit, Call, ExprStmt, FunctionDecl, If, IntLit, Let,
    Return, StrLit, Unary, Var, While,
)

BUILTINS = frozenset({"assert_eq", "assert_true", "assert_false", "len", "char_at"})
ASSERTIONS = frozenset({"assert_eq", "assert_true", "assert_false"})

# binary precedence levels, loosest first
_LEVELS = (
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
)
_PREC = {op: level for level, ops in enumerate(_LEVELS) for op in ops}

_EXPR_START = frozenset({"identifier", "integer", "string", "true", "false", "(", "!", "-"})


class _Parser:
    def __init__(self, source, path, allow_tests, instrument):
        self.toks = tokenize(source, path)
        self.pos = 0
        self.path = path
        self.allow_tests = allow_tests
        self.instrument = instrument
        self.next_sid = 0
        self.next_bid = 0

    # -- token helpers

    @property
    def tok(self):
        return self.toks[self.pos]

    def error(self, expected, message=None):
        t = self.tok
        if message is None:
            message = f"unexpected {t.describe()}"
        raise ParseError(message, t.line, t.col, expected, self.path)

    def at(self, text):
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def expect(self, text):
        if not self.at(text):
            self.error({text})
        t = self.tok
        self.pos += 1
        return t

    def expect_ident(self):
        t = self.tok
        if t.kind != "ident":
            self.error({"identifier"})
        self.pos += 1
        return t

    def sid(self):
        if not self.instrument:
            return -1
        self.next_sid += 1
        return self.next_sid - 1

    def bid(self):
        if not self.instrument:
            return -1
        self.next_bid += 1
        return self.next_bid - 1

    # -- declarations

    def unit(self):
        decls = []
        seen = set()
        while self.tok.kind != "eof":
            decl = self.decl()
            if decl.name in seen:
                raise ParseError(f"duplicate function {decl.name!r}", decl.line,
                                 decl.col, (), self.path)
            seen.add(decl.name)
            decls.append(decl)
        return tuple(decls)

    def decl(self):
        t = self.tok
        expected = {"fn", "test"} if self.allow_tests else {"fn"}
        if self.at("fn"):
            is_test = False
        elif self.at("test") and self.allow_tests:
            is_test = True
        else:
            self.error(expected)
        self.pos += 1
        name_tok = self.expect_ident()
        if name_tok.text in BUILTINS:
            raise ParseError(f"{name_tok.text!r} is a reserved builtin name",
                             name_tok.line, name_tok.col, (), self.path)
        self.expect("(")
        params = []
        if not self.at(")"):
            if self.tok.kind != "ident":
                self.error({"identifier", ")"})
            while True:
                p = self.expect_ident()
                if p.text in params:
                    raise ParseError(f"duplicate parameter {p.text!r}", p.line,
                                     p.col, (), self.path)
                params.append(p.text)
                if self.at(","):
                    self.pos += 1
                    continue
                if not self.at(")"):
                    self.error({",", ")"})
                break
        self.expect(")")
        if is_test and params:
            raise ParseError("test functions take no parameters", name_tok.line,
                             name_tok.col, (), self.path)
        body = self.block()
        return FunctionDecl(name_tok.text, tuple(params), body, is_test,
                            t.line, t.col, self.path)

    def block(self):
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error({"}"})
            stmts.append(self.stmt())
        self.pos += 1
        return tuple(stmts)

    # -- statements

    def stmt(self):
        t = self.tok
        if self.at("let"):
            self.pos += 1
            name = self.expect_ident().text
            self.expect("=")
            sid = self.sid()
            value = self.expr()
            self.expect(";")
            return Let(name, value, t.line, t.col, sid)
        if self.at("if"):
            return self.if_stmt()
        if self.at("while"):
            self.pos += 1
            sid, bid = self.sid(), self.bid()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            body = self.block()
            return While(cond, body, t.line, t.col, sid, bid)
        if self.at("return"):
            self.pos += 1
            sid = self.sid()
            value = None
            if not self.at(";"):
                value = self.expr()
            self.expect(";")
            return Return(value, t.line, t.col, sid)
        if t.kind == "ident" and self.toks[self.pos + 1].kind == "op" \
                and self.toks[self.pos + 1].text == "=":
            self.pos += 2
            sid = self.sid()
            value = self.expr()
            self.expect(";")
            return Assign(t.text, value, t.line, t.col, sid)
        if not self._expr_start():
            self.error(_EXPR_START | {"let", "if", "while", "return", "}"})
        sid = self.sid()
        e = self.expr()
        self.expect(";")
        return ExprStmt(e, t.line, t.col, sid)

    def if_stmt(self):
        t = self.expect("if")
        sid, bid = self.sid(), self.bid()
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.block()
        orelse = None
        if self.at("else"):
            self.pos += 1
            if self.at("if"):
                orelse = (self.if_stmt(),)
            else:
                orelse = self.block()
        return If(cond, then, orelse, t.line, t.col, sid, bid)

    # -- expressions

    def _expr_start(self):
        t = self.tok
        if t.kind in ("ident", "int", "str"):
            return True
        return t.kind in ("op", "kw") and t.text in ("true", "false", "(", "!", "-")

    def expr(self):
        return self.binary(0)

    def binary(self, min_level=0):
        # precedence climbing; every level is left-associative
        left = self.unary()
        while True:
            t = self.tok
            if t.kind != "op":
                return left
            level = _PREC.get(t.text)
            if level is None or level < min_level:
                return left
            self.pos += 1
            right = self.binary(level + 1)
            left = Binary(t.text, left, right, t.line, t.col)

    def unary(self):
        t = self.tok
        if t.kind == "op" and t.text in ("!", "-"):
            self.pos += 1
            return Unary(t.text, self.unary(), t.line, t.col)
        return self.primary()

    def primary(self):
        t = self.tok
        if t.kind == "int":
            self.pos += 1
            return IntLit(t.value, t.line, t.col)
        if t.kind == "str":
            self.pos += 1
            return StrLit(t.value, t.line, t.col)
        if self.at("true") or self.at("false"):
            self.pos += 1
            return BoolLit(t.text == "true", t.line, t.col)
        if self.at("("):
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            self.pos += 1
            if not self.at("("):
                return Var(t.text, t.line, t.col)
            self.pos += 1
            args = []
            if not self.at(")"):
                while True:
                    if not self._expr_start():
                        self.error(_EXPR_START)
                    args.append(self.expr())
                    if self.at(","):
                        self.pos += 1
                        continue
                    if not self.at(")"):
                        self.error({",", ")"})
                    break
            self.expect(")")
            return Call(t.text, tuple(args), t.line, t.col)
        self.error(_EXPR_START)


def parse_decls(source: str, path: str = "<input>", *, allow_tests: bool = False,
                instrument: bool = True):
    """Parse a compilation unit into a tuple of :class:`FunctionDecl`.

    ``instrument`` controls whether statements get coverage ids; test files
    are parsed uninstrumented.
    """
    p = _Parser(source, path, allow_tests, instrument)
    return p.unit()
