"""Recursive-descent parser producing a :class:`~psamathe.syntax.Program`.

Statements have no terminator. Two layout rules keep juxtaposed statements
unambiguous: a ``[`` selector must start on the same line as the locator it
selects from, and error recovery resumes at the first token of a later line.
"""

from __future__ import annotations

from typing import Optional

from psamathe import syntax as ast
from psamathe.diagnostics import Diagnostic
from psamathe.lexer import LexError, Token, tokenize
from psamathe.quantity import TypeQuant

QUANTS = {q.value: q for q in TypeQuant}
MODIFIERS = {m.value: m for m in ast.Modifier}


class ParseError(Exception):
    """A failed parse; ``diagnostics`` holds every error found."""

    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("\n".join(d.message for d in diagnostics))
        self.diagnostics = diagnostics


class _Bail(Exception):
    def __init__(self, diag: Diagnostic):
        self.diag = diag


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.diagnostics: list[Diagnostic] = []

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, n: int = 1) -> Token:
        return self.tokens[min(self.pos + n, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, kind: str, lexeme: Optional[str] = None) -> bool:
        return self.tok.is_(kind, lexeme)

    def at_sym(self, lexeme: str) -> bool:
        return self.tok.is_("symbol", lexeme)

    def at_kw(self, lexeme: str) -> bool:
        return self.tok.is_("keyword", lexeme)

    def accept_sym(self, lexeme: str) -> bool:
        if self.at_sym(lexeme):
            self.advance()
            return True
        return False

    def fail(self, message: str, tok: Optional[Token] = None) -> _Bail:
        tok = tok or self.tok
        return _Bail(Diagnostic(message, tok.span))

    def describe(self, tok: Token) -> str:
        if tok.kind == "eof":
            return "end of input"
        return f"'{tok.lexeme}'"

    def expect_sym(self, lexeme: str) -> Token:
        if not self.at_sym(lexeme):
            raise self.fail(f"expected '{lexeme}', found {self.describe(self.tok)}")
        return self.advance()

    def expect_kw(self, lexeme: str) -> Token:
        if not self.at_kw(lexeme):
            raise self.fail(f"expected '{lexeme}', found {self.describe(self.tok)}")
        return self.advance()

    def expect_ident(self) -> Token:
        if not self.at("identifier"):
            raise self.fail(f"expected identifier, found {self.describe(self.tok)}")
        return self.advance()

    # -- recovery ----------------------------------------------------------

    def recover_statement(self, err_tok: Token) -> None:
        """Skip to the first token on a later line, or to a closing brace."""
        depth = 0
        while not self.at("eof"):
            t = self.tok
            if depth == 0 and t.span.line > err_tok.span.line and t is not err_tok:
                return
            if t.is_("symbol", "{"):
                depth += 1
            elif t.is_("symbol", "}"):
                if depth == 0:
                    return
                depth -= 1
            self.advance()

    def recover_decl(self) -> None:
        depth = 0
        first = True
        while not self.at("eof"):
            t = self.tok
            if (not first and depth == 0
                    and (t.is_("keyword", "type") or t.is_("keyword", "transformer"))):
                return
            if t.is_("symbol", "{"):
                depth += 1
            elif t.is_("symbol", "}"):
                depth -= 1
                if depth <= 0:
                    self.advance()
                    return
            first = False
            self.advance()

    # -- program -----------------------------------------------------------

    def program(self) -> ast.Program:
        decls: list[ast.Decl] = []
        body: list[ast.Stmt] = []
        while not self.at("eof"):
            if self.at_kw("type") or self.at_kw("transformer"):
                start = self.tok
                try:
                    decl = self.decl()
                except _Bail as b:
                    self.diagnostics.append(b.diag)
                    self.pos = self.tokens.index(start)
                    self.recover_decl()
                    continue
                if body:
                    self.diagnostics.append(Diagnostic(
                        "declarations must precede statements", start.span))
                decls.append(decl)
            elif self.at_sym("}"):
                self.diagnostics.append(Diagnostic("unmatched '}'", self.tok.span))
                self.advance()
            else:
                stmt = self.statement_recovering()
                if stmt is not None:
                    body.append(stmt)
        return ast.Program(tuple(decls), tuple(body))

    def statement_recovering(self) -> Optional[ast.Stmt]:
        start = self.pos
        try:
            return self.statement()
        except _Bail as b:
            self.diagnostics.append(b.diag)
            err_tok = self.tok
            if self.pos == start:
                # the offending token itself starts the skip
                self.advance()
                if self.tok.span.line > err_tok.span.line:
                    return None
            self.recover_statement(err_tok)
            return None

    def block(self) -> tuple[ast.Stmt, ...]:
        self.expect_sym("{")
        stmts: list[ast.Stmt] = []
        while not self.at_sym("}"):
            if self.at("eof"):
                raise self.fail("expected '}', found end of input")
            stmt = self.statement_recovering()
            if stmt is not None:
                stmts.append(stmt)
        self.advance()
        return tuple(stmts)

    # -- declarations ------------------------------------------------------

    def decl(self) -> ast.Decl:
        if self.at_kw("type"):
            start = self.advance()
            name = self.expect_ident().lexeme
            self.expect_kw("is")
            mods: list[ast.Modifier] = []
            while self.tok.kind == "keyword" and self.tok.lexeme in MODIFIERS:
                mods.append(MODIFIERS[self.advance().lexeme])
            base = self.base_type()
            return ast.TypeDecl(name, tuple(mods), base, span=start.span)
        start = self.expect_kw("transformer")
        name = self.expect_ident().lexeme
        self.expect_sym("(")
        params: list[ast.Param] = []
        while not self.at_sym(")"):
            params.append(self.param())
            if not self.accept_sym(","):
                break
        self.expect_sym(")")
        self.expect_sym("->")
        ret = self.param()
        body = self.block()
        return ast.TransformerDecl(name, tuple(params), ret, body, span=start.span)

    def param(self) -> ast.Param:
        tok = self.expect_ident()
        self.expect_sym(":")
        return ast.Param(tok.lexeme, self.type_(), span=tok.span)

    def type_(self) -> ast.Type:
        quant = None
        if self.tok.kind == "keyword" and self.tok.lexeme in QUANTS:
            quant = QUANTS[self.advance().lexeme]
        return ast.Type(quant, self.base_type())

    def base_type(self) -> ast.BaseType:
        t = self.tok
        if self.at_kw("bool"):
            self.advance()
            return ast.Bool()
        if self.at_kw("nat"):
            self.advance()
            return ast.Nat()
        if t.kind == "identifier":
            self.advance()
            return ast.Named(t.lexeme)
        if self.at_kw("list"):
            self.advance()
            return ast.Table((), self.type_())
        if self.at_kw("table"):
            self.advance()
            self.expect_sym("(")
            keys: list[str] = []
            while not self.at_sym(")"):
                keys.append(self.expect_ident().lexeme)
                if not self.accept_sym(","):
                    break
            self.expect_sym(")")
            return ast.Table(tuple(keys), self.type_())
        if self.at_sym("{"):
            self.advance()
            fields: list[tuple[str, ast.Type]] = []
            while not self.at_sym("}"):
                fname = self.expect_ident()
                if any(f == fname.lexeme for f, _ in fields):
                    raise self.fail(f"duplicate field '{fname.lexeme}'", fname)
                self.expect_sym(":")
                fields.append((fname.lexeme, self.type_()))
                self.accept_sym(",")
            self.advance()
            return ast.Record(tuple(fields))
        raise self.fail(f"expected a type, found {self.describe(t)}")

    # -- statements --------------------------------------------------------

    def statement(self) -> ast.Stmt:
        start = self.tok
        if self.at_kw("try"):
            self.advance()
            body = self.block()
            self.expect_kw("catch")
            handler = self.block()
            return ast.TryCatch(body, handler, span=start.span)
        source = self.locator()
        if self.accept_sym("<--"):
            dest = source
            return ast.Flow(self.locator(), dest, span=start.span)
        self.expect_sym("-->")
        if self.at_kw("consume"):
            tok = self.advance()
            return ast.Flow(source, ast.Consume(span=tok.span), span=start.span)
        if self.at_kw("new") or (self.at("identifier") and self.peek().is_("symbol", "(")):
            call = self.transformer_call()
            dest = None
            if self.accept_sym("-->"):
                dest = self.consume_or_locator()
            return ast.FlowTransform(source, call, dest, span=start.span)
        return ast.Flow(source, self.locator(), span=start.span)

    def consume_or_locator(self) -> ast.Locator:
        if self.at_kw("consume"):
            return ast.Consume(span=self.advance().span)
        return self.locator()

    def transformer_call(self) -> ast.TransformerCall:
        start = self.tok
        if self.at_kw("new"):
            self.advance()
            name = self.expect_ident().lexeme
            return ast.New(name, self.arg_list(), span=start.span)
        name = self.expect_ident().lexeme
        return ast.Call(name, self.arg_list(), span=start.span)

    def arg_list(self) -> tuple[ast.Arg, ...]:
        self.expect_sym("(")
        args: list[ast.Arg] = []
        while not self.at_sym(")"):
            if self.at_sym("_"):
                args.append(ast.Hole(span=self.advance().span))
            else:
                args.append(self.locator())
            if not self.accept_sym(","):
                break
        self.expect_sym(")")
        return tuple(args)

    # -- locators and pure expressions ---------------------------------------

    def locator(self) -> ast.Locator:
        left = self.additive()
        if self.tok.kind == "symbol" and self.tok.lexeme in ast.COMPARE_OPS:
            op = self.advance()
            right = self.additive()
            left = ast.BinOp(op.lexeme, left, right, span=op.span)
        return left

    def additive(self) -> ast.Locator:
        left = self.multiplicative()
        while self.at_sym("+") or self.at_sym("-"):
            op = self.advance()
            left = ast.BinOp(op.lexeme, left, self.multiplicative(), span=op.span)
        return left

    def multiplicative(self) -> ast.Locator:
        left = self.postfix()
        while self.at_sym("*") or self.at_sym("/"):
            op = self.advance()
            left = ast.BinOp(op.lexeme, left, self.postfix(), span=op.span)
        return left

    def postfix(self) -> ast.Locator:
        loc = self.primary()
        while True:
            prev = self.tokens[self.pos - 1]
            if self.at_sym("."):
                self.advance()
                name = self.expect_ident()
                loc = ast.Field(loc, name.lexeme, span=name.span)
            elif self.at_sym("[") and self.tok.span.line == prev.span.line:
                open_tok = self.advance()
                loc = self.selector(loc, open_tok)
                self.expect_sym("]")
            else:
                return loc

    def selector(self, source: ast.Locator, open_tok: Token) -> ast.Locator:
        if (self.tok.kind == "keyword" and self.tok.lexeme in QUANTS
                and (self.peek().is_("keyword", "st") or self.peek().is_("keyword", "such that"))):
            quant = QUANTS[self.advance().lexeme]
            self.advance()
            pred = self.expect_ident().lexeme
            args = self.arg_list()
            return ast.Filter(source, quant, pred, args, span=open_tok.span)
        return ast.Select(source, self.locator(), span=open_tok.span)

    def primary(self) -> ast.Locator:
        t = self.tok
        if t.kind == "natural":
            self.advance()
            return ast.NatLit(t.value, t.lexeme.lower().startswith("0x"), span=t.span)
        if self.at_kw("true") or self.at_kw("false"):
            self.advance()
            return ast.BoolLit(t.lexeme == "true", span=t.span)
        if t.kind == "identifier":
            self.advance()
            if t.lexeme == "length" and self.at_sym("("):
                self.advance()
                arg = self.locator()
                self.expect_sym(")")
                return ast.Length(arg, span=t.span)
            return ast.Var(t.lexeme, span=t.span)
        if self.at_kw("var"):
            self.advance()
            name = self.expect_ident().lexeme
            self.expect_sym(":")
            return ast.VarDef(name, self.base_type(), span=t.span)
        if self.at_sym("["):
            self.advance()
            elems: list[ast.Locator] = []
            while not self.at_sym("]"):
                elems.append(self.locator())
                if not self.accept_sym(","):
                    break
            self.expect_sym("]")
            return ast.ListLit(tuple(elems), span=t.span)
        if self.at_sym("{"):
            self.advance()
            members: list[tuple[str, ast.Type, ast.Locator]] = []
            while not self.at_sym("}"):
                name = self.expect_ident().lexeme
                self.expect_sym(":")
                ty = self.type_()
                self.expect_sym("|->")
                members.append((name, ty, self.locator()))
                if not self.accept_sym(","):
                    break
            self.expect_sym("}")
            return ast.RecordLit(tuple(members), span=t.span)
        if self.at_kw("copy"):
            self.advance()
            self.expect_sym("(")
            inner = self.locator()
            self.expect_sym(")")
            return ast.Copy(inner, span=t.span)
        if self.at_kw("zip"):
            self.advance()
            self.expect_sym("(")
            parts: list[ast.Locator] = []
            while not self.at_sym(")"):
                parts.append(self.locator())
                if not self.accept_sym(","):
                    break
            self.expect_sym(")")
            return ast.Zip(tuple(parts), span=t.span)
        if self.at_sym("("):
            self.advance()
            inner = self.locator()
            self.expect_sym(")")
            return inner
        if self.at_kw("consume"):
            self.advance()
            return ast.Consume(span=t.span)
        raise self.fail(f"expected a locator, found {self.describe(t)}")


def parse_program(tokens: list[Token]) -> ast.Program:
    """Parse a token stream; raises ParseError with all diagnostics on failure."""
    parser = Parser(tokens)
    prog = parser.program()
    if parser.diagnostics:
        raise ParseError(parser.diagnostics)
    return prog


def parse(source: str) -> ast.Program:
    try:
        tokens = tokenize(source)
    except LexError as e:
        raise ParseError(e.diagnostics) from None
    return parse_program(tokens)
