"""Recursive-descent parser for the first-order-logic expression grammar.

Grammar, loosest binding first::

    formula  := implies ('<->' implies)*
    implies  := or ('->' or)*
    or       := and ('|' and)*
    and      := unary ('&' unary)*
    unary    := '-' unary | 'exists' IDENT unary | 'all' IDENT unary | primary
    primary  := '(' formula ')' | IDENT '(' IDENT (',' IDENT)* ')'

All binary connectives are left-associative. Identifiers match
``[A-Za-z_][A-Za-z0-9_]*``; ``exists`` and ``all`` are reserved.
"""

from __future__ import annotations

from dataclasses import dataclass

from adjudge.errors import AdjudgeError

from .syntax import And, Atom, Exists, ForAll, Formula, Iff, Implies, Not, Or, Var

_SYMBOLS = ("<->", "->", "-", "&", "|", "(", ")", ",")
_SYMBOL_KIND = {"<->": "IFF", "->": "IMPLIES", "-": "NOT", "&": "AND", "|": "OR",
                "(": "LPAREN", ")": "RPAREN", ",": "COMMA"}
_KEYWORD_KIND = {"exists": "EXISTS", "all": "ALL"}

_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | set("0123456789")


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    column: int


class FormulaSyntaxError(AdjudgeError):
    """Raised when formula text does not match the grammar."""

    def __init__(self, message: str, line: int, column: int,
                 expected: tuple[str, ...] = (), found: str | None = None):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, column = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            column = 1
            i += 1
            continue
        if ch.isspace():
            column += 1
            i += 1
            continue
        matched = False
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token(_SYMBOL_KIND[sym], sym, line, column))
                i += len(sym)
                column += len(sym)
                matched = True
                break
        if matched:
            continue
        if ch in _IDENT_START:
            j = i + 1
            while j < len(text) and text[j] in _IDENT_CONT:
                j += 1
            word = text[i:j]
            tokens.append(Token(_KEYWORD_KIND.get(word, "IDENT"), word, line, column))
            column += j - i
            i = j
            continue
        raise FormulaSyntaxError(f"unexpected character {ch!r}", line, column, found=ch)
    tokens.append(Token("EOF", "", line, column))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, kind: str, expected: str) -> Token:
        token = self.peek()
        if token.kind != kind:
            self.fail((expected,))
        return self.advance()

    def fail(self, expected: tuple[str, ...]) -> None:
        token = self.peek()
        found = token.value if token.kind != "EOF" else "end of input"
        message = f"expected {' or '.join(expected)} but found {found!r}"
        if "')'" in expected and token.kind == "EOF":
            message = "unbalanced parentheses: " + message
        raise FormulaSyntaxError(message, token.line, token.column,
                                 expected=expected, found=found)

    def parse(self) -> Formula:
        formula = self.formula()
        token = self.peek()
        if token.kind != "EOF":
            if token.kind == "RPAREN":
                raise FormulaSyntaxError(
                    "unbalanced parentheses: unexpected ')'",
                    token.line, token.column, expected=("end of input",), found=")")
            self.fail(("end of input", "a binary connective"))
        return formula

    def formula(self) -> Formula:
        node = self.implies()
        while self.peek().kind == "IFF":
            self.advance()
            node = Iff(node, self.implies())
        return node

    def implies(self) -> Formula:
        node = self.disjunction()
        while self.peek().kind == "IMPLIES":
            self.advance()
            node = Implies(node, self.disjunction())
        return node

    def disjunction(self) -> Formula:
        node = self.conjunction()
        while self.peek().kind == "OR":
            self.advance()
            node = Or(node, self.conjunction())
        return node

    def conjunction(self) -> Formula:
        node = self.unary()
        while self.peek().kind == "AND":
            self.advance()
            node = And(node, self.unary())
        return node

    def unary(self) -> Formula:
        token = self.peek()
        if token.kind == "NOT":
            self.advance()
            return Not(self.unary())
        if token.kind in ("EXISTS", "ALL"):
            self.advance()
            var = self.expect("IDENT", "a variable name")
            body = self.unary()
            return Exists(var.value, body) if token.kind == "EXISTS" else ForAll(var.value, body)
        return self.primary()

    def primary(self) -> Formula:
        token = self.peek()
        if token.kind == "LPAREN":
            self.advance()
            node = self.formula()
            self.expect("RPAREN", "')'")
            return node
        if token.kind == "IDENT":
            return self.atom()
        self.fail(("'('", "a predicate application", "'-'", "'exists'", "'all'"))
        raise AssertionError("unreachable")

    def atom(self) -> Atom:
        name = self.expect("IDENT", "a predicate name")
        self.expect("LPAREN", "'('")
        if self.peek().kind == "RPAREN":
            token = self.peek()
            raise FormulaSyntaxError(
                f"predicate {name.value!r} has an empty argument list",
                token.line, token.column, expected=("an argument name",), found=")")
        args = [self.term()]
        while self.peek().kind == "COMMA":
            self.advance()
            args.append(self.term())
        self.expect("RPAREN", "')'")
        return Atom(name.value, tuple(args))

    def term(self) -> Var:
        # The grammar has no constant literal: every argument identifier is a
        # variable, free unless bound by an enclosing quantifier.
        token = self.expect("IDENT", "an argument name")
        return Var(token.value)


def parse_formula(text: str) -> Formula:
    """Parse expression text into a formula AST.

    Raises FormulaSyntaxError (with line/column and the expected-token set)
    on malformed input, including unbalanced parentheses and empty argument
    lists.
    """
    if not text or not text.strip():
        raise FormulaSyntaxError("empty formula text", 1, 1, expected=("a formula",))
    return _Parser(tokenize(text)).parse()
