## @file parser.py
## @brief Tokenizer and statement parser for .dio scenario files.
##
## A document is a sequence of `key = value` or `key[i] = value` statements.
## A statement runs on while brackets or parentheses are open. Nothing is
## evaluated here.

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum, auto

from .symbols import BUILTIN_NAMES, WORD_NAMES


class TokenType(Enum):
    IDENTIFIER = auto()
    BUILTIN = auto()
    WORD = auto()
    NUMBER = auto()
    STRING = auto()
    OPERATOR = auto()
    PAREN_OPEN = auto()
    PAREN_CLOSE = auto()
    BRACKET_OPEN = auto()
    BRACKET_CLOSE = auto()
    COMMA = auto()
    COMMENT = auto()
    WHITESPACE = auto()
    UNKNOWN = auto()


@dataclass
class Token:
    type: TokenType
    value: str
    line: int
    col: int
    end_col: int


@dataclass
class Statement:
    tokens: list[Token]
    line: int
    end_line: int
    key: str | None = None
    index: int | None = None
    key_token: Token | None = None
    value: list[Token] = field(default_factory=list)
    problem: str | None = None

    @property
    def label(self) -> str:
        if self.key is None:
            return "?"
        return self.key if self.index is None else f"{self.key}[{self.index}]"


@dataclass
class ParsedDocument:
    tokens: list[list[Token]]
    statements: list[Statement]
    lines: list[str]


_NUMBER = re.compile(r'(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?')
_IDENT = re.compile(r'[A-Za-z_][A-Za-z0-9_]*')

_SINGLE = {
    '(': TokenType.PAREN_OPEN,
    ')': TokenType.PAREN_CLOSE,
    '[': TokenType.BRACKET_OPEN,
    ']': TokenType.BRACKET_CLOSE,
    ',': TokenType.COMMA,
}
_OPERATORS = {"+", "-", "*", "/", "="}

OPENERS = (TokenType.PAREN_OPEN, TokenType.BRACKET_OPEN)
CLOSERS = (TokenType.PAREN_CLOSE, TokenType.BRACKET_CLOSE)


def tokenize_line(text: str, line_no: int) -> list[Token]:
    """@brief Tokenize a single line of scenario source.
    @param text     The source line to tokenize.
    @param line_no  0-based line number.
    @return         List of tokens found on this line.
    """
    tokens: list[Token] = []
    i = 0
    length = len(text)

    while i < length:
        ch = text[i]

        if ch == '#':
            tokens.append(Token(TokenType.COMMENT, text[i:], line_no, i, length))
            break

        if ch in (' ', '\t', '\r'):
            start = i
            while i < length and text[i] in (' ', '\t', '\r'):
                i += 1
            tokens.append(Token(TokenType.WHITESPACE, text[start:i], line_no, start, i))
            continue

        if ch == '"':
            start = i
            i += 1
            while i < length and text[i] != '"':
                i += 1
            if i < length:
                i += 1
            tokens.append(Token(TokenType.STRING, text[start:i], line_no, start, i))
            continue

        m = _NUMBER.match(text, i)
        if m and (ch.isdigit() or ch == '.'):
            tokens.append(Token(TokenType.NUMBER, m.group(0), line_no, i, m.end()))
            i = m.end()
            continue

        m = _IDENT.match(text, i)
        if m:
            word = m.group(0)
            if word in BUILTIN_NAMES:
                tt = TokenType.BUILTIN
            elif word in WORD_NAMES:
                tt = TokenType.WORD
            else:
                tt = TokenType.IDENTIFIER
            tokens.append(Token(tt, word, line_no, i, m.end()))
            i = m.end()
            continue

        if ch in _SINGLE:
            tokens.append(Token(_SINGLE[ch], ch, line_no, i, i + 1))
        elif ch in _OPERATORS:
            tokens.append(Token(TokenType.OPERATOR, ch, line_no, i, i + 1))
        else:
            tokens.append(Token(TokenType.UNKNOWN, ch, line_no, i, i + 1))
        i += 1

    return tokens


def _significant_tokens(toks: list[Token]) -> list[Token]:
    """@brief Filter out whitespace and comment tokens."""
    return [t for t in toks if t.type not in (TokenType.WHITESPACE, TokenType.COMMENT)]


def _depth_change(toks: list[Token]) -> int:
    return sum(1 if t.type in OPENERS else -1 if t.type in CLOSERS else 0 for t in toks)


def parse_document(source: str) -> ParsedDocument:
    """@brief Parse a complete scenario document.
    @param source  Full document source text.
    @return        ParsedDocument with per-line tokens and grouped statements.
    """
    raw_lines = source.split('\n')
    if raw_lines and raw_lines[-1] == '':
        raw_lines = raw_lines[:-1]
    if not raw_lines:
        raw_lines = ['']

    all_tokens = [tokenize_line(line, lineno) for lineno, line in enumerate(raw_lines)]
    statements: list[Statement] = []
    current: Statement | None = None
    depth = 0

    for lineno, toks in enumerate(all_tokens):
        sig = _significant_tokens(toks)
        if not sig:
            continue
        if current is None:
            current = Statement(tokens=list(sig), line=lineno, end_line=lineno)
            depth = 0
        else:
            current.tokens.extend(sig)
            current.end_line = lineno
        depth += _depth_change(sig)
        if depth <= 0:
            statements.append(_split_statement(current))
            current = None

    if current is not None:
        stmt = _split_statement(current)
        stmt.problem = stmt.problem or "Statement ends with unclosed brackets."
        statements.append(stmt)

    return ParsedDocument(tokens=all_tokens, statements=statements, lines=raw_lines)


def _split_statement(stmt: Statement) -> Statement:
    """@brief Fill key, index and value from `key = value` or `key[i] = value`."""
    sig = stmt.tokens
    if not sig or sig[0].type not in (TokenType.IDENTIFIER, TokenType.BUILTIN, TokenType.WORD):
        stmt.problem = "Expected 'key = value'."
        return stmt
    stmt.key_token = sig[0]
    stmt.key = sig[0].value
    pos = 1
    if pos < len(sig) and sig[pos].type == TokenType.BRACKET_OPEN:
        if (pos + 2 < len(sig)
                and sig[pos + 1].type == TokenType.NUMBER
                and sig[pos + 1].value.isdigit()
                and sig[pos + 2].type == TokenType.BRACKET_CLOSE):
            stmt.index = int(sig[pos + 1].value)
            pos += 3
        else:
            stmt.problem = f"Malformed index on '{stmt.key}'; expected {stmt.key}[i]."
            return stmt
    if pos >= len(sig) or sig[pos].type != TokenType.OPERATOR or sig[pos].value != '=':
        stmt.problem = f"Expected '=' after '{stmt.label}'."
        return stmt
    stmt.value = sig[pos + 1:]
    if not stmt.value:
        stmt.problem = f"Missing value for '{stmt.label}'."
    return stmt
