## @file evaluator.py
## @brief Evaluates the value side of scenario statements.
##
## Grammar, over significant tokens:
##     expr    := term (('+' | '-') term)*
##     term    := unary (('*' | '/') unary)*
##     unary   := '-' unary | primary
##     primary := NUMBER | STRING | WORD | list | BUILTIN '(' args ')' | '(' expr ')'
## Numbers parse with float(), which rounds decimal text correctly.

from __future__ import annotations

from enum import Enum
from typing import Any

import numpy as np

from .errors import ExpressionError, InvalidInputError
from .graph import Digraph, complete_graph, directed_ring, from_edge_list
from .noise import NoiseForm, NoiseTerm
from .parser import Token, TokenType


class Word(Enum):
    UNIFORM = "uniform"
    ZERO = "zero"
    AUTO = "auto"


class _Cursor:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            raise ExpressionError("Unexpected end of value.", last)
        self.pos += 1
        return tok

    def accept(self, tt: TokenType, value: str | None = None) -> Token | None:
        tok = self.peek()
        if tok is not None and tok.type == tt and (value is None or tok.value == value):
            self.pos += 1
            return tok
        return None

    def expect(self, tt: TokenType, what: str) -> Token:
        tok = self.peek()
        if tok is None or tok.type != tt:
            raise ExpressionError(f"Expected {what}.", tok or (self.tokens[-1] if self.tokens else None))
        self.pos += 1
        return tok


def evaluate(tokens: list[Token]) -> Any:
    """@brief Evaluate a statement value.
    @param tokens  Significant tokens after '='.
    @return        float, ndarray, str, Word, NoiseTerm, tuple of NoiseTerm or Digraph.
    """
    cur = _Cursor(tokens)
    value = _expr(cur)
    extra = cur.peek()
    if extra is not None:
        raise ExpressionError(f"Unexpected '{extra.value}'.", extra)
    return value


def _is_numeric(v) -> bool:
    return isinstance(v, (float, np.ndarray))


def _is_noise(v) -> bool:
    return isinstance(v, NoiseTerm) or (isinstance(v, tuple) and all(isinstance(t, NoiseTerm) for t in v))


def _arith(op: Token, a, b):
    if _is_numeric(a) and _is_numeric(b):
        try:
            with np.errstate(all="ignore"):
                if op.value == '+':
                    out = a + b
                elif op.value == '-':
                    out = a - b
                elif op.value == '*':
                    out = a * b
                else:
                    out = a / b
        except ZeroDivisionError:
            raise ExpressionError("Division by zero.", op) from None
        except ValueError as exc:
            raise ExpressionError(f"Shape mismatch in '{op.value}': {exc}", op) from None
        if not np.all(np.isfinite(out)):
            raise ExpressionError("Arithmetic produced a non-finite value.", op)
        return out
    if op.value == '*' and isinstance(a, float) and _is_noise(b):
        return _scale_noise(b, a)
    if op.value in ('*', '/') and _is_noise(a) and isinstance(b, float):
        if op.value == '/' and b == 0.0:
            raise ExpressionError("Division by zero.", op)
        return _scale_noise(a, b if op.value == '*' else 1.0 / b)
    raise ExpressionError(f"Operator '{op.value}' does not apply to these operands.", op)


def _scale_noise(v, factor: float):
    if isinstance(v, NoiseTerm):
        return v.scaled(factor)
    return tuple(t.scaled(factor) for t in v)


def _expr(cur: _Cursor):
    value = _term(cur)
    while True:
        op = cur.accept(TokenType.OPERATOR, '+') or cur.accept(TokenType.OPERATOR, '-')
        if op is None:
            return value
        value = _arith(op, value, _term(cur))


def _term(cur: _Cursor):
    value = _unary(cur)
    while True:
        op = cur.accept(TokenType.OPERATOR, '*') or cur.accept(TokenType.OPERATOR, '/')
        if op is None:
            return value
        value = _arith(op, value, _unary(cur))


def _unary(cur: _Cursor):
    op = cur.accept(TokenType.OPERATOR, '-')
    if op is not None:
        value = _unary(cur)
        if _is_numeric(value):
            return -value
        if _is_noise(value):
            return _scale_noise(value, -1.0)
        raise ExpressionError("Unary '-' needs a number or noise term.", op)
    return _primary(cur)


def _primary(cur: _Cursor):
    tok = cur.take()
    if tok.type == TokenType.NUMBER:
        return float(tok.value)
    if tok.type == TokenType.STRING:
        if len(tok.value) < 2 or not tok.value.endswith('"'):
            raise ExpressionError("Unterminated string.", tok)
        return tok.value[1:-1]
    if tok.type == TokenType.WORD:
        return Word(tok.value)
    if tok.type == TokenType.BRACKET_OPEN:
        return _list(cur, tok)
    if tok.type == TokenType.PAREN_OPEN:
        value = _expr(cur)
        cur.expect(TokenType.PAREN_CLOSE, "')'")
        return value
    if tok.type == TokenType.BUILTIN:
        cur.expect(TokenType.PAREN_OPEN, f"'(' after '{tok.value}'")
        args = []
        if not cur.accept(TokenType.PAREN_CLOSE):
            while True:
                args.append(_expr(cur))
                if cur.accept(TokenType.PAREN_CLOSE):
                    break
                cur.expect(TokenType.COMMA, "',' or ')'")
        return _call(tok, args)
    if tok.type == TokenType.IDENTIFIER:
        raise ExpressionError(f"Unknown name '{tok.value}'.", tok)
    raise ExpressionError(f"Unexpected '{tok.value}'.", tok)


def _list(cur: _Cursor, opener: Token):
    items = []
    if not cur.accept(TokenType.BRACKET_CLOSE):
        while True:
            items.append(_expr(cur))
            if cur.accept(TokenType.BRACKET_CLOSE):
                break
            cur.expect(TokenType.COMMA, "',' or ']'")
    if any(_is_noise(v) for v in items):
        terms: list[NoiseTerm] = []
        for v in items:
            if isinstance(v, NoiseTerm):
                terms.append(v)
            elif isinstance(v, tuple):
                terms.extend(v)
            elif isinstance(v, float):
                terms.append(NoiseTerm(NoiseForm.CONST, v))
            else:
                raise ExpressionError("Noise lists may hold only noise terms and numbers.", opener)
        return tuple(terms)
    if not all(_is_numeric(v) for v in items):
        raise ExpressionError("Lists may hold only numbers, lists and noise terms.", opener)
    try:
        return np.array(items, dtype=float)
    except ValueError:
        raise ExpressionError("Ragged nested list.", opener) from None


def _count(value, tok: Token, what: str) -> int:
    if not isinstance(value, float) or value != int(value) or value < 0:
        raise ExpressionError(f"'{tok.value}': {what} must be a nonnegative integer.", tok)
    return int(value)


def _number(value, tok: Token, what: str) -> float:
    if not isinstance(value, float):
        raise ExpressionError(f"'{tok.value}': {what} must be a number.", tok)
    return value


def _arity(tok: Token, args: list, low: int, high: int) -> None:
    if not low <= len(args) <= high:
        want = str(low) if low == high else f"{low} to {high}"
        raise ExpressionError(f"'{tok.value}' takes {want} arguments, got {len(args)}.", tok)


_FORMS = {"sin": NoiseForm.SIN, "cos": NoiseForm.COS, "sin2": NoiseForm.SIN2}


def _call(tok: Token, args: list):
    name = tok.value
    if name == "eye":
        _arity(tok, args, 1, 1)
        return np.eye(_count(args[0], tok, "size"))
    if name == "zeros":
        _arity(tok, args, 1, 2)
        shape = tuple(_count(a, tok, "size") for a in args)
        return np.zeros(shape)
    if name == "ones":
        _arity(tok, args, 1, 1)
        return np.ones(_count(args[0], tok, "size"))
    if name == "unit":
        _arity(tok, args, 2, 2)
        n, i = _count(args[0], tok, "size"), _count(args[1], tok, "index")
        if i >= n:
            raise ExpressionError(f"'unit': index {i} outside [0, {n}).", tok)
        out = np.zeros(n)
        out[i] = 1.0
        return out
    if name == "diag":
        _arity(tok, args, 1, 1)
        if not isinstance(args[0], np.ndarray) or args[0].ndim != 1:
            raise ExpressionError("'diag' needs a vector.", tok)
        return np.diag(args[0])
    if name == "kron":
        _arity(tok, args, 2, 2)
        left, right = args
        if _is_noise(right):
            factors = np.atleast_1d(left) if _is_numeric(left) else None
            if factors is None or factors.ndim != 1:
                raise ExpressionError("'kron' with noise terms needs a numeric vector on the left.", tok)
            terms = (right,) if isinstance(right, NoiseTerm) else right
            return tuple(t.scaled(float(f)) for f in factors for t in terms)
        if not (_is_numeric(left) and _is_numeric(right)):
            raise ExpressionError("'kron' needs numeric arguments.", tok)
        return np.kron(np.atleast_1d(left), np.atleast_1d(right)).astype(float)
    if name in ("complete", "directed_ring", "edges"):
        return _graph(tok, args)
    if name in _FORMS:
        _arity(tok, args, 2, 3)
        a, f = _number(args[0], tok, "amplitude"), _number(args[1], tok, "frequency")
        p = _number(args[2], tok, "phase") if len(args) == 3 else 0.0
        return NoiseTerm(_FORMS[name], a, f, p)
    if name == "const":
        _arity(tok, args, 1, 1)
        return NoiseTerm(NoiseForm.CONST, _number(args[0], tok, "value"))
    raise ExpressionError(f"Unknown builtin '{name}'.", tok)


def _graph(tok: Token, args: list) -> Digraph:
    name = tok.value
    if name == "edges":
        _arity(tok, args, 2, 2)
        count = _count(args[0], tok, "node count")
        pairs = args[1]
        if not isinstance(pairs, np.ndarray) or (pairs.size and (pairs.ndim != 2 or pairs.shape[1] != 2)):
            raise ExpressionError("'edges' needs a list of [i, j] pairs.", tok)
        if pairs.size and (np.any(pairs != np.round(pairs)) or np.any(pairs < 0)):
            raise ExpressionError("'edges': node indices must be nonnegative integers.", tok)
        edges = [tuple(int(v) for v in row) for row in pairs.reshape(-1, 2)]
    else:
        _arity(tok, args, 1, 1)
        count = _count(args[0], tok, "node count")
    try:
        if name == "complete":
            return complete_graph(count)
        if name == "directed_ring":
            return directed_ring(count)
        return from_edge_list(count, edges)
    except InvalidInputError as exc:
        raise ExpressionError(f"'{name}': {exc}", tok) from None
