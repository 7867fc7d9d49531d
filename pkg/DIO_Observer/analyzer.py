## @file analyzer.py
## @brief Diagnostics provider for .dio scenario documents.
##
## Reports malformed statements, unmatched brackets, unknown keys and names,
## duplicates, evaluation errors, missing keys, dimension mismatches, bound
## violations and noise formulas that leave their bounds.

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from lsprotocol.types import Diagnostic, DiagnosticSeverity, Position, Range

from .errors import ExpressionError
from .evaluator import Word, evaluate
from .graph import Digraph
from .interval_core import IntervalVector
from .noise import FormulaNoise, NoiseTerm, UniformNoise, ZeroNoise, first_violation
from .parser import CLOSERS, OPENERS, ParsedDocument, Statement, Token, TokenType
from .symbols import INDEXED_KEYS, KEY_NAMES

Key = tuple[str, "int | None"]

_VECTOR_KEYS = {"x0", "x0_lower", "x0_upper", "w_lower", "w_upper", "v_lower", "v_upper"}
_PAIRS = {"(": ")", "[": "]"}


@dataclass
class CheckedDocument:
    doc: ParsedDocument
    values: dict[Key, Any] = field(default_factory=dict)
    statements: dict[Key, Statement] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(d.severity == DiagnosticSeverity.Error for d in self.diagnostics)


def _line_range(line: int, col: int = 0, end_col: int | None = None) -> Range:
    if end_col is None:
        end_col = col + 1
    return Range(
        start=Position(line=line, character=col),
        end=Position(line=line, character=end_col),
    )


def _token_range(tok: Token) -> Range:
    return _line_range(tok.line, tok.col, tok.end_col)


def _statement_range(doc: ParsedDocument, stmt: Statement) -> Range:
    first = stmt.tokens[0] if stmt.tokens else None
    return Range(
        start=Position(line=stmt.line, character=first.col if first else 0),
        end=Position(line=stmt.end_line, character=len(doc.lines[stmt.end_line])),
    )


def _error(diags: list[Diagnostic], rng: Range, message: str) -> None:
    diags.append(Diagnostic(range=rng, message=message, severity=DiagnosticSeverity.Error))


def analyze(doc: ParsedDocument) -> list[Diagnostic]:
    """@brief Produce diagnostics for a parsed scenario document.
    @param doc  Parsed document to analyze.
    @return     List of LSP diagnostics.
    """
    return check_document(doc).diagnostics


def check_document(doc: ParsedDocument) -> CheckedDocument:
    """@brief Run every check and keep the normalized values for scenario assembly."""
    checked = CheckedDocument(doc)
    diags = checked.diagnostics

    _check_statement_shape(doc, diags)
    _check_unmatched_brackets(doc, diags)
    _check_unknown_names(doc, diags)
    _check_keys(checked)
    _evaluate_statements(checked)
    if checked.ok:
        _check_model(checked)
    return checked


def _check_statement_shape(doc: ParsedDocument, diags: list[Diagnostic]) -> None:
    for stmt in doc.statements:
        if stmt.problem:
            _error(diags, _statement_range(doc, stmt), stmt.problem)


def _check_unmatched_brackets(doc: ParsedDocument, diags: list[Diagnostic]) -> None:
    """@brief Check that ( ) and [ ] pair up inside every statement."""
    for stmt in doc.statements:
        stack: list[Token] = []
        for t in stmt.tokens:
            if t.type in OPENERS:
                stack.append(t)
            elif t.type in CLOSERS:
                if not stack or _PAIRS[stack[-1].value] != t.value:
                    _error(diags, _token_range(t), f"Unmatched '{t.value}'.")
                    break
                stack.pop()


def _check_unknown_names(doc: ParsedDocument, diags: list[Diagnostic]) -> None:
    """@brief Flag identifiers in values and calls of names that are not builtins."""
    for stmt in doc.statements:
        for idx, t in enumerate(stmt.value):
            if t.type == TokenType.IDENTIFIER:
                nxt = stmt.value[idx + 1] if idx + 1 < len(stmt.value) else None
                if nxt is not None and nxt.type == TokenType.PAREN_OPEN:
                    msg = f"Undefined builtin '{t.value}'."
                else:
                    msg = f"Unknown name '{t.value}'."
                _error(diags, _token_range(t), msg)
            elif t.type == TokenType.UNKNOWN:
                _error(diags, _token_range(t), f"Unexpected character '{t.value}'.")


def _check_keys(checked: CheckedDocument) -> None:
    """@brief Unknown keys, index rules and duplicates."""
    doc, diags = checked.doc, checked.diagnostics
    for stmt in doc.statements:
        if stmt.problem or stmt.key is None:
            continue
        rng = _token_range(stmt.key_token)
        if stmt.key not in KEY_NAMES:
            _error(diags, rng, f"Unknown key '{stmt.key}'.")
            continue
        if stmt.key in INDEXED_KEYS and stmt.index is None:
            _error(diags, rng, f"'{stmt.key}' needs an agent index: {stmt.key}[i].")
            continue
        if stmt.key not in INDEXED_KEYS and stmt.index is not None:
            _error(diags, rng, f"'{stmt.key}' takes no index.")
            continue
        key = (stmt.key, stmt.index)
        if key in checked.statements:
            first = checked.statements[key]
            _error(diags, _statement_range(doc, stmt),
                   f"Duplicate key '{stmt.label}' (first set on line {first.line + 1}).")
            continue
        checked.statements[key] = stmt


def _evaluate_statements(checked: CheckedDocument) -> None:
    doc = checked.doc
    for key, stmt in checked.statements.items():
        try:
            checked.values[key] = _coerce(stmt.key, evaluate(stmt.value))
        except ExpressionError as exc:
            rng = _token_range(exc.token) if exc.token is not None else _statement_range(doc, stmt)
            _error(checked.diagnostics, rng, f"{stmt.label}: {exc}")


def _count(value, what: str, minimum: int = 0) -> int:
    if not isinstance(value, float) or value != int(value) or value < minimum:
        raise ExpressionError(f"{what} must be an integer ≥ {minimum}")
    return int(value)


def _coerce(key: str, value: Any) -> Any:
    """@brief Check the value kind a key expects and normalize it."""
    if key == "name":
        if not isinstance(value, str):
            raise ExpressionError("expected a string")
        return value
    if key == "agents":
        return _count(value, "agent count", 1)
    if key == "horizon":
        return _count(value, "horizon", 1)
    if key == "seed":
        return _count(value, "seed")
    if key == "rounds":
        if value is Word.AUTO:
            return value
        return _count(value, "rounds")
    if key == "graph":
        if not isinstance(value, Digraph):
            raise ExpressionError("expected complete(N), directed_ring(N) or edges(N, pairs)")
        return value
    if key in ("w", "v"):
        if value is Word.UNIFORM:
            return UniformNoise()
        if value is Word.ZERO:
            return ZeroNoise()
        if isinstance(value, NoiseTerm):
            return FormulaNoise((value,))
        if isinstance(value, tuple):
            return FormulaNoise(value)
        raise ExpressionError("expected uniform, zero or a list of noise terms")
    if isinstance(value, float):
        value = np.array([value]) if key in _VECTOR_KEYS or key == "x0_margin" else np.array([[value]])
    if not isinstance(value, np.ndarray):
        raise ExpressionError("expected a number, vector or matrix")
    if key in _VECTOR_KEYS or key == "x0_margin":
        if value.ndim != 1:
            raise ExpressionError(f"expected a vector, got shape {value.shape}")
        return value
    if key in ("C", "D") and value.ndim == 1:
        value = value.reshape(1, -1)
    if value.ndim != 2:
        raise ExpressionError(f"expected a matrix, got shape {value.shape}")
    return value


def _check_model(checked: CheckedDocument) -> None:
    """@brief Cross-statement checks: required keys, dimensions, bounds and noise."""
    doc, diags, values = checked.doc, checked.diagnostics, checked.values

    def where(key: Key) -> Range:
        stmt = checked.statements.get(key)
        return _statement_range(doc, stmt) if stmt else _line_range(0, 0, 0)

    def label(key: Key) -> str:
        return key[0] if key[1] is None else f"{key[0]}[{key[1]}]"

    missing = [k for k in (("agents", None), ("A", None), ("B", None), ("graph", None),
                           ("horizon", None), ("w_lower", None), ("w_upper", None))
               if k not in values]
    N = values.get(("agents", None))
    if N is not None:
        for key, index in checked.statements:
            if index is not None and index >= N:
                _error(diags, where((key, index)), f"Agent index {index} outside [0, {N}).")
        for i in range(N):
            missing += [k for k in (("C", i), ("v_lower", i), ("v_upper", i)) if k not in values]
    has_bounds = ("x0_lower", None) in values and ("x0_upper", None) in values
    has_margin = ("x0", None) in values and ("x0_margin", None) in values
    for k in missing:
        _error(diags, _line_range(0, 0, 0), f"Missing required key '{label(k)}'.")
    if not (has_bounds or has_margin):
        _error(diags, _line_range(0, 0, 0),
               "Missing initial bounds: give x0_lower and x0_upper, or x0 and x0_margin.")
    if not checked.ok:
        return

    A, B = values[("A", None)], values[("B", None)]
    n = A.shape[0]
    if A.shape != (n, n):
        _error(diags, where(("A", None)), f"A must be square, got shape {A.shape}.")
        return
    if B.shape[0] != n:
        _error(diags, where(("B", None)), f"B has {B.shape[0]} rows, A has {n}.")
    p = B.shape[1]
    graph = values[("graph", None)]
    if graph.node_count != N:
        _error(diags, where(("graph", None)), f"Graph has {graph.node_count} nodes, agents = {N}.")

    def length(key: Key, expected: int) -> None:
        if key in values and values[key].shape[0] != expected:
            _error(diags, where(key),
                   f"{label(key)} has length {values[key].shape[0]}, expected {expected}.")

    for key in ("x0", "x0_lower", "x0_upper"):
        length((key, None), n)
    if ("x0_margin", None) in values and values[("x0_margin", None)].size != 1:
        length(("x0_margin", None), n)
    length(("w_lower", None), p)
    length(("w_upper", None), p)
    for i in range(N):
        C = values[("C", i)]
        if C.shape[1] != n:
            _error(diags, where(("C", i)), f"C[{i}] has {C.shape[1]} columns, expected {n}.")
            continue
        D = values.get(("D", i), np.eye(C.shape[0]))
        if D.shape[0] != C.shape[0]:
            _error(diags, where(("D", i)), f"D[{i}] has {D.shape[0]} rows, C[{i}] has {C.shape[0]}.")
            continue
        length(("v_lower", i), D.shape[1])
        length(("v_upper", i), D.shape[1])
    if not checked.ok:
        return

    for lo, hi in [(("x0_lower", None), ("x0_upper", None)), (("w_lower", None), ("w_upper", None))] \
            + [(("v_lower", i), ("v_upper", i)) for i in range(N)]:
        if lo in values and hi in values:
            bad = np.flatnonzero(values[lo] > values[hi])
            if bad.size:
                _error(diags, where(hi),
                       f"{label(lo)} > {label(hi)} at coordinates {bad.tolist()}.")
    if ("x0_margin", None) in values and (values[("x0_margin", None)] < 0).any():
        _error(diags, where(("x0_margin", None)), "x0_margin must be nonnegative.")
    if has_bounds and ("x0", None) in values:
        x0 = values[("x0", None)]
        if ((x0 < values[("x0_lower", None)]) | (x0 > values[("x0_upper", None)])).any():
            _error(diags, where(("x0", None)), "x0 lies outside [x0_lower, x0_upper].")
    if not checked.ok:
        return

    horizon = values[("horizon", None)]
    noise = [(("w", None), ("w_lower", None), ("w_upper", None))] \
        + [(("v", i), ("v_lower", i), ("v_upper", i)) for i in range(N)]
    for key, lo, hi in noise:
        policy = values.get(key)
        if policy is None:
            continue
        bounds = IntervalVector(values[lo], values[hi])
        if isinstance(policy, FormulaNoise) and policy.size != bounds.size:
            _error(diags, where(key),
                   f"{label(key)} has {policy.size} terms, bounds have length {bounds.size}.")
            continue
        hit = first_violation(policy, bounds, horizon)
        if hit is not None:
            k, s = hit
            _error(diags, where(key),
                   f"{label(key)} leaves its bounds at k = {k}, coordinate {s}.")
