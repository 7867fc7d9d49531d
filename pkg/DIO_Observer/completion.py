## @file completion.py
## @brief Autocompletion for scenario files.
##
## Before '=' the cursor is naming a key; after it, builtins and words apply.

from __future__ import annotations

from lsprotocol.types import (
    CompletionItem,
    CompletionItemKind,
    CompletionList,
    InsertTextFormat,
    Position,
)

from .parser import ParsedDocument
from .symbols import BUILTINS, KEYS, WORDS


def provide_completions(doc: ParsedDocument, pos: Position) -> CompletionList:
    """@brief Return completion items for the given cursor position.
    @param doc  Parsed document.
    @param pos  Cursor position.
    @return     CompletionList with keys, or builtins and words inside a value.
    """
    items: list[CompletionItem] = []
    prefix = _word_at_cursor(doc, pos)

    if not _in_value(doc, pos):
        present = {s.key for s in doc.statements if s.line != pos.line}
        for key in KEYS:
            if prefix and not key.name.startswith(prefix):
                continue
            if key.name in present and not key.indexed:
                continue
            item = CompletionItem(
                label=key.name,
                kind=CompletionItemKind.Property,
                detail="required key" if key.required else "key",
                documentation=key.doc,
            )
            if key.snippet:
                item.insert_text = key.snippet
                item.insert_text_format = InsertTextFormat.Snippet
            items.append(item)
        return CompletionList(is_incomplete=False, items=items)

    for bi in BUILTINS:
        if prefix and not bi.name.startswith(prefix):
            continue
        sig = f"{bi.name}({', '.join(bi.params)})"
        params = [p for p in bi.params if not p.endswith('?')]
        snippet_params = ", ".join(f"${{{i+1}:{p}}}" for i, p in enumerate(params))
        items.append(CompletionItem(
            label=bi.name,
            kind=CompletionItemKind.Function,
            detail=f"{sig} -> {bi.return_type}",
            documentation=bi.doc,
            insert_text=f"{bi.name}({snippet_params})",
            insert_text_format=InsertTextFormat.Snippet,
        ))

    for name, doc_text in WORDS.items():
        if prefix and not name.startswith(prefix):
            continue
        items.append(CompletionItem(
            label=name,
            kind=CompletionItemKind.Constant,
            detail=doc_text,
        ))

    return CompletionList(is_incomplete=False, items=items)


def _in_value(doc: ParsedDocument, pos: Position) -> bool:
    for stmt in doc.statements:
        if stmt.line < pos.line <= stmt.end_line:
            return True
    if pos.line >= len(doc.lines):
        return False
    return '=' in doc.lines[pos.line][:pos.character]


def _word_at_cursor(doc: ParsedDocument, pos: Position) -> str:
    """@brief Extract the partial identifier being typed at the cursor."""
    if pos.line >= len(doc.lines):
        return ""
    line = doc.lines[pos.line]
    col = min(pos.character, len(line))
    start = col
    while start > 0 and (line[start - 1].isalnum() or line[start - 1] == '_'):
        start -= 1
    return line[start:col]
