## @file server.py
## @brief Language server for .dio scenario files.
##
## Every open scenario is re-checked on edit; the checked values back hover,
## completion and the dio.summary command.

from __future__ import annotations

import logging

from lsprotocol.types import (
    TEXT_DOCUMENT_COMPLETION,
    TEXT_DOCUMENT_DID_CHANGE,
    TEXT_DOCUMENT_DID_CLOSE,
    TEXT_DOCUMENT_DID_OPEN,
    TEXT_DOCUMENT_HOVER,
    CompletionList,
    CompletionParams,
    DidChangeTextDocumentParams,
    DidCloseTextDocumentParams,
    DidOpenTextDocumentParams,
    Hover,
    HoverParams,
    PublishDiagnosticsParams,
)
from pygls.lsp.server import LanguageServer

from .analyzer import CheckedDocument, check_document
from .completion import provide_completions
from .evaluator import Word
from .hover import provide_hover
from .parser import ParsedDocument, parse_document

log = logging.getLogger(__name__)

SUMMARY_COMMAND = "dio.summary"


class ScenarioWorkspace:
    """@brief Checked scenario documents keyed by URI."""

    def __init__(self):
        self._checked: dict[str, CheckedDocument] = {}

    def check(self, uri: str, text: str) -> CheckedDocument:
        checked = check_document(parse_document(text))
        self._checked[uri] = checked
        agents = checked.values.get(("agents", None))
        log.debug("checked scenario %s: %s agents, %d diagnostics",
                  uri, agents if agents is not None else "?", len(checked.diagnostics))
        return checked

    def close(self, uri: str) -> None:
        self._checked.pop(uri, None)

    def checked(self, uri: str) -> CheckedDocument | None:
        return self._checked.get(uri)

    def parsed(self, uri: str) -> ParsedDocument | None:
        checked = self._checked.get(uri)
        return checked.doc if checked is not None else None

    def summary(self, uri: str) -> dict:
        """@brief Agent count, state count, horizon and rounds of a checked scenario.
        @return Empty dict for unknown URIs; counts are None when missing or invalid.
        """
        checked = self._checked.get(uri)
        if checked is None:
            return {}
        values = checked.values
        A = values.get(("A", None))
        rounds = values.get(("rounds", None), Word.AUTO)
        return {
            "agents": values.get(("agents", None)),
            "states": int(A.shape[0]) if A is not None else None,
            "horizon": values.get(("horizon", None)),
            "rounds": rounds.value if isinstance(rounds, Word) else rounds,
            "ok": checked.ok,
            "diagnostics": len(checked.diagnostics),
        }


workspace = ScenarioWorkspace()


def get_parsed(uri: str) -> ParsedDocument | None:
    return workspace.parsed(uri)


def _publish(ls: LanguageServer, uri: str, checked: CheckedDocument | None) -> None:
    diags = checked.diagnostics if checked is not None else []
    ls.text_document_publish_diagnostics(
        PublishDiagnosticsParams(uri=uri, diagnostics=diags)
    )


def create_server(scenarios: ScenarioWorkspace | None = None) -> LanguageServer:
    """@brief Create the scenario language server.
    @param scenarios  Workspace to check into; the module-level one by default.
    @return Configured LanguageServer ready to start.
    """
    scenarios = scenarios if scenarios is not None else workspace
    server = LanguageServer("DIO-Observer-LSP", "v0.1.0")

    @server.feature(TEXT_DOCUMENT_DID_OPEN)
    def on_scenario_open(ls: LanguageServer, params: DidOpenTextDocumentParams):
        uri = params.text_document.uri
        log.info("opened scenario %s", uri)
        _publish(ls, uri, scenarios.check(uri, params.text_document.text))

    @server.feature(TEXT_DOCUMENT_DID_CHANGE)
    def on_scenario_edit(ls: LanguageServer, params: DidChangeTextDocumentParams):
        # full sync: the last change carries the whole document
        if params.content_changes:
            uri = params.text_document.uri
            _publish(ls, uri, scenarios.check(uri, params.content_changes[-1].text))

    @server.feature(TEXT_DOCUMENT_DID_CLOSE)
    def on_scenario_close(ls: LanguageServer, params: DidCloseTextDocumentParams):
        uri = params.text_document.uri
        scenarios.close(uri)
        _publish(ls, uri, None)

    @server.feature(TEXT_DOCUMENT_COMPLETION)
    def complete_scenario_key(ls: LanguageServer, params: CompletionParams) -> CompletionList:
        doc = scenarios.parsed(params.text_document.uri)
        if doc is None:
            return CompletionList(is_incomplete=False, items=[])
        return provide_completions(doc, params.position)

    @server.feature(TEXT_DOCUMENT_HOVER)
    def describe_scenario_key(ls: LanguageServer, params: HoverParams) -> Hover | None:
        doc = scenarios.parsed(params.text_document.uri)
        if doc is None:
            return None
        return provide_hover(doc, params.position)

    @server.command(SUMMARY_COMMAND)
    def scenario_summary(ls: LanguageServer, *args) -> dict:
        if len(args) == 1 and isinstance(args[0], list):
            args = tuple(args[0])
        uri = args[0] if args else None
        if not isinstance(uri, str):
            log.warning("%s called without a document URI", SUMMARY_COMMAND)
            return {}
        return scenarios.summary(uri)

    return server


def main():
    logging.basicConfig(level=logging.WARNING)
    create_server().start_io()


if __name__ == "__main__":
    main()
