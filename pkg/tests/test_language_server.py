## @file test_language_server.py
## @brief Hover, completion and server wiring for scenario files.

from lsprotocol.types import CompletionItemKind, Position

from DIO_Observer.completion import provide_completions
from DIO_Observer.hover import provide_hover
from DIO_Observer.parser import parse_document
from DIO_Observer.server import ScenarioWorkspace, create_server, get_parsed

DOC = """\
agents = 3
graph = complete(3)
rounds = auto
C[0] = [[1, 0]]
"""


def test_hover_on_key():
    hover = provide_hover(parse_document(DOC), Position(line=0, character=2))
    assert hover is not None
    assert "**agents** key" in hover.contents.value
    assert "required" in hover.contents.value
    assert hover.range.start.character == 0 and hover.range.end.character == 6


def test_hover_on_indexed_key():
    hover = provide_hover(parse_document(DOC), Position(line=3, character=0))
    assert "C[i] = ..." in hover.contents.value


def test_hover_on_builtin_and_word():
    doc = parse_document(DOC)
    hover = provide_hover(doc, Position(line=1, character=10))
    assert "complete(N)" in hover.contents.value
    hover = provide_hover(doc, Position(line=2, character=10))
    assert "d*" in hover.contents.value


def test_hover_on_whitespace_is_none():
    assert provide_hover(parse_document(DOC), Position(line=0, character=6)) is None
    assert provide_hover(parse_document(DOC), Position(line=40, character=0)) is None


def test_key_completion_skips_present_keys():
    doc = parse_document(DOC + "ho")
    items = provide_completions(doc, Position(line=4, character=2)).items
    assert [i.label for i in items] == ["horizon"]
    assert items[0].kind == CompletionItemKind.Property

    doc = parse_document(DOC + "\n")
    labels = {i.label for i in provide_completions(doc, Position(line=4, character=0)).items}
    assert "agents" not in labels
    assert "C" in labels and "horizon" in labels


def test_value_completion_offers_builtins_and_words():
    doc = parse_document(DOC + "graph2 = dir")
    items = provide_completions(doc, Position(line=4, character=12)).items
    assert [i.label for i in items] == ["directed_ring"]
    assert items[0].insert_text == "directed_ring(${1:N})"

    doc = parse_document(DOC + "w = ")
    labels = {i.label for i in provide_completions(doc, Position(line=4, character=4)).items}
    assert {"uniform", "zero", "sin", "kron"} <= labels


def test_completion_inside_multiline_value():
    doc = parse_document("A = [[1, 0],\n     [0, ey")
    labels = [i.label for i in provide_completions(doc, Position(line=1, character=11)).items]
    assert labels == ["eye"]


def test_server_registers_features():
    server = create_server()
    assert server.name == "DIO-Observer-LSP"
    assert get_parsed("file:///nowhere.dio") is None


SCENARIO = """\
agents = 2
A = [[1, 0.1], [0, 1]]
B = eye(2)
C[0] = [[1, 0]]
C[1] = [[0, 1]]
graph = complete(2)
x0_lower = [-1, -1]
x0_upper = [1, 1]
w_lower = [-0.1, -0.1]
w_upper = [0.1, 0.1]
v_lower[0] = [-0.1]
v_upper[0] = [0.1]
v_lower[1] = [-0.1]
v_upper[1] = [0.1]
horizon = 40
"""


def test_workspace_checks_and_summarizes():
    ws = ScenarioWorkspace()
    checked = ws.check("file:///a.dio", SCENARIO)
    assert checked.ok
    assert ws.parsed("file:///a.dio") is checked.doc
    assert ws.summary("file:///a.dio") == {
        "agents": 2, "states": 2, "horizon": 40, "rounds": "auto",
        "ok": True, "diagnostics": 0,
    }


def test_workspace_reports_broken_scenario_and_forgets_closed():
    ws = ScenarioWorkspace()
    ws.check("file:///b.dio", SCENARIO.replace("horizon = 40\n", "rounds = 3\n"))
    summary = ws.summary("file:///b.dio")
    assert summary["horizon"] is None and summary["rounds"] == 3
    assert not summary["ok"] and summary["diagnostics"] >= 1
    ws.close("file:///b.dio")
    assert ws.checked("file:///b.dio") is None
    assert ws.summary("file:///b.dio") == {}


def test_server_uses_given_workspace():
    ws = ScenarioWorkspace()
    server = create_server(ws)
    assert server.name == "DIO-Observer-LSP"
    ws.check("file:///c.dio", SCENARIO)
    assert get_parsed("file:///c.dio") is None
