## @file test_cli.py
## @brief Subcommands and exit codes.

import json

from DIO_Observer.cli import EXIT_ERROR, EXIT_INVALID, EXIT_OK, EXIT_UNSTABLE, main


def test_synthesize_prints_d_star(capsys, tmp_path):
    cache = tmp_path / "ex1.json"
    assert main(["synthesize", "example1", "--cache", str(cache)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "d* = 1" in out
    assert json.loads(cache.read_text(encoding="utf-8"))["cpdn"]["d_star"] == 1


def test_verify_stable_and_unstable(capsys):
    assert main(["verify", "example1", "--require-stable"]) == EXIT_OK
    assert "certificate infnorm" in capsys.readouterr().out
    assert main(["verify", "example1", "--d", "0", "--require-stable"]) == EXIT_UNSTABLE
    assert main(["verify", "example1", "--d", "0"]) == EXIT_OK


def test_verify_with_inadmissible_method_is_an_error(capsys):
    assert main(["verify", "example1", "--d", "0", "--method", "infnorm"]) == EXIT_ERROR
    assert "error:" in capsys.readouterr().err


def test_invalid_scenario_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.dio"
    bad.write_text("agents = 1\nbogus = 2\n", encoding="utf-8")
    assert main(["verify", str(bad)]) == EXIT_INVALID
    assert "Unknown key 'bogus'" in capsys.readouterr().err
    assert main(["synthesize", str(tmp_path / "missing.dio")]) == EXIT_INVALID


def test_simulate_then_report(tmp_path, capsys):
    out = tmp_path / "run"
    cache = tmp_path / "ex1.json"
    assert main(["synthesize", "example1", "--cache", str(cache)]) == EXIT_OK
    code = main(["simulate", "example1", "--seed", "3", "--baseline", "--out", str(out),
                 "--cache", str(cache), "--require-stable"])
    assert code == EXIT_OK
    assert "correctness 1.000000" in capsys.readouterr().out
    assert (out / "manifest.json").exists()
    assert main(["report", str(out)]) == EXIT_OK
    assert "dio_trace.csv" in capsys.readouterr().out


def test_simulate_rejects_negative_rounds():
    assert main(["simulate", "example1", "--d", "-1"]) == EXIT_INVALID
