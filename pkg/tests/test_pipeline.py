## @file test_pipeline.py
## @brief End-to-end runs on the bundled scenarios, outputs and the synthesis cache.

import csv
import dataclasses
import json
import logging

import numpy as np
import pytest

from DIO_Observer.cache import load_synthesis, save_synthesis
from DIO_Observer.error_analysis import CSV_COLUMNS
from DIO_Observer.errors import InvalidAssignmentError, InvalidInputError, PipelineError
from DIO_Observer.interval_core import IntervalVector
from DIO_Observer.pipeline import (
    DIO_TRACE,
    LOCAL_TRACE,
    MANIFEST,
    Synthesis,
    report_dir,
    resolve_rounds,
    run_dio,
    run_pipeline,
)
from DIO_Observer.scenario import bundled_text, parse_scenario
from DIO_Observer.simulation import simulate_plant
from DIO_Observer.stability import CertificateKind
from DIO_Observer.synthesis import CpdnResult


@pytest.fixture(scope="module")
def example1_report(example1, example1_synthesis):
    return run_pipeline(example1, baseline=True, synthesis=example1_synthesis)


def test_example1_run_is_correct_and_stable(example1_report):
    report = example1_report
    assert report.d == 1 and report.d_star == 1
    assert report.correct
    assert report.certificate.kind is CertificateKind.INFNORM
    assert report.certificate.value == pytest.approx(0.0, abs=1e-9)
    assert not report.diverging.any()


def test_example1_directly_measured_states_tighten(example1_report):
    report = example1_report
    # x0 and x1 are measured; x2 and x3 settle at a noise-driven width instead
    assert np.all(report.final_width[:, :2] < report.initial_width[:, :2])
    assert np.all(np.isfinite(report.max_width))


def test_example1_baseline_diverges(example1, example1_report):
    base = example1_report.baseline
    assert base.d == 0
    assert base.correct
    assert base.diverging[0, 3]
    assert base.final_width[0, 3] == pytest.approx(3.0 + 2.0 * example1.horizon, rel=1e-9)


def test_example2_full_rounds(example2, example2_synthesis):
    short = dataclasses.replace(example2, horizon=300)
    report = run_pipeline(short, synthesis=example2_synthesis)
    assert report.d == 5
    assert report.correct
    assert report.certificate.value == pytest.approx(0.0, abs=1e-9)
    assert not report.diverging.any()


def test_example2_one_round_is_still_certified(example2, example2_synthesis):
    short = dataclasses.replace(example2, horizon=100)
    report = run_pipeline(short, d=1, synthesis=example2_synthesis)
    assert report.certificate.kind is CertificateKind.LOWER_SPECTRAL_RADIUS
    assert report.certificate.stable
    assert report.correct


@pytest.mark.slow
def test_example2_one_round_full_horizon(example2, example2_synthesis):
    assert example2.horizon == 3000
    report = run_pipeline(example2, d=1, synthesis=example2_synthesis)
    assert report.certificate.stable
    assert report.correct
    assert not report.diverging.any()


def test_point_initial_bounds_are_not_flagged_diverging(example1, example1_synthesis):
    plant = example1.plant
    x0 = np.zeros(plant.n_states)
    pinned = dataclasses.replace(plant, x0_bounds=IntervalVector(x0, x0))
    scenario = dataclasses.replace(example1, plant=pinned, x0=x0, horizon=50)
    report = run_pipeline(scenario, d=1, synthesis=example1_synthesis)
    assert np.all(report.initial_width == 0.0)
    assert report.correct
    assert not report.diverging.any()


def test_run_dio_selections_are_admissible(example1, example1_synthesis):
    traj = simulate_plant(dataclasses.replace(example1, horizon=20))
    run = run_dio(example1, example1_synthesis.gains, traj, 1)
    assert run.horizon == 20
    assert len(run.selections) == 20
    for H in run.selections:
        H.validate(example1.graph)
    assert run.lower.shape == (21, 3, 4)


def test_resolve_rounds(example1, example1_synthesis):
    assert resolve_rounds(example1, example1_synthesis) == 1
    assert resolve_rounds(example1, example1_synthesis, 4) == 4
    assert resolve_rounds(dataclasses.replace(example1, rounds=2), example1_synthesis) == 2
    with pytest.raises(InvalidInputError):
        resolve_rounds(example1, example1_synthesis, -1)


def test_resolve_rounds_after_cpdn_failure(example1, example1_synthesis, caplog):
    failed = CpdnResult(d_star=2, success=False, diameter=1, stabilizer={}, hops={}, local_d=(2, 2, 2))
    syn = Synthesis(example1_synthesis.gains, failed)
    with caplog.at_level(logging.WARNING):
        assert resolve_rounds(example1, syn) == 1
    assert "CPDN failed" in caplog.text


def test_stage_failures_are_labelled(example1, example1_synthesis):
    with pytest.raises(PipelineError) as info:
        run_pipeline(example1, d=0, method="infnorm", synthesis=example1_synthesis)
    assert info.value.stage == "verify"
    assert isinstance(info.value.cause, InvalidAssignmentError)


def test_outputs_and_report(tmp_path, example1, example1_synthesis):
    short = dataclasses.replace(example1, horizon=15)
    run_pipeline(short, seed=4, baseline=True, out_dir=tmp_path, synthesis=example1_synthesis)
    manifest = json.loads((tmp_path / MANIFEST).read_text(encoding="utf-8"))
    assert manifest["seed"] == 4
    assert manifest["d"] == 1 and manifest["d_star"] == 1
    assert manifest["horizon"] == 15
    assert manifest["scenario_sha256"] == example1.sha256
    assert manifest["certificate"]["kind"] == "infnorm"
    assert manifest["correctness"] == 1.0
    assert set(manifest["files"]) == {DIO_TRACE, LOCAL_TRACE}

    with (tmp_path / DIO_TRACE).open(encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 16 * 3 * 4
    assert all(float(r["e_lower"]) >= 0 and float(r["e_upper"]) >= 0 for r in rows)

    text = report_dir(tmp_path)
    assert "d = 1" in text
    assert "certificate infnorm" in text
    assert LOCAL_TRACE in text


def test_report_without_manifest(tmp_path):
    with pytest.raises(InvalidInputError):
        report_dir(tmp_path)


def test_cache_round_trip(tmp_path, example1, example1_synthesis):
    path = save_synthesis(tmp_path / "syn.json", example1, example1_synthesis)
    syn, cert = load_synthesis(path, example1)
    assert cert is None
    assert syn.cpdn.d_star == 1
    assert syn.cpdn.stabilizer == example1_synthesis.cpdn.stabilizer
    for a, b in zip(syn.gains, example1_synthesis.gains):
        np.testing.assert_allclose(a.A_tilde, b.A_tilde, atol=1e-12)


def test_cache_refuses_other_scenario(tmp_path, example1, example1_synthesis):
    path = save_synthesis(tmp_path / "syn.json", example1, example1_synthesis)
    edited = parse_scenario(bundled_text("example1") + "\n# edited\n", "example1.dio")
    with pytest.raises(InvalidInputError):
        load_synthesis(path, edited)


def test_same_seed_gives_identical_csv(tmp_path, example1, example1_synthesis):
    short = dataclasses.replace(example1, horizon=25)
    run_pipeline(short, seed=8, out_dir=tmp_path / "a", synthesis=example1_synthesis)
    run_pipeline(short, seed=8, out_dir=tmp_path / "b", synthesis=example1_synthesis)
    assert (tmp_path / "a" / DIO_TRACE).read_bytes() == (tmp_path / "b" / DIO_TRACE).read_bytes()
