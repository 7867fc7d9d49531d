## @file pipeline.py
## @brief End-to-end runs: synthesize, verify, simulate, analyze, write outputs.

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .error_analysis import (
    CSV_COLUMNS,
    DecayFit,
    NoiseInjection,
    collective_error,
    fit_decay_rate,
    noise_injection,
    trace_rows,
    traced,
)
from .errors import DioError, InvalidInputError, PipelineError
from .interval_core import IntervalVector, contains
from .observer import dio_step, observer_states
from .scenario import Scenario
from .simulation import Trajectory, simulate_plant
from .stability import SelectionAssignment, StabilityCertificate, certify
from .synthesis import AgentGains, CpdnResult, design_all_gains, run_cpdn_init

log = logging.getLogger(__name__)

## A framer diverges once its width exceeds this multiple of the initial width.
DIVERGENCE_FACTOR = 10.0
# floor for the divergence reference when initial bounds are points
DIVERGENCE_FLOOR = 1.0

DIO_TRACE = "dio_trace.csv"
LOCAL_TRACE = "local_trace.csv"
MANIFEST = "manifest.json"


@contextmanager
def _stage(name: str) -> Iterator[None]:
    log.info("stage %s", name)
    try:
        yield
    except PipelineError:
        raise
    except DioError as exc:
        raise PipelineError(name, exc) from exc


@dataclass(frozen=True, eq=False)
class Synthesis:
    gains: tuple[AgentGains, ...]
    cpdn: CpdnResult


def synthesize(scenario: Scenario) -> Synthesis:
    """@brief Per-agent LP gains followed by the CPDN initialization."""
    plant = scenario.plant
    gains = design_all_gains(plant.A, plant.C)
    cpdn = run_cpdn_init(scenario.graph, gains, plant)
    log.info("synthesis: d* = %d (%s)", cpdn.d_star, "ok" if cpdn.success else "CPDN fails")
    return Synthesis(gains, cpdn)


def resolve_rounds(scenario: Scenario, synthesis: Synthesis, override: int | None = None) -> int:
    """@brief d from the override, the scenario, or d* when the scenario says auto."""
    if override is not None:
        if override < 0:
            raise InvalidInputError(f"round count must be nonnegative, got {override}")
        return override
    if scenario.rounds is not None:
        return scenario.rounds
    if synthesis.cpdn.success:
        return synthesis.cpdn.d_star
    log.warning("CPDN failed; running with d = diameter = %d", synthesis.cpdn.diameter)
    return synthesis.cpdn.diameter


@dataclass(eq=False)
class DioRun:
    """@brief Recorded framers, errors and switching for k = 0..K."""

    d: int
    lower: np.ndarray
    upper: np.ndarray
    errors: np.ndarray
    contained: np.ndarray
    selections: list[SelectionAssignment] = field(default_factory=list)
    W: np.ndarray | None = None
    V: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return self.lower.shape[0] - 1

    def framers(self, k: int) -> list[IntervalVector]:
        return [IntervalVector(lo, hi) for lo, hi in zip(self.lower[k], self.upper[k])]

    def injection(self, k: int) -> NoiseInjection:
        return NoiseInjection(self.W[k], self.V[k])

    @property
    def injections(self) -> list[NoiseInjection]:
        return [self.injection(k) for k in range(self.horizon)]

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower


def run_dio(scenario: Scenario, gains, trajectory: Trajectory, d: int) -> DioRun:
    """@brief Run the DIO with d rounds along a simulated trajectory.
    @param scenario    Scenario supplying plant, bounds and graph.
    @param gains       One AgentGains per agent.
    @param trajectory  Plant trajectory with measurements for k = 0..K.
    @param d           Network rounds per step; 0 runs isolated local observers.
    @return            DioRun with full per-step records.
    """
    plant = scenario.plant
    K, N, n = trajectory.horizon, plant.n_agents, plant.n_states
    states = observer_states(plant, gains)
    lower = np.empty((K + 1, N, n))
    upper = np.empty((K + 1, N, n))
    errors = np.empty((K + 1, 2 * N * n))
    contained = np.empty((K + 1, N), dtype=bool)
    W = np.empty((K, 2 * N * n))
    V = np.empty((K, 2 * N * n))
    selections: list[SelectionAssignment] = []

    def record(k: int, framers) -> None:
        for i, f in enumerate(framers):
            lower[k, i], upper[k, i] = f.lower, f.upper
            contained[k, i] = contains(f, trajectory.x[k])
        errors[k] = collective_error(framers, trajectory.x[k])

    record(0, [st.framer for st in states])
    for k in range(K):
        step = dio_step(states, trajectory.measurements(k), trajectory.measurements(k + 1),
                        plant.noise, scenario.graph, d)
        record(k + 1, step.framers)
        selections.append(step.selection)
        inj = noise_injection(plant, gains, trajectory.w[k], trajectory.noise(k), trajectory.noise(k + 1))
        W[k], V[k] = inj.W, inj.V
    misses = int((~contained).sum())
    if misses:
        log.error("d = %d: %d framers miss the true state", d, misses)
    return DioRun(d, lower, upper, errors, contained, selections, W, V)


@dataclass(eq=False)
class RunReport:
    scenario: str
    d: int
    d_star: int | None
    cpdn_success: bool
    certificate: StabilityCertificate | None
    correctness: np.ndarray
    initial_width: np.ndarray
    max_width: np.ndarray
    mean_width: np.ndarray
    final_width: np.ndarray
    diverging: np.ndarray
    decay: DecayFit | None
    elapsed: float
    baseline: RunReport | None = None

    @property
    def correct(self) -> bool:
        return bool(np.all(self.correctness == 1.0))

    def to_dict(self) -> dict:
        out = {
            "scenario": self.scenario,
            "d": self.d,
            "d_star": self.d_star,
            "cpdn_success": self.cpdn_success,
            "correctness": float(self.correctness.mean()),
            "correctness_per_agent": self.correctness.tolist(),
            "diverging": [[int(i), int(s)] for i, s in np.argwhere(self.diverging)],
            "elapsed_seconds": round(self.elapsed, 6),
        }
        if self.certificate is not None:
            out["certificate"] = {
                "kind": self.certificate.kind.value,
                "value": self.certificate.value,
                "stable": self.certificate.stable,
                "converged": self.certificate.converged,
            }
        if self.decay is not None:
            out["decay"] = {"rate": self.decay.rate, "r_squared": self.decay.r_squared}
        if self.baseline is not None:
            out["baseline"] = self.baseline.to_dict()
        return out


def summarize(scenario: Scenario, run: DioRun, synthesis: Synthesis,
              certificate: StabilityCertificate | None, elapsed: float) -> RunReport:
    widths = run.widths
    initial = np.broadcast_to(scenario.plant.x0_bounds.width, widths.shape[1:])
    max_width = widths.max(axis=0)
    norms = np.abs(run.errors).max(axis=1)
    return RunReport(
        scenario=scenario.name,
        d=run.d,
        d_star=synthesis.cpdn.d_star if synthesis.cpdn.success else None,
        cpdn_success=synthesis.cpdn.success,
        certificate=certificate,
        correctness=run.contained.mean(axis=0),
        initial_width=np.array(initial),
        max_width=max_width,
        mean_width=widths.mean(axis=0),
        final_width=widths[-1],
        diverging=max_width > DIVERGENCE_FACTOR * np.maximum(initial, DIVERGENCE_FLOOR),
        decay=fit_decay_rate(norms),
        elapsed=elapsed,
    )


def verify(scenario: Scenario, synthesis: Synthesis, d: int, method: str = "auto") -> StabilityCertificate:
    cert = certify(synthesis.gains, scenario.graph, d, synthesis.cpdn, method)
    log.info("certificate %s = %.6g (%s)", cert.kind.value, cert.value,
             "stable" if cert.stable else "not certified")
    return cert


def write_trace(path: Path, run: DioRun, trajectory: Trajectory) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(CSV_COLUMNS), lineterminator="\n")
        w.writeheader()
        for k in range(run.horizon + 1):
            if traced(k):
                w.writerows(trace_rows(k, run.framers(k), trajectory.x[k]))
    log.info("wrote %s", path)


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_outputs(out_dir, scenario: Scenario, report: RunReport, run: DioRun,
                  trajectory: Trajectory, seed: int, baseline: DioRun | None = None) -> Path:
    """@brief Trace CSVs plus a manifest with hashes of everything written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [out / DIO_TRACE]
    write_trace(files[0], run, trajectory)
    if baseline is not None:
        files.append(out / LOCAL_TRACE)
        write_trace(files[-1], baseline, trajectory)
    manifest = {
        "scenario_sha256": scenario.sha256,
        "seed": seed,
        "horizon": scenario.horizon,
        **report.to_dict(),
        "files": {p.name: _sha256_file(p) for p in files},
    }
    path = out / MANIFEST
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    log.info("wrote %s", path)
    return path


def run_pipeline(
    scenario: Scenario,
    d: int | None = None,
    seed: int | None = None,
    baseline: bool = False,
    out_dir=None,
    method: str = "auto",
    synthesis: Synthesis | None = None,
) -> RunReport:
    """@brief Synthesize, certify, simulate and analyze one scenario.
    @param scenario   Validated scenario.
    @param d          Round override; None uses the scenario setting.
    @param seed       Noise seed override.
    @param baseline   Also run isolated local observers (d = 0).
    @param out_dir    Directory for CSV traces and the manifest, or None.
    @param method     Certificate method passed to stability.certify.
    @param synthesis  Cached synthesis to reuse.
    @return           RunReport; stage failures raise PipelineError.
    """
    start = time.perf_counter()
    with _stage("synthesize"):
        if synthesis is None:
            synthesis = synthesize(scenario)
        rounds = resolve_rounds(scenario, synthesis, d)
    with _stage("verify"):
        certificate = verify(scenario, synthesis, rounds, method)
    seed = scenario.seed if seed is None else seed
    with _stage("simulate"):
        trajectory = simulate_plant(scenario, seed)
        run = run_dio(scenario, synthesis.gains, trajectory, rounds)
        local = run_dio(scenario, synthesis.gains, trajectory, 0) if baseline else None
    with _stage("analyze"):
        report = summarize(scenario, run, synthesis, certificate, time.perf_counter() - start)
        if local is not None:
            report.baseline = summarize(scenario, local, synthesis, None, 0.0)
    if out_dir is not None:
        with _stage("write"):
            write_outputs(out_dir, scenario, report, run, trajectory, seed, local)
    return report


def read_trace(path) -> dict[tuple[int, int], dict[str, float]]:
    """@brief Max and final width per (agent, state) from a trace CSV."""
    stats: dict[tuple[int, int], dict[str, float]] = {}
    with Path(path).open(encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            key = (int(row["agent"]), int(row["state"]))
            width = float(row["width"])
            entry = stats.setdefault(key, {"max_width": width, "final_width": width, "k": -1})
            entry["max_width"] = max(entry["max_width"], width)
            if int(row["k"]) >= entry["k"]:
                entry["k"] = int(row["k"])
                entry["final_width"] = width
    return stats


def report_dir(out_dir) -> str:
    """@brief Human-readable summary of a `simulate --out` directory."""
    out = Path(out_dir)
    try:
        manifest = json.loads((out / MANIFEST).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read manifest in {out}: {exc}") from exc
    lines = [
        f"scenario {manifest['scenario']}  d = {manifest['d']}  d* = {manifest['d_star']}",
        f"correctness {manifest['correctness']:.6f}",
    ]
    cert = manifest.get("certificate")
    if cert:
        verdict = "stable" if cert["stable"] else "not certified"
        lines.append(f"certificate {cert['kind']} = {cert['value']:.6g} ({verdict})")
    for name in (DIO_TRACE, LOCAL_TRACE):
        path = out / name
        if not path.exists():
            continue
        lines.append(f"{name}:")
        lines.append("  agent state   max_width   final_width")
        for (i, s), entry in sorted(read_trace(path).items()):
            lines.append(f"  {i:5d} {s:5d} {entry['max_width']:11.6g} {entry['final_width']:13.6g}")
    return "\n".join(lines)
