## @file cache.py
## @brief JSON cache of a scenario's synthesis so runs can skip the LPs.

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .pipeline import Synthesis
from .scenario import Scenario
from .stability import CertificateKind, SelectionAssignment, StabilityCertificate
from .synthesis import CpdnResult, agent_gains

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


def _certificate_dict(cert: StabilityCertificate) -> dict:
    return {
        "kind": cert.kind.value,
        "value": cert.value,
        "converged": cert.converged,
        "d": cert.assignment.d,
        "lower_source": cert.assignment.lower_source.tolist(),
        "upper_source": cert.assignment.upper_source.tolist(),
    }


def _certificate(data: dict) -> StabilityCertificate:
    assignment = SelectionAssignment(data["lower_source"], data["upper_source"], data["d"])
    return StabilityCertificate(CertificateKind(data["kind"]), float(data["value"]),
                                assignment, bool(data["converged"]))


def synthesis_to_dict(scenario: Scenario, synthesis: Synthesis,
                      certificate: StabilityCertificate | None = None) -> dict:
    cpdn = synthesis.cpdn
    out = {
        "version": FORMAT_VERSION,
        "scenario": scenario.name,
        "scenario_sha256": scenario.sha256,
        "agents": [
            {"L": g.L.tolist(), "Gamma": g.Gamma.tolist(), "row_norms": g.row_norms.tolist()}
            for g in synthesis.gains
        ],
        "cpdn": {
            "d_star": cpdn.d_star,
            "success": cpdn.success,
            "diameter": cpdn.diameter,
            "local_d": list(cpdn.local_d),
            "stabilizer": [[i, s, a, cpdn.hops[(i, s)]] for (i, s), a in sorted(cpdn.stabilizer.items())],
        },
    }
    if certificate is not None:
        out["certificate"] = _certificate_dict(certificate)
    return out


def save_synthesis(path, scenario: Scenario, synthesis: Synthesis,
                   certificate: StabilityCertificate | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = synthesis_to_dict(scenario, synthesis, certificate)
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    log.info("wrote synthesis cache %s", path)
    return path


def load_synthesis(path, scenario: Scenario) -> tuple[Synthesis, StabilityCertificate | None]:
    """@brief Rebuild a cached synthesis for `scenario`.

    Gains are re-derived from the stored L and Γ so T and Ã always match
    the scenario's A and C. A cache written for other scenario text is refused.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read synthesis cache {path}: {exc}") from exc
    if data.get("version") != FORMAT_VERSION:
        raise InvalidInputError(f"{path}: unsupported cache version {data.get('version')!r}")
    if data.get("scenario_sha256") != scenario.sha256:
        raise InvalidInputError(f"{path}: cache was written for a different scenario")

    plant = scenario.plant
    agents = data["agents"]
    if len(agents) != plant.n_agents:
        raise InvalidInputError(f"{path}: {len(agents)} agents cached, scenario has {plant.n_agents}")
    gains = tuple(
        agent_gains(plant.A, plant.C[i], np.array(a["L"], dtype=float), np.array(a["Gamma"], dtype=float))
        for i, a in enumerate(agents)
    )
    c = data["cpdn"]
    cpdn = CpdnResult(
        d_star=int(c["d_star"]),
        success=bool(c["success"]),
        diameter=int(c["diameter"]),
        stabilizer={(i, s): a for i, s, a, _ in c["stabilizer"]},
        hops={(i, s): h for i, s, _, h in c["stabilizer"]},
        local_d=tuple(c["local_d"]),
    )
    cert = _certificate(data["certificate"]) if "certificate" in data else None
    log.info("loaded synthesis cache %s (d* = %d)", path, cpdn.d_star)
    return Synthesis(gains, cpdn), cert
