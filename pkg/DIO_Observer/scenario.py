## @file scenario.py
## @brief Scenario model and loading from .dio files.

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .analyzer import check_document
from .errors import InvalidInputError, ScenarioError
from .evaluator import Word
from .graph import Digraph
from .interval_core import IntervalVector
from .model import NoiseBounds, PlantModel
from .noise import NoisePolicy, UniformNoise
from .parser import parse_document

log = logging.getLogger(__name__)

BUNDLED = ("example1", "example2")


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    plant: PlantModel
    graph: Digraph
    x0: np.ndarray | None
    w_policy: NoisePolicy
    v_policies: tuple[NoisePolicy, ...]
    horizon: int
    rounds: int | None
    seed: int
    sha256: str

    @property
    def auto_rounds(self) -> bool:
        return self.rounds is None


def parse_scenario(text: str, path: str | None = None) -> Scenario:
    """@brief Parse, validate and assemble a scenario from source text.
    @param text  Scenario source.
    @param path  File name used in error messages and as the default name.
    @return      Validated Scenario.
    """
    checked = check_document(parse_document(text))
    if not checked.ok:
        raise ScenarioError(checked.diagnostics, path)
    v = checked.values

    def get(key: str, index: int | None = None, default=None):
        return v.get((key, index), default)

    N = get("agents")
    C = tuple(get("C", i) for i in range(N))
    D = tuple(get("D", i, np.eye(c.shape[0])) for i, c in enumerate(C))
    v_bounds = tuple(IntervalVector(get("v_lower", i), get("v_upper", i)) for i in range(N))
    w_bounds = IntervalVector(get("w_lower"), get("w_upper"))
    x0 = get("x0")
    if get("x0_lower") is not None:
        x0_bounds = IntervalVector(get("x0_lower"), get("x0_upper"))
    else:
        margin = get("x0_margin")
        x0_bounds = IntervalVector(x0 - margin, x0 + margin)

    plant = PlantModel(
        A=get("A"),
        B=get("B"),
        C=C,
        D=D,
        noise=NoiseBounds(w_bounds, v_bounds),
        x0_bounds=x0_bounds,
    )
    rounds = get("rounds", default=Word.AUTO)
    default_name = Path(path).stem if path else "scenario"
    scenario = Scenario(
        name=get("name", default=default_name),
        plant=plant,
        graph=get("graph"),
        x0=x0,
        w_policy=get("w", default=UniformNoise()),
        v_policies=tuple(get("v", i, UniformNoise()) for i in range(N)),
        horizon=get("horizon"),
        rounds=None if rounds is Word.AUTO else rounds,
        seed=get("seed", default=0),
        sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
    )
    log.debug("scenario %s: n=%d, N=%d, K=%d", scenario.name, plant.n_states,
              plant.n_agents, scenario.horizon)
    return scenario


def load_scenario(path) -> Scenario:
    """@brief Read and validate a scenario file; errors carry line diagnostics."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInputError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(text, str(path))


def bundled_text(name: str) -> str:
    if name not in BUNDLED:
        raise InvalidInputError(f"no bundled scenario {name!r}; choose from {', '.join(BUNDLED)}")
    return resources.files("DIO_Observer").joinpath("scenarios", f"{name}.dio").read_text(encoding="utf-8")


def load_bundled(name: str) -> Scenario:
    return parse_scenario(bundled_text(name), f"{name}.dio")


def resolve_scenario(spec: str) -> Scenario:
    """@brief A file path, or the name of a bundled scenario."""
    if spec in BUNDLED and not Path(spec).exists():
        return load_bundled(spec)
    return load_scenario(spec)
