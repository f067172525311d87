"""YAML scenario files.

Schema (all keys optional except where noted)::

    noise:                    # required for scenario commands
      family: uniform_width   # gaussian | uniform_width | triangular_cf | spline_cf | custom
      params: {w: 2}
    step:
      pmf: bernoulli          # or a mapping {-1: 0.5, 1: 0.5}
    n_values: [4, 16, 64, 256]
    dimension: 1              # 2 needs `components`: two {noise, step} blocks
    components: []
    grid: {window: 12, nodes: 16385, tail_mass: 1.0e-9}
    noises:                   # noise list for the dichotomy experiment
      - {family: uniform_width, params: {w: 2}}
    corpus: {seed: 0, per_checker: 100}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .model import LatticeLaw, ModelError, NoiseModel, Scenario, bernoulli, lattice_law, make_noise
from .spectral import GridSpec

DEFAULT = {
    "noise": {"family": "uniform_width", "params": {"w": 2}},
    "step": {"pmf": "bernoulli"},
    "n_values": [4, 16, 64, 256],
    "dimension": 1,
    "noises": [
        {"family": "uniform_width", "params": {"w": 2}},
        {"family": "uniform_width", "params": {"w": 1}},
        {"family": "gaussian", "params": {"sigma": 1}},
    ],
}


class ConfigError(ValueError):
    pass


@dataclass
class LabConfig:
    scenario: Scenario
    grid: GridSpec
    noises: list[NoiseModel]
    corpus: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)


def _noise(block: Mapping[str, Any]) -> NoiseModel:
    if not isinstance(block, Mapping) or "family" not in block:
        raise ConfigError("noise block needs a `family` key")
    return make_noise(block["family"], block.get("params") or {})


def _step(block: Mapping[str, Any] | None) -> LatticeLaw:
    pmf = (block or {}).get("pmf", "bernoulli")
    if pmf == "bernoulli":
        return bernoulli()
    if not isinstance(pmf, Mapping):
        raise ConfigError("step.pmf must be `bernoulli` or a mapping k -> probability")
    return lattice_law({int(k): float(v) for k, v in pmf.items()})


KNOWN_KEYS = {"noise", "step", "n_values", "dimension", "components", "grid", "noises", "corpus"}


def parse_config(data: Mapping[str, Any] | None) -> LabConfig:
    raw = dict(DEFAULT)
    raw.update(data or {})
    unknown = sorted(set(raw) - KNOWN_KEYS, key=str)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    try:
        n_values = tuple(int(n) for n in raw["n_values"])
        dim = int(raw.get("dimension", 1))
        if dim == 1:
            scenario = Scenario(_noise(raw["noise"]), _step(raw.get("step")), n_values)
        else:
            comps = raw.get("components") or []
            if len(comps) != 2:
                raise ConfigError("dimension 2 needs exactly two components")
            parts = [Scenario(_noise(c["noise"]), _step(c.get("step")), n_values) for c in comps]
            scenario = Scenario.product(parts[0], parts[1], n_values)
        grid = GridSpec(**{k: v for k, v in (raw.get("grid") or {}).items()})
        noises = [_noise(b) for b in raw.get("noises") or []]
    except (ModelError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    return LabConfig(scenario, grid, noises, dict(raw.get("corpus") or {}), raw)


def load_config(path: str | Path | None) -> LabConfig:
    if path is None:
        return parse_config({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    if data is not None and not isinstance(data, Mapping):
        raise ConfigError("config root must be a mapping")
    return parse_config(data)
