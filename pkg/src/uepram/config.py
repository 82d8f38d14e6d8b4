"""Experiment configuration: YAML file, JSON-schema validation, defaults, hashing."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from uepram.optimizer import DEFAULT_SEARCH_CAP, SlaConstraints
from uepram.scenario import (
    ErasureProfile,
    McsTable,
    RadioParams,
    Scenario,
    build_sfn,
    build_single_cell,
    erasure_profile,
)
from uepram.service_model import LayeredMessage

BUNDLED = {
    "single_cell.default": "single_cell.default.yaml",
    "sfn.default": "sfn.default.yaml",
}

DEFAULTS = {
    "scenario": {
        "num_users": 80,
        "cell_radius_m": 500.0 / 3**0.5,
        "axis_deg": 30.0,
        "grid_users": 1700,
        "half_width_m": None,
        "num_subchannels": None,
        "radio": {},
        "mcs_table": "default",
    },
    "message": {"packet_bits": None},
    "field_size": 256,
    "solver": {"search_cap": DEFAULT_SEARCH_CAP, "mcs_candidates": None},
    "simulation": {"trials": 10_000, "seed": 0, "policy": "heuristic"},
}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def schema() -> dict:
    return json.loads(resources.files("uepram.data").joinpath("config.schema.json").read_text())


def _read_source(path: str | Path) -> str:
    p = Path(path)
    if p.is_file():
        return p.read_text()
    name = str(path)
    for key in (name, name.removesuffix(".yaml")):
        if key in BUNDLED:
            return resources.files("uepram.data").joinpath(BUNDLED[key]).read_text()
    raise ConfigError([f"config file not found: {path}"])


def _field(error: jsonschema.ValidationError) -> str:
    parts = []
    for item in error.absolute_path:
        parts.append(f"[{item}]" if isinstance(item, int) else (("." if parts else "") + str(item)))
    return "".join(parts) or "<root>"


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _semantic_checks(cfg: dict) -> list[str]:
    errors = []
    L = len(cfg["message"]["layer_sizes"])
    sla = cfg["sla"]
    if len(sla["coverage_targets"]) != L:
        errors.append(f"sla.coverage_targets: expected {L} entries (one per layer), got {len(sla['coverage_targets'])}")
    if len(sla["budget_caps"]) != L:
        errors.append(f"sla.budget_caps: expected {L} entries (one per layer), got {len(sla['budget_caps'])}")
    sc = cfg["scenario"]
    if sc["num_subchannels"] is not None and sc["num_subchannels"] < L:
        errors.append(f"scenario.num_subchannels: need at least one subchannel per window ({L})")
    try:
        table = _mcs_table(sc["mcs_table"])
    except ValueError as exc:
        errors.append(f"scenario.mcs_table: {exc}")
    else:
        cands = cfg["solver"]["mcs_candidates"]
        if cands and max(cands) > len(table):
            errors.append(f"solver.mcs_candidates: index {max(cands)} exceeds table size {len(table)}")
    return errors


def load_config(path: str | Path, overrides: dict | None = None) -> dict:
    """Read, validate and complete a configuration. Raises ConfigError."""
    try:
        raw = yaml.safe_load(_read_source(path))
    except yaml.YAMLError as exc:
        raise ConfigError([f"<file>: not valid YAML ({exc})"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["<root>: expected a mapping"])
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise ConfigError([f"{_field(e)}: {e.message}" for e in errors])
    cfg = _merge(DEFAULTS, raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            section, name = key.split(".")
            cfg[section][name] = value
    problems = _semantic_checks(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _mcs_table(spec) -> McsTable:
    if spec == "default":
        return McsTable.default()
    return McsTable.from_records(spec)


@dataclass
class Experiment:
    config: dict
    scenario: Scenario
    profile: ErasureProfile
    message: LayeredMessage
    sla: SlaConstraints
    q: int

    @property
    def hash(self) -> str:
        return config_hash(self.config)


def build_experiment(cfg: dict) -> Experiment:
    sc = cfg["scenario"]
    msg = LayeredMessage(tuple(cfg["message"]["layer_sizes"]), cfg["message"]["packet_bits"])
    q = int(cfg["field_size"])
    radio = RadioParams(**sc["radio"])
    table = _mcs_table(sc["mcs_table"])
    subchannels = sc["num_subchannels"] or msg.num_layers
    if sc["type"] == "single_cell":
        scenario = build_single_cell(sc["num_users"], sc["cell_radius_m"], radio, table, q,
                                     subchannels, sc["axis_deg"])
    else:
        scenario = build_sfn(sc["grid_users"], radio, table, q, subchannels, sc["half_width_m"])
    sla = SlaConstraints(cfg["sla"]["q_hat"], tuple(cfg["sla"]["coverage_targets"]),
                         tuple(cfg["sla"]["budget_caps"]))
    return Experiment(cfg, scenario, erasure_profile(scenario), msg, sla, q)
