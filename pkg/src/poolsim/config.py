"""Experiment configuration: one structured document per experiment.

Science parameters live in the config file; operational concerns
(workers, output directory, log level) are CLI flags.  Validation
collects every problem before reporting, so a bad file surfaces all its
errors at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

__all__ = ["ExperimentConfig", "ConfigError", "parse_config", "COMMANDS", "ESTIMATORS", "ANALYSES"]

COMMANDS = ("simulate-exact", "simulate-box", "branching", "estimate", "analyze")

ESTIMATORS = {
    "kurtz": {"lambda", "pool_radius", "t", "annuli", "replicas"},
    "hazard": {"R", "radii", "replicas", "t_max", "intensity"},
    "refill": {"lambda", "R", "t", "probe", "replicas", "ratio_threshold"},
    "hitting": {"x_radius", "k", "replicas"},
    "entered": {"lambda", "k", "replicas"},
    "exp-lln": {"n", "weight_rule"},
}

ANALYSES = {
    "quantiles": {"inputs", "grid_points"},
    "audit": {"inputs"},
    "stall": {"inputs", "alpha", "beta", "T0"},
    "growth-fit": {"inputs", "t_min", "t_max", "expected_range"},
}

_TOP_LEVEL_KEYS = {"command", "parameters", "replicas", "workers", "master_seed", "output_dir"}

# per-command parameter schema: name -> (default, checker, bound description)
_POSITIVE = ("must be > 0", lambda v: isinstance(v, (int, float)) and math.isfinite(v) and v > 0)
_NONNEG = ("must be >= 0", lambda v: isinstance(v, (int, float)) and math.isfinite(v) and v >= 0)
_POS_INT = ("must be a positive integer", lambda v: isinstance(v, int) and v > 0)

_SCHEMAS: dict[str, dict[str, tuple]] = {
    "simulate-exact": {
        "lambda": (None, *_POSITIVE),
        "horizon": (None, *_POSITIVE),
        "sim_radius": ("auto", *_POSITIVE),
        "target_radius_hint": (1.0, *_POSITIVE),
        "truncation_tol": (1e-3, *_POSITIVE),
        "cap": (10_000_000, *_POS_INT),
    },
    "simulate-box": {
        # defaults follow the reference simulation protocol
        "lambda": (1.0, *_NONNEG),
        "box_side": (800.0, *_POSITIVE),
        "dt": (0.01, *_POSITIVE),
        "horizon": (100.0, *_POSITIVE),
        "kinematics": (
            "random-walk",
            "must be 'random-walk' or 'brownian'",
            lambda v: v in ("random-walk", "brownian"),
        ),
        "cap": (10_000_000, *_POS_INT),
    },
    "branching": {
        "lambdas": (
            [0.5, 1.0, 1.1, 1.25, 1.5, 2.0, 2.5, 3.0],
            "must be a list of positive numbers",
            lambda v: isinstance(v, list) and v and all(
                isinstance(x, (int, float)) and x > 0 for x in v
            ),
        ),
        "offspring_mean": (1.0, *_POSITIVE),
        "root_mean": (1.0, *_POSITIVE),
        "progeny_samples": (100_000, *_POS_INT),
        "progeny_cap": (1_000_000, *_POS_INT),
        "hazard_constant": (1.0, *_POSITIVE),
        "dominating_steps": (0, "must be an integer >= 0", lambda v: isinstance(v, int) and v >= 0),
    },
}


def _check_estimator(spec: dict) -> list[str]:
    errors = []
    name = spec.get("estimator")
    if name is None:
        errors.append("missing required parameter 'estimator'")
    elif name not in ESTIMATORS:
        errors.append(f"estimator must be one of {sorted(ESTIMATORS)}, got '{name}'")
    else:
        for key in sorted(set(spec) - ESTIMATORS[name] - {"estimator"}):
            errors.append(f"unknown parameter '{key}' for estimator {name}")
    return errors


class ConfigError(ValueError):
    """All validation problems of a config document."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    parameters: dict = field(default_factory=dict)
    replicas: int = 1
    workers: int = 1
    master_seed: int = 0
    output_dir: str | None = None


def parse_config(doc, command: str | None = None, subject: str | None = None) -> ExperimentConfig:
    """Parse and fully validate a config document (YAML/JSON text, or an
    already-loaded mapping).  Raises ConfigError listing every problem.

    ``subject`` is the estimator/analysis name given positionally on the
    command line; it must agree with the document when both are present.
    """
    if isinstance(doc, str):
        try:
            data = yaml.safe_load(doc)
        except yaml.YAMLError as exc:
            raise ConfigError([f"config is not valid YAML/JSON: {exc}"]) from exc
    else:
        data = doc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(["config document must be a mapping"])

    errors: list[str] = []
    for key in sorted(set(data) - _TOP_LEVEL_KEYS):
        errors.append(f"unknown key '{key}'")

    cmd = data.get("command", command)
    if cmd is None:
        errors.append("missing required key 'command'")
    elif cmd not in COMMANDS:
        errors.append(f"command must be one of {list(COMMANDS)}, got '{cmd}'")
    elif command is not None and cmd != command:
        errors.append(f"config command '{cmd}' does not match invoked command '{command}'")

    replicas = data.get("replicas", 1)
    if not (isinstance(replicas, int) and replicas >= 1):
        errors.append(f"replicas must be an integer >= 1, got {replicas!r}")
    workers = data.get("workers", 1)
    if not (isinstance(workers, int) and workers >= 1):
        errors.append(f"workers must be an integer >= 1, got {workers!r}")
    master_seed = data.get("master_seed", 0)
    if not isinstance(master_seed, int):
        errors.append(f"master_seed must be an integer, got {master_seed!r}")
    output_dir = data.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        errors.append("output_dir must be a string path")

    raw_params = data.get("parameters", {})
    if not isinstance(raw_params, dict):
        errors.append("parameters must be a mapping")
        raw_params = {}
    params: dict = {}

    if cmd in _SCHEMAS:
        schema = _SCHEMAS[cmd]
        for key in sorted(set(raw_params) - set(schema)):
            errors.append(f"unknown parameter '{key}' for {cmd}")
        for key, (default, bound, check) in schema.items():
            if key in raw_params:
                value = raw_params[key]
                if not check(value):
                    errors.append(f"parameter '{key}' {bound} (got {value!r})")
                else:
                    params[key] = value
            elif default is None:
                errors.append(f"missing required parameter '{key}' for {cmd}")
            else:
                params[key] = default
        if cmd == "simulate-exact" and not errors:
            hint = params["target_radius_hint"]
            if hint < 1.0 / math.sqrt(math.pi):
                errors.append("parameter 'target_radius_hint' must be >= 1/sqrt(pi)")
            elif params["sim_radius"] != "auto" and params["sim_radius"] <= hint:
                errors.append("parameter 'sim_radius' must be > target_radius_hint")
    elif cmd == "estimate":
        params = dict(raw_params)
        if "batch" in params:
            batch = params["batch"]
            if not isinstance(batch, list) or not batch:
                errors.append("parameter 'batch' must be a non-empty list of estimator specs")
            else:
                for i, item in enumerate(batch):
                    if not isinstance(item, dict):
                        errors.append(f"batch[{i}] must be a mapping")
                        continue
                    errors.extend(f"batch[{i}]: {e}" for e in _check_estimator(item))
            for key in sorted(set(params) - {"batch"}):
                errors.append(f"unknown parameter '{key}' alongside 'batch'")
        else:
            if subject is not None:
                if params.get("estimator") not in (None, subject):
                    errors.append(
                        f"config estimator '{params['estimator']}' does not match "
                        f"invoked estimator '{subject}'"
                    )
                params.setdefault("estimator", subject)
            errors.extend(_check_estimator(params))
    elif cmd == "analyze":
        params = dict(raw_params)
        if subject is not None:
            if params.get("analysis") not in (None, subject):
                errors.append(
                    f"config analysis '{params['analysis']}' does not match "
                    f"invoked analysis '{subject}'"
                )
            params.setdefault("analysis", subject)
        name = params.get("analysis")
        if name is None:
            errors.append("missing required parameter 'analysis'")
        elif name not in ANALYSES:
            errors.append(f"analysis must be one of {sorted(ANALYSES)}, got '{name}'")
        else:
            for key in sorted(set(params) - ANALYSES[name] - {"analysis"}):
                errors.append(f"unknown parameter '{key}' for analysis {name}")
            if "inputs" not in params:
                errors.append("missing required parameter 'inputs'")

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(
        command=cmd,
        parameters=params,
        replicas=replicas,
        workers=workers,
        master_seed=master_seed,
        output_dir=output_dir,
    )
