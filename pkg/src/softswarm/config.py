"""Run configuration: a YAML document with nested sections.

Unknown keys anywhere in the document are hard errors, so sweep typos
cannot silently fall back to defaults.  ``parse_config`` resolves every
default and ``normalize_config`` renders the fully resolved document in a
canonical form (sorted keys), so parse -> normalize round-trips to
identical text.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from . import objectives
from .errors import ConfigError
from .experiments import METHODS, PAPER_METHODS

EXPERIMENTS = ("exit_time", "transition_time", "particle_sweep", "entry_time",
               "single_trajectory")

#: sweep coordinate per experiment kind
SWEEP_KEYS = {
    "exit_time": "a",
    "transition_time": "a",
    "particle_sweep": "n",
    "entry_time": "radius",
    "single_trajectory": None,
}

_GLOBAL_DEFAULTS = {
    "methods": list(PAPER_METHODS),
    "schedule": {"beta0": 2.0, "gamma": 0.9995},
    "integrator": {"dt": 0.01, "sigma": 1.0, "max_steps": 10_000_000},
    "init": {"kind": "ball_around_minimum", "radius": 0.1, "gauss_std": 0.05,
             "which_minimum": None},
    "stop": {"epsilon": 0.25, "quorum": "first_particle"},
    "n": 100,
    "runs": 96,
    "master_seed": 2024,
    "threads": 1,
    "trace_stride": 0,
}

_EXPERIMENT_DEFAULTS = {
    "exit_time": {
        "objective": {"name": "double_well", "params": {"a": 1.0}},
        "sweep": {"values": [0.8, 1.0, 1.2, 1.5]},
        "methods": ["softmin_fixed"],
        "integrator": {"sigma": 0.1},
    },
    "transition_time": {
        "objective": {"name": "double_well", "params": {"a": 1.0}},
        "sweep": {"values": [0.5, 1.0, 1.5, 2.0]},
    },
    "particle_sweep": {
        "objective": {"name": "double_well", "params": {"a": 1.0}},
        "sweep": {"values": [4, 10, 25, 50, 100]},
    },
    "entry_time": {
        "objective": {"name": "ackley", "params": {}},
        "sweep": {"values": [1.0, 2.0, 3.0, 4.0, 5.0]},
        "init": {"kind": "circle_around_point"},
    },
    "single_trajectory": {
        "objective": {"name": "double_well", "params": {"a": 1.0}},
        "sweep": {"values": []},
        "methods": ["softmin_fixed"],
        "runs": 1,
        "trace_stride": 100,
        "integrator": {"max_steps": 10_000},
    },
}

_SCHEMA = {
    "experiment": None,
    "objective": {"name": None, "params": None},
    "sweep": {"values": None},
    "methods": None,
    "schedule": {"beta0": None, "gamma": None},
    "integrator": {"dt": None, "sigma": None, "max_steps": None},
    "init": {"kind": None, "radius": None, "gauss_std": None,
             "which_minimum": None},
    "stop": {"epsilon": None, "quorum": None},
    "n": None,
    "runs": None,
    "master_seed": None,
    "threads": None,
    "trace_stride": None,
}


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    objective_name: str
    objective_params: dict
    sweep_key: str | None
    sweep_values: tuple
    methods: tuple
    beta0: float
    gamma: float
    dt: float
    sigma: float
    max_steps: int
    init_kind: str
    init_radius: float
    init_gauss_std: float
    init_which_minimum: int | None
    stop_epsilon: float
    stop_quorum: object
    n: int
    runs: int
    master_seed: int
    threads: int
    trace_stride: int

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "objective": {"name": self.objective_name,
                          "params": dict(self.objective_params)},
            "sweep": {"values": list(self.sweep_values)},
            "methods": list(self.methods),
            "schedule": {"beta0": self.beta0, "gamma": self.gamma},
            "integrator": {"dt": self.dt, "sigma": self.sigma,
                           "max_steps": self.max_steps},
            "init": {"kind": self.init_kind, "radius": self.init_radius,
                     "gauss_std": self.init_gauss_std,
                     "which_minimum": self.init_which_minimum},
            "stop": {"epsilon": self.stop_epsilon, "quorum": self.stop_quorum},
            "n": self.n,
            "runs": self.runs,
            "master_seed": self.master_seed,
            "threads": self.threads,
            "trace_stride": self.trace_stride,
        }


def _collect_unknown(doc, schema, path=""):
    if not isinstance(doc, dict):
        return []
    unknown = []
    for key, value in doc.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in schema:
            unknown.append(where)
        elif isinstance(schema[key], dict) and key != "params":
            unknown.extend(_collect_unknown(value, schema[key], where))
    return unknown


def _reject_unknown(doc, schema):
    unknown = _collect_unknown(doc, schema)
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(sorted(unknown)))


def _merged(base: dict, extra: dict) -> dict:
    out = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merged(out[key], value)
        else:
            out[key] = value
    return out


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def parse_config(text: str) -> RunConfig:
    """Parse and fully resolve a YAML run configuration."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    if "experiment" not in doc:
        raise ConfigError("missing required key: experiment")
    experiment = doc["experiment"]
    _require(experiment in EXPERIMENTS,
             f"experiment must be one of {EXPERIMENTS}, got {experiment!r}")

    # compact objective form first, then structural validation
    if isinstance(doc.get("objective"), str):
        name, params = objectives.parse_objective_id(doc["objective"])
        doc = dict(doc)
        doc["objective"] = {"name": name, "params": params}
    _reject_unknown(doc, _SCHEMA)

    merged = _merged(_GLOBAL_DEFAULTS, _EXPERIMENT_DEFAULTS[experiment])
    merged = _merged(merged, {k: v for k, v in doc.items() if k != "experiment"})

    obj = merged["objective"]
    _require(isinstance(obj, dict) and "name" in obj,
             "objective must provide a name")
    name = obj["name"]
    params = obj.get("params") or {}
    _require(name in objectives.CATALOG,
             f"unknown objective {name!r}; catalog has {sorted(objectives.CATALOG)}")
    if experiment == "entry_time":
        _require(name == "ackley", "entry_time requires the ackley objective")
    if experiment in ("transition_time",):
        _require(name in ("double_well", "quadruple_well"),
                 "transition_time requires double_well or quadruple_well")
    if experiment == "exit_time":
        _require(name == "double_well", "exit_time requires double_well")

    methods = list(merged["methods"])
    _require(len(methods) >= 1, "methods must be nonempty")
    for m in methods:
        _require(m in METHODS, f"unknown method {m!r}; have {sorted(METHODS)}")

    sweep_key = SWEEP_KEYS[experiment]
    sweep_values = list(merged["sweep"]["values"])
    if sweep_key is not None:
        _require(len(sweep_values) >= 1, "sweep.values must be nonempty")
        for v in sweep_values:
            _require(isinstance(v, (int, float)) and v > 0,
                     f"sweep value {v!r} must be a positive number")

    sched = merged["schedule"]
    integ = merged["integrator"]
    init = merged["init"]
    stop = merged["stop"]
    _require(sched["beta0"] > 0, f"schedule.beta0 must be > 0, got {sched['beta0']}")
    _require(sched["gamma"] > 0, f"schedule.gamma must be > 0, got {sched['gamma']}")
    _require(integ["dt"] > 0, f"integrator.dt must be > 0, got {integ['dt']}")
    _require(integ["sigma"] >= 0,
             f"integrator.sigma must be >= 0, got {integ['sigma']}")
    _require(int(integ["max_steps"]) >= 1, "integrator.max_steps must be >= 1")
    _require(init["kind"] in ("ball_around_minimum", "circle_around_point"),
             f"unsupported init.kind {init['kind']!r}")
    _require(init["radius"] >= 0, "init.radius must be >= 0")
    _require(init["gauss_std"] >= 0, "init.gauss_std must be >= 0")
    _require(stop["epsilon"] > 0, "stop.epsilon must be > 0")
    quorum = stop["quorum"]
    if quorum != "first_particle":
        _require(isinstance(quorum, (int, float)) and 0 < float(quorum) <= 1,
                 "stop.quorum must be 'first_particle' or a fraction in (0, 1]")
        quorum = float(quorum)
    _require(int(merged["n"]) >= 1, "n must be >= 1")
    _require(int(merged["runs"]) >= 1, "runs must be >= 1")
    _require(int(merged["threads"]) >= 1, "threads must be >= 1")
    _require(int(merged["trace_stride"]) >= 0, "trace_stride must be >= 0")
    _require(int(merged["master_seed"]) >= 0, "master_seed must be >= 0")

    # constructing the objective validates parameter ranges
    objectives.get_objective(name, **params)

    wm = init["which_minimum"]
    return RunConfig(
        experiment=experiment,
        objective_name=name,
        objective_params=dict(params),
        sweep_key=sweep_key,
        sweep_values=tuple(sweep_values),
        methods=tuple(methods),
        beta0=float(sched["beta0"]),
        gamma=float(sched["gamma"]),
        dt=float(integ["dt"]),
        sigma=float(integ["sigma"]),
        max_steps=int(integ["max_steps"]),
        init_kind=init["kind"],
        init_radius=float(init["radius"]),
        init_gauss_std=float(init["gauss_std"]),
        init_which_minimum=None if wm is None else int(wm),
        stop_epsilon=float(stop["epsilon"]),
        stop_quorum=quorum,
        n=int(merged["n"]),
        runs=int(merged["runs"]),
        master_seed=int(merged["master_seed"]),
        threads=int(merged["threads"]),
        trace_stride=int(merged["trace_stride"]),
    )


def normalize_config(config: RunConfig) -> str:
    """Canonical YAML text of the fully resolved configuration."""
    return yaml.safe_dump(config.to_dict(), sort_keys=True,
                          default_flow_style=False)
