"""Scenario configuration: strict YAML schema with defaults.

A config names one scenario plus its model parameters, integrator settings
and optional noise block.  Parsing is strict: unknown keys, duplicate keys
and type mismatches are rejected with a diagnostic naming the offending key.
Complex amplitudes are written as [re, im] pairs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError

SCENARIOS = (
    "one_spin_fixed_point",
    "thermalization",
    "disentangle",
    "butterfly",
    "driven_lc",
    "custom",
)

# Fixed reference state for the default driven_lc initial perturbation.
DEFAULT_REFERENCE_AMPLITUDES = ((0.5, 0.0), (0.5, 0.0), (0.5, 0.0), (0.5, 0.0))


class _StrictLoader(yaml.SafeLoader):
    """SafeLoader that rejects duplicate mapping keys with position info."""


def _construct_mapping(loader, node, deep=False):
    mapping = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in mapping:
            mark = key_node.start_mark
            raise ConfigError(
                f"duplicate key {key!r} at line {mark.line + 1}, column {mark.column + 1}"
            )
        mapping[key] = loader.construct_object(value_node, deep=deep)
    return mapping


_StrictLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping
)


def _check_keys(mapping, allowed, where):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(
                f"unknown key {key!r} in {where} (allowed: {', '.join(sorted(allowed))})"
            )


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {type(value).__name__}")
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError(f"{where}: must be finite")
    return v


def _integer(value, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {type(value).__name__}")
    return value


def _boolean(value, where):
    if not isinstance(value, bool):
        raise ConfigError(f"{where}: expected a boolean, got {type(value).__name__}")
    return value


def _string(value, where):
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a string, got {type(value).__name__}")
    return value


def _vec3(value, where):
    if not isinstance(value, list) or len(value) != 3:
        raise ConfigError(f"{where}: expected a list of 3 numbers")
    return [_number(v, where) for v in value]


def _unit3(value, where):
    v = _vec3(value, where)
    n = math.sqrt(sum(x * x for x in v))
    if abs(n - 1.0) > 1e-9:
        raise ConfigError(f"{where}: expected a unit 3-vector (norm is {n:.6g})")
    return [x / n for x in v]


def _amplitudes(value, where, length):
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise ConfigError(f"{where}: expected {length} [re, im] pairs")
    out = []
    for i, pair in enumerate(value):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ConfigError(f"{where}[{i}]: expected an [re, im] pair")
        out.append(complex(_number(pair[0], f"{where}[{i}][0]"),
                           _number(pair[1], f"{where}[{i}][1]")))
    v = np.array(out, dtype=complex)
    if np.vdot(v, v).real == 0.0:
        raise ConfigError(f"{where}: amplitudes must not all vanish")
    return v


def _amp_pairs(vec):
    return [[float(z.real), float(z.imag)] for z in vec]


def _jsonify(val):
    if isinstance(val, np.ndarray):
        if np.iscomplexobj(val):
            if val.ndim == 1:
                return _amp_pairs(val)
            return [_amp_pairs(row) for row in val]
        return val.tolist()
    if isinstance(val, dict):
        return {k: _jsonify(v) for k, v in val.items()}
    if isinstance(val, (list, tuple)):
        return [_jsonify(v) for v in val]
    return val


def _next_pow2(n: int) -> int:
    p = 256
    while p < n:
        p *= 2
    return p


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_final: float
    renormalize: bool = True
    guard_eps: float = 1e-12

    def to_dict(self):
        return {"dt": self.dt, "t_final": self.t_final,
                "renormalize": self.renormalize, "guard_eps": self.guard_eps}


@dataclass(frozen=True)
class NoiseConfig:
    variance: float
    correlation_time: float
    t_total: float
    n_grid: int
    couple: tuple

    def to_dict(self):
        return {"variance": self.variance, "correlation_time": self.correlation_time,
                "t_total": self.t_total, "n_grid": self.n_grid,
                "couple": list(self.couple)}


@dataclass
class ScenarioConfig:
    scenario: str
    seed: int
    ensemble_size: int
    output: Optional[str]
    sample_stride: int
    integrator: IntegratorConfig
    noise: Optional[NoiseConfig]
    model: dict = field(default_factory=dict)

    def to_dict(self):
        """Resolved echo of the configuration (manifest payload)."""
        model = {key: _jsonify(val) for key, val in self.model.items()}
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "ensemble_size": self.ensemble_size,
            "output": self.output,
            "sample_stride": self.sample_stride,
            "integrator": self.integrator.to_dict(),
            "noise": self.noise.to_dict() if self.noise else None,
            "model": model,
        }


def system_dimension(config: ScenarioConfig) -> int:
    if config.scenario in ("one_spin_fixed_point", "thermalization"):
        return 2
    if config.scenario == "custom":
        return config.model["dim"]
    return 4


_TOP_KEYS = {"scenario", "seed", "ensemble_size", "output", "sample_stride",
             "integrator", "noise", "model"}
_INTEGRATOR_KEYS = {"dt", "t_final", "renormalize", "guard_eps"}
_NOISE_KEYS = {"variance", "correlation_time", "t_total", "n_grid", "couple"}
_MODEL_KEYS = {
    "one_spin_fixed_point": {"omega", "target_axis", "drive_rate", "initial_bloch"},
    "thermalization": {"omega", "target_axis", "drive_rate", "initial_bloch"},
    "disentangle": {"drive_rate", "initial_entanglement", "initial_state"},
    "butterfly": {"drive_rate", "base", "epsilon", "psi_p"},
    "driven_lc": {"omega_a", "omega_1", "delta", "g", "drive_rate",
                  "epsilon", "psi_ref", "initial_state"},
    "custom": {"dim", "hamiltonian", "rule", "initial_state", "drive_rate"},
}
# Noise is mandatory for thermalization, optional where the Hamiltonian is
# free, and contradicts the H = 0 premise of the pure-drive scenarios.
_NOISE_ALLOWED = {"one_spin_fixed_point", "thermalization", "driven_lc", "custom"}


def _parse_integrator(section):
    if not isinstance(section, dict):
        raise ConfigError("integrator: expected a mapping")
    _check_keys(section, _INTEGRATOR_KEYS, "integrator")
    if "dt" not in section:
        raise ConfigError("integrator.dt is required")
    if "t_final" not in section:
        raise ConfigError("integrator.t_final is required")
    dt = _number(section["dt"], "integrator.dt")
    t_final = _number(section["t_final"], "integrator.t_final")
    if dt <= 0:
        raise ConfigError("integrator.dt: must be positive")
    if t_final < 0:
        raise ConfigError("integrator.t_final: must be nonnegative")
    renorm = _boolean(section.get("renormalize", True), "integrator.renormalize")
    guard = _number(section.get("guard_eps", 1e-12), "integrator.guard_eps")
    if guard <= 0:
        raise ConfigError("integrator.guard_eps: must be positive")
    return IntegratorConfig(dt=dt, t_final=t_final, renormalize=renorm, guard_eps=guard)


def _parse_noise(section, t_final, dim):
    if not isinstance(section, dict):
        raise ConfigError("noise: expected a mapping")
    _check_keys(section, _NOISE_KEYS, "noise")
    for key in ("variance", "correlation_time"):
        if key not in section:
            raise ConfigError(f"noise.{key} is required")
    variance = _number(section["variance"], "noise.variance")
    tau = _number(section["correlation_time"], "noise.correlation_time")
    if variance <= 0 or tau <= 0:
        raise ConfigError("noise.variance and noise.correlation_time must be positive")
    t_total = _number(section["t_total"], "noise.t_total") if "t_total" in section \
        else max(100.0 * tau, t_final)
    if t_total < t_final:
        raise ConfigError("noise.t_total: must cover the integration window t_final")
    if t_total < 100.0 * tau:
        raise ConfigError("noise.t_total: must cover at least 100 correlation times")
    if "n_grid" in section:
        n_grid = _integer(section["n_grid"], "noise.n_grid")
    else:
        n_grid = _next_pow2(int(math.ceil(20.0 * t_total / tau)))
    if n_grid < 256 or n_grid & (n_grid - 1):
        raise ConfigError("noise.n_grid: must be a power of two, at least 256")
    if t_total / n_grid > tau / 20.0:
        raise ConfigError("noise.n_grid: grid spacing exceeds correlation_time/20")
    if "couple" in section:
        couple = section["couple"]
        if not isinstance(couple, list) or not couple or \
                any((isinstance(s, bool) or not isinstance(s, int)) for s in couple):
            raise ConfigError("noise.couple: expected a list of spin numbers")
        couple = tuple(sorted(set(couple)))
        if any(s not in (1, 2) for s in couple) or (dim == 2 and couple != (1,)):
            raise ConfigError("noise.couple: spins must be 1 or 2 (only 1 for a single spin)")
    else:
        couple = (1,) if dim == 2 else (1, 2)
    return NoiseConfig(variance=variance, correlation_time=tau,
                       t_total=t_total, n_grid=n_grid, couple=couple)


def _parse_model(scenario, section):
    if not isinstance(section, dict):
        raise ConfigError("model: expected a mapping")
    _check_keys(section, _MODEL_KEYS[scenario], "model")
    m = {}

    def req(key):
        if key not in section:
            raise ConfigError(f"model.{key} is required for scenario {scenario}")
        return section[key]

    if scenario in ("one_spin_fixed_point", "thermalization"):
        m["omega"] = _vec3(req("omega"), "model.omega")
        m["target_axis"] = _unit3(req("target_axis"), "model.target_axis")
        m["drive_rate"] = _number(req("drive_rate"), "model.drive_rate")
        m["initial_bloch"] = _unit3(section.get("initial_bloch", [1.0, 0.0, 0.0]),
                                    "model.initial_bloch")
    elif scenario == "disentangle":
        m["drive_rate"] = _number(req("drive_rate"), "model.drive_rate")
        has_e = "initial_entanglement" in section
        has_state = "initial_state" in section
        if has_e == has_state:
            raise ConfigError(
                "model: give exactly one of initial_entanglement or initial_state"
            )
        if has_e:
            e = _number(section["initial_entanglement"], "model.initial_entanglement")
            if not 0.0 <= e <= 0.5:
                raise ConfigError("model.initial_entanglement: must lie in [0, 1/2]")
            m["initial_entanglement"] = e
        else:
            amps = _amplitudes(section["initial_state"], "model.initial_state", 4)
            m["initial_state"] = amps / np.linalg.norm(amps)
    elif scenario == "butterfly":
        m["drive_rate"] = _number(req("drive_rate"), "model.drive_rate")
        base = _string(req("base"), "model.base")
        if base not in ("singlet", "triplet"):
            raise ConfigError('model.base: expected "singlet" or "triplet"')
        m["base"] = base
        eps = _number(req("epsilon"), "model.epsilon")
        if eps < 0:
            raise ConfigError("model.epsilon: must be nonnegative")
        m["epsilon"] = eps
        amps = _amplitudes(req("psi_p"), "model.psi_p", 4)
        m["psi_p"] = amps / np.linalg.norm(amps)
    elif scenario == "driven_lc":
        for key in ("omega_a", "omega_1", "delta", "g", "drive_rate"):
            m[key] = _number(req(key), f"model.{key}")
        if "initial_state" in section:
            if "epsilon" in section or "psi_ref" in section:
                raise ConfigError(
                    "model: initial_state excludes epsilon and psi_ref"
                )
            amps = _amplitudes(section["initial_state"], "model.initial_state", 4)
            m["initial_state"] = amps / np.linalg.norm(amps)
        else:
            eps = _number(section.get("epsilon", 1e-3), "model.epsilon")
            if eps < 0:
                raise ConfigError("model.epsilon: must be nonnegative")
            m["epsilon"] = eps
            ref = section.get("psi_ref", [list(p) for p in DEFAULT_REFERENCE_AMPLITUDES])
            amps = _amplitudes(ref, "model.psi_ref", 4)
            m["psi_ref"] = amps / np.linalg.norm(amps)
    elif scenario == "custom":
        dim = _integer(req("dim"), "model.dim")
        if dim not in (2, 4):
            raise ConfigError("model.dim: must be 2 or 4")
        m["dim"] = dim
        ham = req("hamiltonian")
        if not isinstance(ham, list) or len(ham) != dim:
            raise ConfigError(f"model.hamiltonian: expected {dim} rows of [re, im] pairs")
        rows = [_amplitudes(row, f"model.hamiltonian[{i}]", dim)
                for i, row in enumerate(ham)]
        hmat = np.array(rows)
        if np.max(np.abs(hmat - hmat.conj().T)) > 1e-12:
            raise ConfigError("model.hamiltonian: must be Hermitian")
        m["hamiltonian"] = hmat
        rule = req("rule")
        if not isinstance(rule, dict) or "type" not in rule:
            raise ConfigError('model.rule: expected a mapping with a "type" key')
        _check_keys(rule, {"type", "target"}, "model.rule")
        rtype = _string(rule["type"], "model.rule.type")
        if rtype == "fixed":
            if "target" not in rule:
                raise ConfigError("model.rule.target is required for the fixed rule")
            m["rule"] = {"type": "fixed",
                         "target": _amplitudes(rule["target"], "model.rule.target", dim)}
        elif rtype == "spin_flip":
            if dim != 4:
                raise ConfigError("model.rule: spin_flip requires dim = 4")
            if "target" in rule:
                raise ConfigError("model.rule: spin_flip takes no target")
            m["rule"] = {"type": "spin_flip"}
        else:
            raise ConfigError('model.rule.type: expected "fixed" or "spin_flip"')
        amps = _amplitudes(req("initial_state"), "model.initial_state", dim)
        m["initial_state"] = amps / np.linalg.norm(amps)
        m["drive_rate"] = _number(req("drive_rate"), "model.drive_rate")
    if m.get("drive_rate", 0.0) < 0.0:
        raise ConfigError("model.drive_rate: must be nonnegative")
    return m


def parse_config(text: str, source: str = "<config>",
                 seed_override: int | None = None) -> ScenarioConfig:
    """Parse and fully validate one scenario config document."""
    try:
        raw = yaml.load(text, Loader=_StrictLoader)
    except ConfigError:
        raise
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: invalid YAML ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    _check_keys(raw, _TOP_KEYS, "top level")
    if "scenario" not in raw:
        raise ConfigError("scenario is required")
    scenario = _string(raw["scenario"], "scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(
            f"scenario: unknown name {scenario!r} (known: {', '.join(SCENARIOS)})"
        )

    integrator = _parse_integrator(raw.get("integrator", {}) or {})
    model = _parse_model(scenario, raw.get("model", {}) or {})

    dim = 2 if scenario in ("one_spin_fixed_point", "thermalization") else \
        model.get("dim", 4)

    noise = None
    if raw.get("noise") is not None:
        if scenario not in _NOISE_ALLOWED:
            raise ConfigError(f"noise: not supported for scenario {scenario}")
        noise = _parse_noise(raw["noise"], integrator.t_final, dim)
    if scenario == "thermalization" and noise is None:
        raise ConfigError("noise is required for the thermalization scenario")

    if seed_override is not None:
        seed = seed_override
    elif "seed" in raw:
        seed = _integer(raw["seed"], "seed")
    elif noise is not None:
        raise ConfigError("seed is required whenever noise is enabled")
    else:
        seed = 0
    if seed < 0:
        raise ConfigError("seed: must be nonnegative")

    ensemble = _integer(raw.get("ensemble_size", 1), "ensemble_size")
    if ensemble < 1:
        raise ConfigError("ensemble_size: must be at least 1")
    if ensemble > 1 and noise is None:
        raise ConfigError("ensemble_size > 1 requires noise")

    stride = _integer(raw.get("sample_stride", 1), "sample_stride")
    if stride < 1:
        raise ConfigError("sample_stride: must be at least 1")

    output = _string(raw["output"], "output") if "output" in raw else None

    return ScenarioConfig(
        scenario=scenario,
        seed=seed,
        ensemble_size=ensemble,
        output=output,
        sample_stride=stride,
        integrator=integrator,
        noise=noise,
        model=model,
    )


def load_config(path, seed_override: int | None = None) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    return parse_config(text, source=str(path), seed_override=seed_override)
