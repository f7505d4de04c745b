"""Experiment configuration: nested dataclasses loaded from and saved to YAML.

Schema (all keys lower case)::

    plant:   {A_p: [[..]], B_p: [[..]], L: [[..]]}
    design:  {gamma_c, tau_c_seconds, upsilon_flops,
              gain: cheap | poles, poles: [..], key: dynamic | static}
    crypto:  {key_bits, mode: plain | static | dynamic, sensitivity: auto | <float>,
              state_bound}
    sim:     {T, seed, monte_carlo_runs}
    prior:   {mu: [..] | null, Lambda: [[..]] | identity | zero}
    output:  {directory, formats: [csv, json]}

Only ``plant`` and ``design`` are required; other blocks fall back to defaults.
"""
from dataclasses import MISSING, asdict, dataclass, field, fields

import numpy as np
import yaml

from .records import atomic_open

__all__ = [
    "ConfigError",
    "PlantConfig",
    "DesignConfig",
    "CryptoConfig",
    "SimConfig",
    "PriorConfig",
    "OutputConfig",
    "ExperimentConfig",
    "load_config",
    "save_config",
    "config_from_dict",
]


class ConfigError(ValueError):
    pass


def _matrix(value, name, line=None):
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(_at(line, f"{name} must be a numeric array")) from exc
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2 or not np.all(np.isfinite(M)):
        raise ConfigError(_at(line, f"{name} must be a finite 2-D array"))
    return M


def _at(line, msg):
    return msg if line is None else f"line {line}: {msg}"


@dataclass
class PlantConfig:
    A_p: list
    B_p: list
    L: list

    def arrays(self):
        return _matrix(self.A_p, "A_p"), _matrix(self.B_p, "B_p"), _matrix(self.L, "L")


@dataclass
class DesignConfig:
    gamma_c: float
    tau_c_seconds: float
    upsilon_flops: float
    gain: str = "cheap"
    poles: list | None = None
    key: str = "dynamic"


@dataclass
class CryptoConfig:
    key_bits: int = 64
    mode: str = "dynamic"
    sensitivity: object = "auto"
    state_bound: float = 100.0


@dataclass
class SimConfig:
    T: int = 100
    seed: int = 0
    monte_carlo_runs: int = 1


@dataclass
class PriorConfig:
    mu: list | None = None
    Lambda: object = "identity"


@dataclass
class OutputConfig:
    directory: str = "out"
    formats: list = field(default_factory=lambda: ["csv", "json"])


@dataclass
class ExperimentConfig:
    plant: PlantConfig
    design: DesignConfig
    crypto: CryptoConfig = field(default_factory=CryptoConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    prior: PriorConfig = field(default_factory=PriorConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def plant_model(self):
        from .simulator import PlantModel

        return PlantModel(*self.plant.arrays())

    def design_spec(self):
        from .designer import DesignSpec

        d = self.design
        return DesignSpec(self.plant_model(), d.gamma_c, d.tau_c_seconds, d.upsilon_flops)

    def prior_model(self):
        from .adversary import Prior

        n = _matrix(self.plant.A_p, "A_p").shape[0]
        N = n * n
        mu = np.zeros(N) if self.prior.mu is None else np.asarray(self.prior.mu, dtype=float).ravel()
        lam = self.prior.Lambda
        if lam == "identity":
            Lam = np.eye(N)
        elif lam == "zero":
            Lam = np.zeros((N, N))
        else:
            Lam = _matrix(lam, "prior.Lambda")
        return Prior(mu, Lam)

    def to_dict(self):
        return asdict(self)


_SECTIONS = {
    "plant": (PlantConfig, True),
    "design": (DesignConfig, True),
    "crypto": (CryptoConfig, False),
    "sim": (SimConfig, False),
    "prior": (PriorConfig, False),
    "output": (OutputConfig, False),
}


def _required(cls):
    return [f.name for f in fields(cls) if f.default is MISSING and f.default_factory is MISSING]


def _coerce_float(v):
    # YAML 1.1 reads "1e-6" (no dot) as a string
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return v
    return v


def _line_map(text):
    """``{(section, key): line}`` (1-based) from the YAML node tree."""
    lines = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines
    if not isinstance(root, yaml.MappingNode):
        return lines
    for knode, vnode in root.value:
        lines[(knode.value, None)] = knode.start_mark.line + 1
        if isinstance(vnode, yaml.MappingNode):
            for k2, _ in vnode.value:
                lines[(knode.value, k2.value)] = k2.start_mark.line + 1
    return lines


def config_from_dict(data, lines=None):
    lines = lines or {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of sections")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(_at(lines.get((name, None)), f"unknown section {name!r}"))
    built = {}
    for name, (cls, required) in _SECTIONS.items():
        block = data.get(name)
        if block is None:
            if required:
                raise ConfigError(f"missing required section {name!r}")
            built[name] = cls()
            continue
        if not isinstance(block, dict):
            raise ConfigError(_at(lines.get((name, None)), f"section {name!r} must be a mapping"))
        known = {f.name for f in fields(cls)}
        for key in block:
            if key not in known:
                raise ConfigError(_at(lines.get((name, key)), f"unknown field {name}.{key}"))
        for key in _required(cls):
            if key not in block:
                raise ConfigError(_at(lines.get((name, None)), f"missing required field {name}.{key}"))
        if name in ("design", "crypto"):
            block = {k: _coerce_float(v) for k, v in block.items()}
        built[name] = cls(**block)
    cfg = ExperimentConfig(**built)
    _validate(cfg, lines)
    return cfg


def _validate(cfg, lines):
    def fail(section, key, msg):
        raise ConfigError(_at(lines.get((section, key), lines.get((section, None))), msg))

    A = _matrix(cfg.plant.A_p, "plant.A_p", lines.get(("plant", "A_p")))
    B = _matrix(cfg.plant.B_p, "plant.B_p", lines.get(("plant", "B_p")))
    L = _matrix(cfg.plant.L, "plant.L", lines.get(("plant", "L")))
    n = A.shape[0]
    if A.shape != (n, n):
        fail("plant", "A_p", f"plant.A_p must be square, got {A.shape}")
    if B.shape[0] != n:
        fail("plant", "B_p", f"plant.B_p must have {n} rows, got {B.shape[0]}")
    if L.shape != (n, n):
        fail("plant", "L", f"plant.L must be {n}x{n}, got {L.shape}")
    d = cfg.design
    for key in ("gamma_c", "tau_c_seconds", "upsilon_flops"):
        v = getattr(d, key)
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
            fail("design", key, f"design.{key} must be a positive number, got {v!r}")
    if d.gain not in ("cheap", "poles"):
        fail("design", "gain", f"design.gain must be 'cheap' or 'poles', got {d.gain!r}")
    if d.gain == "poles" and (d.poles is None or len(d.poles) != n):
        fail("design", "poles", f"design.poles must list {n} poles when gain is 'poles'")
    if d.key not in ("dynamic", "static"):
        fail("design", "key", f"design.key must be 'dynamic' or 'static', got {d.key!r}")
    c = cfg.crypto
    if c.mode not in ("plain", "static", "dynamic"):
        fail("crypto", "mode", f"crypto.mode must be plain, static or dynamic, got {c.mode!r}")
    if not isinstance(c.key_bits, int) or c.key_bits < 8:
        fail("crypto", "key_bits", f"crypto.key_bits must be an integer >= 8, got {c.key_bits!r}")
    if c.sensitivity != "auto":
        if not isinstance(c.sensitivity, (int, float)) or not c.sensitivity > 0:
            fail("crypto", "sensitivity", "crypto.sensitivity must be 'auto' or a positive number")
    if not c.state_bound > 0:
        fail("crypto", "state_bound", "crypto.state_bound must be positive")
    s = cfg.sim
    if not isinstance(s.T, int) or s.T < 0:
        fail("sim", "T", f"sim.T must be a non-negative integer, got {s.T!r}")
    if not isinstance(s.seed, int):
        fail("sim", "seed", f"sim.seed must be an integer, got {s.seed!r}")
    if not isinstance(s.monte_carlo_runs, int) or s.monte_carlo_runs < 1:
        fail("sim", "monte_carlo_runs", "sim.monte_carlo_runs must be a positive integer")
    p = cfg.prior
    if p.mu is not None and np.asarray(p.mu).size != n * n:
        fail("prior", "mu", f"prior.mu must have {n * n} entries")
    if p.Lambda not in ("identity", "zero"):
        Lam = _matrix(p.Lambda, "prior.Lambda", lines.get(("prior", "Lambda")))
        if Lam.shape != (n * n, n * n):
            fail("prior", "Lambda", f"prior.Lambda must be {n * n}x{n * n}")
    bad = set(cfg.output.formats) - {"csv", "json"}
    if bad:
        fail("output", "formats", f"unsupported output formats {sorted(bad)}")


def load_config(path):
    with open(path) as fh:
        text = fh.read()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        raise ConfigError(f"{path}: {where}{getattr(exc, 'problem', exc)}") from exc
    try:
        return config_from_dict(data, _line_map(text))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def save_config(cfg, path):
    with atomic_open(path) as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False, default_flow_style=None)
