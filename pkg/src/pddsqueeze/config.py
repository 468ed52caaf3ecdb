"""Flat ``key = value`` scenario configs.

Syntax: one assignment per line, ``#`` starts a comment, keys are
case-sensitive. Numbers are SI; a ``2pi*`` prefix multiplies by 2 pi, so
``Delta_a = 2pi*50e6`` means 2 pi x 50 MHz in rad/s. List-valued keys take
comma-separated items.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields

from .cavity import LabInputs
from .errors import ConfigError
from .models import ModelSpec

SCENARIOS = ("qfi_dynamics", "qfi_peak_scan", "bayes", "dissipative_scan",
             "vc_params", "qfunction", "drive_profile")

# key -> parser kind
_KINDS = {
    "scenario": "str", "output_dir": "str", "seed": "int",
    # model
    "family": "str", "N": "int", "delta": "float", "chi": "float",
    "omega": "float", "gamma0": "float", "initial": "str",
    "theta": "float", "phi": "float",
    # lab
    "Lambda": "float", "gamma": "float", "kappa": "float", "Delta_a": "float",
    "Delta_c": "float", "eta0": "float", "tau": "float", "omega_r": "float",
    "k": "float", "g": "float", "kg_tau": "float",
    # numerics
    "dt": "float", "t_end": "float", "record_every": "int",
    # scans and estimation
    "N_list": "ints", "M_max": "int", "n_seeds": "int", "probe": "str",
    "t_probe": "float", "grid_size": "int",
    "omega_g": "float", "Delta_c_prime": "float", "U0": "float", "beta0": "float",
    "kappa_ratios": "floats", "drives": "strs",
    "state": "str", "n_theta": "int", "n_phi": "int",
    "Delta_c_prime0": "float", "samples": "int",
}

REQUIRED = {
    "qfi_dynamics": ("family", "N", "t_end"),
    "qfi_peak_scan": ("N_list",),
    "bayes": ("N", "M_max"),
    "dissipative_scan": ("N", "omega_g", "Delta_c_prime", "U0", "beta0", "kappa_ratios", "t_end"),
    "vc_params": ("Lambda", "gamma", "kappa", "Delta_a", "Delta_c", "eta0", "omega_r", "N"),
    "qfunction": ("N", "state"),
    "drive_profile": ("beta0", "omega", "Delta_c_prime0", "kappa", "t_end"),
}

_COMMON_DEFAULTS = {"output_dir": "out", "seed": 0}
DEFAULTS = {
    "qfi_dynamics": {"chi": 1.0, "delta": 0.0, "omega": 0.0, "gamma0": 0.0,
                     "initial": "down", "record_every": 1},
    "qfi_peak_scan": {"family": "tact_rwa", "chi": 1.0, "initial": "down"},
    "bayes": {"family": "tact_rwa", "chi": 1.0, "initial": "down", "probe": "peak",
              "n_seeds": 20, "grid_size": 4096},
    "dissipative_scan": {"drives": ("pdd", "oat"), "record_every": 100},
    "vc_params": {},
    "qfunction": {"n_theta": 91, "n_phi": 181, "theta": 0.0, "phi": 0.0,
                  "family": "tact_rwa", "chi": 1.0},
    "drive_profile": {"samples": 1000},
}

_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


def parse_number(text, kind="float"):
    """SI literal with optional ``2pi*`` prefix."""
    s = text.strip()
    scale = 1.0
    if s.startswith("2pi*"):
        if kind == "int":
            raise ValueError(f"2pi* prefix not allowed for integer value {text!r}")
        scale, s = 2 * math.pi, s[4:].strip()
    if not _NUMBER.match(s):
        raise ValueError(f"malformed number {text.strip()!r}")
    if kind == "int":
        v = float(s)
        if v != int(v):
            raise ValueError(f"expected an integer, got {text.strip()!r}")
        return int(v)
    return scale * float(s)


def _parse_value(kind, raw):
    if kind == "str":
        if not raw:
            raise ValueError("empty value")
        return raw
    if kind in ("int", "float"):
        return parse_number(raw, kind)
    items = [x.strip() for x in raw.split(",") if x.strip()]
    if not items:
        raise ValueError("empty list")
    if kind == "strs":
        return tuple(items)
    return tuple(parse_number(x, kind[:-1]) for x in items)


@dataclass(frozen=True)
class ScenarioConfig:
    """Resolved scenario configuration; unset optional keys are None."""

    scenario: str
    output_dir: str = "out"
    seed: int = 0
    family: str | None = None
    N: int | None = None
    delta: float | None = None
    chi: float | None = None
    omega: float | None = None
    gamma0: float | None = None
    initial: str | None = None
    theta: float | None = None
    phi: float | None = None
    Lambda: float | None = None
    gamma: float | None = None
    kappa: float | None = None
    Delta_a: float | None = None
    Delta_c: float | None = None
    eta0: float | None = None
    tau: float | None = None
    omega_r: float | None = None
    k: float | None = None
    g: float | None = None
    kg_tau: float | None = None
    dt: float | None = None
    t_end: float | None = None
    record_every: int | None = None
    N_list: tuple | None = None
    M_max: int | None = None
    n_seeds: int | None = None
    probe: str | None = None
    t_probe: float | None = None
    grid_size: int | None = None
    omega_g: float | None = None
    Delta_c_prime: float | None = None
    U0: float | None = None
    beta0: float | None = None
    kappa_ratios: tuple | None = None
    drives: tuple | None = None
    state: str | None = None
    n_theta: int | None = None
    n_phi: int | None = None
    Delta_c_prime0: float | None = None
    samples: int | None = None

    def items(self):
        """(key, value) for every set key, in schema order."""
        return [(f.name, getattr(self, f.name)) for f in fields(self)
                if getattr(self, f.name) is not None]

    def model_spec(self, N=None):
        return ModelSpec(self.family, self.N if N is None else N,
                         delta=self.delta or 0.0, chi=self.chi,
                         omega=self.omega or 0.0, gamma0=self.gamma0 or 0.0)

    def lab_inputs(self):
        return LabInputs(Lambda=self.Lambda, gamma=self.gamma, kappa=self.kappa,
                         Delta_a=self.Delta_a, Delta_c=self.Delta_c, eta0=self.eta0,
                         omega_r=self.omega_r, N=self.N, tau=self.tau, k=self.k,
                         g=self.g, kg_tau=self.kg_tau)

    def to_text(self, comments=()):
        """Config-format rendering; floats use repr so re-parsing is exact."""
        out = [f"# {c}" for c in comments]
        for key, value in self.items():
            out.append(f"{key} = {_render(value)}")
        return "\n".join(out) + "\n"


def _render(value):
    if isinstance(value, tuple):
        return ", ".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text):
    """Parse config text into a ScenarioConfig; raises ConfigError."""
    seen = {}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        m = _LINE.match(body)
        if not m:
            raise ConfigError(f"expected 'key = value', got {body!r}", line=lineno)
        key, raw = m.group(1), m.group(2).strip()
        if key not in _KINDS:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", line=lineno)
        seen[key] = lineno
        try:
            values[key] = _parse_value(_KINDS[key], raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", line=lineno) from None

    scenario = values.get("scenario")
    if scenario is None:
        raise ConfigError("missing required key 'scenario'")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}",
                          line=seen["scenario"])
    missing = [k for k in REQUIRED[scenario] if k not in values]
    if missing:
        raise ConfigError(f"scenario {scenario} is missing required key(s): {', '.join(missing)}")
    resolved = {**_COMMON_DEFAULTS, **DEFAULTS[scenario], **values}
    return ScenarioConfig(**resolved)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
