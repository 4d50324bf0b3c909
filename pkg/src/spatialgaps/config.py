"""Run configuration: defaults, named presets, config files and flags.

Precedence is flags > file > preset > defaults.  Config files are flat
``key = value`` lines with dotted section names (``grid.step = 0.05``);
``#`` starts a comment.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .exceptions import ConfigError
from .units import ATOM_PRESETS, DEFAULT_D, DEFAULT_PHI, DEFAULT_Z_C, PotentialSpec
from .wavepacket import T_UNIT

SUBCOMMANDS = ("bands", "gapmap", "spectrum", "resonances", "wavepacket")

def _opt_float(v):
    return None if v is None or str(v).strip().lower() in ("", "none", "auto") else float(v)


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _opt_int(v):
    return None if v is None or str(v).strip().lower() in ("", "none", "auto") else int(v)


def parse_times(v):
    """'0, 6T, 10T' -> times in units of 1/omega_nu (T = 18 pi)."""
    if isinstance(v, (list, tuple)):
        return tuple(float(x) for x in v)
    out = []
    for tok in str(v).split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok[-1] in "tT":
            out.append(float(tok[:-1] or 1.0) * T_UNIT)
        else:
            out.append(float(tok))
    if not out:
        raise ValueError("empty time list")
    return tuple(out)


# key -> (parser, default)
SCHEMA = {
    "potential.eta": (float, 2.0),
    "potential.phi": (float, DEFAULT_PHI),
    "potential.z_c": (float, DEFAULT_Z_C),
    "potential.d": (float, DEFAULT_D),
    "potential.beta": (float, 0.0),
    "potential.mode": (str, "taylor"),
    "potential.detuning_delta": (_opt_float, None),
    "potential.rabi_omega0": (_opt_float, None),
    "potential.branch_sign": (lambda v: None if str(v).lower() in ("", "none", "auto") else str(v), None),
    "grid.z_min": (_opt_float, None),
    "grid.z_max": (_opt_float, None),
    "grid.step": (float, 0.05),
    "sweep.q_min": (float, 0.5),
    "sweep.q_max": (float, 3.0),
    "sweep.n_q": (int, 500),
    "sweep.adaptive": (_bool, False),
    "sweep.max_jump": (float, 0.1),
    "resonances.prominence_min": (float, 0.05),
    "gapmap.n_q": (int, 200),
    "gapmap.n_z": (int, 400),
    "bands.amplitude": (_opt_float, None),
    "bands.e_max": (float, 25.0),
    "bands.tol": (float, 1e-10),
    "wavepacket.a": (float, 35.0 * math.pi),
    "wavepacket.q0": (float, 1.9),
    "wavepacket.z0": (float, -35.0 * math.pi),
    "wavepacket.n_sigma": (float, 5.0),
    "wavepacket.n_q": (int, 513),
    "wavepacket.times": (parse_times, parse_times("0,6T,10T,14T")),
    "wavepacket.left_bound": (_opt_float, None),
    "wavepacket.right_bound": (_opt_float, None),
    "output.dir": (str, "out"),
    "output.si": (_bool, False),
    "output.atom": (str, "li7-2s2p"),
    "run.workers": (_opt_int, None),
}

_FIG_POTENTIAL = {"potential.phi": math.pi / 3.0, "potential.z_c": 300.0 * math.sqrt(2.0) * math.pi,
                  "potential.d": 100.0 * math.pi, "potential.beta": 0.0}

PRESETS = {
    "fig2": {**_FIG_POTENTIAL, "potential.eta": 2.0, "sweep.q_min": 0.5, "sweep.q_max": 3.0, "sweep.n_q": 500,
             "gapmap.n_q": 200, "gapmap.n_z": 400},
    "fig3": {**_FIG_POTENTIAL, "potential.eta": 2.0, "sweep.q_min": 1.85, "sweep.q_max": 2.05, "sweep.n_q": 401,
             "sweep.adaptive": True, "gapmap.n_q": 200, "gapmap.n_z": 400},
    "fig5": {**_FIG_POTENTIAL, "potential.eta": 2.0, "wavepacket.a": 35.0 * math.pi, "wavepacket.q0": 1.9,
             "wavepacket.z0": -35.0 * math.pi, "wavepacket.times": parse_times("0,6T,10T,14T")},
    "fig6": {**_FIG_POTENTIAL, "potential.eta": -5.0, "sweep.q_min": 2.05, "sweep.q_max": 2.35, "sweep.n_q": 601,
             "sweep.adaptive": True},
    "fig7": {**_FIG_POTENTIAL, "potential.eta": -5.0, "wavepacket.a": 35.0 * math.pi, "wavepacket.q0": 2.2,
             "wavepacket.z0": -35.0 * math.pi, "wavepacket.times": parse_times("0,5T,7T,9T")},
    "li7-2s2p": {**_FIG_POTENTIAL, "potential.eta": 2.0, "potential.beta": ATOM_PRESETS["li7-2s2p"].gravity_parameter_beta,
                 "output.atom": "li7-2s2p"},
}


@dataclass
class RunConfig:
    subcommand: str
    values: dict = field(default_factory=dict)
    preset: str | None = None

    def __getitem__(self, key):
        return self.values[key]

    def potential(self) -> PotentialSpec:
        v = self.values
        if v["potential.mode"] == "exact_dressed":
            return PotentialSpec.dressed(
                v["potential.detuning_delta"], v["potential.rabi_omega0"], v["potential.branch_sign"],
                phi=v["potential.phi"], z_c=v["potential.z_c"], d=v["potential.d"], beta=v["potential.beta"],
            )
        return PotentialSpec(eta=v["potential.eta"], phi=v["potential.phi"], z_c=v["potential.z_c"],
                             d=v["potential.d"], beta=v["potential.beta"], mode=v["potential.mode"])

    def as_text(self) -> str:
        """Config-file text that reproduces this configuration exactly."""
        lines = [f"# subcommand: {self.subcommand}"]
        for key in sorted(self.values):
            lines.append(f"{key} = {_render(key, self.values[key])}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, "preset": self.preset,
                "values": {k: _render(k, v) for k, v in sorted(self.values.items())}}


def _render(key, v):
    if key == "wavepacket.times":
        return ",".join(repr(float(t)) for t in v)
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v).lower() if isinstance(v, bool) else str(v)


_LINE = re.compile(r"^\s*([A-Za-z_][\w.]*)\s*=\s*(.*?)\s*$")


def parse_config_text(text: str) -> dict:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError(f"line {n}: expected 'key = value', got {raw.strip()!r}", key=None)
        out[m.group(1)] = m.group(2)
    return out


def _coerce(key, value):
    if key not in SCHEMA:
        raise ConfigError(f"unknown configuration key '{key}'", key=key)
    parser = SCHEMA[key][0]
    try:
        return parser(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value for '{key}': {value!r} ({exc})", key=key) from None


def resolve(subcommand, preset=None, file_values=None, flag_values=None) -> RunConfig:
    """Merge the four layers and validate the result."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand '{subcommand}'", key="subcommand")
    values = {k: default for k, (_, default) in SCHEMA.items()}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset '{preset}' (choose from {', '.join(PRESETS)})", key="preset")
        values.update(PRESETS[preset])
    for layer in (file_values or {}, flag_values or {}):
        for key, value in layer.items():
            values[key] = _coerce(key, value)
    cfg = RunConfig(subcommand, values, preset)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    v = cfg.values
    if v["potential.mode"] not in ("taylor", "exact_dressed"):
        raise ConfigError("potential.mode must be 'taylor' or 'exact_dressed'", key="potential.mode")
    if v["potential.mode"] == "exact_dressed":
        for key in ("potential.detuning_delta", "potential.rabi_omega0"):
            if v[key] is None:
                raise ConfigError(f"'{key}' is required when potential.mode = exact_dressed", key=key)
    try:
        cfg.potential()
    except ValueError as exc:
        raise ConfigError(f"invalid potential: {exc}", key="potential") from None
    if not v["grid.step"] > 0:
        raise ConfigError("grid.step must be > 0", key="grid.step")
    if not 0 < v["sweep.q_min"] <= v["sweep.q_max"]:
        raise ConfigError("need 0 < sweep.q_min <= sweep.q_max", key="sweep.q_min")
    for key in ("sweep.n_q", "gapmap.n_q", "gapmap.n_z"):
        if v[key] < 1:
            raise ConfigError(f"{key} must be >= 1", key=key)
    if v["output.atom"] not in ATOM_PRESETS:
        raise ConfigError(f"unknown atom '{v['output.atom']}'", key="output.atom")
    if any(t < 0 for t in v["wavepacket.times"]):
        raise ConfigError("wavepacket.times must be >= 0", key="wavepacket.times")
