"""Structured run configuration: strict schema, defaults, overrides.

A config is a nested mapping with sections `system`, `channel`, `bath`,
`run`, `sweep`, `output`, plus top-level `unit_mode` (and optionally
`command`, checked against the subcommand consuming the file).  Unknown
keys are rejected by full path.  Key names encode units:

* dimensionless mode: bare names (g_m, J, gamma, t_end, ...), numbers in
  mutually consistent inverse-time units;
* si_mhz mode: *_mhz keys take nu/2pi in MHz and become angular rad/s
  internally, J_mrad_s takes the channel coupling in 1e6 rad/s, t_end_ns
  takes nanoseconds.  J may instead come from the fiber formula via
  J_from_fiber plus the `channel` section.

Every command run dumps the fully resolved mapping back to YAML; feeding
that file to the same command reproduces the run.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import yaml

from .params import (ChannelSpec, SystemParams, UnitMode, channel_coupling,
                     fiber_coupling_rate, mhz_to_angular)
from .opensys import BathConfig, LConvention


class ConfigError(ValueError):
    """Invalid, unknown, or inconsistent configuration content."""


_NUM = (int, float)

# allowed keys per section and unit mode; values are coarse type tuples
_SYSTEM_KEYS = {
    "dimensionless": {
        "g_m": _NUM, "g_q": _NUM, "J": _NUM, "Gamma_c": _NUM,
        "omega_c": _NUM, "omega_m": _NUM, "omega_q": _NUM, "delta": _NUM,
    },
    "si_mhz": {
        "g_m_mhz": _NUM, "g_q_mhz": _NUM, "J_mrad_s": _NUM,
        "J_from_fiber": (bool,), "Gamma_c_mhz": _NUM,
        "omega_c_mhz": _NUM, "omega_m_mhz": _NUM, "omega_q_mhz": _NUM,
        "delta_mhz": _NUM,
    },
}
_CHANNEL_KEYS = {"xi": _NUM, "L": _NUM}
_BATH_KEYS = {
    "dimensionless": {"gamma": _NUM, "convention": (str,)},
    "si_mhz": {"gamma_mhz": _NUM, "convention": (str,)},
}
_RUN_KEYS = {
    "dimensionless": {
        "t_end": _NUM, "n_points": (int,), "pairs": (list,),
        "n_traj": (int,), "master_seed": (int,), "depth": (int,),
        "output_points": (int,), "threads": (int, type(None)),
        "backend": (str, type(None)), "probe_count": (int,),
        "convergence_tol": _NUM,
    },
    "si_mhz": {
        "t_end_ns": _NUM, "n_points": (int,), "pairs": (list,),
        "n_traj": (int,), "master_seed": (int,), "depth": (int,),
        "output_points": (int,), "threads": (int, type(None)),
        "backend": (str, type(None)), "probe_count": (int,),
        "convergence_tol": _NUM,
    },
}
_SWEEP_KEYS = {
    "j_min": _NUM, "j_max": _NUM, "j_points": (int,),
    "t_max": _NUM, "t_points": (int,),
    "rq_min": _NUM, "rq_max": _NUM, "rq_points": (int,),
    "rq_extra": (list,), "simulate": (bool,),
}
_OUTPUT_KEYS = {"formats": (list,), "plot_script": (bool,), "basename": (str, type(None))}

_PAIR_NAMES = ("mm", "qq", "q1m2", "m1q2")


DEFAULTS = {
    "evolve": {
        "unit_mode": "si_mhz",
        "system": {"g_m_mhz": 21.0, "g_q_mhz": 117.0, "delta_mhz": 183.0,
                   "Gamma_c_mhz": 1.8, "J_from_fiber": True},
        "channel": {"xi": 1.0, "L": 10.0},
        "run": {"t_end_ns": 200.0, "n_points": 2001, "pairs": ["mm"]},
        "output": {"formats": ["csv"], "plot_script": False, "basename": None},
    },
    "sweep-jt": {
        "unit_mode": "dimensionless",
        "system": {"g_m": 0.4, "g_q": 0.3},
        "sweep": {"j_min": 0.05, "j_max": 1.2, "j_points": 116,
                  "t_max": 40.0, "t_points": 2001},
        "output": {"formats": ["csv"], "plot_script": False, "basename": None},
    },
    "sweep-rq": {
        "unit_mode": "dimensionless",
        "system": {"g_m": 1.0},
        "sweep": {"rq_min": 0.1, "rq_max": 10.0, "rq_points": 201,
                  "rq_extra": [1.7320508075688772], "simulate": True},
        "output": {"formats": ["csv"], "plot_script": False, "basename": None},
    },
    "open": {
        "unit_mode": "si_mhz",
        "system": {"g_m_mhz": 21.0, "g_q_mhz": 117.0, "delta_mhz": 183.0,
                   "Gamma_c_mhz": 1.8, "J_from_fiber": True},
        "channel": {"xi": 1.0, "L": 10.0},
        "bath": {"gamma_mhz": 0.7, "convention": "gamma_c"},
        "run": {"t_end_ns": 200.0, "n_traj": 2000, "master_seed": 12345,
                "depth": 4, "output_points": 401, "threads": None,
                "backend": None, "probe_count": 10, "convergence_tol": 1e-8},
        "output": {"formats": ["csv"], "plot_script": False, "basename": None},
    },
}


@dataclass(frozen=True)
class RunSpec:
    """Validated configuration with physical objects attached."""

    command: str
    resolved: dict
    params: SystemParams | None
    bath: BathConfig | None
    channel: ChannelSpec | None
    run: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)


def _deep_merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        here = f"{path}.{key}" if path else str(key)
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val, here)
        else:
            out[key] = copy.deepcopy(val)
    return out


def parse_override(text: str):
    """One dotted override, e.g. 'run.n_traj=500' or '--system.g_m=0.4'."""
    body = text.lstrip("-")
    key, sep, raw = body.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    try:
        value = yaml.safe_load(raw) if raw != "" else None
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {text!r} has unparseable value: {exc}") from exc
    return key.strip().split("."), value


def _apply_override(cfg: dict, parts: list[str], value) -> None:
    node = cfg
    for p in parts[:-1]:
        nxt = node.get(p)
        if not isinstance(nxt, dict):
            nxt = {}
            node[p] = nxt
        node = nxt
    node[parts[-1]] = value


def _given(section: dict, key: str) -> bool:
    """A null value means the key was explicitly unset."""
    return section.get(key) is not None


def _val(section: dict, key: str, default):
    v = section.get(key)
    return default if v is None else v


def _check_section(section: dict, allowed: dict, path: str, problems: list):
    for key, val in section.items():
        if key not in allowed:
            problems.append(
                f"unknown key {path}.{key}; allowed: {', '.join(sorted(allowed))}")
        elif val is None:
            continue  # null = unset; builders fall back to their defaults
        elif not isinstance(val, allowed[key]) or isinstance(val, bool) and bool not in allowed[key]:
            want = "/".join(t.__name__ for t in allowed[key])
            problems.append(
                f"{path}.{key} has type {type(val).__name__}, expected {want}")


def _validate_tree(cfg: dict, command: str) -> list:
    problems = []
    mode = cfg.get("unit_mode")
    if mode not in ("dimensionless", "si_mhz"):
        problems.append(
            f"unit_mode={mode!r} must be 'dimensionless' or 'si_mhz'")
        return problems
    top_allowed = {"unit_mode", "command", "system", "channel", "bath", "run",
                   "sweep", "output"}
    for key in cfg:
        if key not in top_allowed:
            problems.append(
                f"unknown key {key}; allowed: {', '.join(sorted(top_allowed))}")
    declared = cfg.get("command")
    if declared is not None and declared != command:
        problems.append(
            f"config declares command={declared!r} but was given to {command!r}")
    sections = (("system", _SYSTEM_KEYS[mode]), ("channel", _CHANNEL_KEYS),
                ("bath", _BATH_KEYS[mode]), ("run", _RUN_KEYS[mode]),
                ("sweep", _SWEEP_KEYS), ("output", _OUTPUT_KEYS))
    for name, allowed in sections:
        body = cfg.get(name)
        if body is None:
            continue
        if not isinstance(body, dict):
            problems.append(f"section {name} must be a mapping")
            continue
        _check_section(body, allowed, name, problems)
    other = "si_mhz" if mode == "dimensionless" else "dimensionless"
    for name, table in (("system", _SYSTEM_KEYS), ("bath", _BATH_KEYS),
                        ("run", _RUN_KEYS)):
        body = cfg.get(name) or {}
        present = {k for k, v in body.items() if v is not None}
        stray = sorted(present & (set(table[other]) - set(table[mode])))
        if stray:
            problems.append(
                f"{name} keys {stray} belong to unit_mode={other}, not {mode}")
    pairs = (cfg.get("run") or {}).get("pairs")
    if pairs is not None:
        bad = [p for p in pairs if p not in _PAIR_NAMES]
        if bad:
            problems.append(
                f"run.pairs contains {bad}; valid names: {list(_PAIR_NAMES)}")
    fmts = (cfg.get("output") or {}).get("formats")
    if fmts is not None:
        bad = [f for f in fmts if f not in ("csv", "json")]
        if bad:
            problems.append(f"output.formats contains {bad}; valid: csv, json")
    return problems


def _build_params(cfg: dict, problems: list):
    mode = cfg["unit_mode"]
    sys_sec = cfg.get("system") or {}
    chan_sec = cfg.get("channel")
    channel = None
    if chan_sec:
        try:
            channel = ChannelSpec(xi=float(_val(chan_sec, "xi", 1.0)),
                                  L=float(_val(chan_sec, "L", 10.0)))
        except ValueError as exc:
            problems.append(str(exc))
    if mode == "dimensionless":
        if _given(sys_sec, "delta") and any(
                _given(sys_sec, k) for k in ("omega_c", "omega_m", "omega_q")):
            problems.append("system.delta conflicts with explicit omega_* keys")
        delta = float(_val(sys_sec, "delta", 0.0))
        omega_q = float(_val(sys_sec, "omega_q", 0.0))
        kw = dict(
            omega_c=float(_val(sys_sec, "omega_c", omega_q + delta)),
            omega_m=float(_val(sys_sec, "omega_m", omega_q)),
            omega_q=omega_q,
            g_m=float(_val(sys_sec, "g_m", 0.0)),
            g_q=float(_val(sys_sec, "g_q", 0.0)),
            J=float(_val(sys_sec, "J", 0.0)),
            Gamma_c=float(_val(sys_sec, "Gamma_c", 0.0)),
            unit_mode=UnitMode.DIMENSIONLESS,
        )
        return (None if problems else SystemParams(**kw)), channel
    if _given(sys_sec, "delta_mhz") and any(
            _given(sys_sec, k)
            for k in ("omega_c_mhz", "omega_m_mhz", "omega_q_mhz")):
        problems.append("system.delta_mhz conflicts with explicit omega_*_mhz keys")
    gamma_c = mhz_to_angular(float(_val(sys_sec, "Gamma_c_mhz", 0.0)))
    from_fiber = bool(_val(sys_sec, "J_from_fiber", False))
    if from_fiber and _given(sys_sec, "J_mrad_s"):
        problems.append("system.J_from_fiber excludes system.J_mrad_s")
    if from_fiber and channel is None:
        problems.append("system.J_from_fiber needs a channel section")
    if from_fiber and channel is not None:
        j = channel_coupling(channel.xi, fiber_coupling_rate(channel.L, gamma_c))
    else:
        j = 1e6 * float(_val(sys_sec, "J_mrad_s", 0.0))
    delta = mhz_to_angular(float(_val(sys_sec, "delta_mhz", 0.0)))
    omega_q = mhz_to_angular(float(_val(sys_sec, "omega_q_mhz", 0.0)))
    kw = dict(
        omega_c=(mhz_to_angular(float(sys_sec["omega_c_mhz"]))
                 if _given(sys_sec, "omega_c_mhz") else omega_q + delta),
        omega_m=(mhz_to_angular(float(sys_sec["omega_m_mhz"]))
                 if _given(sys_sec, "omega_m_mhz") else omega_q),
        omega_q=omega_q,
        g_m=mhz_to_angular(float(_val(sys_sec, "g_m_mhz", 0.0))),
        g_q=mhz_to_angular(float(_val(sys_sec, "g_q_mhz", 0.0))),
        J=j,
        Gamma_c=gamma_c,
        unit_mode=UnitMode.SI_MHZ,
    )
    return (None if problems else SystemParams(**kw)), channel


def _build_bath(cfg: dict, params: SystemParams | None, problems: list):
    sec = cfg.get("bath")
    if not sec:
        return None
    mode = cfg["unit_mode"]
    conv_name = _val(sec, "convention", "gamma_c")
    try:
        conv = LConvention(conv_name)
    except ValueError:
        problems.append(
            f"bath.convention={conv_name!r}; valid: "
            f"{', '.join(c.value for c in LConvention)}")
        return None
    key = "gamma" if mode == "dimensionless" else "gamma_mhz"
    if not _given(sec, key):
        problems.append(f"bath section needs {key}")
        return None
    gamma = float(sec[key]) if mode == "dimensionless" else mhz_to_angular(
        float(sec[key]))
    if params is None:
        return None
    try:
        return BathConfig(gamma=gamma, coupling_rate=params.Gamma_c,
                          convention=conv)
    except ValueError as exc:
        problems.append(str(exc))
        return None


def load_config(command: str, path: str | None = None,
                overrides=()) -> RunSpec:
    """Defaults for `command`, merged with a YAML file and overrides."""
    if command not in DEFAULTS:
        raise ConfigError(f"unknown command {command!r}")
    cfg = copy.deepcopy(DEFAULTS[command])
    if path is not None:
        try:
            with open(path) as fh:
                user = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: YAML parse error: {exc}") from exc
        except OSError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if user is None:
            user = {}
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        cfg = _deep_merge(cfg, user)
    for text in overrides:
        parts, value = parse_override(text)
        _apply_override(cfg, parts, value)
    problems = _validate_tree(cfg, command)
    params = channel = None
    if not problems:
        params, channel = _build_params(cfg, problems)
    bath = _build_bath(cfg, params, problems) if not problems else None
    if problems:
        raise ConfigError("; ".join(problems))
    cfg.pop("command", None)
    cfg["command"] = command
    return RunSpec(command=command, resolved=cfg, params=params, bath=bath,
                   channel=channel, run=dict(cfg.get("run") or {}),
                   sweep=dict(cfg.get("sweep") or {}),
                   output=dict(cfg.get("output") or {}))


def resolved_yaml(spec: RunSpec) -> str:
    return yaml.safe_dump(spec.resolved, sort_keys=True,
                          default_flow_style=False)


def time_scale(spec: RunSpec) -> tuple[float, str]:
    """(seconds per time unit in outputs, unit label).

    SI runs are configured in ns and report t in ns; dimensionless runs
    report bare numbers.
    """
    if spec.resolved["unit_mode"] == "si_mhz":
        return 1e-9, "ns"
    return 1.0, "1"


def run_t_end(spec: RunSpec) -> float:
    """End time in internal units (seconds for SI runs)."""
    run = spec.run
    if spec.resolved["unit_mode"] == "si_mhz":
        if "t_end_ns" not in run:
            raise ConfigError("run.t_end_ns is required")
        return float(run["t_end_ns"]) * 1e-9
    if "t_end" not in run:
        raise ConfigError("run.t_end is required")
    return float(run["t_end"])
