"""Loading simulation configs from TOML or JSON.

Schema (every key optional; defaults are those of :class:`SimConfig`)::

    seed = 0

    [simulation]
    alpha = 20.0          # IBP concentration
    n_users = 27          # measured users
    warmup_users = 0
    w_T = 0.5             # closeness threshold
    x_min = 60.0          # seconds needed to move one content
    n_min = 2             # minimum encounters for an edge
    d_max = 50.0          # meters
    c_c = 0.0             # control cost per selected content
    trace = "trace.csv"   # optional; relative to the config file

    [channel]
    p_enb = 20.0
    p_d2d = 0.1
    noise = 1e-10
    path_loss_exponent = 3.5
    d2d_power = { ue3 = 0.2 }

    [placement]
    n_ues = 27
    cell_radius = 500.0
    hotspots = [ { center = [250.0, 0.0], radius = 50.0, fraction = 1.0 } ]

    [synthetic]
    contact_radius = 150.0
    mean_encounters = 10.0
    duration_shape = 4.0
    duration_scale = 60.0

    [sweep]
    parameter = "d_max"   # or "c_c"
    values = [10, 20, 40]
    reps = 20
    relative = false      # c_c values as fractions of the D2D rate gain
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .engine import SWEEPABLE, SimConfig, SyntheticTrace
from .errors import ConfigError
from .phy import ChannelParams, Hotspot


@dataclass(frozen=True)
class SweepSpec:
    parameter: Optional[str] = None
    values: tuple = ()
    reps: int = 20
    relative: bool = False


_SIM_KEYS = {
    "alpha": float, "n_users": int, "warmup_users": int, "w_T": float, "x_min": float,
    "n_min": int, "d_max": float, "c_c": float, "trace": str,
}


def _number(value, kind, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"expected an integer, got {value!r}", path)
        return int(value)
    return float(value)


def _section(raw, name):
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError("expected a table", name)
    return sec


def _check_keys(sec, allowed, prefix):
    for key in sec:
        if key not in allowed:
            raise ConfigError("unknown key", f"{prefix}.{key}" if prefix else key)


def config_from_dict(raw: dict, base_dir: str = ".") -> tuple[SimConfig, SweepSpec]:
    _check_keys(raw, {"seed", "simulation", "channel", "placement", "synthetic", "sweep"}, "")
    kwargs = {}
    if "seed" in raw:
        kwargs["seed"] = _number(raw["seed"], int, "seed")

    sim = _section(raw, "simulation")
    _check_keys(sim, _SIM_KEYS, "simulation")
    for key, kind in _SIM_KEYS.items():
        if key not in sim:
            continue
        if key == "trace":
            if not isinstance(sim[key], str):
                raise ConfigError("expected a path string", "simulation.trace")
            kwargs["trace_path"] = os.path.join(base_dir, sim[key])
        else:
            kwargs[key] = _number(sim[key], kind, f"simulation.{key}")

    ch = _section(raw, "channel")
    ch_fields = {f.name for f in fields(ChannelParams)}
    _check_keys(ch, ch_fields, "channel")
    ch_kwargs = {}
    for key, value in ch.items():
        if key == "d2d_power":
            if not isinstance(value, dict):
                raise ConfigError("expected a table of UE -> power", "channel.d2d_power")
            ch_kwargs[key] = {str(u): _number(p, float, f"channel.d2d_power.{u}") for u, p in value.items()}
        else:
            ch_kwargs[key] = _number(value, float, f"channel.{key}")
    kwargs["channel"] = ChannelParams(**ch_kwargs)

    pl = _section(raw, "placement")
    _check_keys(pl, {"n_ues", "cell_radius", "hotspots"}, "placement")
    if "n_ues" in pl:
        kwargs["n_ues"] = _number(pl["n_ues"], int, "placement.n_ues")
    if "cell_radius" in pl:
        kwargs["cell_radius"] = _number(pl["cell_radius"], float, "placement.cell_radius")
    if "hotspots" in pl:
        if not isinstance(pl["hotspots"], list):
            raise ConfigError("expected a list", "placement.hotspots")
        spots = []
        for i, h in enumerate(pl["hotspots"]):
            path = f"placement.hotspots[{i}]"
            if not isinstance(h, dict):
                raise ConfigError("expected a table", path)
            _check_keys(h, {"center", "radius", "fraction"}, path)
            center = h.get("center")
            if not isinstance(center, list) or len(center) != 2:
                raise ConfigError("expected [x, y]", f"{path}.center")
            spots.append(Hotspot(
                (_number(center[0], float, f"{path}.center"), _number(center[1], float, f"{path}.center")),
                _number(h.get("radius"), float, f"{path}.radius"),
                _number(h.get("fraction"), float, f"{path}.fraction"),
            ))
        kwargs["hotspots"] = tuple(spots)

    syn = _section(raw, "synthetic")
    syn_fields = {f.name for f in fields(SyntheticTrace)}
    _check_keys(syn, syn_fields, "synthetic")
    kwargs["synthetic"] = SyntheticTrace(**{k: _number(v, float, f"synthetic.{k}") for k, v in syn.items()})

    sw = _section(raw, "sweep")
    _check_keys(sw, {"parameter", "values", "reps", "relative"}, "sweep")
    param = sw.get("parameter")
    if param is not None and param not in SWEEPABLE:
        raise ConfigError(f"must be one of {SWEEPABLE}", "sweep.parameter")
    values = sw.get("values", [])
    if not isinstance(values, list):
        raise ConfigError("expected a list", "sweep.values")
    values = tuple(_number(v, float, f"sweep.values[{i}]") for i, v in enumerate(values))
    if param is not None and not values:
        raise ConfigError("a sweep needs values", "sweep.values")
    relative = sw.get("relative", False)
    if not isinstance(relative, bool):
        raise ConfigError("expected true or false", "sweep.relative")
    spec = SweepSpec(param, values, _number(sw.get("reps", 20), int, "sweep.reps"), relative)

    return SimConfig(**kwargs).validate(), spec


def load_config(path) -> tuple[SimConfig, SweepSpec]:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    try:
        if str(path).endswith(".json"):
            raw = json.loads(data.decode("utf-8"))
        else:
            raw = tomllib.loads(data.decode("utf-8"))
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config: {exc}", str(path)) from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a table", str(path))
    return config_from_dict(raw, os.path.dirname(os.path.abspath(path)))
