"""Scenario configuration files.

The format is INI-style: ``[section]`` headers followed by ``key = value``
lines.  Every key is optional and defaults to the published constants.
Lists are comma separated.  Recognised sections and keys are those of
``DEFAULTS`` below; anything else is an error.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .lossy import PAPER_PARAMETERS, ConversionCurve, LossBudget
from .noise import PAPER_NOISE, NoiseFits


class ConfigError(ValueError):
    pass


_B = PAPER_PARAMETERS
_N = PAPER_NOISE

DEFAULTS: dict[str, dict[str, object]] = {
    "budget": {
        "t_l_in": _B.t_l_in, "t_u": _B.t_u, "t_l": _B.t_l, "t_p": _B.t_p,
        "x1": _B.x1, "x2": _B.x2, "t_u_out": _B.t_u_out, "t_l_out": _B.t_l_out,
        "x1_uncertainty": _B.x1_uncertainty, "x2_uncertainty": _B.x2_uncertainty,
    },
    "curve1": {"amplitude": _B.curve1.amplitude, "rate": _B.curve1.rate},
    "curve2": {"amplitude": _B.curve2.amplitude, "rate": _B.curve2.rate},
    "noise": {
        "d_u1": list(_N.d_u1), "d_u2": list(_N.d_u2), "d_l": list(_N.d_l),
        "ref_bw_u": _N.ref_bw_u, "ref_bw_l": _N.ref_bw_l,
    },
    "fringe": {
        "pump_mw": 140.0, "n_in": 1.0,
        "phase_min": 0.0, "phase_max": 2.0 * math.pi, "phase_points": 361,
        "lossless": False, "r1": 0.5, "r2": 0.5,
    },
    "visibility_sweep": {"power_min": 0.0, "power_max": 400.0, "power_points": 401},
    "noise_vis": {
        "pump_mw": 140.0, "input_bw_ghz": 1.0, "mu": [1.0, 0.1, 0.01],
        "ratio_min": 1.01, "ratio_max": 5.0, "ratio_points": 400,
        "target": 0.9, "marker_ratio": 1.4,
    },
}


@dataclass(frozen=True)
class ScenarioConfig:
    budget: LossBudget
    noise: NoiseFits
    fringe: dict
    visibility_sweep: dict
    noise_vis: dict

    def phase_grid(self) -> np.ndarray:
        f = self.fringe
        return _grid(f["phase_min"], f["phase_max"], f["phase_points"], "fringe.phase")

    def power_grid(self) -> np.ndarray:
        s = self.visibility_sweep
        return _grid(s["power_min"], s["power_max"], s["power_points"], "visibility_sweep.power")

    def ratio_grid(self) -> np.ndarray:
        s = self.noise_vis
        return _grid(s["ratio_min"], s["ratio_max"], s["ratio_points"], "noise_vis.ratio")

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=repr)
        return hashlib.sha256(payload.encode()).hexdigest()


def _grid(lo, hi, n, name) -> np.ndarray:
    if n < 1:
        raise ConfigError(f"{name}: grid needs at least one point")
    if n == 1:
        return np.array([float(lo)])
    if not hi > lo:
        raise ConfigError(f"{name}: grid must be strictly increasing")
    return np.linspace(lo, hi, n)


def _coerce(section, key, default, raw: str):
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(raw)
            return low in ("true", "yes", "1", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, list):
            return [float(v) for v in raw.split(",") if v.strip()]
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None


def load_config(path=None, text: str | None = None) -> ScenarioConfig:
    """Parse a config file (or text); ``None`` gives the all-default scenario."""
    values = {s: dict(d) for s, d in DEFAULTS.items()}
    if path is not None or text is not None:
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            if text is None:
                text = Path(path).read_text(encoding="utf-8")
            parser.read_string(text)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        for section in parser.sections():
            if section not in values:
                raise ConfigError(f"unknown section [{section}]")
            for key, raw in parser.items(section):
                if key not in values[section]:
                    raise ConfigError(f"unknown key [{section}] {key}")
                values[section][key] = _coerce(section, key, DEFAULTS[section][key], raw)
    return build_config(values)


def build_config(values: dict) -> ScenarioConfig:
    try:
        b = values["budget"]
        budget = LossBudget(
            curve1=ConversionCurve(**values["curve1"]),
            curve2=ConversionCurve(**values["curve2"]),
            **b,
        )
        n = values["noise"]
        noise = NoiseFits(tuple(n["d_u1"]), tuple(n["d_u2"]), tuple(n["d_l"]),
                          n["ref_bw_u"], n["ref_bw_l"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg = ScenarioConfig(budget, noise, values["fringe"], values["visibility_sweep"],
                         values["noise_vis"])
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig):
    cfg.phase_grid()
    cfg.power_grid()
    ratios = cfg.ratio_grid()
    f, s, nv = cfg.fringe, cfg.visibility_sweep, cfg.noise_vis
    if f["pump_mw"] < 0 or f["n_in"] < 0:
        raise ConfigError("fringe: pump_mw and n_in must be non-negative")
    if not (0 <= f["r1"] <= 1 and 0 <= f["r2"] <= 1):
        raise ConfigError("fringe: r1, r2 must lie in [0, 1]")
    if s["power_min"] < 0:
        raise ConfigError("visibility_sweep: powers must be non-negative")
    if nv["pump_mw"] < 0:
        raise ConfigError("noise_vis: pump_mw must be non-negative")
    if not nv["input_bw_ghz"] > 0:
        raise ConfigError("noise_vis: input_bw_ghz must be positive")
    if not nv["mu"] or any(m <= 0 for m in nv["mu"]):
        raise ConfigError("noise_vis: mu values must be positive")
    if ratios[0] <= 1.0:
        raise ConfigError("noise_vis: filter ratios must exceed 1")
    if not 0 < nv["target"] < 1:
        raise ConfigError("noise_vis: target must lie in (0, 1)")
